use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const UNET: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/unet14.graph");

fn soi(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soi"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_csv(path: &Path, channels: usize, frames: usize) {
    let mut text = String::new();
    for t in 0..frames {
        let row: Vec<String> = (0..channels)
            .map(|c| format!("{}", ((t * 7 + c * 3) % 11) as f32 / 5.0 - 1.0))
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

fn uniform_chain_graph(dir: &Path, n: usize) -> PathBuf {
    let mut text = String::from("[graph]\nname = uniform\nchannels = 2\n");
    for i in 1..=n {
        text.push_str(&format!(
            "\n[layer {i}]\nkind = causal_conv\nin_ch = 2\nout_ch = 2\nk = 3\nstride = 1\n"
        ));
    }
    let path = dir.join("uniform.graph");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn transform_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = soi(&["transform", UNET, "--scc", "1:14", "--out", "soi.graph"], d);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    assert!(stdout(&ok).contains("period"));
    assert!(d.join("soi.graph").exists());

    let bad = soi(&["transform", UNET, "--scc", "5:3", "--out", "bad.graph"], d);
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("l_d must precede l_u"));
    assert!(!d.join("bad.graph").exists());

    let sscc = soi(&["transform", UNET, "--scc", "2:13", "--shift", "13:1", "--out", "sscc.graph"], d);
    assert_eq!(code(&sscc), 0, "{}", stderr(&sscc));
    let text = std::fs::read_to_string(d.join("sscc.graph")).unwrap();
    assert!(text.contains("mode = fp"), "{text}");
}

#[test]
fn run_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&soi(&["init-weights", UNET, "--seed", "4", "--out", "w.weights"], d)), 0);
    write_csv(&d.join("in.csv"), 4, 64);
    for out in ["a.csv", "b.csv"] {
        let r = soi(&["run", UNET, "--weights", "w.weights", "--input", "in.csv", "--output", out], d);
        assert_eq!(code(&r), 0, "{}", stderr(&r));
    }
    let a = std::fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 64);

    let pp = soi(
        &["run", UNET, "--weights", "w.weights", "--input", "in.csv", "--output", "c.csv", "--precompute"],
        d,
    );
    assert_eq!(code(&pp), 5);
    assert!(stderr(&pp).contains("NO_PRECOMPUTABLE_LAYERS"));
    assert!(!d.join("c.csv").exists());

    write_csv(&d.join("narrow.csv"), 3, 8);
    let shape = soi(&["run", UNET, "--weights", "w.weights", "--input", "narrow.csv", "--output", "d.csv"], d);
    assert_eq!(code(&shape), 3);

    std::fs::write(d.join("nan.csv"), "1,2,3,NaN\n").unwrap();
    let nan = soi(&["run", UNET, "--weights", "w.weights", "--input", "nan.csv", "--output", "e.csv"], d);
    assert_eq!(code(&nan), 4);
    assert!(!d.join("e.csv").exists());
}

#[test]
fn run_with_precompute_reports_split() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let t = soi(&["transform", UNET, "--shift", "21:1", "--out", "fp.graph"], d);
    assert_eq!(code(&t), 0, "{}", stderr(&t));
    assert_eq!(code(&soi(&["init-weights", "fp.graph", "--out", "w.weights"], d)), 0);
    write_csv(&d.join("in.csv"), 4, 16);
    let r = soi(
        &["run", "fp.graph", "--weights", "w.weights", "--input", "in.csv", "--output", "o.bin", "--precompute"],
        d,
    );
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert!(stdout(&r).contains("on-arrival MACs 0"), "{}", stdout(&r));
    assert_eq!(std::fs::metadata(d.join("o.bin")).unwrap().len(), 16 * 4 * 4);
}

#[test]
fn verify_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let first = soi(&["verify", UNET, "--trials", "20", "--frames", "64", "--seed", "9"], d);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let again = soi(&["verify", UNET, "--trials", "20", "--frames", "64", "--seed", "9"], d);
    assert_eq!(stdout(&first), stdout(&again));

    assert_eq!(code(&soi(&["transform", UNET, "--scc", "3:16:cubic", "--shift", "23:2", "--out", "h.graph"], d)), 0);
    let hybrid = soi(&["verify", "h.graph", "--trials", "4", "--frames", "40"], d);
    assert_eq!(code(&hybrid), 0, "{}{}", stdout(&hybrid), stderr(&hybrid));

    std::fs::write(d.join("broken.weights"), "soi-weights 1\nblob x.bin\n1 kernel sixteen 4 3\n").unwrap();
    let broken = soi(&["verify", UNET, "--weights", "broken.weights"], d);
    assert_eq!(code(&broken), 2);
}

#[test]
fn profile_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let empty = soi(&["profile", UNET], d);
    assert!(stdout(&empty).contains("complexity retain       100.00%"), "{}", stdout(&empty));

    let chain = uniform_chain_graph(d, 14);
    let t = soi(&["transform", chain.to_str().unwrap(), "--scc", "1:14", "--out", "pair.graph"], d);
    assert_eq!(code(&t), 0);
    let pair = soi(&["profile", "pair.graph", "--format", "json"], d);
    let json: serde_json::Value = serde_json::from_str(&stdout(&pair)).unwrap();
    assert_eq!(json["retain_exact"], "15/28");
    assert!((json["retain"].as_f64().unwrap() - 0.5357).abs() < 1e-4);
    for key in ["per_layer", "total_average", "total_peak", "retain", "precomputed_fraction", "cache_bytes"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }

    let t = soi(&["transform", chain.to_str().unwrap(), "--shift", "14:1", "--out", "p1.graph"], d);
    assert_eq!(code(&t), 0);
    let p1 = soi(&["profile", "p1.graph"], d);
    assert!(stdout(&p1).contains("precomputed             100.00%"), "{}", stdout(&p1));
}

#[test]
fn prune_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&soi(&["init-weights", UNET, "--seed", "2", "--out", "w.weights"], d)), 0);
    let two = soi(&["prune", "w.weights", "--count", "4096", "--steps", "2", "--out", "p.weights"], d);
    assert_eq!(code(&two), 0, "{}", stderr(&two));
    let out = stdout(&two);
    assert!(out.contains("step 0: 14256 nonzero") && out.contains("step 2: 6064 nonzero"), "{out}");

    let zero = soi(&["prune", "w.weights", "--count", "0", "--out", "z.weights"], d);
    assert_eq!(code(&zero), 0);
    assert_eq!(std::fs::read(d.join("w.bin")).unwrap(), std::fs::read(d.join("z.bin")).unwrap());

    let over = soi(&["prune", "p.weights", "--count", "7000", "--out", "o.weights"], d);
    assert_eq!(code(&over), 2);
    assert!(!d.join("o.weights").exists());
}

#[test]
fn unknown_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = soi(&["profile", UNET, "--colour"], dir.path());
    assert_eq!(code(&o), 2);
}
