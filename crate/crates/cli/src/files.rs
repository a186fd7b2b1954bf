use anyhow::{Context, Result};
use soi_core::graph::parse_graph_document;
use soi_core::weights::blob_paths;
use soi_core::{GraphSpec, Series, SoiPlan, WeightStore};
use std::io::Write;
use std::path::Path;

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed command never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(soi_core::Error::from)
        .with_context(|| format!("cannot read {}", path.display()))
}

/// Graph plus the plan it encodes (checked against a declared plan block).
pub fn load_graph(path: &Path) -> Result<(GraphSpec, SoiPlan)> {
    let text = read_text(path)?;
    let (g, _) = parse_graph_document(&text).with_context(|| format!("in {}", path.display()))?;
    let plan = SoiPlan::derive(&g).with_context(|| format!("in {}", path.display()))?;
    Ok((g, plan))
}

pub fn load_weights(path: &Path, g: &GraphSpec) -> Result<WeightStore> {
    let w = WeightStore::load(path).with_context(|| format!("in {}", path.display()))?;
    w.check_shapes(g)
        .with_context(|| format!("{} does not fit the graph", path.display()))?;
    Ok(w)
}

pub fn save_weights(path: &Path, w: &WeightStore) -> Result<()> {
    let (blob, mask) = blob_paths(path);
    if blob == path || mask == path {
        return Err(soi_core::Error::Validation(format!(
            "manifest {} would be overwritten by its own blob; pick another extension",
            path.display()
        ))
        .into());
    }
    let name = |p: &Path| p.file_name().unwrap().to_string_lossy().into_owned();
    let encoded = w.encode(&name(&blob), &name(&mask));
    write_atomic(&blob, &encoded.blob)?;
    if let Some(m) = &encoded.mask {
        write_atomic(&mask, m)?;
    }
    write_atomic(path, encoded.manifest.as_bytes())
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// CSV when the extension is `.csv`, raw little-endian binary32 otherwise.
pub fn load_series(path: &Path, channels: usize) -> Result<Series> {
    let s = if is_csv(path) {
        Series::from_csv(&read_text(path)?)
    } else {
        let bytes = std::fs::read(path)
            .map_err(soi_core::Error::from)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Series::from_bytes(&bytes, channels)
    };
    s.with_context(|| format!("in {}", path.display()))
}

pub fn save_series(path: &Path, s: &Series) -> Result<()> {
    if is_csv(path) {
        write_atomic(path, s.to_csv().as_bytes())
    } else {
        write_atomic(path, &s.to_bytes())
    }
}
