//! Per-layer parameters, global magnitude pruning and the
//! manifest-plus-blob container.
//!
//! Kernels are stored out-channel major, then in-channel, then tap with the
//! oldest tap first. Masked kernel entries are held at exactly zero.

use crate::graph::{GraphSpec, LayerKind};
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelTensor {
    pub out_channels: usize,
    pub in_channels: usize,
    pub taps: usize,
    values: Vec<f32>,
    keep: Vec<bool>,
}

impl KernelTensor {
    pub fn new(out_channels: usize, in_channels: usize, taps: usize, values: Vec<f32>) -> Self {
        assert_eq!(values.len(), out_channels * in_channels * taps);
        let keep = vec![true; values.len()];
        KernelTensor {
            out_channels,
            in_channels,
            taps,
            values,
            keep,
        }
    }

    #[inline]
    pub fn at(&self, o: usize, c: usize, m: usize) -> f32 {
        self.values[(o * self.in_channels + c) * self.taps + m]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// `true` where the entry survives pruning.
    pub fn keep_mask(&self) -> &[bool] {
        &self.keep
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn mask_entry(&mut self, offset: usize) {
        self.keep[offset] = false;
        self.values[offset] = 0.0;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerWeights {
    Conv { kernel: KernelTensor, bias: Vec<f32> },
    Affine { scale: Vec<f32>, offset: Vec<f32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightStore {
    /// Indexed by layer - 1; `None` for parameter-free layers.
    layers: Vec<Option<LayerWeights>>,
    masked: bool,
}

impl WeightStore {
    /// Builds a store for `g`, drawing every parameter from `next` in
    /// container order.
    pub fn from_fn(g: &GraphSpec, mut next: impl FnMut() -> f32) -> Self {
        let layers = g
            .layers
            .iter()
            .map(|l| match l.kind {
                LayerKind::CausalConv { kernel_size, .. }
                | LayerKind::TransposedUpsample { kernel_size } => {
                    let n = l.out_channels * l.in_channels * kernel_size;
                    let values = (0..n).map(|_| next()).collect();
                    let bias = (0..l.out_channels).map(|_| next()).collect();
                    Some(LayerWeights::Conv {
                        kernel: KernelTensor::new(l.out_channels, l.in_channels, kernel_size, values),
                        bias,
                    })
                }
                LayerKind::BatchNormInference => {
                    let scale = (0..l.out_channels).map(|_| next()).collect();
                    let offset = (0..l.out_channels).map(|_| next()).collect();
                    Some(LayerWeights::Affine { scale, offset })
                }
                _ => None,
            })
            .collect();
        WeightStore {
            layers,
            masked: false,
        }
    }

    pub fn zeros(g: &GraphSpec) -> Self {
        Self::from_fn(g, || 0.0)
    }

    pub fn from_layers(layers: Vec<Option<LayerWeights>>) -> Self {
        WeightStore {
            layers,
            masked: false,
        }
    }

    pub fn layer(&self, index: usize) -> Option<&LayerWeights> {
        self.layers.get(index - 1).and_then(Option::as_ref)
    }

    pub fn layer_mut(&mut self, index: usize) -> Option<&mut LayerWeights> {
        self.layers.get_mut(index - 1).and_then(Option::as_mut)
    }

    pub fn conv(&self, index: usize) -> Option<(&KernelTensor, &[f32])> {
        match self.layer(index) {
            Some(LayerWeights::Conv { kernel, bias }) => Some((kernel, bias)),
            _ => None,
        }
    }

    pub fn affine(&self, index: usize) -> Option<(&[f32], &[f32])> {
        match self.layer(index) {
            Some(LayerWeights::Affine { scale, offset }) => Some((scale, offset)),
            _ => None,
        }
    }

    pub fn has_mask(&self) -> bool {
        self.masked
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    fn kernels(&self) -> impl Iterator<Item = (usize, &KernelTensor)> {
        self.layers.iter().enumerate().filter_map(|(i, w)| match w {
            Some(LayerWeights::Conv { kernel, .. }) => Some((i + 1, kernel)),
            _ => None,
        })
    }

    pub fn kernel_entries(&self) -> usize {
        self.kernels().map(|(_, k)| k.len()).sum()
    }

    pub fn unmasked_count(&self) -> usize {
        self.kernels()
            .map(|(_, k)| k.keep.iter().filter(|&&b| b).count())
            .sum()
    }

    pub fn nonzero_kernel_count(&self) -> usize {
        self.kernels()
            .map(|(_, k)| k.values.iter().filter(|v| **v != 0.0).count())
            .sum()
    }

    /// Checks that every tensor matches the layer that owns it.
    pub fn check_shapes(&self, g: &GraphSpec) -> Result<()> {
        if self.layers.len() != g.depth() {
            return Err(Error::Shape(format!(
                "weights cover {} layers, graph has {}",
                self.layers.len(),
                g.depth()
            )));
        }
        for l in &g.layers {
            let ok = match (l.kind, self.layer(l.index)) {
                (
                    LayerKind::CausalConv { kernel_size, .. }
                    | LayerKind::TransposedUpsample { kernel_size },
                    Some(LayerWeights::Conv { kernel, bias }),
                ) => {
                    kernel.out_channels == l.out_channels
                        && kernel.in_channels == l.in_channels
                        && kernel.taps == kernel_size
                        && bias.len() == l.out_channels
                }
                (LayerKind::BatchNormInference, Some(LayerWeights::Affine { scale, offset })) => {
                    scale.len() == l.out_channels && offset.len() == l.out_channels
                }
                (kind, None) => !kind.has_weights(),
                _ => false,
            };
            if !ok {
                return Err(Error::Shape(format!(
                    "weights for layer {} ({}) do not match its shape",
                    l.index,
                    l.kind.name()
                )));
            }
        }
        Ok(())
    }

    /// Masks the `n` unmasked kernel entries of smallest magnitude across all
    /// layers. Ties go to the lower `(layer, offset)`. Biases and affine
    /// parameters are never pruned.
    pub fn prune_global_magnitude(&self, n: usize) -> Result<WeightStore> {
        let available = self.unmasked_count();
        if n > available {
            return Err(Error::OverPrune {
                requested: n,
                available,
            });
        }
        let mut out = self.clone();
        if n == 0 {
            return Ok(out);
        }
        let mut candidates: Vec<(f32, usize, usize)> = self
            .kernels()
            .flat_map(|(layer, k)| {
                k.values
                    .iter()
                    .zip(&k.keep)
                    .enumerate()
                    .filter(|(_, (_, keep))| **keep)
                    .map(move |(off, (v, _))| (v.abs(), layer, off))
            })
            .collect();
        candidates.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        for &(_, layer, off) in &candidates[..n] {
            if let Some(LayerWeights::Conv { kernel, .. }) = out.layer_mut(layer) {
                kernel.mask_entry(off);
            }
        }
        out.masked = true;
        Ok(out)
    }
}

/// A weight container: text manifest, value blob and optional mask blob.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedWeights {
    pub manifest: String,
    pub blob: Vec<u8>,
    pub mask: Option<Vec<u8>>,
}

/// File names of the blobs that accompany a manifest.
pub fn blob_paths(manifest: &Path) -> (PathBuf, PathBuf) {
    (manifest.with_extension("bin"), manifest.with_extension("mask"))
}

const MANIFEST_HEADER: &str = "soi-weights 1";

impl WeightStore {
    /// Encodes the store. `blob_name`/`mask_name` are recorded in the
    /// manifest relative to its own directory.
    pub fn encode(&self, blob_name: &str, mask_name: &str) -> EncodedWeights {
        let mut manifest = String::new();
        let _ = writeln!(manifest, "{MANIFEST_HEADER}");
        let _ = writeln!(manifest, "blob {blob_name}");
        if self.masked {
            let _ = writeln!(manifest, "mask {mask_name}");
        }
        let mut blob = Vec::new();
        let mut mask = Vec::new();
        let mut emit = |values: &[f32], keep: Option<&[bool]>| {
            for (i, v) in values.iter().enumerate() {
                blob.extend_from_slice(&v.to_le_bytes());
                mask.push(keep.map_or(1, |k| u8::from(k[i])));
            }
        };
        for (i, w) in self.layers.iter().enumerate() {
            let index = i + 1;
            match w {
                Some(LayerWeights::Conv { kernel, bias }) => {
                    let _ = writeln!(
                        manifest,
                        "{index} kernel {} {} {}",
                        kernel.out_channels, kernel.in_channels, kernel.taps
                    );
                    let _ = writeln!(manifest, "{index} bias {}", bias.len());
                    emit(&kernel.values, Some(&kernel.keep));
                    emit(bias, None);
                }
                Some(LayerWeights::Affine { scale, offset }) => {
                    let _ = writeln!(manifest, "{index} scale {}", scale.len());
                    let _ = writeln!(manifest, "{index} offset {}", offset.len());
                    emit(scale, None);
                    emit(offset, None);
                }
                None => {
                    let _ = writeln!(manifest, "{index} none");
                }
            }
        }
        EncodedWeights {
            manifest,
            blob,
            mask: self.masked.then_some(mask),
        }
    }

    /// Decodes a container. `load_blob` resolves the file names the
    /// manifest refers to.
    pub fn decode(
        manifest: &str,
        mut load_blob: impl FnMut(&str) -> Result<Vec<u8>>,
    ) -> Result<WeightStore> {
        let mut lines = manifest
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .peekable();

        match lines.next() {
            Some((_, h)) if h == MANIFEST_HEADER => {}
            Some((n, h)) => return Err(Error::parse(n, 1, format!("bad manifest header `{h}`"))),
            None => return Err(Error::parse(1, 1, "empty manifest")),
        }
        let blob = match lines.next() {
            Some((_, l)) if l.starts_with("blob ") => load_blob(l[5..].trim())?,
            Some((n, _)) => return Err(Error::parse(n, 1, "expected `blob <file>`")),
            None => return Err(Error::parse(1, 1, "manifest ends before `blob`")),
        };
        let mask = match lines.peek() {
            Some((_, l)) if l.starts_with("mask ") => {
                let name = l[5..].trim().to_string();
                lines.next();
                Some(load_blob(&name)?)
            }
            _ => None,
        };
        if blob.len() % 4 != 0 {
            return Err(Error::Weights(format!(
                "blob length {} is not a multiple of 4",
                blob.len()
            )));
        }
        let values: Vec<f32> = blob
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        if let Some(m) = &mask {
            if m.len() != values.len() {
                return Err(Error::Weights(format!(
                    "mask has {} entries, blob has {}",
                    m.len(),
                    values.len()
                )));
            }
            if let Some(b) = m.iter().find(|b| **b > 1) {
                return Err(Error::Weights(format!("mask byte {b} is not 0 or 1")));
            }
        }

        let mut cursor = 0usize;
        let mut take = |n: usize, line: usize| -> Result<(Vec<f32>, Vec<bool>)> {
            if cursor + n > values.len() {
                return Err(Error::parse(line, 1, "manifest describes more values than the blob holds"));
            }
            let v = values[cursor..cursor + n].to_vec();
            let k = match &mask {
                Some(m) => m[cursor..cursor + n].iter().map(|b| *b == 1).collect(),
                None => vec![true; n],
            };
            if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    what: format!("{bad} in weights near manifest line {line}"),
                });
            }
            cursor += n;
            Ok((v, k))
        };

        let mut layers: Vec<Option<LayerWeights>> = Vec::new();
        while let Some((n, line)) = lines.next() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let index: usize = fields[0]
                .parse()
                .map_err(|_| Error::parse(n, 1, format!("bad layer index `{}`", fields[0])))?;
            if index != layers.len() + 1 {
                return Err(Error::parse(
                    n,
                    1,
                    format!("expected layer {}, found {index}", layers.len() + 1),
                ));
            }
            let dims = |from: usize| -> Result<Vec<usize>> {
                fields[from..]
                    .iter()
                    .map(|d| {
                        d.parse::<usize>()
                            .map_err(|_| Error::parse(n, 1, format!("bad dimension `{d}`")))
                    })
                    .collect()
            };
            let kind = fields.get(1).copied().unwrap_or("");
            let entry = match kind {
                "none" if fields.len() == 2 => None,
                "kernel" => {
                    let d = dims(2)?;
                    let [o, i, k] = d[..] else {
                        return Err(Error::parse(n, 1, "kernel needs 3 dimensions"));
                    };
                    let (values, keep) = take(o * i * k, n)?;
                    let bias_line = lines.next();
                    let bias_len = match bias_line {
                        Some((bn, bl)) => {
                            let bf: Vec<&str> = bl.split_whitespace().collect();
                            if bf.len() != 3 || bf[0] != fields[0] || bf[1] != "bias" {
                                return Err(Error::parse(bn, 1, "kernel must be followed by its bias"));
                            }
                            bf[2].parse::<usize>().map_err(|_| Error::parse(bn, 1, "bad bias length"))?
                        }
                        None => return Err(Error::parse(n, 1, "kernel without bias")),
                    };
                    if bias_len != o {
                        return Err(Error::parse(n + 1, 1, "bias length differs from out channels"));
                    }
                    let (bias, _) = take(o, n + 1)?;
                    let masked_values = values
                        .iter()
                        .zip(&keep)
                        .map(|(v, k)| if *k { *v } else { 0.0 })
                        .collect();
                    Some(LayerWeights::Conv {
                        kernel: KernelTensor {
                            out_channels: o,
                            in_channels: i,
                            taps: k,
                            values: masked_values,
                            keep,
                        },
                        bias,
                    })
                }
                "scale" => {
                    let d = dims(2)?;
                    let [c] = d[..] else {
                        return Err(Error::parse(n, 1, "scale needs 1 dimension"));
                    };
                    let (scale, _) = take(c, n)?;
                    match lines.next() {
                        Some((_, ol)) if ol.split_whitespace().collect::<Vec<_>>() == [fields[0], "offset", fields[2]] => {}
                        Some((on, _)) => return Err(Error::parse(on, 1, "scale must be followed by a matching offset")),
                        None => return Err(Error::parse(n, 1, "scale without offset")),
                    }
                    let (offset, _) = take(c, n + 1)?;
                    Some(LayerWeights::Affine { scale, offset })
                }
                other => {
                    return Err(Error::parse(n, 1, format!("unknown tensor kind `{other}`")))
                }
            };
            layers.push(entry);
        }
        if cursor != values.len() {
            return Err(Error::Weights(format!(
                "blob holds {} values, manifest uses {cursor}",
                values.len()
            )));
        }
        if let Some(m) = &mask {
            // only kernel entries may be masked
            let mut pos = 0;
            for w in &layers {
                match w {
                    Some(LayerWeights::Conv { kernel, bias }) => {
                        pos += kernel.len();
                        if m[pos..pos + bias.len()].iter().any(|b| *b == 0) {
                            return Err(Error::Weights("bias entries cannot be masked".into()));
                        }
                        pos += bias.len();
                    }
                    Some(LayerWeights::Affine { scale, offset }) => {
                        let n = scale.len() + offset.len();
                        if m[pos..pos + n].iter().any(|b| *b == 0) {
                            return Err(Error::Weights("affine entries cannot be masked".into()));
                        }
                        pos += n;
                    }
                    None => {}
                }
            }
        }
        Ok(WeightStore {
            layers,
            masked: mask.is_some(),
        })
    }

    /// Reads a container from disk; blob names resolve next to the manifest.
    pub fn load(manifest_path: &Path) -> Result<WeightStore> {
        let manifest = std::fs::read_to_string(manifest_path)?;
        let dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        WeightStore::decode(&manifest, |name| Ok(std::fs::read(dir.join(name))?))
    }
}
