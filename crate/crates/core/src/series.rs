//! Multichannel time series and their CSV / raw binary encodings.

use crate::{Error, Result};
use std::fmt::Write as _;

/// `frames × channels` values stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    channels: usize,
    data: Vec<f32>,
}

impl Series {
    pub fn new(channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::Shape("series needs at least one channel".into()));
        }
        if data.len() % channels != 0 {
            return Err(Error::Shape(format!(
                "{} values do not split into frames of {channels} channels",
                data.len()
            )));
        }
        Ok(Series { channels, data })
    }

    pub fn zeros(channels: usize, frames: usize) -> Self {
        Series {
            channels,
            data: vec![0.0; channels * frames],
        }
    }

    pub fn from_frames<'a>(channels: usize, frames: impl IntoIterator<Item = &'a [f32]>) -> Result<Self> {
        let mut data = Vec::new();
        for f in frames {
            if f.len() != channels {
                return Err(Error::Shape(format!(
                    "frame has {} values, expected {channels}",
                    f.len()
                )));
            }
            data.extend_from_slice(f);
        }
        Series::new(channels, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn frame(&self, t: usize) -> &[f32] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    #[inline]
    pub fn frame_mut(&mut self, t: usize) -> &mut [f32] {
        &mut self.data[t * self.channels..(t + 1) * self.channels]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.channels)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn prefix(&self, frames: usize) -> Series {
        Series {
            channels: self.channels,
            data: self.data[..frames * self.channels].to_vec(),
        }
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFinite {
                what: format!(
                    "{} at frame {}, channel {}",
                    self.data[i],
                    i / self.channels,
                    i % self.channels
                ),
            }),
            None => Ok(()),
        }
    }

    /// One row per frame, comma-separated. Values use Rust's shortest
    /// round-tripping representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 12);
        for f in self.frames() {
            for (c, v) in f.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Series> {
        let mut channels = 0usize;
        let mut data = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut count = 0;
            for (c, field) in line.split(',').enumerate() {
                let field = field.trim();
                let v: f32 = field.parse().map_err(|_| {
                    Error::parse(n + 1, c + 1, format!("`{field}` is not a number"))
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        what: format!("{field} at row {}, column {}", n + 1, c + 1),
                    });
                }
                data.push(v);
                count += 1;
            }
            if channels == 0 {
                channels = count;
            } else if count != channels {
                return Err(Error::Shape(format!(
                    "row {} has {count} columns, expected {channels}",
                    n + 1
                )));
            }
        }
        if channels == 0 {
            return Err(Error::Shape("series file holds no frames".into()));
        }
        Series::new(channels, data)
    }

    /// binary32 little-endian, frame-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_bytes(bytes: &[u8], channels: usize) -> Result<Series> {
        if bytes.len() % (4 * channels.max(1)) != 0 {
            return Err(Error::Shape(format!(
                "{} bytes do not hold whole frames of {channels} binary32 values",
                bytes.len()
            )));
        }
        let data: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let s = Series::new(channels, data)?;
        s.ensure_finite()?;
        Ok(s)
    }
}
