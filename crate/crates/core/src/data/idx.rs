//! IDX image/label pairs (big-endian, magic 2051 for images, 2049 for labels).
//! Each image becomes a sequence of pixel rows scaled to [0, 1].

use std::path::Path;

use super::{Sequence, SupervisedSample};
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 2051;
const LABEL_MAGIC: u32 = 2049;
const N_LABELS: usize = 10;

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::InvalidData(format!("{what}: truncated header")))
}

pub fn parse_idx_pair(images: &[u8], labels: &[u8]) -> Result<Vec<SupervisedSample>> {
    let magic = read_u32(images, 0, "image file")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::InvalidData(format!(
            "image file: magic {magic}, expected {IMAGE_MAGIC}"
        )));
    }
    let n = read_u32(images, 4, "image file")? as usize;
    let rows = read_u32(images, 8, "image file")? as usize;
    let cols = read_u32(images, 12, "image file")? as usize;

    let magic = read_u32(labels, 0, "label file")?;
    if magic != LABEL_MAGIC {
        return Err(Error::InvalidData(format!(
            "label file: magic {magic}, expected {LABEL_MAGIC}"
        )));
    }
    let n_labels = read_u32(labels, 4, "label file")? as usize;
    if n_labels != n {
        return Err(Error::LengthMismatch {
            what: "label file",
            expected: n,
            actual: n_labels,
        });
    }

    let pixels = rows * cols;
    let body = &images[16..];
    if body.len() < n * pixels {
        return Err(Error::InvalidData(format!(
            "image file truncated: {} pixel bytes, expected {}",
            body.len(),
            n * pixels
        )));
    }
    let label_body = &labels[8..];
    if label_body.len() < n {
        return Err(Error::InvalidData(format!(
            "label file truncated: {} labels, expected {n}",
            label_body.len()
        )));
    }

    (0..n)
        .map(|i| {
            let label = label_body[i] as usize;
            if label >= N_LABELS {
                return Err(Error::Row {
                    row: i + 1,
                    message: format!("label {label} outside [0, {N_LABELS})"),
                });
            }
            let values = body[i * pixels..(i + 1) * pixels]
                .iter()
                .map(|&p| p as f64 / 255.0)
                .collect();
            Ok(SupervisedSample {
                sequence: Sequence::Rows { width: cols, values },
                static_features: Vec::new(),
                label,
            })
        })
        .collect()
}

pub fn load_idx_pair(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Vec<SupervisedSample>> {
    let (ip, lp) = (images.as_ref(), labels.as_ref());
    let img = std::fs::read(ip).map_err(|e| Error::io(ip, e))?;
    let lab = std::fs::read(lp).map_err(|e| Error::io(lp, e))?;
    parse_idx_pair(&img, &lab)
}
