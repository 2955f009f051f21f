//! IDX files as used by MNIST: big-endian, unsigned-byte payloads.
//!
//! Images carry magic `0x00000803` and dimensions `count, rows, cols`;
//! labels carry magic `0x00000801` and `count`.

use std::fs;
use std::io::Write;
use std::path::Path;

use labelshift::{Dataset, Features, LabelSpace};

use crate::error::{CliError, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn header(bytes: &[u8], words: usize, magic: u32, what: &str) -> Result<Vec<usize>> {
    if bytes.len() < 4 * words {
        return Err(CliError::Data(format!("{what}: truncated header")));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    if word(0) != magic {
        return Err(CliError::Data(format!(
            "{what}: bad magic {:#010x}, expected {magic:#010x}",
            word(0)
        )));
    }
    Ok((1..words).map(|i| word(i) as usize).collect())
}

fn payload<'a>(bytes: &'a [u8], offset: usize, len: usize, what: &str) -> Result<&'a [u8]> {
    let body = &bytes[offset..];
    if body.len() < len {
        return Err(CliError::Data(format!("{what}: truncated payload, {} of {len} bytes", body.len())));
    }
    if body.len() > len {
        return Err(CliError::Data(format!("{what}: {} trailing bytes", body.len() - len)));
    }
    Ok(body)
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let dims = header(bytes, 4, IMAGES_MAGIC, "images")?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let len = count
        .checked_mul(rows)
        .and_then(|x| x.checked_mul(cols))
        .ok_or_else(|| CliError::Data("images: dimensions overflow".into()))?;
    let pixels = payload(bytes, 16, len, "images")?.to_vec();
    Ok(IdxImages { count, rows, cols, pixels })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let dims = header(bytes, 2, LABELS_MAGIC, "labels")?;
    Ok(payload(bytes, 8, dims[0], "labels")?.to_vec())
}

/// Pixels are scaled to `[0, 1]` by dividing by 255.
pub fn idx_dataset(images: &IdxImages, labels: &[u8], space: LabelSpace) -> Result<Dataset> {
    if images.count != labels.len() {
        return Err(CliError::Data(format!(
            "count mismatch: {} images, {} labels",
            images.count,
            labels.len()
        )));
    }
    let d = images.rows * images.cols;
    let data = images.pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let features = Features::new(images.count, d, data)?;
    Ok(Dataset::new(features, labels.iter().map(|&l| usize::from(l)).collect(), space)?)
}

pub fn load_idx(images_path: &Path, labels_path: &Path, space: LabelSpace) -> Result<Dataset> {
    let images = fs::read(images_path).map_err(|e| CliError::io(images_path, e))?;
    let labels = fs::read(labels_path).map_err(|e| CliError::io(labels_path, e))?;
    idx_dataset(&parse_idx_images(&images)?, &parse_idx_labels(&labels)?, space)
}

pub fn write_idx_images<W: Write>(mut out: W, images: &IdxImages) -> std::io::Result<()> {
    out.write_all(&IMAGES_MAGIC.to_be_bytes())?;
    for dim in [images.count, images.rows, images.cols] {
        out.write_all(&(dim as u32).to_be_bytes())?;
    }
    out.write_all(&images.pixels)
}

pub fn write_idx_labels<W: Write>(mut out: W, labels: &[u8]) -> std::io::Result<()> {
    out.write_all(&LABELS_MAGIC.to_be_bytes())?;
    out.write_all(&(labels.len() as u32).to_be_bytes())?;
    out.write_all(labels)
}
