//! Dataset loading, synthetic data, and artifact output.
//!
//! Images move through the pipeline as `f64` pixels under one of two range
//! conventions: `Unit` maps stored bytes to `[0, 1]` (`b / 255`), `Signed`
//! to `[-1, 1]` (`2b / 255 - 1`). IDX files use the classic big-endian
//! layout with magic `0x00000803` (images) and `0x00000801` (labels). Image
//! grids are written as binary PGM (P5) with two-pixel black gutters, and
//! training logs round-trip losslessly through CSV.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::generator::ImageTensor;
use crate::trainer::{LogRecord, RecordKind, TrainingLog};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// How byte pixels map to floats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeConvention {
    /// `[0, 1]`, via `b / 255`.
    Unit,
    /// `[-1, 1]`, via `2b / 255 - 1`.
    Signed,
}

impl RangeConvention {
    fn decode(self, b: u8) -> f64 {
        match self {
            RangeConvention::Unit => b as f64 / 255.0,
            RangeConvention::Signed => 2.0 * b as f64 / 255.0 - 1.0,
        }
    }

    fn encode(self, p: f64) -> u8 {
        let unit = match self {
            RangeConvention::Unit => p,
            RangeConvention::Signed => (p + 1.0) / 2.0,
        };
        (255.0 * unit.clamp(0.0, 1.0)).round() as u8
    }
}

/// Images with their class labels under a shared range convention.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub images: Vec<ImageTensor>,
    pub labels: Vec<u8>,
    pub range: RangeConvention,
}

fn read_u32_be(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset.checked_add(4).ok_or_else(|| Error::Parse {
        offset,
        message: "offset overflow".into(),
    })?;
    let slice = bytes.get(offset..end).ok_or_else(|| Error::Parse {
        offset,
        message: "file truncated inside a 32-bit field".into(),
    })?;
    Ok(u32::from_be_bytes(slice.try_into().unwrap()))
}

/// Load an IDX image file (magic `0x00000803`).
pub fn load_idx_images(path: &Path, range: RangeConvention) -> Result<Vec<ImageTensor>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let magic = read_u32_be(&bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: format!("bad image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        });
    }
    let count = read_u32_be(&bytes, 4)? as usize;
    let height = read_u32_be(&bytes, 8)? as usize;
    let width = read_u32_be(&bytes, 12)? as usize;
    let per_image = height.checked_mul(width).ok_or_else(|| Error::Parse {
        offset: 8,
        message: format!("image dimensions {height}x{width} overflow"),
    })?;
    let total = count.checked_mul(per_image).ok_or_else(|| Error::Parse {
        offset: 4,
        message: format!("{count} images of {height}x{width} overflow"),
    })?;
    let expected = 16 + total;
    if bytes.len() != expected {
        return Err(Error::Parse {
            offset: bytes.len().min(expected),
            message: format!(
                "expected {expected} bytes for {count} images of {height}x{width}, found {}",
                bytes.len()
            ),
        });
    }
    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * per_image;
        let pixels = bytes[start..start + per_image]
            .iter()
            .map(|&b| range.decode(b))
            .collect();
        images.push(ImageTensor {
            height,
            width,
            pixels,
        });
    }
    Ok(images)
}

/// Load an IDX label file (magic `0x00000801`).
pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let magic = read_u32_be(&bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: format!("bad label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        });
    }
    let count = read_u32_be(&bytes, 4)? as usize;
    let expected = 8 + count;
    if bytes.len() != expected {
        return Err(Error::Parse {
            offset: bytes.len().min(expected),
            message: format!("expected {expected} bytes for {count} labels, found {}", bytes.len()),
        });
    }
    Ok(bytes[8..].to_vec())
}

/// Write images in IDX format. All images must share one shape.
pub fn write_idx_images(
    images: &[ImageTensor],
    range: RangeConvention,
    path: &Path,
) -> Result<()> {
    let (height, width) = match images.first() {
        Some(img) => (img.height, img.width),
        None => return Err(Error::Shape("cannot write an empty image file".into())),
    };
    for (i, img) in images.iter().enumerate() {
        if img.height != height || img.width != width {
            return Err(Error::Shape(format!(
                "image {i} is {}x{}, expected {height}x{width}",
                img.height, img.width
            )));
        }
    }
    let mut bytes = Vec::with_capacity(16 + images.len() * height * width);
    bytes.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&(height as u32).to_be_bytes());
    bytes.extend_from_slice(&(width as u32).to_be_bytes());
    for img in images {
        bytes.extend(img.pixels.iter().map(|&p| range.encode(p)));
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Write labels in IDX format.
pub fn write_idx_labels(labels: &[u8], path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    bytes.extend_from_slice(labels);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Keep the first `per_class` samples of each requested class, in file
/// order. Errors if any class has no samples at all.
pub fn filter_classes(
    images: &[ImageTensor],
    labels: &[u8],
    classes: &[u8],
    per_class: usize,
) -> Result<(Vec<ImageTensor>, Vec<u8>)> {
    if images.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    let mut out_images = Vec::new();
    let mut out_labels = Vec::new();
    for &class in classes {
        let mut taken = 0;
        for (img, &label) in images.iter().zip(labels) {
            if label == class {
                out_images.push(img.clone());
                out_labels.push(label);
                taken += 1;
                if taken == per_class {
                    break;
                }
            }
        }
        if taken == 0 {
            return Err(Error::Config(format!("dataset contains no samples of class {class}")));
        }
    }
    Ok((out_images, out_labels))
}

/// Synthetic two-class dataset of bar images in the unit range: class 0 is
/// a single full-height vertical bar of ones at a random column, class 1 a
/// single full-width horizontal bar at a random row, on a zero background.
/// All class-0 samples come first.
pub fn synthetic_bars(size: usize, n_per_class: usize, rng: &mut impl Rng) -> LabeledDataset {
    let mut images = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for class in 0..2u8 {
        for _ in 0..n_per_class {
            let pos = rng.random_range(0..size);
            let mut img = ImageTensor::zeros(size, size);
            for k in 0..size {
                match class {
                    0 => img.set(k, pos, 1.0),
                    _ => img.set(pos, k, 1.0),
                }
            }
            images.push(img);
            labels.push(class);
        }
    }
    LabeledDataset {
        images,
        labels,
        range: RangeConvention::Unit,
    }
}

/// Tile `rows × cols` images into one binary PGM (P5) file with two-pixel
/// black gutters between cells. Takes the first `rows·cols` images.
pub fn write_image_grid(
    images: &[ImageTensor],
    rows: usize,
    cols: usize,
    range: RangeConvention,
    path: &Path,
) -> Result<()> {
    const GUTTER: usize = 2;
    if rows == 0 || cols == 0 {
        return Err(Error::Shape("grid must have positive dimensions".into()));
    }
    if images.len() < rows * cols {
        return Err(Error::Shape(format!(
            "grid of {rows}x{cols} needs {} images, got {}",
            rows * cols,
            images.len()
        )));
    }
    let (h, w) = (images[0].height, images[0].width);
    for (i, img) in images[..rows * cols].iter().enumerate() {
        if img.height != h || img.width != w {
            return Err(Error::Shape(format!(
                "image {i} is {}x{}, expected {h}x{w}",
                img.height, img.width
            )));
        }
    }
    let out_h = rows * h + (rows - 1) * GUTTER;
    let out_w = cols * w + (cols - 1) * GUTTER;
    let mut raster = vec![0u8; out_h * out_w];
    for r in 0..rows {
        for c in 0..cols {
            let img = &images[r * cols + c];
            let top = r * (h + GUTTER);
            let left = c * (w + GUTTER);
            for y in 0..h {
                for x in 0..w {
                    raster[(top + y) * out_w + (left + x)] = range.encode(img.get(y, x));
                }
            }
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write!(file, "P5\n{out_w} {out_h}\n255\n").map_err(|e| Error::io(path, e))?;
    file.write_all(&raster).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn kind_str(kind: RecordKind) -> &'static str {
    match kind {
        RecordKind::Critic => "critic",
        RecordKind::Generator => "generator",
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Write the training log as CSV. Floats use 17 significant digits so the
/// file round-trips bit-exactly through [`read_csv_log`].
pub fn write_csv_log(log: &TrainingLog, path: &Path) -> Result<()> {
    let mut out = String::from("kind,iteration,loss,penalty,wasserstein\n");
    for r in &log.records {
        out.push_str(&format!(
            "{},{},{:.16e},{},{}\n",
            kind_str(r.kind),
            r.iteration,
            r.loss,
            format_opt(r.penalty),
            format_opt(r.wasserstein)
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Parse {
        offset: line,
        message: format!("line {line}: cannot parse {what} from {field:?}"),
    })
}

fn parse_opt(field: &str, line: usize, what: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_field(field, line, what).map(Some)
    }
}

/// Read a CSV training log written by [`write_csv_log`].
pub fn read_csv_log(path: &Path) -> Result<TrainingLog> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "kind,iteration,loss,penalty,wasserstein")) => {}
        other => {
            return Err(Error::Parse {
                offset: 0,
                message: format!("bad CSV header: {:?}", other.map(|(_, l)| l)),
            })
        }
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                offset: i,
                message: format!("line {i}: expected 5 fields, found {}", fields.len()),
            });
        }
        let kind = match fields[0] {
            "critic" => RecordKind::Critic,
            "generator" => RecordKind::Generator,
            other => {
                return Err(Error::Parse {
                    offset: i,
                    message: format!("line {i}: unknown record kind {other:?}"),
                })
            }
        };
        records.push(LogRecord {
            kind,
            iteration: parse_field(fields[1], i, "iteration")?,
            loss: parse_field(fields[2], i, "loss")?,
            penalty: parse_opt(fields[3], i, "penalty")?,
            wasserstein: parse_opt(fields[4], i, "wasserstein")?,
        });
    }
    Ok(TrainingLog { records })
}
