//! Dataset layout `DIR/images/*` with optional `DIR/gt/<stem>.<ext>`, and
//! image decoding.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageReader, Limits};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GrayImage, Grid};
use crate::postproc::{BinaryEdgeMap, EDGE};

pub const IMAGE_EXTENSIONS: [&str; 9] = ["png", "jpg", "jpeg", "bmp", "tif", "tiff", "pgm", "ppm", "pnm"];

/// Ground-truth pixels at or above this gray level are edges.
pub const GT_LEVEL: u8 = 128;

/// Largest accepted side length when decoding.
pub const MAX_SIDE: u32 = 16_384;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub stem: String,
    pub image: PathBuf,
    pub gt: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub entries: Vec<DatasetEntry>,
}

impl DatasetManifest {
    pub fn has_gt(&self) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(|e| e.gt.is_some())
    }
}

fn has_image_ext(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn dataset_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Dataset {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn image_dims(path: &Path) -> Result<(u32, u32)> {
    image::image_dimensions(path).map_err(|e| dataset_err(path, e.to_string()))
}

/// Pairs `images/*` with `gt/*` by file stem, sorted by stem.
pub fn load_dataset(dir: &Path) -> Result<DatasetManifest> {
    let images_dir = dir.join("images");
    if !images_dir.is_dir() {
        return Err(dataset_err(dir, "missing images/ directory"));
    }
    let gt_dir = dir.join("gt");
    let mut images: Vec<PathBuf> = std::fs::read_dir(&images_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && has_image_ext(p))
        .collect();
    images.sort();
    let mut entries = Vec::with_capacity(images.len());
    for image in images {
        let stem = image
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| dataset_err(&image, "file name is not valid UTF-8"))?
            .to_string();
        let gt = ["png"]
            .into_iter()
            .chain(IMAGE_EXTENSIONS)
            .map(|ext| gt_dir.join(format!("{stem}.{ext}")))
            .find(|p| p.is_file());
        if let Some(g) = &gt {
            let (a, b) = (image_dims(&image)?, image_dims(g)?);
            if a != b {
                return Err(dataset_err(
                    g,
                    format!("ground truth is {}x{} but image is {}x{}", b.0, b.1, a.0, a.1),
                ));
            }
        }
        entries.push(DatasetEntry { stem, image, gt });
    }
    let name = dir
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    Ok(DatasetManifest { name, entries })
}

fn limits() -> Limits {
    let mut l = Limits::default();
    l.max_image_width = Some(MAX_SIDE);
    l.max_image_height = Some(MAX_SIDE);
    l.max_alloc = Some(1 << 30);
    l
}

fn decode(bytes: &[u8]) -> Result<DynamicImage> {
    let mut reader = ImageReader::new(Cursor::new(bytes)).with_guessed_format()?;
    reader.limits(limits());
    Ok(reader.decode()?)
}

/// Gray levels from a decoded image; color uses 0.299 R + 0.587 G + 0.114 B
/// on 8-bit channels.
pub fn to_gray(img: &DynamicImage) -> GrayImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(g) => Grid::from_fn(h, w, |r, c| f64::from(g.get_pixel(c as u32, r as u32)[0])),
        _ => {
            let rgb = img.to_rgb8();
            Grid::from_fn(h, w, |r, c| {
                let p = rgb.get_pixel(c as u32, r as u32);
                0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2])
            })
        }
    }
}

pub fn decode_gray(bytes: &[u8]) -> Result<GrayImage> {
    Ok(to_gray(&decode(bytes)?))
}

/// Binarizes at [`GT_LEVEL`] after gray conversion.
pub fn decode_edge_map(bytes: &[u8]) -> Result<BinaryEdgeMap> {
    let img = decode(bytes)?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let g = Grid::from_fn(h, w, |r, c| {
        if img.get_pixel(c as u32, r as u32)[0] >= GT_LEVEL {
            EDGE
        } else {
            0
        }
    });
    BinaryEdgeMap::from_grid(g)
}

pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path)?;
    decode_gray(&bytes).map_err(|e| dataset_err(path, e.to_string()))
}

pub fn load_edge_map(path: &Path) -> Result<BinaryEdgeMap> {
    let bytes = std::fs::read(path)?;
    decode_edge_map(&bytes).map_err(|e| dataset_err(path, e.to_string()))
}

/// Writes an 8-bit single-channel PNG.
pub fn save_edge_map(map: &BinaryEdgeMap, path: &Path) -> Result<()> {
    let (rows, cols) = map.dims();
    let buf = image::GrayImage::from_raw(cols as u32, rows as u32, map.as_grid().as_slice().to_vec())
        .ok_or_else(|| Error::Shape("edge map buffer size".into()))?;
    buf.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

/// Rounds and clamps to 8 bits, then writes a PNG.
pub fn save_gray(img: &GrayImage, path: &Path) -> Result<()> {
    let (rows, cols) = img.dims();
    let data: Vec<u8> = img.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    let buf = image::GrayImage::from_raw(cols as u32, rows as u32, data)
        .ok_or_else(|| Error::Shape("image buffer size".into()))?;
    buf.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}
