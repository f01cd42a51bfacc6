//! PNG and case-directory IO.

use std::path::{Path, PathBuf};

use image::{GrayImage, ImageReader, RgbImage};
use thiserror::Error;

use panodrag_core::reproject::DragCase;
use panodrag_core::{ErpImage, MaskImage, Raster};

use crate::manifest::{CaseManifest, PairSpec, MANIFEST_FILE};

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("{path}: schema violation: {msg}")]
    Schema { path: PathBuf, msg: String },

    #[error("{path}: cannot decode image: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: dimension mismatch: {msg}")]
    DimensionMismatch { path: PathBuf, msg: String },

    #[error("{path}: image is {width}x{height}, but an equirectangular panorama needs width = 2 * height")]
    NotEquirectangular {
        path: PathBuf,
        width: u32,
        height: u32,
    },

    #[error("{dir}: invalid case: {source}")]
    Invalid {
        dir: PathBuf,
        #[source]
        source: panodrag_core::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CaseError + '_ {
    move |source| CaseError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn require(path: &Path) -> Result<(), CaseError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CaseError::MissingFile(path.to_path_buf()))
    }
}

fn decode(path: &Path) -> Result<image::DynamicImage, CaseError> {
    require(path)?;
    let dec = |source| CaseError::Decode {
        path: path.to_path_buf(),
        source,
    };
    ImageReader::open(path)
        .map_err(io_err(path))?
        .with_guessed_format()
        .map_err(io_err(path))?
        .decode()
        .map_err(dec)
}

/// 8-bit RGB (any input color type is converted) scaled into `[0, 1]`.
pub fn load_rgb(path: &Path) -> Result<Raster, CaseError> {
    let img = decode(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    let data = img
        .into_raw()
        .into_iter()
        .map(|v| f64::from(v) / 255.0)
        .collect();
    Raster::new(w as usize, h as usize, 3, data).map_err(|source| CaseError::Invalid {
        dir: path.to_path_buf(),
        source,
    })
}

pub fn load_erp(path: &Path) -> Result<ErpImage, CaseError> {
    let r = load_rgb(path)?;
    if r.width() != 2 * r.height() {
        return Err(CaseError::NotEquirectangular {
            path: path.to_path_buf(),
            width: r.width() as u32,
            height: r.height() as u32,
        });
    }
    Ok(ErpImage::new(r).expect("shape checked"))
}

/// 8-bit grayscale; any nonzero sample is editable.
pub fn load_mask(path: &Path) -> Result<MaskImage, CaseError> {
    let img = decode(path)?.to_luma8();
    let (w, h) = img.dimensions();
    MaskImage::binarize(w as usize, h as usize, img.as_raw()).map_err(|source| CaseError::Invalid {
        dir: path.to_path_buf(),
        source,
    })
}

fn quantize(v: f64) -> u8 {
    (v * 255.0).round_ties_even().clamp(0.0, 255.0) as u8
}

/// Writes 1- or 3-channel rasters; 1-channel is replicated to gray RGB.
pub fn save_rgb(path: &Path, r: &Raster) -> Result<(), CaseError> {
    let data: Vec<u8> = match r.channels() {
        3 => r.data().iter().map(|&v| quantize(v)).collect(),
        1 => r.data().iter().flat_map(|&v| [quantize(v); 3]).collect(),
        c => {
            return Err(CaseError::DimensionMismatch {
                path: path.to_path_buf(),
                msg: format!("cannot write a {c}-channel image"),
            })
        }
    };
    let img = RgbImage::from_raw(r.width() as u32, r.height() as u32, data).expect("buffer size");
    img.save(path).map_err(|source| CaseError::Decode {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_mask(path: &Path, m: &MaskImage) -> Result<(), CaseError> {
    let data = m
        .data()
        .iter()
        .map(|&v| if v != 0 { 255 } else { 0 })
        .collect();
    let img = GrayImage::from_raw(m.width() as u32, m.height() as u32, data).expect("buffer size");
    img.save(path).map_err(|source| CaseError::Decode {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_manifest(dir: &Path) -> Result<CaseManifest, CaseError> {
    let path = dir.join(MANIFEST_FILE);
    require(&path)?;
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| CaseError::Schema {
        path,
        msg: e.to_string(),
    })
}

/// Load and validate a case directory.
pub fn load_case(dir: &Path) -> Result<DragCase, CaseError> {
    let m = read_manifest(dir)?;
    let mpath = dir.join(MANIFEST_FILE);
    if m.width != 2 * m.height {
        return Err(CaseError::Schema {
            path: mpath,
            msg: format!("width {} must be twice height {}", m.width, m.height),
        });
    }
    let image_path = dir.join(&m.image_path);
    let mask_path = dir.join(&m.mask_path);
    let image = load_erp(&image_path)?;
    if (image.width(), image.height()) != (m.width, m.height) {
        return Err(CaseError::DimensionMismatch {
            path: image_path,
            msg: format!(
                "image is {}x{}, manifest says {}x{}",
                image.width(),
                image.height(),
                m.width,
                m.height
            ),
        });
    }
    let mask = load_mask(&mask_path)?;
    if (mask.width(), mask.height()) != (m.width, m.height) {
        return Err(CaseError::DimensionMismatch {
            path: mask_path,
            msg: format!(
                "mask is {}x{}, image is {}x{}",
                mask.width(),
                mask.height(),
                m.width,
                m.height
            ),
        });
    }
    let pairs = m.pairs.iter().map(|p| p.to_pair()).collect();
    DragCase::new(m.id, image, mask, pairs).map_err(|source| CaseError::Invalid {
        dir: dir.to_path_buf(),
        source,
    })
}

pub const IMAGE_FILE: &str = "image.png";
pub const MASK_FILE: &str = "mask.png";

pub fn manifest_for(case: &DragCase) -> CaseManifest {
    CaseManifest {
        id: case.id.clone(),
        image_path: IMAGE_FILE.into(),
        mask_path: MASK_FILE.into(),
        width: case.width(),
        height: case.height(),
        pairs: case.pairs().iter().map(PairSpec::from_pair).collect(),
    }
}

/// Write `case` as `manifest.json`, `image.png` and `mask.png` under `dir`.
pub fn save_case(case: &DragCase, dir: &Path) -> Result<(), CaseError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    save_rgb(&dir.join(IMAGE_FILE), case.image().raster())?;
    save_mask(&dir.join(MASK_FILE), case.mask())?;
    let path = dir.join(MANIFEST_FILE);
    crate::report::write_json(&path, &manifest_for(case)).map_err(io_err(&path))
}
