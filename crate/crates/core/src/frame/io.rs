use std::fs;
use std::path::Path;

use image::{DynamicImage, ImageBuffer};

use super::{CameraFrame, CameraIntrinsics, Raster};
use crate::error::{Error, Result};

pub const DEPTH_FILE: &str = "depth.png";
pub const FRUIT_MASK_FILE: &str = "fruit_mask.png";
pub const SEMANTIC_MASK_FILE: &str = "semantic_mask.png";
pub const INTRINSICS_FILE: &str = "intrinsics.json";

fn open_png(path: &Path) -> Result<DynamicImage> {
    if !path.is_file() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    image::open(path).map_err(|e| Error::format(path, e.to_string()))
}

fn read_u16(path: &Path, allow_8bit: bool) -> Result<Raster<u16>> {
    let img = open_png(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma16(buf) => Raster::from_vec(w, h, buf.into_raw()),
        DynamicImage::ImageLuma8(buf) if allow_8bit => {
            Raster::from_vec(w, h, buf.into_raw().into_iter().map(u16::from).collect())
        }
        other => Err(Error::format(
            path,
            format!("expected 16-bit single-channel PNG, got {:?}", other.color()),
        )),
    }
}

fn read_u8(path: &Path) -> Result<Raster<u8>> {
    let img = open_png(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => Raster::from_vec(w, h, buf.into_raw()),
        other => Err(Error::format(
            path,
            format!("expected 8-bit single-channel PNG, got {:?}", other.color()),
        )),
    }
}

/// Single-channel label image, 8 or 16 bit.
pub fn load_label_mask(path: &Path) -> Result<Raster<u16>> {
    read_u16(path, true)
}

/// Writes a 16-bit label image.
pub fn save_label_mask(mask: &Raster<u16>, path: &Path) -> Result<()> {
    let (w, h) = (mask.width() as u32, mask.height() as u32);
    write_png(
        path,
        DynamicImage::ImageLuma16(ImageBuffer::from_raw(w, h, mask.as_slice().to_vec()).expect("dims")),
    )
}

pub fn load_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let intr: CameraIntrinsics =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    intr.validate()
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok(intr)
}

/// Loads a frame directory. Errors name the offending file.
pub fn load_frame(dir: &Path) -> Result<CameraFrame> {
    let intrinsics = load_intrinsics(&dir.join(INTRINSICS_FILE))?;
    let depth = read_u16(&dir.join(DEPTH_FILE), false)?;
    let fruit_mask = read_u16(&dir.join(FRUIT_MASK_FILE), true)?;
    let sem_path = dir.join(SEMANTIC_MASK_FILE);
    let semantic_mask = read_u8(&sem_path)?;
    let frame = CameraFrame {
        depth,
        fruit_mask,
        semantic_mask,
        intrinsics,
    };
    frame
        .validate()
        .map_err(|e| Error::format(dir, e.to_string()))?;
    Ok(frame)
}

fn write_png(path: &Path, img: DynamicImage) -> Result<()> {
    img.save(path).map_err(|e| Error::format(path, e.to_string()))
}

pub fn save_frame(frame: &CameraFrame, dir: &Path) -> Result<()> {
    frame.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (w, h) = (frame.depth.width() as u32, frame.depth.height() as u32);
    let buf16 = |r: &Raster<u16>| {
        DynamicImage::ImageLuma16(ImageBuffer::from_raw(w, h, r.as_slice().to_vec()).expect("dims"))
    };
    write_png(&dir.join(DEPTH_FILE), buf16(&frame.depth))?;
    write_png(&dir.join(FRUIT_MASK_FILE), buf16(&frame.fruit_mask))?;
    write_png(
        &dir.join(SEMANTIC_MASK_FILE),
        DynamicImage::ImageLuma8(
            ImageBuffer::from_raw(w, h, frame.semantic_mask.as_slice().to_vec()).expect("dims"),
        ),
    )?;
    let path = dir.join(INTRINSICS_FILE);
    let json = serde_json::to_string_pretty(&frame.intrinsics).expect("intrinsics serialize");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}
