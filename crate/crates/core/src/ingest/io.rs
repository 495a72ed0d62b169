use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader, Luma};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::types::{BinaryMask, GrayImage};

fn decode(path: &Path) -> Result<DynamicImage> {
    let unreadable = |reason: String| Error::UnreadableImage {
        path: path.to_path_buf(),
        reason,
    };
    ImageReader::open(path)
        .map_err(|e| unreadable(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| unreadable(e.to_string()))?
        .decode()
        .map_err(|e| unreadable(e.to_string()))
}

fn to_luma8(path: &Path, img: DynamicImage) -> Result<image::GrayImage> {
    match img {
        DynamicImage::ImageLuma8(g) => Ok(g),
        // 8-bit color radiographs are reduced to luminance.
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => {
            Ok(img.to_luma8())
        }
        other => Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            found: format!("{:?}", other.color()),
        }),
    }
}

/// Loads an 8-bit PNG or PGM and maps `0..=255` onto `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let gray = to_luma8(path, decode(path)?)?;
    let (w, h) = gray.dimensions();
    let data = gray.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect();
    GrayImage::new(h as usize, w as usize, data)
}

/// Loads a mask image; any non-zero pixel is foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let gray = to_luma8(path, decode(path)?)?;
    let (w, h) = gray.dimensions();
    let data = gray.as_raw().iter().map(|&v| u8::from(v != 0)).collect();
    BinaryMask::new(h as usize, w as usize, data)
}

fn format_for(path: &Path) -> Result<ImageFormat> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => Ok(ImageFormat::Png),
        Some("pgm") | Some("pnm") => Ok(ImageFormat::Pnm),
        _ => Err(Error::InvalidConfig(format!(
            "{}: output must end in .png or .pgm",
            path.display()
        ))),
    }
}

fn write_luma(path: &Path, width: usize, height: usize, pixels: Vec<u8>) -> Result<()> {
    let format = format_for(path)?;
    let buf: image::ImageBuffer<Luma<u8>, Vec<u8>> =
        image::ImageBuffer::from_raw(width as u32, height as u32, pixels)
            .expect("buffer sized from dimensions");
    let mut bytes = Cursor::new(Vec::new());
    DynamicImage::ImageLuma8(buf)
        .write_to(&mut bytes, format)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    write_atomic(path, bytes.get_ref())
}

/// Saves as 8-bit grayscale, `round(v * 255)`.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let pixels = img.data().iter().map(|v| (v * 255.0).round() as u8).collect();
    write_luma(path.as_ref(), img.width(), img.height(), pixels)
}

/// Saves a mask as 0 / 255.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let pixels = mask.data().iter().map(|v| v * 255).collect();
    write_luma(path.as_ref(), mask.width(), mask.height(), pixels)
}

/// Saves an 8-bit RGB raster (PNG or PPM by extension).
pub fn save_rgb(img: &image::RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = match format_for(path) {
        Err(_) if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm")) => ImageFormat::Pnm,
        other => other?,
    };
    let mut bytes = Cursor::new(Vec::new());
    img.write_to(&mut bytes, format)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    write_atomic(path, bytes.get_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_endpoints() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        let raw = image::GrayImage::from_raw(3, 1, vec![0u8, 128, 255]).unwrap();
        raw.save(&path).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.data()[0], 0.0);
        assert!((img.data()[1] - 0.50196).abs() < 1e-5);
        assert_eq!(img.data()[2], 1.0);
    }

    #[test]
    fn sixteen_bit_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g16.png");
        let raw: image::ImageBuffer<Luma<u16>, Vec<u16>> =
            image::ImageBuffer::from_raw(2, 2, vec![0u16, 1000, 40000, 65535]).unwrap();
        raw.save(&path).unwrap();
        assert!(matches!(
            load_image(&path),
            Err(Error::UnsupportedBitDepth { .. })
        ));
    }

    #[test]
    fn garbage_is_unreadable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.png");
        std::fs::write(&path, b"not an image").unwrap();
        assert!(matches!(load_image(&path), Err(Error::UnreadableImage { .. })));
        assert!(matches!(
            load_image(dir.path().join("missing.png")),
            Err(Error::UnreadableImage { .. })
        ));
    }

    #[test]
    fn eight_bit_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let data: Vec<f64> = (0..256).map(|v| v as f64 / 255.0).collect();
        let img = GrayImage::new(16, 16, data).unwrap();
        for name in ["r.png", "r.pgm"] {
            let path = dir.path().join(name);
            save_image(&img, &path).unwrap();
            let back = load_image(&path).unwrap();
            assert_eq!(back, img);
            save_image(&back, &path).unwrap();
            assert_eq!(load_image(&path).unwrap(), img);
        }
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let m = BinaryMask::from_fn(5, 7, |r, c| (r + c) % 3 == 0).unwrap();
        save_mask(&m, &path).unwrap();
        assert_eq!(load_mask(&path).unwrap(), m);
    }
}
