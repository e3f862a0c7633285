//! PNG (and any other format the `image` crate was built with) to and from
//! [`ImageBuf`].

use std::fs;
use std::io::Cursor;
use std::path::Path;

use degbench_core::ImageBuf;
use image::codecs::png::PngEncoder;
use image::{ColorType, DynamicImage, ExtendedColorType, ImageEncoder};

use crate::{Error, Result};

/// Decodes an image file. Gray inputs stay single-channel; everything else
/// is converted to 8-bit RGB (alpha dropped).
pub fn read_image(path: &Path) -> Result<ImageBuf> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes).map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })?;
    Ok(from_dynamic(img)?)
}

pub fn from_dynamic(img: DynamicImage) -> degbench_core::Result<ImageBuf> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img.color() {
        ColorType::L8 | ColorType::La8 | ColorType::L16 | ColorType::La16 => {
            ImageBuf::new(w, h, 1, img.into_luma8().into_raw())
        }
        _ => ImageBuf::new(w, h, 3, img.into_rgb8().into_raw()),
    }
}

/// PNG bytes with the encoder's default settings; identical input gives
/// identical bytes.
pub fn encode_png(img: &ImageBuf) -> Vec<u8> {
    let color = if img.channels() == 1 {
        ExtendedColorType::L8
    } else {
        ExtendedColorType::Rgb8
    };
    let mut out = Cursor::new(Vec::new());
    PngEncoder::new(&mut out)
        .write_image(img.data(), img.width() as u32, img.height() as u32, color)
        .expect("in-memory PNG encoding of a well-formed buffer");
    out.into_inner()
}

pub fn write_png(path: &Path, img: &ImageBuf) -> Result<()> {
    fs::write(path, encode_png(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for c in [1, 3] {
            let img = ImageBuf::from_fn(13, 7, c, |x, y, ch| (x * 19 + y * 5 + ch) as u8).unwrap();
            let p = dir.path().join(format!("x{c}.png"));
            write_png(&p, &img).unwrap();
            assert_eq!(read_image(&p).unwrap(), img);
            assert_eq!(encode_png(&img), fs::read(&p).unwrap());
        }
    }

    #[test]
    fn unreadable_files_report_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.png");
        fs::write(&p, b"not an image").unwrap();
        let msg = read_image(&p).unwrap_err().to_string();
        assert!(msg.contains("bad.png"), "{msg}");
        assert!(read_image(&dir.path().join("missing.png")).is_err());
    }
}
