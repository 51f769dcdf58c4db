//! Portable float map (PFM) reader/writer, grayscale `Pf` only.
//!
//! PFM is the on-disk image container for every pipeline artifact: a float
//! format is the only way to make stage outputs byte-exact across runs.
//! Files are written little-endian (scale -1.0) with rows bottom-to-top as
//! the format prescribes; reading flips them back, so a write/read
//! round-trip is the identity on the pixel array.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::image::Image;

pub fn write_pfm(path: &Path, img: &Image) -> Result<()> {
    let (h, w) = img.dim();
    if h == 0 || w == 0 {
        return Err(Error::Validation(format!("empty image for {path:?}")));
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "Pf\n{} {}\n-1.0\n", w, h)?;
    // bottom-to-top, each row left-to-right
    for y in (0..h).rev() {
        for x in 0..w {
            out.write_all(&img[(y, x)].to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_pfm(path: &Path) -> Result<Image> {
    let file = File::open(path)
        .map_err(|e| Error::Pfm(format!("{}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);

    let mut header = String::new();
    reader.read_line(&mut header)?;
    match header.trim() {
        "Pf" => {}
        "PF" => {
            return Err(Error::Pfm(format!(
                "{}: color PFM not supported, expected grayscale Pf",
                path.display()
            )))
        }
        other => {
            return Err(Error::Pfm(format!(
                "{}: bad magic {other:?}",
                path.display()
            )))
        }
    }

    let mut dims = String::new();
    reader.read_line(&mut dims)?;
    let parts: Vec<&str> = dims.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::Pfm(format!("{}: bad dimension line", path.display())));
    }
    let w: usize = parts[0]
        .parse()
        .map_err(|_| Error::Pfm(format!("{}: bad width {:?}", path.display(), parts[0])))?;
    let h: usize = parts[1]
        .parse()
        .map_err(|_| Error::Pfm(format!("{}: bad height {:?}", path.display(), parts[1])))?;

    let mut scale_line = String::new();
    reader.read_line(&mut scale_line)?;
    let scale: f32 = scale_line
        .trim()
        .parse()
        .map_err(|_| Error::Pfm(format!("{}: bad scale {:?}", path.display(), scale_line.trim())))?;
    let little_endian = scale < 0.0;

    let mut buf = vec![0u8; w * h * 4];
    reader
        .read_exact(&mut buf)
        .map_err(|e| Error::Pfm(format!("{}: truncated payload: {e}", path.display())))?;

    let mut img = Array2::<f32>::zeros((h, w));
    for (i, chunk) in buf.chunks_exact(4).enumerate() {
        let bytes = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(bytes)
        } else {
            f32::from_be_bytes(bytes)
        };
        // payload row 0 is the bottom image row
        let y = h - 1 - i / w;
        let x = i % w;
        img[(y, x)] = v;
    }
    Ok(img)
}

/// 8-bit PNG export for eyeballing results; lossy and for viewing only.
/// Pixels are min-max stretched to [0, 255].
pub fn write_png(path: &Path, img: &Image) -> Result<()> {
    let (h, w) = img.dim();
    let (lo, hi) = crate::image::min_max(img);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut buf = image::GrayImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let v = ((img[(y, x)] - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8;
            buf.put_pixel(x as u32, y as u32, image::Luma([v]));
        }
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    buf.save(path)
        .map_err(|e| Error::Validation(format!("png write {}: {e}", path.display())))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.pfm");
        let img: Image = array![[0.25, -1.5, 3.75], [f32::MIN_POSITIVE, 0.0, 1e30]];
        write_pfm(&p, &img).unwrap();
        let back = read_pfm(&p).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn rejects_color_pfm() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.pfm");
        std::fs::write(&p, b"PF\n1 1\n-1.0\n\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00").unwrap();
        assert!(read_pfm(&p).is_err());
    }

    #[test]
    fn identical_images_produce_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.pfm");
        let b = dir.path().join("b.pfm");
        let img = Image::from_shape_fn((5, 7), |(y, x)| (y * 7 + x) as f32 * 0.1);
        write_pfm(&a, &img).unwrap();
        write_pfm(&b, &img).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
}
