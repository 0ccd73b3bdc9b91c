//! Frame-directory ingestion: 8-bit PGM or PNG files in lexicographic order.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage};

use crate::error::{KshsError, Result};
use crate::scattering::{FrameImage, Grid};

const FRAME_EXTENSIONS: [&str; 2] = ["pgm", "png"];

/// Image files of a frame directory, sorted by file name.
pub fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if paths.is_empty() {
        return Err(KshsError::Empty(format!("no PGM/PNG frames in {}", dir.display())));
    }
    Ok(paths)
}

/// Intensities in `[0, 1]`; colour images are reduced to luminance
/// `0.299 R + 0.587 G + 0.114 B`.
pub fn image_to_grid(image: &DynamicImage) -> Grid {
    let (width, height) = (image.width() as usize, image.height() as usize);
    let data: Vec<f64> = match image {
        DynamicImage::ImageLuma8(g) => g.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(g) => g.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                ((0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0).clamp(0.0, 1.0)
            })
            .collect(),
    };
    Grid::new(height, width, data).expect("image buffer matches its dimensions")
}

/// Bilinear resampling with pixel-centre alignment.
pub fn resize_bilinear(grid: &Grid, height: usize, width: usize) -> Grid {
    if grid.height() == height && grid.width() == width {
        return grid.clone();
    }
    let sy = grid.height() as f64 / height as f64;
    let sx = grid.width() as f64 / width as f64;
    let sample = |pos: f64, len: usize| {
        let p = pos.clamp(0.0, (len - 1) as f64);
        let lo = p.floor() as usize;
        let hi = (lo + 1).min(len - 1);
        (lo, hi, p - lo as f64)
    };
    Grid::from_fn(height, width, |y, x| {
        let (y0, y1, fy) = sample((y as f64 + 0.5) * sy - 0.5, grid.height());
        let (x0, x1, fx) = sample((x as f64 + 0.5) * sx - 0.5, grid.width());
        let top = grid.get(y0, x0) * (1.0 - fx) + grid.get(y0, x1) * fx;
        let bottom = grid.get(y1, x0) * (1.0 - fx) + grid.get(y1, x1) * fx;
        (top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0)
    })
}

pub fn load_frame(path: &Path, working_size: (usize, usize)) -> Result<FrameImage> {
    let image = image::open(path).map_err(|source| KshsError::Image {
        path: path.to_path_buf(),
        source,
    })?;
    FrameImage::new(resize_bilinear(&image_to_grid(&image), working_size.0, working_size.1))
}

/// All frames of a directory, decoded and resampled to `working_size`.
pub fn load_frames(dir: &Path, working_size: (usize, usize)) -> Result<Vec<FrameImage>> {
    if working_size.0 == 0 || working_size.1 == 0 {
        return Err(KshsError::InvalidArgument("working size must be positive".into()));
    }
    frame_paths(dir)?
        .iter()
        .map(|p| load_frame(p, working_size))
        .collect()
}

/// Writes a grid as an 8-bit grayscale image; the format follows the
/// extension (`.pgm` or `.png`).
pub fn save_frame(path: &Path, grid: &Grid) -> Result<()> {
    let bytes: Vec<u8> = grid
        .values()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let image = GrayImage::from_raw(grid.width() as u32, grid.height() as u32, bytes)
        .expect("buffer matches grid dimensions");
    image.save(path).map_err(|source| KshsError::Image {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_preserves_constants() {
        let g = Grid::filled(5, 7, 0.25);
        let r = resize_bilinear(&g, 12, 3);
        assert_eq!((r.height(), r.width()), (12, 3));
        assert!(r.values().iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn bilinear_downsample_by_two_averages_pairs() {
        let g = Grid::from_fn(2, 4, |_, x| x as f64 / 4.0);
        let r = resize_bilinear(&g, 1, 2);
        assert!((r.get(0, 0) - 0.125).abs() < 1e-15);
        assert!((r.get(0, 1) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn colour_uses_luminance_weights() {
        let rgb = image::RgbImage::from_pixel(1, 1, image::Rgb([255, 0, 0]));
        let g = image_to_grid(&DynamicImage::ImageRgb8(rgb));
        assert!((g.get(0, 0) - 0.299).abs() < 1e-12);
    }
}
