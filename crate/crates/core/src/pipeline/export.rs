use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::binio::write_atomic;
use crate::error::{Error, Result};
use crate::featlearn::Codebook;

/// Pixels per matrix cell in rendered images.
const PIXEL_SCALE: u32 = 8;

/// One exported base: the un-whitened patch (frames × bands) and the files
/// written for it.
#[derive(Debug, Clone)]
pub struct ExportedBase {
    pub index: usize,
    pub patch: Array2<f64>,
    pub grid_path: PathBuf,
    pub image_path: Option<PathBuf>,
}

/// Maps base `index` back through the inverse whitening and reshapes it to
/// frames × bands.
pub fn unwhitened_patch(codebook: &Codebook, index: usize) -> Array2<f64> {
    let raw = codebook.whitening().unapply(codebook.bases().row(index));
    let (p, m) = (codebook.frames_per_patch(), codebook.frame_dim());
    Array2::from_shape_vec((p, m), raw.to_vec()).expect("codebook dim is frames × frame_dim")
}

/// Writes the first `count` bases (at most k) of `codebook` to `dir` as
/// `base_NNN.csv` grids, plus grayscale PNGs when `images` is set. In the
/// images time runs left to right and the lowest band is at the bottom.
pub fn export_bases(codebook: &Codebook, count: usize, dir: &Path, images: bool) -> Result<Vec<ExportedBase>> {
    std::fs::create_dir_all(dir)?;
    let n = count.min(codebook.k());
    let mut out = Vec::with_capacity(n);
    for index in 0..n {
        let patch = unwhitened_patch(codebook, index);
        let grid_path = dir.join(format!("base_{index:03}.csv"));
        let mut text = String::new();
        for row in patch.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(text, "{}", cells.join(",")).expect("writing to a string");
        }
        write_atomic(&grid_path, text.as_bytes())?;
        let image_path = if images {
            let p = dir.join(format!("base_{index:03}.png"));
            render(&patch).save(&p).map_err(|e| Error::Format(format!("{}: {e}", p.display())))?;
            Some(p)
        } else {
            None
        };
        out.push(ExportedBase { index, patch, grid_path, image_path });
    }
    Ok(out)
}

fn render(patch: &Array2<f64>) -> image::GrayImage {
    let (p, m) = patch.dim();
    let lo = patch.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = patch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    image::GrayImage::from_fn(p as u32 * PIXEL_SCALE, m as u32 * PIXEL_SCALE, |x, y| {
        let frame = (x / PIXEL_SCALE) as usize;
        let band = m - 1 - (y / PIXEL_SCALE) as usize;
        let v = (patch[[frame, band]] - lo) / span;
        image::Luma([(v * 255.0).round() as u8])
    })
}
