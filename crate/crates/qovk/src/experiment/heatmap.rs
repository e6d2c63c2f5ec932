//! CSV and PGM heatmap grids of Choi matrices, with one shared color scale
//! per quantity across every file of a run.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::clinalg::ComplexMatrix;

use super::ExperimentError;

fn io_err(path: &Path, e: std::io::Error) -> ExperimentError {
    ExperimentError::Stage {
        stage: "emit-heatmaps",
        message: format!("{}: {e}", path.display()),
    }
}

fn grid(m: &ComplexMatrix, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| f(i, j)).collect())
        .collect()
}

fn write_csv(path: &Path, grid: &[Vec<f64>]) -> Result<(), ExperimentError> {
    let mut out = String::new();
    for row in grid {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

fn write_pgm(path: &Path, grid: &[Vec<f64>], lo: f64, hi: f64) -> Result<(), ExperimentError> {
    let h = grid.len();
    let w = grid.first().map_or(0, |r| r.len());
    let span = hi - lo;
    let mut text = format!("P2\n{w} {h}\n255\n");
    for row in grid {
        let pixels: Vec<String> = row
            .iter()
            .map(|&v| {
                let level = if span > 0.0 {
                    ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
                } else {
                    0
                };
                level.to_string()
            })
            .collect();
        text.push_str(&pixels.join(" "));
        text.push('\n');
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

/// Writes, per named Choi matrix, the real part and the magnitude as CSV
/// grids plus 8-bit PGM images. The pixel scale of each quantity is shared
/// across all matrices of the call, so the brightest pixel of the whole set
/// maps to 255 in every file.
pub fn emit_heatmaps(
    entries: &[(String, ComplexMatrix)],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let re_grids: Vec<Vec<Vec<f64>>> = entries
        .iter()
        .map(|(_, m)| grid(m, |i, j| m.get(i, j).re))
        .collect();
    let abs_grids: Vec<Vec<Vec<f64>>> = entries
        .iter()
        .map(|(_, m)| grid(m, |i, j| m.get(i, j).norm()))
        .collect();
    let range = |grids: &[Vec<Vec<f64>>]| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for g in grids {
            for row in g {
                for &v in row {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        (lo, hi)
    };
    let (re_lo, re_hi) = range(&re_grids);
    let (abs_lo, abs_hi) = range(&abs_grids);

    let mut written = Vec::new();
    for (k, (name, _)) in entries.iter().enumerate() {
        let paths = [
            (format!("heatmap_{name}_re.csv"), &re_grids[k], None),
            (
                format!("heatmap_{name}_re.pgm"),
                &re_grids[k],
                Some((re_lo, re_hi)),
            ),
            (format!("heatmap_{name}_abs.csv"), &abs_grids[k], None),
            (
                format!("heatmap_{name}_abs.pgm"),
                &abs_grids[k],
                Some((abs_lo, abs_hi)),
            ),
        ];
        for (file, g, scale) in paths {
            let path = out_dir.join(file);
            match scale {
                None => write_csv(&path, g)?,
                Some((lo, hi)) => write_pgm(&path, g, lo, hi)?,
            }
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clinalg::C64;

    #[test]
    fn pgm_header_and_shared_scale() {
        let dir = std::env::temp_dir().join(format!("qovk_heatmap_{}", std::process::id()));
        let bright = ComplexMatrix::from_fn(2, 2, |i, j| C64::new((i * 2 + j) as f64, 0.0));
        let dim = ComplexMatrix::zeros(2, 2);
        let written = emit_heatmaps(
            &[("true".into(), bright), ("learned".into(), dim)],
            &dir,
        )
        .unwrap();
        assert_eq!(written.len(), 8);
        let text = fs::read_to_string(dir.join("heatmap_true_re.pgm")).unwrap();
        assert!(text.starts_with("P2\n2 2\n255\n"));
        // Global maximum (value 3.0) maps to 255.
        assert!(text.contains("255"));
        let dim_text = fs::read_to_string(dir.join("heatmap_learned_re.pgm")).unwrap();
        // The all-zero matrix is scaled by the same global range, so it
        // never reaches 255.
        assert!(!dim_text.lines().skip(3).any(|l| l.contains("255")));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn identical_matrices_give_identical_grids() {
        let dir = std::env::temp_dir().join(format!("qovk_heatmap_eq_{}", std::process::id()));
        let m = ComplexMatrix::from_fn(2, 2, |i, j| C64::new(i as f64, j as f64));
        emit_heatmaps(&[("a".into(), m.clone()), ("b".into(), m)], &dir).unwrap();
        let a = fs::read(dir.join("heatmap_a_re.csv")).unwrap();
        let b = fs::read(dir.join("heatmap_b_re.csv")).unwrap();
        assert_eq!(a, b);
        let a = fs::read(dir.join("heatmap_a_abs.pgm")).unwrap();
        let b = fs::read(dir.join("heatmap_b_abs.pgm")).unwrap();
        assert_eq!(a, b);
        fs::remove_dir_all(&dir).unwrap();
    }
}
