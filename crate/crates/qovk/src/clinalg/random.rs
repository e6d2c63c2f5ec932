use rand::Rng;
use rand_distr::StandardNormal;

use super::{ComplexMatrix, C64};

/// Standard complex Gaussian: (N(0,1) + i·N(0,1)) / √2.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) / 2.0_f64.sqrt()
}

pub(crate) fn complex_gaussian_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Householder QR of a square matrix; returns (Q, R) with Q unitary.
fn qr_square(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(n);
    for k in 0..n {
        // Householder vector for column k below the diagonal.
        let mut norm_sq = 0.0;
        for i in k..n {
            norm_sq += r.get(i, k).norm_sqr();
        }
        let norm = norm_sq.sqrt();
        if norm <= 1e-300 {
            continue;
        }
        let x0 = r.get(k, k);
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = (k..n).map(|i| r.get(i, k)).collect();
        v[0] -= alpha;
        let v_norm_sq: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if v_norm_sq <= 1e-300 {
            continue;
        }
        // r ← H r with H = I − 2vv†/‖v‖².
        for j in k..n {
            let dot: C64 = (k..n).map(|i| v[i - k].conj() * r.get(i, j)).sum();
            let f = dot * (2.0 / v_norm_sq);
            for i in k..n {
                let val = r.get(i, j) - v[i - k] * f;
                r.set(i, j, val);
            }
        }
        // q ← q H (accumulating Q = H_1 H_2 ⋯).
        for i in 0..n {
            let dot: C64 = (k..n).map(|l| q.get(i, l) * v[l - k]).sum();
            let f = dot * (2.0 / v_norm_sq);
            for l in k..n {
                let val = q.get(i, l) - f * v[l - k].conj();
                q.set(i, l, val);
            }
        }
    }
    (q, r)
}

/// Haar-distributed random unitary: QR of a complex Ginibre matrix with the
/// R diagonal phases folded back into Q.
pub fn haar_random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    assert!(dim >= 1, "unitary dimension must be at least 1");
    let g = complex_gaussian_matrix(dim, dim, rng);
    let (q, r) = qr_square(&g);
    let phases: Vec<C64> = (0..dim)
        .map(|i| {
            let d = r.get(i, i);
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        })
        .collect();
    ComplexMatrix::from_fn(dim, dim, |i, j| q.get(i, j) * phases[j])
}
