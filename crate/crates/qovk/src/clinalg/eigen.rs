use super::{ComplexMatrix, LinalgError, Tolerance, C64};

/// Eigendecomposition of a Hermitian matrix: A = V diag(values) V†.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.rows())
            .map(|i| self.vectors.get(i, k))
            .collect()
    }
}

impl ComplexMatrix {
    /// Full eigendecomposition via cyclic Jacobi rotations.
    ///
    /// The input must be Hermitian within `tol.eps_structural`; the rotation
    /// sweep itself runs on the Hermitian part so sub-tolerance asymmetry
    /// cannot leak into the result.
    pub fn hermitian_eigen(&self, tol: &Tolerance) -> Result<HermitianEigen, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::DimensionMismatch {
                context: format!("eigendecomposition of {}x{}", self.rows(), self.cols()),
            });
        }
        let dev = self.hermitian_deviation();
        if dev > tol.eps_structural {
            return Err(LinalgError::NotHermitian { deviation: dev });
        }

        let n = self.rows();
        let mut a = self.hermitian_part();
        let mut v = ComplexMatrix::identity(n);
        let scale = a.frobenius_norm().max(1.0);
        let target = 1e-15 * scale;

        for _sweep in 0..60 {
            let mut off = 0.0_f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += 2.0 * a.get(p, q).norm_sqr();
                }
            }
            if off.sqrt() <= target {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    let abs_apq = apq.norm();
                    if abs_apq <= 1e-300 {
                        continue;
                    }
                    let phase = apq / abs_apq;
                    let app = a.get(p, p).re;
                    let aqq = a.get(q, q).re;
                    let tau = (aqq - app) / (2.0 * abs_apq);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // Plane rotation J: J[p][p]=c, J[p][q]=s, J[q][p]=-s·conj(phase),
                    // J[q][q]=c·conj(phase); A ← J†AJ, V ← VJ.
                    let jpp = C64::new(c, 0.0);
                    let jpq = C64::new(s, 0.0);
                    let jqp = -phase.conj() * s;
                    let jqq = phase.conj() * c;
                    for i in 0..n {
                        let aip = a.get(i, p);
                        let aiq = a.get(i, q);
                        a.set(i, p, aip * jpp + aiq * jqp);
                        a.set(i, q, aip * jpq + aiq * jqq);
                    }
                    for j in 0..n {
                        let apj = a.get(p, j);
                        let aqj = a.get(q, j);
                        a.set(p, j, jpp.conj() * apj + jqp.conj() * aqj);
                        a.set(q, j, jpq.conj() * apj + jqq.conj() * aqj);
                    }
                    for i in 0..n {
                        let vip = v.get(i, p);
                        let viq = v.get(i, q);
                        v.set(i, p, vip * jpp + viq * jqp);
                        v.set(i, q, vip * jpq + viq * jqq);
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
        order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
        let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
        let vectors = ComplexMatrix::from_fn(n, n, |i, j| v.get(i, order[j]));
        Ok(HermitianEigen { values, vectors })
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    pub fn min_eigenvalue_hermitian(&self, tol: &Tolerance) -> Result<f64, LinalgError> {
        Ok(self.hermitian_eigen(tol)?.values[0])
    }
}

#[cfg(test)]
mod tests {
    use super::super::haar_random_unitary;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let u = haar_random_unitary(n, rng);
        u.hermitian_part()
    }

    #[test]
    fn diagonal_matrix_eigenvalues() {
        let tol = Tolerance::default();
        let m = ComplexMatrix::diagonal(&[C64::new(3.0, 0.0), C64::new(-1.0, 0.0)]);
        let eig = m.hermitian_eigen(&tol).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-12);
        assert!((eig.values[1] - 3.0).abs() < 1e-12);
        assert!((m.min_eigenvalue_hermitian(&tol).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 3, 5, 8] {
            let m = random_hermitian(n, &mut rng);
            let eig = m.hermitian_eigen(&tol).unwrap();
            assert!(eig.vectors.is_unitary(&tol));
            let lambda = ComplexMatrix::diagonal(
                &eig.values
                    .iter()
                    .map(|&x| C64::new(x, 0.0))
                    .collect::<Vec<_>>(),
            );
            let rebuilt = eig.vectors.matmul(&lambda).matmul(&eig.vectors.dagger());
            assert!(rebuilt.max_abs_diff(&m) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn eigenvalues_match_characteristic_roots_2x2() {
        // Independent oracle: closed-form roots of the characteristic polynomial.
        let tol = Tolerance::default();
        let b = C64::new(0.4, -0.9);
        let m = ComplexMatrix::from_entries(
            2,
            2,
            vec![C64::new(1.5, 0.0), b, b.conj(), C64::new(-0.25, 0.0)],
        )
        .unwrap();
        let tr = 1.5 - 0.25;
        let det = 1.5 * -0.25 - b.norm_sqr();
        let disc = (tr * tr - 4.0 * det).sqrt();
        let (lo, hi) = ((tr - disc) / 2.0, (tr + disc) / 2.0);
        let eig = m.hermitian_eigen(&tol).unwrap();
        assert!((eig.values[0] - lo).abs() < 1e-12);
        assert!((eig.values[1] - hi).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let tol = Tolerance::default();
        let m = ComplexMatrix::from_fn(2, 2, |i, j| C64::new((i + 2 * j) as f64, 0.0));
        assert!(matches!(
            m.min_eigenvalue_hermitian(&tol),
            Err(LinalgError::NotHermitian { .. })
        ));
    }
}
