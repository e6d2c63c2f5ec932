use super::{ComplexMatrix, LinalgError, Tolerance, C64};

impl ComplexMatrix {
    /// Lower Cholesky factor L with L·L† = A for Hermitian positive definite A.
    fn cholesky(&self) -> Option<ComplexMatrix> {
        let n = self.rows();
        let mut l = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = self.get(j, j).re;
            for k in 0..j {
                d -= l.get(j, k).norm_sqr();
            }
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            let ljj = d.sqrt();
            l.set(j, j, C64::new(ljj, 0.0));
            for i in (j + 1)..n {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v -= l.get(i, k) * l.get(j, k).conj();
                }
                l.set(i, j, v / ljj);
            }
        }
        Some(l)
    }

    /// Solves A·X = B for Hermitian positive definite A via Cholesky.
    ///
    /// The factorization runs on the Hermitian part of A after the
    /// Hermiticity check, so round-off asymmetry below `eps_structural`
    /// cannot bias the solution. A non-positive-definite A is reported
    /// together with its minimum eigenvalue.
    pub fn solve_hermitian(&self, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        let tol = Tolerance::default();
        if !self.is_square() || self.rows() != b.rows() {
            return Err(LinalgError::DimensionMismatch {
                context: format!(
                    "solve with {}x{} system and {}x{} right-hand side",
                    self.rows(),
                    self.cols(),
                    b.rows(),
                    b.cols()
                ),
            });
        }
        let dev = self.hermitian_deviation();
        if dev > tol.eps_structural {
            return Err(LinalgError::NotHermitian { deviation: dev });
        }
        let a = self.hermitian_part();
        let l = a.cholesky().ok_or_else(|| {
            let min_eigenvalue = a
                .min_eigenvalue_hermitian(&tol)
                .unwrap_or(f64::NEG_INFINITY);
            LinalgError::NotPositiveDefinite { min_eigenvalue }
        })?;

        let n = a.rows();
        let m = b.cols();
        // Forward substitution L·Y = B.
        let mut y = ComplexMatrix::zeros(n, m);
        for col in 0..m {
            for i in 0..n {
                let mut v = b.get(i, col);
                for k in 0..i {
                    v -= l.get(i, k) * y.get(k, col);
                }
                y.set(i, col, v / l.get(i, i));
            }
        }
        // Back substitution L†·X = Y.
        let mut x = ComplexMatrix::zeros(n, m);
        for col in 0..m {
            for i in (0..n).rev() {
                let mut v = y.get(i, col);
                for k in (i + 1)..n {
                    v -= l.get(k, i).conj() * x.get(k, col);
                }
                x.set(i, col, v / l.get(i, i));
            }
        }
        Ok(x)
    }
}
