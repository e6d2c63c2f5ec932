use std::ops::{Add, Mul, Sub};

use super::{LinalgError, Tolerance, C64, MAX_TENSOR_DIM};

/// Which factor of a bipartite system survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting shape mismatches and
    /// non-finite values.
    pub fn from_entries(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                context: format!(
                    "{} entries for a {}x{} matrix",
                    data.len(),
                    rows,
                    cols
                ),
            });
        }
        let m = Self { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Column vector |v⟩ as an n×1 matrix.
    pub fn column(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Rank-one outer product |a⟩⟨b|.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = value;
    }

    fn check_finite(&self) -> Result<(), LinalgError> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.get(i, j);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// Conjugate transpose A†.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).conj())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul dimension mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace requires a square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Kronecker product A ⊗ B.
    ///
    /// Index convention: (A⊗B)[i·rB + k, j·cB + l] = A[i,j]·B[k,l], i.e. the
    /// left operand indexes the most significant block.
    pub fn tensor(&self, other: &Self) -> Result<Self, LinalgError> {
        let rows = self.rows.checked_mul(other.rows);
        let cols = self.cols.checked_mul(other.cols);
        let (rows, cols) = match (rows, cols) {
            (Some(r), Some(c)) if r <= MAX_TENSOR_DIM && c <= MAX_TENSOR_DIM => (r, c),
            _ => {
                return Err(LinalgError::DimensionLimit {
                    requested: self
                        .rows
                        .saturating_mul(other.rows)
                        .max(self.cols.saturating_mul(other.cols)),
                    limit: MAX_TENSOR_DIM,
                })
            }
        };
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.set(i * other.rows + k, j * other.cols + l, a * other.get(k, l));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Partial trace of a bipartite operator with factor dimensions
    /// (`dim_first`, `dim_second`); `keep` names the surviving factor.
    pub fn partial_trace(
        &self,
        dim_first: usize,
        dim_second: usize,
        keep: Subsystem,
    ) -> Result<Self, LinalgError> {
        let side = dim_first * dim_second;
        if !self.is_square() || self.rows != side {
            return Err(LinalgError::DimensionMismatch {
                context: format!(
                    "partial trace of {}x{} with factors {}x{}",
                    self.rows, self.cols, dim_first, dim_second
                ),
            });
        }
        match keep {
            Subsystem::First => Ok(Self::from_fn(dim_first, dim_first, |i, j| {
                (0..dim_second)
                    .map(|k| self.get(i * dim_second + k, j * dim_second + k))
                    .sum()
            })),
            Subsystem::Second => Ok(Self::from_fn(dim_second, dim_second, |i, j| {
                (0..dim_first)
                    .map(|k| self.get(k * dim_second + i, k * dim_second + j))
                    .sum()
            })),
        }
    }

    /// Traces out the factor at `traced` from a multi-factor operator whose
    /// tensor structure is given by `dims` (most significant factor first).
    pub fn partial_trace_multi(
        &self,
        dims: &[usize],
        traced: usize,
    ) -> Result<Self, LinalgError> {
        let total: usize = dims.iter().product();
        if !self.is_square() || self.rows != total || traced >= dims.len() {
            return Err(LinalgError::DimensionMismatch {
                context: format!(
                    "partial trace of {}x{} over factor {} of {:?}",
                    self.rows, self.cols, traced, dims
                ),
            });
        }
        let d_t = dims[traced];
        let tail: usize = dims[traced + 1..].iter().product();
        let out_dim = total / d_t;
        // Index r of the full space decomposes as r = head·d_t·tail + t·tail + low.
        let mut out = Self::zeros(out_dim, out_dim);
        for head_r in 0..total / (d_t * tail) {
            for low_r in 0..tail {
                let r_out = head_r * tail + low_r;
                for head_c in 0..total / (d_t * tail) {
                    for low_c in 0..tail {
                        let c_out = head_c * tail + low_c;
                        let mut sum = C64::new(0.0, 0.0);
                        for t in 0..d_t {
                            let r = (head_r * d_t + t) * tail + low_r;
                            let c = (head_c * d_t + t) * tail + low_c;
                            sum += self.get(r, c);
                        }
                        out.set(r_out, c_out, out.get(r_out, c_out) + sum);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Reorders a bipartite operator from A⊗B to B⊗A index ordering.
    pub fn swap_subsystems(&self, dim_first: usize, dim_second: usize) -> Result<Self, LinalgError> {
        let side = dim_first * dim_second;
        if !self.is_square() || self.rows != side {
            return Err(LinalgError::DimensionMismatch {
                context: format!(
                    "subsystem swap of {}x{} with factors {}x{}",
                    self.rows, self.cols, dim_first, dim_second
                ),
            });
        }
        Ok(Self::from_fn(side, side, |r, c| {
            let (b_r, a_r) = (r / dim_first, r % dim_first);
            let (b_c, a_c) = (c / dim_first, c % dim_first);
            self.get(a_r * dim_second + b_r, a_c * dim_second + b_c)
        }))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..=i {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: &Tolerance) -> bool {
        self.is_square() && self.hermitian_deviation() <= tol.eps_structural
    }

    pub fn is_unitary(&self, tol: &Tolerance) -> bool {
        if !self.is_square() {
            return false;
        }
        let product = self.dagger().matmul(self);
        product.max_abs_diff(&Self::identity(self.rows)) <= tol.eps_structural
    }

    /// Hermitian, unit trace and psd up to `eps_psd`.
    pub fn is_density(&self, tol: &Tolerance) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol.eps_structural || tr.im.abs() > tol.eps_structural {
            return false;
        }
        match self.min_eigenvalue_hermitian(tol) {
            Ok(min) => min >= -tol.eps_psd,
            Err(_) => false,
        }
    }

    /// Hermitian part (A + A†)/2.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()) * C64::new(0.5, 0.0)
        })
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, other: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(other)
    }
}

#[cfg(test)]
mod tests {
    use super::super::gates;
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(2);
        let t = i2.tensor(&i2).unwrap();
        assert_eq!(t, ComplexMatrix::identity(4));
    }

    #[test]
    fn tensor_basis_ordering() {
        // |0⟩⟨0| ⊗ |1⟩⟨1| must land on index 1 = 0·2 + 1.
        let p0 = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let p1 = ComplexMatrix::diagonal(&[c(0.0, 0.0), c(1.0, 0.0)]);
        let t = p0.tensor(&p1).unwrap();
        let expected = ComplexMatrix::diagonal(&[
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ]);
        assert!(t.max_abs_diff(&expected) == 0.0);
    }

    #[test]
    fn tensor_matches_quadruple_loop_oracle() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| c((i + 1) as f64, (j as f64) - 0.5));
        let b = ComplexMatrix::from_fn(2, 2, |i, j| c(0.3 * i as f64 - 1.0, 0.7 * j as f64));
        let t = a.tensor(&b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let expected = a.get(i, j) * b.get(k, l);
                        assert_eq!(t.get(i * 2 + k, j * 2 + l), expected);
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_dimension_limit() {
        let big = ComplexMatrix::identity(128);
        let res = big.tensor(&ComplexMatrix::identity(64));
        assert!(matches!(res, Err(LinalgError::DimensionLimit { .. })));
    }

    #[test]
    fn dagger_involution_and_conjugation() {
        let h = gates::hadamard();
        assert!(h.dagger().max_abs_diff(&h) < 1e-15);
        let a = ComplexMatrix::from_fn(3, 2, |i, j| c(i as f64, j as f64 + 0.25));
        assert!(a.dagger().dagger().max_abs_diff(&a) == 0.0);
        let i_scaled = ComplexMatrix::identity(2).scale(c(0.0, 1.0));
        assert!(i_scaled
            .dagger()
            .max_abs_diff(&ComplexMatrix::identity(2).scale(c(0.0, -1.0)))
            == 0.0);
    }

    #[test]
    fn partial_trace_of_product_factorizes() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| c((i * 2 + j) as f64, 0.1));
        let b = ComplexMatrix::from_fn(2, 2, |i, j| c(1.0 - i as f64, j as f64));
        let ab = a.tensor(&b).unwrap();
        let tr_b = b.trace();
        let reduced = ab.partial_trace(2, 2, Subsystem::First).unwrap();
        assert!(reduced.max_abs_diff(&a.scale(tr_b)) < 1e-12);
        let reduced2 = ab.partial_trace(2, 2, Subsystem::Second).unwrap();
        assert!(reduced2.max_abs_diff(&b.scale(a.trace())) < 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let inv = 1.0 / 2.0_f64.sqrt();
        let bell = vec![c(inv, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(inv, 0.0)];
        let rho = ComplexMatrix::outer(&bell, &bell);
        let reduced = rho.partial_trace(2, 2, Subsystem::First).unwrap();
        assert!(reduced.max_abs_diff(&ComplexMatrix::identity(2).scale(c(0.5, 0.0))) < 1e-12);
    }

    #[test]
    fn partial_trace_matches_index_sum_oracle() {
        // Σ_i (⟨i|⊗I) m (|i⟩⊗I) compared entry by entry for keep = Second.
        let m = ComplexMatrix::from_fn(4, 4, |i, j| c((i as f64) * 0.3 + 1.0, (j as f64) * 0.2));
        let reduced = m.partial_trace(2, 2, Subsystem::Second).unwrap();
        let oracle = ComplexMatrix::from_fn(2, 2, |a, b| {
            (0..2).map(|i| m.get(i * 2 + a, i * 2 + b)).sum()
        });
        assert!(reduced.max_abs_diff(&oracle) == 0.0);
        assert!((reduced.trace() - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_shape_error() {
        let m = ComplexMatrix::identity(6);
        assert!(m.partial_trace(2, 2, Subsystem::First).is_err());
    }

    #[test]
    fn partial_trace_multi_agrees_with_bipartite() {
        let m = ComplexMatrix::from_fn(8, 8, |i, j| c(i as f64 - j as f64, (i * j) as f64 * 0.01));
        // Trace the middle factor of a 2x2x2 layout via two routes.
        let direct = m.partial_trace_multi(&[2, 2, 2], 1).unwrap();
        // Route 2: view as (2)·(2·2), swap inner pair, trace bipartite.
        let mut manual = ComplexMatrix::zeros(4, 4);
        for a_r in 0..2 {
            for c_r in 0..2 {
                for a_c in 0..2 {
                    for c_c in 0..2 {
                        let mut s = C64::new(0.0, 0.0);
                        for b in 0..2 {
                            s += m.get(a_r * 4 + b * 2 + c_r, a_c * 4 + b * 2 + c_c);
                        }
                        manual.set(a_r * 2 + c_r, a_c * 2 + c_c, s);
                    }
                }
            }
        }
        assert!(direct.max_abs_diff(&manual) == 0.0);
    }

    #[test]
    fn swap_subsystems_roundtrip() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| c(i as f64 + 0.5, j as f64));
        let b = ComplexMatrix::from_fn(3, 3, |i, j| c(j as f64 - 1.0, i as f64 * 0.3));
        let ab = a.tensor(&b).unwrap();
        let ba = b.tensor(&a).unwrap();
        assert!(ab.swap_subsystems(2, 3).unwrap().max_abs_diff(&ba) < 1e-14);
        let back = ab
            .swap_subsystems(2, 3)
            .unwrap()
            .swap_subsystems(3, 2)
            .unwrap();
        assert!(back.max_abs_diff(&ab) == 0.0);
    }

    #[test]
    fn frobenius_norm_of_identity() {
        assert!((ComplexMatrix::identity(2).frobenius_norm() - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn density_check_accepts_maximally_mixed() {
        let tol = Tolerance::default();
        let m = ComplexMatrix::identity(2).scale(c(0.5, 0.0));
        assert!(m.is_density(&tol));
        assert!(!ComplexMatrix::identity(2).is_density(&tol));
    }

    #[test]
    fn non_finite_entries_rejected() {
        let res = ComplexMatrix::from_entries(1, 2, vec![c(1.0, 0.0), c(f64::NAN, 0.0)]);
        assert!(matches!(res, Err(LinalgError::NonFinite { row: 0, col: 1 })));
    }
}
