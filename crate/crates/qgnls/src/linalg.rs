//! Sparse symmetric linear algebra: CSR storage for matrix-vector products and
//! an envelope (skyline) LDLᵀ factorization used both for real shifted solves
//! (with pivot-sign inertia counts) and for the complex symmetric systems of
//! the Crank-Nicolson stepper.
//!
//! The factorization is unpivoted, which is adequate here: the real systems are
//! shifted stiffness/mass pencils whose factorization is only used at shifts
//! bracketed away from eigenvalues, and the complex systems have a dominant
//! imaginary diagonal `i/dt`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalar type of nodal values and matrix entries: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
    + std::ops::SubAssign
{
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(x: f64) -> Self;
    /// Modulus.
    fn abs(self) -> f64;
    /// Squared modulus.
    fn abs2(self) -> f64;
    /// Complex conjugate (identity on reals).
    fn conj(self) -> Self;
    /// Real part.
    fn real(self) -> f64;
    /// Multiplication by a real scalar.
    fn scale(self, s: f64) -> Self;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn from_f64(x: f64) -> Self {
        x
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn conj(self) -> Self {
        self
    }
    fn real(self) -> f64 {
        self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn real(self) -> f64 {
        self.re
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Compressed sparse row matrix with real entries, rows sorted by column.
#[derive(Clone, Debug)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    /// Builds an `n × n` matrix from (row, col, value) triplets; duplicate
    /// positions are summed.
    pub fn from_triplets(n: usize, triplets: &mut Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, _) in triplets.iter() {
            if i >= n || j >= n {
                return Err(Error::LinearSolve(format!(
                    "triplet index ({i}, {j}) out of bounds for size {n}"
                )));
            }
        }
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut val: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in triplets.iter() {
            if last == Some((i, j)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(j);
                val.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Csr { n, row_ptr, col, val })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col[r.clone()], &self.val[r])
    }

    /// `y = A x` for any scalar type (the matrix itself is real).
    pub fn matvec<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut s = T::ZERO;
            for (&j, &a) in cols.iter().zip(vals) {
                s += x[j].scale(a);
            }
            y[i] = s;
        }
    }

    /// `xᵀ A y` (real vectors).
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (&j, &a) in cols.iter().zip(vals) {
                s += a * y[j];
            }
            total += x[i] * s;
        }
        total
    }

    /// `x̄ᵀ A x` for complex vectors; real-valued since A is real symmetric.
    pub fn hermitian_form(&self, x: &[Complex64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut s = Complex64::new(0.0, 0.0);
            for (&j, &a) in cols.iter().zip(vals) {
                s += x[j] * a;
            }
            total += (x[i].conj() * s).re;
        }
        total
    }

    /// Largest asymmetry `max |a_ij - a_ji|`; 0 for structurally symmetric data.
    pub fn symmetry_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                let (jcols, jvals) = self.row(j);
                let back = match jcols.binary_search(&i) {
                    Ok(k) => jvals[k],
                    Err(_) => 0.0,
                };
                defect = defect.max((a - back).abs());
            }
        }
        defect
    }

    /// Gershgorin data per row: (diagonal entry, sum of |off-diagonal| entries).
    pub fn gershgorin_rows(&self) -> Vec<(f64, f64)> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                let mut d = 0.0;
                let mut r = 0.0;
                for (&j, &a) in cols.iter().zip(vals) {
                    if j == i {
                        d += a;
                    } else {
                        r += a.abs();
                    }
                }
                (d, r)
            })
            .collect()
    }
}

/// Pivot statistics of an LDLᵀ factorization.
#[derive(Clone, Copy, Debug)]
pub struct PivotStats {
    /// Number of pivots with negative real part; for a real symmetric matrix
    /// this is the number of eigenvalues below zero (Sylvester's law).
    pub negative: usize,
    /// Smallest pivot modulus, a cheap conditioning indicator.
    pub min_abs: f64,
    /// Pivots that fell below the singularity threshold and were replaced in
    /// the counting mode; always 0 for the strict mode.
    pub perturbed: usize,
}

/// Symmetric envelope (skyline) matrix: row `i` stores the contiguous range of
/// columns `start[i] ..= i` of the lower triangle. The envelope is preserved by
/// the unpivoted LDLᵀ factorization, which therefore runs in place.
#[derive(Clone, Debug)]
pub struct Skyline<T: Scalar> {
    n: usize,
    start: Vec<usize>,
    off: Vec<usize>,
    data: Vec<T>,
    factored: bool,
}

impl<T: Scalar> Skyline<T> {
    /// Envelope large enough to hold every listed CSR pattern.
    pub fn from_union_profile(n: usize, patterns: &[&Csr]) -> Self {
        let mut start: Vec<usize> = (0..n).collect();
        for p in patterns {
            assert_eq!(p.n(), n, "pattern size mismatch");
            for i in 0..n {
                let (cols, _) = p.row(i);
                if let Some(&j) = cols.first() {
                    if j < start[i] {
                        start[i] = j;
                    }
                }
            }
        }
        let mut off = vec![0usize; n + 1];
        for i in 0..n {
            off[i + 1] = off[i] + (i - start[i] + 1);
        }
        let data = vec![T::ZERO; off[n]];
        Skyline { n, start, off, data, factored: false }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries count (profile size).
    pub fn profile(&self) -> usize {
        self.data.len()
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && j >= self.start[i], "({i}, {j}) outside profile");
        self.off[i] + (j - self.start[i])
    }

    /// Resets all stored values to zero and marks the matrix unfactored.
    pub fn clear(&mut self) {
        self.data.fill(T::ZERO);
        self.factored = false;
    }

    /// Adds `coef * csr` into the envelope (lower triangle of the symmetric
    /// pattern). The CSR pattern must fit inside the profile.
    pub fn add_csr(&mut self, coef: T, m: &Csr) {
        assert!(!self.factored, "matrix already factored");
        for i in 0..self.n {
            let (cols, vals) = m.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                if j <= i {
                    let k = self.idx(i, j);
                    self.data[k] += coef.scale(a);
                }
            }
        }
    }

    /// Adds a single symmetric entry (only the lower-triangle copy is stored).
    pub fn add_entry(&mut self, i: usize, j: usize, v: T) {
        assert!(!self.factored, "matrix already factored");
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    /// Unpivoted in-place LDLᵀ (plain transpose; for complex data this is the
    /// complex symmetric factorization, not Cholesky of a Hermitian matrix).
    ///
    /// Fails when a pivot falls below `1e-14` times the largest initial
    /// diagonal modulus, which signals a (near-)singular shift or, for an
    /// indefinite matrix, a singular leading minor; in the latter case the
    /// caller should retry at a slightly moved shift.
    pub fn factor_ldlt(&mut self) -> Result<PivotStats> {
        self.factor_impl(false)
    }

    /// Like [`Self::factor_ldlt`] but never fails: pivots below the threshold
    /// are replaced by the signed threshold and counted in
    /// [`PivotStats::perturbed`]. The inertia count then belongs to a matrix
    /// within the threshold of the input, which is exactly what bisection on
    /// eigenvalue counts needs. The factors are unfit for accurate solves.
    pub fn factor_ldlt_counting(&mut self) -> PivotStats {
        self.factor_impl(true).expect("counting mode cannot fail")
    }

    fn factor_impl(&mut self, perturb: bool) -> Result<PivotStats> {
        assert!(!self.factored, "matrix already factored");
        let n = self.n;
        let scale = (0..n)
            .map(|i| self.data[self.idx(i, i)].abs())
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let tiny = 1e-14 * scale;
        let mut negative = 0usize;
        let mut min_abs = f64::INFINITY;
        let mut perturbed = 0usize;
        for i in 0..n {
            let si = self.start[i];
            // Off-diagonal pass: data[i][j] becomes w_j = L_ij D_j, using rows
            // k < j already in final form (L_jk) and w_k of the current row.
            for j in si..i {
                let sj = self.start[j];
                let k0 = si.max(sj);
                let mut s = self.data[self.idx(i, j)];
                for k in k0..j {
                    s = s - self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                let k = self.idx(i, j);
                self.data[k] = s;
            }
            // Diagonal and division pass.
            let mut d = self.data[self.idx(i, i)];
            for k in si..i {
                let w = self.data[self.idx(i, k)];
                let dk = self.data[self.idx(k, k)];
                let l = w / dk;
                d = d - w * l;
                let kk = self.idx(i, k);
                self.data[kk] = l;
            }
            if d.abs() <= tiny {
                if !perturb {
                    return Err(Error::LinearSolve(format!(
                        "singular pivot {:e} at index {i}",
                        d.abs()
                    )));
                }
                d = if d.real() < 0.0 {
                    T::from_f64(-tiny)
                } else {
                    T::from_f64(tiny)
                };
                perturbed += 1;
            }
            if d.real() < 0.0 {
                negative += 1;
            }
            min_abs = min_abs.min(d.abs());
            let kk = self.idx(i, i);
            self.data[kk] = d;
        }
        self.factored = true;
        Ok(PivotStats { negative, min_abs, perturbed })
    }

    /// Solves `A x = b` in place after [`Self::factor_ldlt`].
    pub fn solve(&self, b: &mut [T]) {
        assert!(self.factored, "factorization missing");
        debug_assert_eq!(b.len(), self.n);
        let n = self.n;
        // Forward substitution with unit lower triangle.
        for i in 0..n {
            let mut s = b[i];
            for k in self.start[i]..i {
                s = s - self.data[self.idx(i, k)] * b[k];
            }
            b[i] = s;
        }
        // Diagonal scaling.
        for i in 0..n {
            b[i] = b[i] / self.data[self.idx(i, i)];
        }
        // Backward substitution with the transpose.
        for i in (0..n).rev() {
            let xi = b[i];
            for k in self.start[i]..i {
                b[k] = b[k] - self.data[self.idx(i, k)] * xi;
            }
        }
    }
}
