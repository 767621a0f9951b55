//! Dense complex operators on tensor-product spaces.
//!
//! [`Operator`] is a square complex matrix tagged with the dimensions of the
//! tensor factors it acts on. Factors are Kronecker-ordered: the flat index of
//! `|i_0, i_1, ..>` is `i_0 * (d_1 * d_2 * ..) + i_1 * (d_2 * ..) + ..`, so the
//! last factor varies fastest.

use std::fmt;
use std::ops::{Add, AddAssign, Deref, Mul, Neg, Sub, SubAssign};

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::tol::Tolerances;

pub use faer::c64;

pub const I: c64 = c64 { re: 0.0, im: 1.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

#[inline]
pub fn cr(re: f64) -> c64 {
    c64::new(re, 0.0)
}

/// Square complex matrix acting on `dims[0] ⊗ dims[1] ⊗ ..`.
#[derive(Clone)]
pub struct Operator {
    dims: Vec<usize>,
    mat: Mat<c64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator dims={:?}", self.dims)?;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self.mat[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidDims(dims.to_vec()));
    }
    Ok(dims.iter().product())
}

impl Operator {
    pub fn new(dims: Vec<usize>, mat: Mat<c64>) -> Result<Self> {
        let n = check_dims(&dims)?;
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, dims {:?} need {n}x{n}",
                mat.nrows(),
                mat.ncols(),
                dims
            )));
        }
        Ok(Self { dims, mat })
    }

    /// Single-factor operator from a square matrix.
    pub fn from_mat(mat: Mat<c64>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "operator matrix must be square");
        let n = mat.nrows().max(1);
        Self { dims: vec![n], mat }
    }

    pub fn from_fn(dims: Vec<usize>, f: impl FnMut(usize, usize) -> c64) -> Result<Self> {
        let n = check_dims(&dims)?;
        Ok(Self {
            dims,
            mat: Mat::from_fn(n, n, f),
        })
    }

    /// Build from row-major nested rows (single factor).
    pub fn from_rows(rows: &[&[c64]]) -> Self {
        let n = rows.len();
        Self::from_mat(Mat::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        let n = check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            mat: Mat::identity(n, n),
        })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let n = check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            mat: Mat::zeros(n, n),
        })
    }

    pub fn diagonal(dims: &[usize], diag: &[c64]) -> Result<Self> {
        let n = check_dims(dims)?;
        if diag.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "diagonal has {} entries, dims {:?} need {n}",
                diag.len(),
                dims
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            mat: Mat::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO }),
        })
    }

    /// `|psi><psi|` for a (not necessarily normalised) state vector.
    pub fn outer(dims: &[usize], ket: &[c64], bra: &[c64]) -> Result<Self> {
        let n = check_dims(dims)?;
        if ket.len() != n || bra.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "vectors of length {}/{} for dims {:?}",
                ket.len(),
                bra.len(),
                dims
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            mat: Mat::from_fn(n, n, |i, j| ket[i] * bra[j].conj()),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn mat(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.mat
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: c64) {
        self.mat[(i, j)] = v;
    }

    /// Relabel the tensor structure without touching the entries.
    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        let n = check_dims(&dims)?;
        if n != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot relabel a {}-dim operator as {:?}",
                self.dim(),
                dims
            )));
        }
        self.dims = dims;
        Ok(self)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            mat: self.mat.adjoint().to_owned(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            mat: self.mat.transpose().to_owned(),
        }
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn scale(&self, s: c64) -> Self {
        Self {
            dims: self.dims.clone(),
            mat: Mat::from_fn(self.dim(), self.dim(), |i, j| self.mat[(i, j)] * s),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(cr(s))
    }

    /// Entrywise map.
    pub fn map(&self, mut f: impl FnMut(usize, usize, c64) -> c64) -> Self {
        Self {
            dims: self.dims.clone(),
            mat: Mat::from_fn(self.dim(), self.dim(), |i, j| f(i, j, self.mat[(i, j)])),
        }
    }

    pub fn matmul(&self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "matmul dimension mismatch");
        Operator {
            dims: self.dims.clone(),
            mat: &self.mat * &rhs.mat,
        }
    }

    /// `self * rho * self^dagger`.
    pub fn conjugate(&self, rho: &Operator) -> Operator {
        self.matmul(rho).matmul(&self.adjoint())
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                m = m.max(self.mat[(i, j)].norm());
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let mut m = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                m = m.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm_l2()
    }

    /// Max entrywise |A - A^dagger|.
    pub fn hermiticity_residue(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in i..n {
                m = m.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        m
    }

    /// Max entrywise |U U^dagger - 1|.
    pub fn unitarity_residue(&self) -> f64 {
        let p = self.matmul(&self.adjoint());
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { ONE } else { ZERO };
                m = m.max((p.mat[(i, j)] - target).norm());
            }
        }
        m
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Operator {
        let n = self.dim();
        Operator {
            dims: self.dims.clone(),
            mat: Mat::from_fn(n, n, |i, j| {
                (self.mat[(i, j)] + self.mat[(j, i)].conj()) * 0.5
            }),
        }
    }

    /// Restriction to the index set `idx` (rows and columns).
    pub fn submatrix(&self, idx: &[usize]) -> Operator {
        let n = idx.len();
        Operator::from_mat(Mat::from_fn(n, n, |i, j| self.mat[(idx[i], idx[j])]))
    }

    /// Column-stacked vectorisation.
    pub fn vec(&self) -> Vec<c64> {
        let n = self.dim();
        let mut v = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                v.push(self.mat[(i, j)]);
            }
        }
        v
    }

    /// Inverse of [`Operator::vec`].
    pub fn unvec(dims: &[usize], v: &[c64]) -> Result<Operator> {
        let n = check_dims(dims)?;
        if v.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for side {n}",
                v.len()
            )));
        }
        Operator::from_fn(dims.to_vec(), |i, j| v[j * n + i])
    }

    pub fn is_finite(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| {
            (0..n).all(|i| self.mat[(i, j)].re.is_finite() && self.mat[(i, j)].im.is_finite())
        })
    }
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    &a.matmul(b) - &b.matmul(a)
}

pub fn anticommutator(a: &Operator, b: &Operator) -> Operator {
    &a.matmul(b) + &b.matmul(a)
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "add dimension mismatch");
        Operator {
            dims: self.dims.clone(),
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "sub dimension mismatch");
        Operator {
            dims: self.dims.clone(),
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

impl Mul<c64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: c64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale_real(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        assert_eq!(self.dim(), rhs.dim(), "add dimension mismatch");
        self.mat += &rhs.mat;
    }
}

impl SubAssign<&Operator> for Operator {
    fn sub_assign(&mut self, rhs: &Operator) {
        assert_eq!(self.dim(), rhs.dim(), "sub dimension mismatch");
        self.mat -= &rhs.mat;
    }
}

/// Eigendecomposition `A = V diag(w) V^dagger` of a Hermitian operator.
///
/// Eigenvalues ascend; each eigenvector's largest-magnitude component is made
/// real and positive so decompositions are reproducible.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: Operator,
}

impl HermitianEig {
    /// `V diag(f(w)) V^dagger`, failing on the first eigenvalue where `f` is undefined.
    pub fn apply(&self, f: impl Fn(f64) -> Option<c64>) -> Result<Operator> {
        let n = self.values.len();
        let mut fw = Vec::with_capacity(n);
        for &w in &self.values {
            fw.push(f(w).ok_or(Error::UndefinedFunction { eigenvalue: w })?);
        }
        let v = self.vectors.mat();
        let scaled = Mat::from_fn(n, n, |i, j| v[(i, j)] * fw[j]);
        let mat = &scaled * v.adjoint();
        Operator::new(self.vectors.dims().to_vec(), mat)
    }

    pub fn reconstruct(&self) -> Operator {
        self.apply(|w| Some(cr(w)))
            .expect("identity is defined everywhere")
    }
}

/// Hermitian eigendecomposition with the default Hermiticity tolerance.
pub fn hermitian_eig(a: &Operator) -> Result<HermitianEig> {
    hermitian_eig_tol(a, Tolerances::default().herm)
}

pub fn hermitian_eig_tol(a: &Operator, herm_tol: f64) -> Result<HermitianEig> {
    let dev = a.hermiticity_residue();
    if !(dev <= herm_tol * a.max_abs().max(1.0)) {
        return Err(Error::NonHermitian { deviation: dev });
    }
    let h = a.hermitian_part();
    let evd = h
        .mat
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let n = a.dim();
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let mut vecs = Mat::<c64>::zeros(n, n);
    for j in 0..n {
        let mut best = 0.0f64;
        for i in 0..n {
            best = best.max(u[(i, j)].norm());
        }
        // First component within rounding of the max fixes the phase.
        let pivot = (0..n)
            .find(|&i| u[(i, j)].norm() >= best * (1.0 - 1e-9))
            .unwrap_or(0);
        let z = u[(pivot, j)];
        let phase = if z.norm() > 0.0 {
            z.conj() / z.norm()
        } else {
            ONE
        };
        for i in 0..n {
            vecs[(i, j)] = u[(i, j)] * phase;
        }
    }
    Ok(HermitianEig {
        values,
        vectors: Operator::new(a.dims().to_vec(), vecs)?,
    })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(a: &Operator) -> Result<Vec<f64>> {
    let dev = a.hermiticity_residue();
    if !(dev <= Tolerances::default().herm * a.max_abs().max(1.0)) {
        return Err(Error::NonHermitian { deviation: dev });
    }
    let h = a.hermitian_part();
    h.mat
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))
}

/// `f(A)` for Hermitian `A`.
pub fn func_of_hermitian(a: &Operator, f: impl Fn(f64) -> Option<c64>) -> Result<Operator> {
    hermitian_eig(a)?.apply(f)
}

/// `exp(-i A t)` for Hermitian `A`.
pub fn unitary_exp(a: &Operator, t: f64) -> Result<Operator> {
    func_of_hermitian(a, |w| Some(c64::from_polar(1.0, -w * t)))
}

pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (na, nb) = (a.dim(), b.dim());
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    let am = a.mat();
    let bm = b.mat();
    let mat = Mat::from_fn(na * nb, na * nb, |i, j| {
        am[(i / nb, j / nb)] * bm[(i % nb, j % nb)]
    });
    Operator { dims, mat }
}

/// Kronecker product of a list of operators, left to right.
pub fn kron_all(ops: &[&Operator]) -> Operator {
    let mut it = ops.iter();
    let first = (*it.next().expect("kron_all needs at least one operator")).clone();
    it.fold(first, |acc, op| kron(&acc, op))
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Flat offsets of every multi-index over the factor subset `factors`.
fn subset_offsets(dims: &[usize], factors: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut offs = vec![0usize];
    for &f in factors {
        let mut next = Vec::with_capacity(offs.len() * dims[f]);
        for &o in &offs {
            for i in 0..dims[f] {
                next.push(o + i * st[f]);
            }
        }
        offs = next;
    }
    offs
}

/// Trace over every factor not listed in `keep`.
pub fn partial_trace(op: &Operator, keep: &[usize]) -> Result<Operator> {
    if keep.is_empty() {
        return Err(Error::EmptyKeep);
    }
    let count = op.dims.len();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= count) {
        return Err(Error::FactorOutOfRange { index: bad, count });
    }
    let traced: Vec<usize> = (0..count).filter(|f| !kept.contains(f)).collect();
    let keep_offs = subset_offsets(&op.dims, &kept);
    let trace_offs = subset_offsets(&op.dims, &traced);
    let n = keep_offs.len();
    let m = op.mat();
    let mat = Mat::from_fn(n, n, |a, b| {
        let (ra, rb) = (keep_offs[a], keep_offs[b]);
        trace_offs.iter().map(|&r| m[(ra + r, rb + r)]).sum()
    });
    Operator::new(kept.iter().map(|&k| op.dims[k]).collect(), mat)
}

/// Sum of singular values. Hermitian inputs take the eigenvalue path.
pub fn trace_norm(a: &Operator) -> Result<f64> {
    let scale = a.max_abs().max(1e-300);
    if a.hermiticity_residue() <= 1e-12 * scale.max(1.0) {
        return Ok(hermitian_eigenvalues(a)?.iter().map(|w| w.abs()).sum());
    }
    let sv = a
        .mat
        .singular_values()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    Ok(sv.iter().sum())
}

/// A Hermitian, unit-trace, positive-semidefinite operator.
#[derive(Clone, Debug)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerances(op, &Tolerances::default())
    }

    pub fn with_tolerances(op: Operator, tol: &Tolerances) -> Result<Self> {
        let herm = op.hermiticity_residue();
        if herm > tol.herm {
            return Err(Error::InvalidState(format!("Hermiticity residue {herm:e}")));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > tol.trace {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = hermitian_eigenvalues(&op)?.first().copied().unwrap_or(0.0);
        if min < tol.min_eig {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min:e}")));
        }
        Ok(Self(op))
    }

    /// Wrap an evolved state without re-validating it. Master-equation
    /// propagation does not enforce positivity, so evolved states may carry
    /// small negative eigenvalues.
    pub fn from_operator_unchecked(op: Operator) -> Self {
        Self(op)
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(dims: &[usize], psi: &[c64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let op = Operator::outer(dims, psi, psi)?.scale_real(1.0 / norm2);
        Ok(Self(op))
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        Ok(Self(partial_trace(&self.0, keep)?))
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self(kron(&self.0, &other.0))
    }
}

impl Deref for DensityMatrix {
    type Target = Operator;
    fn deref(&self) -> &Operator {
        &self.0
    }
}

impl AsRef<Operator> for DensityMatrix {
    fn as_ref(&self) -> &Operator {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sx() -> Operator {
        Operator::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
    }

    fn sz() -> Operator {
        Operator::diagonal(&[2], &[ONE, -ONE]).unwrap()
    }

    pub(crate) fn random_hermitian(n: usize, rng: &mut impl Rng) -> Operator {
        let a = Operator::from_fn(vec![n], |_, _| {
            c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap();
        a.hermitian_part()
    }

    pub(crate) fn random_state(dims: &[usize], rng: &mut impl Rng) -> DensityMatrix {
        let n: usize = dims.iter().product();
        let g = Operator::from_fn(dims.to_vec(), |_, _| {
            c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap();
        let p = g.matmul(&g.adjoint());
        let tr = p.trace().re;
        let _ = n;
        DensityMatrix::new(p.scale_real(1.0 / tr).hermitian_part()).unwrap()
    }

    #[test]
    fn eig_identity_and_pauli() {
        let e = hermitian_eig(&Operator::identity(&[2]).unwrap()).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        assert!(e.vectors.unitarity_residue() < 1e-14);
        let e = hermitian_eig(&sx()).unwrap();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);
        // Phase convention: largest component real positive.
        for j in 0..2 {
            let col: Vec<c64> = (0..2).map(|i| e.vectors.get(i, j)).collect();
            let big =
                col.iter()
                    .cloned()
                    .fold(ZERO, |m, z| if z.norm() > m.norm() + 1e-12 { z } else { m });
            assert!(big.im.abs() < 1e-14 && big.re > 0.0);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = Operator::from_rows(&[&[ZERO, ONE], &[ZERO, ZERO]]);
        match hermitian_eig(&a) {
            Err(Error::NonHermitian { deviation }) => assert_abs_diff_eq!(deviation, 1.0),
            other => panic!("expected NonHermitian, got {other:?}"),
        }
    }

    #[test]
    fn eig_reconstruction_random_up_to_256() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[1usize, 3, 17, 64, 256] {
            let a = random_hermitian(n, &mut rng);
            let e = hermitian_eig(&a).unwrap();
            let rel = (&e.reconstruct() - &a).frobenius_norm() / a.frobenius_norm();
            assert!(rel < 1e-10, "n={n} rel={rel:e}");
            let vv = e.vectors.adjoint().matmul(&e.vectors);
            assert!((&vv - &Operator::identity(&[n]).unwrap()).max_abs() < 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn functions_of_hermitian() {
        let z = Operator::zeros(&[3]).unwrap();
        let e = func_of_hermitian(&z, |w| Some(cr(w.exp()))).unwrap();
        assert!((&e - &Operator::identity(&[3]).unwrap()).max_abs() < 1e-15);

        // exp(-i sz pi) = diag(e^{-i pi}, e^{i pi}) = -1; at t = pi/2 it is diag(-i, i).
        let u = unitary_exp(&sz(), std::f64::consts::FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(u.get(0, 0).im, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(u.get(1, 1).im, 1.0, epsilon = 1e-14);
        let u = unitary_exp(&sz(), std::f64::consts::PI).unwrap();
        assert_abs_diff_eq!(u.get(0, 0).re, -1.0, epsilon = 1e-14);

        let d = Operator::diagonal(&[2], &[cr(4.0), cr(9.0)]).unwrap();
        let s = func_of_hermitian(&d, |w| (w >= 0.0).then(|| cr(w.sqrt()))).unwrap();
        assert_abs_diff_eq!(s.get(0, 0).re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.get(1, 1).re, 3.0, epsilon = 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(6, &mut rng);
        let same = func_of_hermitian(&a, |w| Some(cr(w))).unwrap();
        assert!((&same - &a).max_abs() < 1e-12);
    }

    #[test]
    fn function_undefined_names_eigenvalue() {
        let d = Operator::diagonal(&[2], &[cr(-0.5), cr(1.0)]).unwrap();
        match func_of_hermitian(&d, |w| (w > 0.0).then(|| cr(w.ln()))) {
            Err(Error::UndefinedFunction { eigenvalue }) => {
                assert_abs_diff_eq!(eigenvalue, -0.5, epsilon = 1e-14)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kron_layout() {
        let id6 = kron(
            &Operator::identity(&[2]).unwrap(),
            &Operator::identity(&[3]).unwrap(),
        );
        assert_eq!(id6.dims(), &[2, 3]);
        assert!((&id6 - &Operator::identity(&[6]).unwrap()).max_abs() == 0.0);

        // sz ⊗ 1 on |e>|g> = |0>|1> -> flat index 1.
        let op = kron(&sz(), &Operator::identity(&[2]).unwrap());
        let mut psi = [ZERO; 4];
        psi[1] = ONE;
        let out: Vec<c64> = (0..4)
            .map(|i| (0..4).map(|j| op.get(i, j) * psi[j]).sum())
            .collect();
        assert_abs_diff_eq!(out[1].re, 1.0);

        // (a + a^dagger)_{N=3} ⊗ sx against the index formula.
        let x = Operator::from_fn(vec![3], |i, j| {
            if i + 1 == j || j + 1 == i {
                cr((i.max(j) as f64).sqrt())
            } else {
                ZERO
            }
        })
        .unwrap();
        let k = kron(&x, &sx());
        for r in 0..6 {
            for c in 0..6 {
                let expect = x.get(r / 2, c / 2) * sx().get(r % 2, c % 2);
                assert_eq!(k.get(r, c), expect);
            }
        }
    }

    #[test]
    fn partial_trace_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ra = random_state(&[2], &mut rng);
        let rb = random_state(&[3], &mut rng);
        let prod = ra.tensor(&rb);
        let back = partial_trace(&prod, &[0]).unwrap();
        assert!((&back - ra.op()).max_abs() < 1e-12);
        let back = partial_trace(&prod, &[1]).unwrap();
        assert!((&back - rb.op()).max_abs() < 1e-12);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(&[2, 2], &[cr(s), ZERO, ZERO, cr(s)]).unwrap();
        let red = bell.partial_trace(&[0]).unwrap();
        assert!((&*red - &Operator::identity(&[2]).unwrap().scale_real(0.5)).max_abs() < 1e-15);

        let all = partial_trace(&prod, &[0, 1]).unwrap();
        assert!((&all - prod.op()).max_abs() == 0.0);

        assert_eq!(partial_trace(&prod, &[]).unwrap_err(), Error::EmptyKeep);
        assert_eq!(
            partial_trace(&prod, &[2]).unwrap_err(),
            Error::FactorOutOfRange { index: 2, count: 2 }
        );
    }

    #[test]
    fn partial_traces_commute_and_preserve_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_state(&[2, 3, 2], &mut rng);
        let a = partial_trace(&partial_trace(&rho, &[0, 1]).unwrap(), &[0]).unwrap();
        let b = partial_trace(&partial_trace(&rho, &[0, 2]).unwrap(), &[0]).unwrap();
        assert!((&a - &b).max_abs() < 1e-12);
        assert_abs_diff_eq!(
            partial_trace(&rho, &[1]).unwrap().trace().re,
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn trace_norm_cases() {
        assert_eq!(trace_norm(&Operator::zeros(&[3]).unwrap()).unwrap(), 0.0);
        assert_abs_diff_eq!(trace_norm(&sz()).unwrap(), 2.0, epsilon = 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_hermitian(4, &mut rng);
        let oracle: f64 = hermitian_eig(&a)
            .unwrap()
            .values
            .iter()
            .map(|w| w.abs())
            .sum();
        assert_abs_diff_eq!(trace_norm(&a).unwrap(), oracle, epsilon = 1e-10);
        // General path: a non-Hermitian rank-one matrix has trace norm |u||v|.
        let nh = Operator::from_rows(&[&[ZERO, cr(3.0)], &[ZERO, ZERO]]);
        assert_abs_diff_eq!(trace_norm(&nh).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(Operator::identity(&[2]).unwrap().scale_real(0.5)).is_ok());
        assert!(DensityMatrix::new(Operator::identity(&[2]).unwrap()).is_err());
        let neg = Operator::diagonal(&[2], &[cr(1.1), cr(-0.1)]).unwrap();
        assert!(DensityMatrix::new(neg).is_err());
    }

    #[test]
    fn vec_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_hermitian(5, &mut rng);
        let b = Operator::unvec(&[5], &a.vec()).unwrap();
        assert_eq!((&a - &b).max_abs(), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn exp_is_unitary(seed in any::<u64>(), n in 1usize..12, t in -20.0f64..20.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_hermitian(n, &mut rng);
                let u = unitary_exp(&a, t).unwrap();
                prop_assert!(u.unitarity_residue() < 1e-10);
            }

            #[test]
            fn trace_norm_triangle(seed in any::<u64>(), n in 1usize..8) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_hermitian(n, &mut rng);
                let b = random_hermitian(n, &mut rng);
                let c = random_hermitian(n, &mut rng);
                let ac = trace_norm(&(&a - &c)).unwrap();
                let ab = trace_norm(&(&a - &b)).unwrap();
                let bc = trace_norm(&(&b - &c)).unwrap();
                prop_assert!(ac <= ab + bc + 1e-9);
            }

            #[test]
            fn partial_trace_is_linear(seed in any::<u64>(), w in 0.0f64..1.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let r1 = random_state(&[2, 3], &mut rng);
                let r2 = random_state(&[2, 3], &mut rng);
                let mix = &r1.scale_real(w) + &r2.scale_real(1.0 - w);
                let lhs = partial_trace(&mix, &[1]).unwrap();
                let rhs = &partial_trace(&r1, &[1]).unwrap().scale_real(w)
                    + &partial_trace(&r2, &[1]).unwrap().scale_real(1.0 - w);
                prop_assert!((&lhs - &rhs).max_abs() < 1e-12);
            }
        }
    }
}
