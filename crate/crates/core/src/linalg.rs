//! Small dense complex linear algebra: the matrices here are at most a few
//! thousand on a side (one conserved sector of a 2x2 lattice, or a gate).
//!
//! Hermitian eigenproblems go through Householder tridiagonalization, a
//! diagonal phase fix to make the tridiagonal real, and implicit QL.

use crate::scalar::{cis, czero, Real, C};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![czero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(d: &[C<T>]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn from_real_diag(d: &[T]) -> Self {
        let v: Vec<C<T>> = d.iter().map(|&x| C::new(x, T::zero())).collect();
        Self::from_diag(&v)
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
    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[C<T>]) {
        for (r, &x) in v.iter().enumerate() {
            self[(r, c)] = x;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(C::new(s, T::zero()))
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).fold(czero(), |acc, i| acc + self[(i, i)])
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = (other.rows, other.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |r, c| {
            self[(r / r2, c / c2)] * other[(r % r2, c % c2)]
        })
    }

    pub fn matvec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.cols, "matvec length mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).fold(czero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// Largest entry magnitude, the residual measure used for matrix identities.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.norm()))
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().fold(T::zero(), |s, x| s + x.norm_sqr()).sqrt()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.is_square() && (&(&self.adjoint() * self) - &Self::identity(self.rows)).max_abs() <= tol
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.is_square() && (self - &self.adjoint()).max_abs() <= tol
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|r| (0..self.cols).all(|c| r == c || self[(r, c)] == czero()))
    }

    pub fn pow(&self, mut e: u64) -> Self {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Self::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Sub-matrix on the given row/column index set (used for sector blocks).
    pub fn restrict(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |r, c| self[(idx[r], idx[c])])
    }

    pub fn map<U: Real>(&self, f: impl Fn(C<T>) -> C<U>) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }
}

impl<T: Real> Index<(usize, usize)> for Matrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C<T> {
        &mut self.data[r * self.cols + c]
    }
}

impl<'a, T: Real> Mul<&'a Matrix<T>> for &'a Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let orow = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == czero() {
                    continue;
                }
                let brow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }
}

impl<'a, T: Real> Add<&'a Matrix<T>> for &'a Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<'a, T: Real> Sub<&'a Matrix<T>> for &'a Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a Hermitian matrix.
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// f(H) = V diag(f(λ)) V†
    pub fn apply_fn(&self, f: impl Fn(T) -> C<T>) -> Matrix<T> {
        let n = self.values.len();
        let fv: Vec<C<T>> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        Matrix::from_fn(n, n, |r, c| {
            (0..n).fold(czero(), |acc, k| acc + v[(r, k)] * fv[k] * v[(c, k)].conj())
        })
    }
}

pub fn hermitian_eigen<T: Real>(h: &Matrix<T>) -> HermitianEigen<T> {
    assert!(h.is_square(), "eigen of non-square matrix");
    let n = h.rows();
    // solved in f64 whatever T is; Hermitian part only so roundoff asymmetry cannot leak in
    let a = nalgebra::DMatrix::from_fn(n, n, |r, c| {
        let z = (h[(r, c)] + h[(c, r)].conj()).scale(T::lit(0.5));
        Complex::new(z.re.to_f64(), z.im.to_f64())
    });
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| T::lit(eig.eigenvalues[i])).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| {
        let z = eig.eigenvectors[(r, order[c])];
        Complex::new(T::lit(z.re), T::lit(z.im))
    });
    HermitianEigen { values, vectors }
}

/// Eigenphases of a unitary, from the (diagonal, since U is normal) complex
/// Schur form.
pub fn unitary_eigenphases<T: Real>(u: &Matrix<T>) -> Vec<f64> {
    assert!(u.is_square(), "eigenphases of non-square matrix");
    let n = u.rows();
    let a = nalgebra::DMatrix::from_fn(n, n, |r, c| Complex::new(u[(r, c)].re.to_f64(), u[(r, c)].im.to_f64()));
    let (_, t) = a.schur().unpack();
    (0..n).map(|i| t[(i, i)].arg()).collect()
}

/// exp(−i t H) for Hermitian H.
pub fn evolution<T: Real>(h: &Matrix<T>, t: T) -> Matrix<T> {
    hermitian_eigen(h).apply_fn(|l| cis(-l * t))
}

/// exp(A) for anti-Hermitian A, via K = −iA Hermitian and exp(A) = exp(iK).
pub fn exp_anti_hermitian<T: Real>(a: &Matrix<T>) -> Matrix<T> {
    let k = a.scale(Complex::new(T::zero(), -T::one()));
    evolution(&k, -T::one())
}

#[derive(Clone, Copy, Debug)]
pub struct NormEstimate<T: Real> {
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Spectral norm of an operator Δ from its Gram action v -> Δ†Δ v, by power
/// iteration. Stops on relative change below `rel_tol`, or when the estimate
/// sinks under `abs_floor` (a zero operator never converges relatively).
pub fn power_norm<T: Real>(
    dim: usize,
    mut gram: impl FnMut(&[C<T>]) -> Vec<C<T>>,
    rel_tol: T,
    abs_floor: T,
    max_iter: usize,
    seed: u64,
) -> NormEstimate<T> {
    if dim == 0 {
        return NormEstimate { value: T::zero(), iterations: 0, converged: true };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C<T>> = (0..dim)
        .map(|_| C::new(T::lit(rng.gen::<f64>() - 0.5), T::lit(rng.gen::<f64>() - 0.5)))
        .collect();
    normalize(&mut v);
    let mut lambda = T::zero();
    for it in 1..=max_iter {
        let w = gram(&v);
        let new_lambda = v.iter().zip(&w).fold(T::zero(), |s, (a, b)| s + (a.conj() * b).re).max(T::zero());
        let wn = w.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt();
        if wn == T::zero() || new_lambda.sqrt() < abs_floor {
            return NormEstimate { value: new_lambda.sqrt(), iterations: it, converged: true };
        }
        let done = it > 1 && (new_lambda - lambda).abs() <= rel_tol * new_lambda;
        lambda = new_lambda;
        if done {
            return NormEstimate { value: lambda.sqrt(), iterations: it, converged: true };
        }
        v = w.into_iter().map(|z| z.unscale(wn)).collect();
    }
    NormEstimate { value: lambda.sqrt(), iterations: max_iter, converged: false }
}

/// Spectral norm of a dense matrix (power iteration on M†M).
pub fn spectral_norm<T: Real>(m: &Matrix<T>, rel_tol: T, seed: u64) -> NormEstimate<T> {
    let adj = m.adjoint();
    power_norm(m.cols(), |v| adj.matvec(&m.matvec(v)), rel_tol, T::min_positive_value(), 10_000, seed)
}

pub fn normalize<T: Real>(v: &mut [C<T>]) {
    let n = v.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt();
    if n > T::zero() {
        for z in v.iter_mut() {
            *z = z.unscale(n);
        }
    }
}

pub fn inner<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    assert_eq!(a.len(), b.len(), "inner product length mismatch");
    a.iter().zip(b).fold(czero(), |s, (&x, &y)| s + x.conj() * y)
}

pub fn norm<T: Real>(a: &[C<T>]) -> T {
    a.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
}
