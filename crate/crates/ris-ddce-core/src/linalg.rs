//! Dense complex matrices, least squares and seeded sampling.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::ops::{Deref, DerefMut, Index, IndexMut};

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinalgError {
    /// Operand shapes do not line up.
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// Numerical rank below the column count.
    RankDeficient { rank: usize, cols: usize },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::Shape { expected, found } => write!(
                f,
                "shape mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            LinalgError::RankDeficient { rank, cols } => {
                write!(f, "rank deficient: numerical rank {rank} of {cols} columns")
            }
        }
    }
}

impl core::error::Error for LinalgError {}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Dense complex column vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CVector(pub Vec<C64>);

impl CMatrix {
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
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Shape {
                expected: (rows, cols),
                found: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_columns(rows: usize, columns: &[CVector]) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(rows, columns.len());
        for (c, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(LinalgError::Shape {
                    expected: (rows, 1),
                    found: (col.len(), 1),
                });
            }
            for r in 0..rows {
                m[(r, c)] = col[r];
            }
        }
        Ok(m)
    }

    pub fn diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> CVector {
        CVector((0..self.rows).map(|r| self[(r, c)]).collect())
    }

    pub fn set_column(&mut self, c: usize, v: &[C64]) {
        debug_assert_eq!(v.len(), self.rows);
        for (r, x) in v.iter().enumerate() {
            self[(r, c)] = *x;
        }
    }

    /// Columns `idx` in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> CMatrix {
        CMatrix::from_fn(self.rows, idx.len(), |r, c| self[(r, idx[c])])
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Shape {
                expected: (self.cols, rhs.cols),
                found: rhs.shape(),
            });
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let orow = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let brow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<CVector, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::Shape {
                expected: (self.cols, 1),
                found: (v.len(), 1),
            });
        }
        Ok(CVector(
            (0..self.rows)
                .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
                .collect(),
        ))
    }

    /// `self * diag(d)`.
    pub fn scale_columns(&self, d: &[C64]) -> CMatrix {
        debug_assert_eq!(d.len(), self.cols);
        CMatrix::from_fn(self.rows, self.cols, |r, c| self[(r, c)] * d[c])
    }

    /// `diag(d) * self`.
    pub fn scale_rows(&self, d: &[C64]) -> CMatrix {
        debug_assert_eq!(d.len(), self.rows);
        CMatrix::from_fn(self.rows, self.cols, |r, c| self[(r, c)] * d[r])
    }

    pub fn add(&self, rhs: &CMatrix) -> Result<CMatrix, LinalgError> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &CMatrix) -> Result<CMatrix, LinalgError> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &CMatrix, f: impl Fn(C64, C64) -> C64) -> Result<CMatrix, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::Shape {
                expected: self.shape(),
                found: rhs.shape(),
            });
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &CMatrix) -> CMatrix {
        let (p, q) = rhs.shape();
        CMatrix::from_fn(self.rows * p, self.cols * q, |r, c| {
            self[(r / p, c / q)] * rhs[(r % p, c % q)]
        })
    }

    /// Stacks `blocks` vertically; all must share the column count.
    pub fn vstack(blocks: &[CMatrix]) -> Result<CMatrix, LinalgError> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            if b.cols != cols {
                return Err(LinalgError::Shape {
                    expected: (b.rows, cols),
                    found: b.shape(),
                });
            }
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.frobenius_norm_sqr())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl CVector {
    pub fn zeros(n: usize) -> Self {
        CVector(vec![C64::new(0.0, 0.0); n])
    }

    pub fn ones(n: usize) -> Self {
        CVector(vec![C64::new(1.0, 0.0); n])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sqr())
    }

    /// `Σ conj(self_i) rhs_i`.
    pub fn dot_conj(&self, rhs: &[C64]) -> C64 {
        self.0.iter().zip(rhs).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }
}

impl Deref for CVector {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl DerefMut for CVector {
    fn deref_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }
}

impl From<Vec<C64>> for CVector {
    fn from(v: Vec<C64>) -> Self {
        CVector(v)
    }
}

impl FromIterator<C64> for CVector {
    fn from_iter<I: IntoIterator<Item = C64>>(iter: I) -> Self {
        CVector(iter.into_iter().collect())
    }
}

/// `n x n` DFT matrix with entries `exp(-j 2π p q / n)`.
pub fn dft_matrix(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |p, q| {
        // reduce the exponent first so large n keeps full accuracy
        let k = (p * q) % n;
        C64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64)
    })
}

/// Householder QR with column pivoting, stored column-major.
struct PivotedQr {
    m: usize,
    n: usize,
    /// Column-major R above the diagonal; Householder vectors below.
    a: Vec<C64>,
    tau: Vec<C64>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    fn new(mat: &CMatrix) -> Self {
        let (m, n) = mat.shape();
        let mut a = vec![C64::new(0.0, 0.0); m * n];
        for r in 0..m {
            for c in 0..n {
                a[c * m + r] = mat[(r, c)];
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut norms: Vec<f64> = (0..n)
            .map(|c| a[c * m..(c + 1) * m].iter().map(|z| z.norm_sqr()).sum())
            .collect();
        let mut ref_norms = norms.clone();
        let steps = m.min(n);
        let mut tau = vec![C64::new(0.0, 0.0); steps];
        let mut diag_abs = vec![0.0f64; steps];

        for k in 0..steps {
            let (p, _) = norms[k..]
                .iter()
                .enumerate()
                .fold((0, -1.0), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
            let p = p + k;
            if p != k {
                for r in 0..m {
                    a.swap(k * m + r, p * m + r);
                }
                perm.swap(k, p);
                norms.swap(k, p);
                ref_norms.swap(k, p);
            }

            let col = &mut a[k * m..(k + 1) * m];
            let xnorm = libm::sqrt(col[k..].iter().map(|z| z.norm_sqr()).sum::<f64>());
            if xnorm == 0.0 {
                tau[k] = C64::new(0.0, 0.0);
                diag_abs[k] = 0.0;
                continue;
            }
            let x0 = col[k];
            let phase = if x0.norm() == 0.0 {
                C64::new(1.0, 0.0)
            } else {
                x0 / x0.norm()
            };
            let alpha = -phase * xnorm;
            // v = x - alpha e1, normalised so v[0] = 1
            let v0 = x0 - alpha;
            for z in col[k + 1..].iter_mut() {
                *z /= v0;
            }
            let vnorm2 = 1.0 + col[k + 1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
            let t = C64::new(2.0 / vnorm2, 0.0);
            tau[k] = t;
            col[k] = alpha;
            diag_abs[k] = xnorm;

            let (head, tail) = a.split_at_mut((k + 1) * m);
            let v = &head[k * m..(k + 1) * m];
            for j in 0..(n - k - 1) {
                let cj = &mut tail[j * m..(j + 1) * m];
                let mut s = cj[k];
                for r in k + 1..m {
                    s += v[r].conj() * cj[r];
                }
                let s = s * t;
                cj[k] -= s;
                for r in k + 1..m {
                    cj[r] -= s * v[r];
                }
                let jj = k + 1 + j;
                norms[jj] -= cj[k].norm_sqr();
                if norms[jj] <= 1e-8 * ref_norms[jj] {
                    norms[jj] = cj[k + 1..].iter().map(|z| z.norm_sqr()).sum();
                    ref_norms[jj] = norms[jj];
                }
            }
        }

        let tol = m.max(n) as f64 * f64::EPSILON * diag_abs.first().copied().unwrap_or(0.0);
        let rank = diag_abs.iter().take_while(|&&d| d > tol).count();
        Self { m, n, a, tau, perm, rank }
    }

    fn solve(&self, b: &[C64]) -> Vec<C64> {
        let (m, n) = (self.m, self.n);
        let mut y = b.to_vec();
        for k in 0..self.tau.len() {
            let v = &self.a[k * m..(k + 1) * m];
            let mut s = y[k];
            for r in k + 1..m {
                s += v[r].conj() * y[r];
            }
            let s = s * self.tau[k];
            y[k] -= s;
            for r in k + 1..m {
                y[r] -= s * v[r];
            }
        }
        let mut z = vec![C64::new(0.0, 0.0); n];
        for k in (0..n).rev() {
            let mut acc = y[k];
            for j in k + 1..n {
                acc -= self.a[j * m + k] * z[j];
            }
            z[k] = acc / self.a[k * m + k];
        }
        let mut x = vec![C64::new(0.0, 0.0); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }
}

/// Numerical rank: pivoted-QR diagonal entries above `max(rows, cols)·ε·|R₁₁|`.
pub fn numerical_rank(a: &CMatrix) -> usize {
    PivotedQr::new(a).rank
}

/// Least-squares solution of `a x ≈ b` for full-column-rank `a`.
pub fn lstsq(a: &CMatrix, b: &[C64]) -> Result<CVector, LinalgError> {
    if b.len() != a.rows() {
        return Err(LinalgError::Shape {
            expected: (a.rows(), 1),
            found: (b.len(), 1),
        });
    }
    let qr = PivotedQr::new(a);
    if qr.rank < a.cols() {
        return Err(LinalgError::RankDeficient {
            rank: qr.rank,
            cols: a.cols(),
        });
    }
    Ok(CVector(qr.solve(b)))
}

/// Reproducible random source for one Monte Carlo trial.
///
/// The same `(seed, stream_id)` pair yields the same samples regardless of
/// which thread draws them or in what order trials are scheduled.
#[derive(Debug, Clone)]
pub struct SeededStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derived stream for an independent purpose inside the same trial.
    pub fn fork(&self, tag: u64) -> SeededStream {
        let mixed = self.seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        SeededStream::new(mixed, self.stream_id)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// One circularly-symmetric complex Gaussian with total variance `variance`.
    pub fn complex_normal(&mut self, variance: f64) -> C64 {
        let s = libm::sqrt(variance / 2.0);
        let re = self.standard_normal();
        let im = self.standard_normal();
        C64::new(s * re, s * im)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        use rand_chacha::rand_core::RngCore;
        // rejection keeps the draw unbiased for any n
        let n64 = n as u64;
        let zone = u64::MAX - u64::MAX % n64;
        loop {
            let v = self.rng.next_u64();
            if v < zone {
                return (v % n64) as usize;
            }
        }
    }

    pub fn uniform(&mut self) -> f64 {
        use rand_chacha::rand_core::RngCore;
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// `n` i.i.d. CN(0, variance) samples.
pub fn complex_gaussian(stream: &mut SeededStream, n: usize, variance: f64) -> CVector {
    (0..n).map(|_| stream.complex_normal(variance)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dft_small_cases() {
        assert_eq!(dft_matrix(1), CMatrix::identity(1));
        let v2 = dft_matrix(2);
        assert!((v2[(1, 1)] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((v2[(0, 1)] - c(1.0, 0.0)).norm() < 1e-15);
        let v4 = dft_matrix(4);
        let g = v4.adjoint().matmul(&v4).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let want = if r == col { 4.0 } else { 0.0 };
                assert!((g[(r, col)] - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lstsq_identity_and_average() {
        let b = [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)];
        let x = lstsq(&CMatrix::identity(3), &b).unwrap();
        assert_eq!(x.len(), 3);
        for i in 0..3 {
            assert!((x[i] - b[i]).norm() < 1e-15);
        }
        let a = CMatrix::from_row_major(2, 1, vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let x = lstsq(&a, &[c(0.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lstsq_dft_round_trip() {
        let mut s = SeededStream::new(7, 0);
        let x = complex_gaussian(&mut s, 4, 1.0);
        let v = dft_matrix(4);
        let b = v.mul_vec(&x).unwrap();
        let xh = lstsq(&v, &b).unwrap();
        let err: f64 = xh.iter().zip(x.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!(libm::sqrt(err) <= 1e-12 * x.norm());
    }

    #[test]
    fn lstsq_reports_rank() {
        let a = CMatrix::from_fn(4, 3, |r, _| c(r as f64 + 1.0, 0.0));
        match lstsq(&a, &[c(1.0, 0.0); 4]) {
            Err(LinalgError::RankDeficient { rank, cols }) => {
                assert_eq!(rank, 1);
                assert_eq!(cols, 3);
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn gaussian_zero_variance_and_determinism() {
        let mut s = SeededStream::new(1, 2);
        assert!(complex_gaussian(&mut s, 5, 0.0).iter().all(|z| *z == c(0.0, 0.0)));
        let a = complex_gaussian(&mut SeededStream::new(3, 9), 16, 1.0);
        let b = complex_gaussian(&mut SeededStream::new(3, 9), 16, 1.0);
        assert_eq!(a, b);
        let d = complex_gaussian(&mut SeededStream::new(3, 10), 16, 1.0);
        assert_ne!(a, d);
    }

    #[test]
    fn gaussian_moments_large_sample() {
        let n = 1_000_000;
        let x = complex_gaussian(&mut SeededStream::new(11, 0), n, 2.0);
        let p = x.norm_sqr() / n as f64;
        assert!((1.99..=2.01).contains(&p), "power {p}");
        let (mut sri, mut srr, mut sii) = (0.0, 0.0, 0.0);
        for z in x.iter() {
            sri += z.re * z.im;
            srr += z.re * z.re;
            sii += z.im * z.im;
        }
        let rho = sri / libm::sqrt(srr * sii);
        assert!(rho.abs() < 0.01, "re/im correlation {rho}");
    }

    #[test]
    fn kron_shape_and_entries() {
        let a = CMatrix::from_row_major(1, 2, vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let b = CMatrix::identity(2);
        let k = a.kron(&b);
        assert_eq!(k.shape(), (2, 4));
        assert_eq!(k[(1, 3)], c(0.0, 1.0));
        assert_eq!(k[(0, 1)], c(0.0, 0.0));
    }
}
