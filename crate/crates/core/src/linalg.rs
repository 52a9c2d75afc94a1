//! Dense and banded linear algebra used throughout the crate: Hermitian
//! eigendecomposition, Sylvester-inertia eigenvalue counting and shifted
//! solves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance on `‖M - M*‖ / ‖M‖` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `i` belonging to `values[i]`.
    pub vectors: DMatrix<Complex64>,
}

fn max_abs<T: Copy>(m: &DMatrix<T>, abs: impl Fn(T) -> f64) -> f64 {
    m.iter().fold(0.0, |acc, &x| acc.max(abs(x)))
}

pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let scale = max_abs(m, |z| z.norm());
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

/// Eigendecomposition of a complex Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
        });
    }
    // Symmetrise exactly so the solver sees a Hermitian input.
    let sym = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(m[(i, i)].re, 0.0)
        } else {
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        }
    });
    let eig = nalgebra::linalg::SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Ascending eigenvalues of a real symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut values: Vec<f64> = nalgebra::linalg::SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or(Error::NoConvergence)?
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Ascending eigenpairs of a real symmetric matrix.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((vec![], DMatrix::zeros(0, 0)));
    }
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let eig = nalgebra::linalg::SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Numbers of negative, zero and positive eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

/// Sylvester inertia of a dense symmetric matrix by Bunch–Kaufman
/// factorisation with partial pivoting. Only the lower triangle is read.
pub fn dense_inertia(m: &DMatrix<f64>) -> Inertia {
    let n = m.nrows();
    // Column-major copy; a[j * n + i] holds entry (i, j), i >= j.
    let mut a: Vec<f64> = m.as_slice().to_vec();
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let mut inertia = Inertia::default();
    let at = |i: usize, j: usize| j * n + i;
    let mut k = 0;
    while k < n {
        let akk = a[at(k, k)].abs();
        let (mut r, mut colmax) = (k, 0.0);
        for i in k + 1..n {
            let v = a[at(i, k)].abs();
            if v > colmax {
                colmax = v;
                r = i;
            }
        }
        if akk == 0.0 && colmax == 0.0 {
            inertia.zero += 1;
            k += 1;
            continue;
        }
        let mut block = 1;
        let mut swap_with = k;
        if akk < alpha * colmax {
            // Largest off-diagonal magnitude in row/column r of the trailing block.
            let mut rowmax: f64 = 0.0;
            for j in k..r {
                rowmax = rowmax.max(a[at(r, j)].abs());
            }
            for i in r + 1..n {
                rowmax = rowmax.max(a[at(i, r)].abs());
            }
            if akk * rowmax >= alpha * colmax * colmax {
                // 1x1 pivot at k, no interchange.
            } else if a[at(r, r)].abs() >= alpha * rowmax {
                swap_with = r;
            } else {
                block = 2;
                swap_with = r;
            }
        }
        let target = if block == 1 { k } else { k + 1 };
        if swap_with != target {
            symmetric_swap(&mut a, n, k, target, swap_with);
        }
        if block == 1 {
            let d = a[at(k, k)];
            if d > 0.0 {
                inertia.positive += 1;
            } else if d < 0.0 {
                inertia.negative += 1;
            } else {
                inertia.zero += 1;
            }
            if d != 0.0 {
                let (head, tail) = a.split_at_mut((k + 1) * n);
                let col_k = &head[k * n..];
                for j in k + 1..n {
                    let c = col_k[j] / d;
                    if c == 0.0 {
                        continue;
                    }
                    let col_j = &mut tail[(j - k - 1) * n..(j - k) * n];
                    for i in j..n {
                        col_j[i] -= c * col_k[i];
                    }
                }
            }
            k += 1;
        } else {
            let p = a[at(k, k)];
            let b = a[at(k + 1, k)];
            let c = a[at(k + 1, k + 1)];
            let det = p * c - b * b;
            if det < 0.0 {
                inertia.negative += 1;
                inertia.positive += 1;
            } else if det > 0.0 {
                if p > 0.0 {
                    inertia.positive += 2;
                } else {
                    inertia.negative += 2;
                }
            } else {
                // Singular 2x2 block cannot arise from the pivot rule; count conservatively.
                inertia.zero += 1;
                if p + c > 0.0 {
                    inertia.positive += 1;
                } else {
                    inertia.negative += 1;
                }
            }
            let (head, tail) = a.split_at_mut((k + 2) * n);
            let col_k = &head[k * n..(k + 1) * n];
            let col_k1 = &head[(k + 1) * n..(k + 2) * n];
            for j in k + 2..n {
                let (wk, wk1) = (col_k[j], col_k1[j]);
                let u = (c * wk - b * wk1) / det;
                let v = (p * wk1 - b * wk) / det;
                if u == 0.0 && v == 0.0 {
                    continue;
                }
                let col_j = &mut tail[(j - k - 2) * n..(j - k - 1) * n];
                for i in j..n {
                    col_j[i] -= u * col_k[i] + v * col_k1[i];
                }
            }
            k += 2;
        }
    }
    inertia
}

/// Swaps indices `p < q` (both `>= k`) of the trailing symmetric block,
/// keeping only the lower triangle consistent.
fn symmetric_swap(a: &mut [f64], n: usize, k: usize, p: usize, q: usize) {
    let at = |i: usize, j: usize| j * n + i;
    debug_assert!(k <= p && p < q);
    a.swap(at(p, p), at(q, q));
    for j in k..p {
        a.swap(at(p, j), at(q, j));
    }
    for i in p + 1..q {
        a.swap(at(i, p), at(q, i));
    }
    for i in q + 1..n {
        a.swap(at(i, p), at(i, q));
    }
}

/// Symmetric band matrix, lower band stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        BandMatrix {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        (i - j <= self.bandwidth).then(|| j * (self.bandwidth + 1) + (i - j))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Sets entries `(i, j)` and `(j, i)`; panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside the band");
        self.data[s] = v;
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for j in 0..self.n {
            self.data[j * (self.bandwidth + 1)] += shift;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Number of eigenvalues strictly below `shift`, from the signs of the
    /// pivots of an unpivoted `LDLᵀ` of `A - shift·I` (Sturm count for
    /// tridiagonal matrices). Exactly vanishing pivots are nudged to a tiny
    /// negative value so the count stays defined.
    pub fn count_below(&self, shift: f64) -> usize {
        let n = self.n;
        let w = self.bandwidth;
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + self.norm_max());
        let mut negative = 0;
        if w == 1 {
            let mut d_prev = 1.0;
            let mut off_prev = 0.0;
            for j in 0..n {
                let diag = self.data[2 * j] - shift;
                let mut d = if j == 0 { diag } else { diag - off_prev * off_prev / d_prev };
                if d.abs() < tiny {
                    d = -tiny;
                }
                if d < 0.0 {
                    negative += 1;
                }
                d_prev = d;
                off_prev = self.data[2 * j + 1];
            }
            return negative;
        }
        let mut a = self.data.clone();
        let stride = w + 1;
        for j in 0..n {
            a[j * stride] -= shift;
        }
        for k in 0..n {
            let mut d = a[k * stride];
            if d.abs() < tiny {
                d = -tiny;
                a[k * stride] = d;
            }
            if d < 0.0 {
                negative += 1;
            }
            let last = (k + w).min(n - 1);
            for jj in k + 1..=last {
                let c = a[k * stride + (jj - k)] / d;
                if c == 0.0 {
                    continue;
                }
                for ii in jj..=last {
                    a[jj * stride + (ii - jj)] -= c * a[k * stride + (ii - k)];
                }
            }
        }
        negative
    }
}

/// Real symmetric matrix in dense or banded storage.
#[derive(Debug, Clone, PartialEq)]
pub enum SymmetricMatrix {
    Dense(DMatrix<f64>),
    Banded(BandMatrix),
}

impl SymmetricMatrix {
    pub fn dim(&self) -> usize {
        match self {
            SymmetricMatrix::Dense(m) => m.nrows(),
            SymmetricMatrix::Banded(b) => b.dim(),
        }
    }

    pub fn is_banded(&self) -> bool {
        matches!(self, SymmetricMatrix::Banded(_))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            SymmetricMatrix::Dense(m) => m.clone(),
            SymmetricMatrix::Banded(b) => b.to_dense(),
        }
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        match self {
            SymmetricMatrix::Dense(m) => {
                for i in 0..m.nrows() {
                    m[(i, i)] += shift;
                }
            }
            SymmetricMatrix::Banded(b) => b.add_diagonal(shift),
        }
    }

    /// Number of eigenvalues strictly below `shift` (Sylvester inertia).
    pub fn count_below(&self, shift: f64) -> usize {
        match self {
            SymmetricMatrix::Dense(m) => {
                let mut shifted = m.clone();
                for i in 0..shifted.nrows() {
                    shifted[(i, i)] -= shift;
                }
                dense_inertia(&shifted).negative
            }
            SymmetricMatrix::Banded(b) => b.count_below(shift),
        }
    }

    /// Locates an eigenvalue in `[lo, hi]` by bisection on inertia counts.
    pub fn eigenvalue_in(&self, lo: f64, hi: f64) -> Option<f64> {
        let (mut lo, mut hi) = (lo, hi);
        let base = self.count_below(lo);
        if self.count_below(hi) == base {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > base {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Solves `(shift·I - A) X = B` for a block of right-hand sides.
    pub fn solve_resolvent(&self, shift: f64, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            SymmetricMatrix::Dense(m) => {
                let mut op = -m.clone();
                for i in 0..op.nrows() {
                    op[(i, i)] += shift;
                }
                op.lu().solve(rhs).ok_or_else(|| Error::InvalidArgument("singular resolvent".into()))
            }
            SymmetricMatrix::Banded(b) => {
                let lu = BandLu::factor(b, shift)?;
                let mut out = rhs.clone();
                for mut col in out.column_iter_mut() {
                    let mut v: Vec<f64> = col.iter().copied().collect();
                    lu.solve_in_place(&mut v);
                    col.copy_from_slice(&v);
                }
                Ok(out)
            }
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            SymmetricMatrix::Dense(m) => m * x,
            SymmetricMatrix::Banded(b) => {
                let n = b.dim();
                let w = b.bandwidth();
                let mut y = DVector::zeros(n);
                for j in 0..n {
                    y[j] += b.get(j, j) * x[j];
                    for i in j + 1..(j + w + 1).min(n) {
                        let v = b.get(i, j);
                        y[i] += v * x[j];
                        y[j] += v * x[i];
                    }
                }
                y
            }
        }
    }
}

/// LU factorisation with partial pivoting of the banded matrix
/// `shift·I - A`, in LAPACK `gbtrf` layout (upper bandwidth grows to `2w`).
struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    /// Row `i` stores columns `i - kl ..= i + 2·kl`.
    rows: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn factor(a: &BandMatrix, shift: f64) -> Result<Self> {
        let n = a.dim();
        let kl = a.bandwidth();
        let width = 3 * kl + 1;
        let mut lu = BandLu {
            n,
            kl,
            width,
            rows: vec![0.0; n * width],
            pivots: vec![0; n],
        };
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + kl + 1).min(n) {
                let v = if i == j { shift - a.get(i, i) } else { -a.get(i, j) };
                *lu.at_mut(i, j) = v;
            }
        }
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.at(k, k).abs();
            for i in k + 1..=last_row {
                let v = lu.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::InvalidArgument("singular banded resolvent".into()));
            }
            lu.pivots[k] = p;
            let last_col = (k + 2 * kl).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let t = lu.at(k, j);
                    *lu.at_mut(k, j) = lu.at(p, j);
                    *lu.at_mut(p, j) = t;
                }
            }
            let pivot = lu.at(k, k);
            for i in k + 1..=last_row {
                let m = lu.at(i, k) / pivot;
                *lu.at_mut(i, k) = m;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        let u = lu.at(k, j);
                        *lu.at_mut(i, j) -= m * u;
                    }
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.width + (j + self.kl - i)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.rows[i * self.width + (j + self.kl - i)]
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..(k + self.kl + 1).min(n) {
                    x[i] -= self.at(i, k) * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..(k + 2 * self.kl + 1).min(n) {
                s -= self.at(k, j) * x[j];
            }
            x[k] = s / self.at(k, k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn diag_eigenvalues_sorted() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]).map(|x| Complex64::new(x, 0.0));
        let e = hermitian_eigen(&m).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
    }

    #[test]
    fn dimer_fiber_eigenvalues() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 4.0]).map(|x| Complex64::new(x, 0.0));
        let e = hermitian_eigen(&m).unwrap();
        assert!((e.values[0] - (3.0 - 5f64.sqrt())).abs() < 1e-13);
        assert!((e.values[1] - (3.0 + 5f64.sqrt())).abs() < 1e-13);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]).map(|x| Complex64::new(x, 0.0));
        assert!(matches!(hermitian_eigen(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn dense_inertia_matches_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 3, 5, 10, 40] {
            for _ in 0..20 {
                let m = random_symmetric(&mut rng, n);
                let eig = symmetric_eigenvalues(&m).unwrap();
                let inertia = dense_inertia(&m);
                assert_eq!(inertia.negative, eig.iter().filter(|&&x| x < 0.0).count());
                assert_eq!(inertia.positive, eig.iter().filter(|&&x| x > 0.0).count());
            }
        }
    }

    #[test]
    fn dense_inertia_forces_two_by_two_pivots() {
        // Zero diagonal forces 2x2 pivots.
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 2.0, 0.0]);
        let inertia = dense_inertia(&m);
        assert_eq!(inertia, Inertia { negative: 1, zero: 1, positive: 1 });
    }

    #[test]
    fn band_count_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for w in [1usize, 2, 3] {
            let n = 30;
            let mut b = BandMatrix::zeros(n, w);
            for j in 0..n {
                for i in j..(j + w + 1).min(n) {
                    b.set(i, j, rng.random_range(-2.0..2.0));
                }
            }
            let eig = symmetric_eigenvalues(&b.to_dense()).unwrap();
            for shift in [-3.0, -0.5, 0.1, 1.7] {
                let expected = eig.iter().filter(|&&x| x < shift).count();
                assert_eq!(b.count_below(shift), expected, "w = {w}, shift = {shift}");
            }
        }
    }

    #[test]
    fn banded_resolvent_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 25;
        let w = 2;
        let mut b = BandMatrix::zeros(n, w);
        for j in 0..n {
            for i in j..(j + w + 1).min(n) {
                b.set(i, j, rng.random_range(-1.0..1.0));
            }
        }
        let rhs = DMatrix::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0));
        let banded = SymmetricMatrix::Banded(b.clone());
        let dense = SymmetricMatrix::Dense(b.to_dense());
        let x1 = banded.solve_resolvent(0.3, &rhs).unwrap();
        let x2 = dense.solve_resolvent(0.3, &rhs).unwrap();
        assert!((x1 - x2).abs().max() < 1e-10);
    }
}
