//! Dense and tridiagonal symmetric eigensolvers.
//!
//! The SCF loop only needs the eigenpairs of `H_ℓ` below the chemical
//! potential, a handful out of hundreds. Dense blocks are reduced to
//! tridiagonal form once; the wanted eigenvalues are then isolated by Sturm
//! bisection and their vectors obtained by inverse iteration.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen, SymmetricTridiagonal};
use num_complex::Complex64;

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal length");
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn pivmin(&self) -> f64 {
        let emax = self.off.iter().fold(1.0f64, |a, &e| a.max(e * e));
        f64::MIN_POSITIVE * emax
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { libm::fabs(self.off[i - 1]) } else { 0.0 }
                + if i + 1 < n { libm::fabs(self.off[i]) } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut q = 1.0f64;
        for i in 0..self.len() {
            q = self.diag[i] - x - if i > 0 { self.off[i - 1] * self.off[i - 1] / q } else { 0.0 };
            if libm::fabs(q) < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.len());
        let (mut lo, mut hi) = self.gershgorin();
        let scale = libm::fabs(lo).max(libm::fabs(hi));
        lo -= 2.0 * f64::EPSILON * scale + self.pivmin();
        hi += 2.0 * f64::EPSILON * scale + self.pivmin();
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * libm::fabs(mid).max(f64::MIN_POSITIVE)
            {
                return mid;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    /// All eigenvalues strictly below `upper`, ascending.
    pub fn eigenvalues_below(&self, upper: f64) -> Vec<f64> {
        let k = self.count_below(upper);
        (0..k).map(|i| self.eigenvalue(i)).collect()
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.eigenvalue(i)).collect()
    }

    /// Unit eigenvectors for the given ascending eigenvalues by inverse
    /// iteration, orthogonalized within clusters.
    pub fn eigenvectors(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let n = self.len();
        let (lo, hi) = self.gershgorin();
        let norm = libm::fabs(lo).max(libm::fabs(hi)).max(f64::MIN_POSITIVE);
        let cluster_gap = 1e-3 * norm;
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(values.len());
        let mut cluster_start = 0;
        for (k, &lambda) in values.iter().enumerate() {
            if k > 0 && lambda - values[k - 1] > cluster_gap {
                cluster_start = k;
            }
            let lu = TridiagonalLu::factor(self, lambda, norm);
            // Deterministic start with no special symmetry.
            let mut x: Vec<f64> = (0..n)
                .map(|i| 1.0 + 0.5 * libm::sin(1.0 + (i as f64) * 0.7311 + (k as f64) * 1.37))
                .collect();
            for _ in 0..4 {
                lu.solve(&mut x);
                for prev in &out[cluster_start..k] {
                    let d: f64 = x.iter().zip(prev).map(|(a, b)| a * b).sum();
                    x.iter_mut().zip(prev).for_each(|(a, b)| *a -= d * b);
                }
                normalize(&mut x);
            }
            // Fix the overall sign so the largest component is positive.
            let imax = x
                .iter()
                .enumerate()
                .fold(0, |m, (i, v)| if libm::fabs(*v) > libm::fabs(x[m]) { i } else { m });
            if x[imax] < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            out.push(x);
        }
        out
    }
}

fn normalize(x: &mut [f64]) {
    let nrm = libm::sqrt(x.iter().map(|v| v * v).sum::<f64>());
    if nrm > 0.0 {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
}

/// LU factorization of `T − λI` with partial pivoting. `U` has two
/// superdiagonals.
struct TridiagonalLu {
    l: Vec<f64>,
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(t: &Tridiagonal, lambda: f64, norm: f64) -> Self {
        let n = t.len();
        let tiny = f64::EPSILON * norm;
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - lambda).collect();
        let mut du: Vec<f64> = t.off.clone();
        let dl: Vec<f64> = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut l = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if libm::fabs(d[i]) >= libm::fabs(dl[i]) {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let f = dl[i] / d[i];
                l[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                l[i] = f;
                d[i] = dl[i];
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        for v in d.iter_mut() {
            if libm::fabs(*v) < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            l,
            u0: d,
            u1: du,
            u2: du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
                b[i + 1] -= self.l[i] * b[i];
            } else {
                b[i + 1] -= self.l[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.u1[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * b[i + 2];
            }
            b[i] = s / self.u0[i];
        }
        // Rescale to keep the iterate finite near exact eigenvalues.
        let m = b.iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v)));
        if m > 1e100 {
            b.iter_mut().for_each(|v| *v /= m);
        }
    }
}

/// Eigenpairs of a real symmetric matrix, ascending.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// Unit eigenvectors as columns.
    pub vectors: DMatrix<f64>,
}

/// Eigenpairs of the symmetric matrix `a` with eigenvalue strictly below
/// `upper`.
pub fn symmetric_eigen_below(a: DMatrix<f64>, upper: f64) -> Eigenpairs {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 0 {
        return Eigenpairs {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        };
    }
    let (q, diag, off) = SymmetricTridiagonal::new(a).unpack();
    let tri = Tridiagonal::new(diag.as_slice().to_vec(), off.as_slice().to_vec());
    let values = tri.eigenvalues_below(upper);
    let k = values.len();
    let ys = tri.eigenvectors(&values);
    let y = DMatrix::from_fn(n, k, |i, j| ys[j][i]);
    Eigenpairs {
        values,
        vectors: q * y,
    }
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let (diag, off) = SymmetricTridiagonal::new(a).unpack_tridiagonal();
    Tridiagonal::new(diag.as_slice().to_vec(), off.as_slice().to_vec()).eigenvalues()
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(a: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), a);
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Full eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), a);
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `x ↦ T x` for a tridiagonal `T`.
pub fn tridiagonal_apply(t: &Tridiagonal, x: &DVector<f64>) -> DVector<f64> {
    let n = t.len();
    DVector::from_fn(n, |i, _| {
        let mut s = t.diag[i] * x[i];
        if i > 0 {
            s += t.off[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            s += t.off[i] * x[i + 1];
        }
        s
    })
}
