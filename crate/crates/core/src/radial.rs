//! Uniform radial grid, channel-resolved density matrices and the one-body
//! operators acting on reduced radial functions `u(r) = r·R(r)`.
//!
//! Grid functions are coefficients in an orthonormal basis, so traces are
//! plain matrix traces; physical integrals carry the single weight `h`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, Tridiagonal};

/// Nodes `r_i = (i+1)·h`, `h = r_max/(n+1)`, with Dirichlet ends at `0` and
/// `r_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub n_points: usize,
    pub r_max: f64,
    pub h: f64,
    pub r: Vec<f64>,
}

impl RadialGrid {
    pub fn new(n_points: usize, r_max: f64) -> Result<Self> {
        if n_points == 0 {
            return Err(Error::InvalidParameter("grid needs at least one point"));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidParameter("r_max must be positive and finite"));
        }
        let h = r_max / (n_points + 1) as f64;
        Ok(Self {
            n_points,
            r_max,
            h,
            r: (0..n_points).map(|i| (i + 1) as f64 * h).collect(),
        })
    }

    /// Same node count with all lengths divided by `eta`.
    pub fn contracted(&self, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter("dilation factor must be positive"));
        }
        Self::new(self.n_points, self.r_max / eta)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }
}

/// `γ` restricted to rotation-invariant states: one real symmetric block per
/// angular channel `ℓ = 0..=l_max`, each counted with multiplicity `2ℓ+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub grid: RadialGrid,
    pub blocks: Vec<DMatrix<f64>>,
}

/// Tolerance for eigenvalues of `Γ_ℓ` outside `[0, 1]`.
pub const SPECTRUM_TOL: f64 = 1e-10;

impl DensityMatrix {
    pub fn zeros(grid: &RadialGrid, l_max: usize) -> Self {
        let n = grid.len();
        Self {
            grid: grid.clone(),
            blocks: vec![DMatrix::zeros(n, n); l_max + 1],
        }
    }

    /// Checks shapes and symmetry; the spectrum is checked separately by
    /// [`DensityMatrix::check_spectrum`].
    pub fn new(grid: &RadialGrid, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = grid.len();
        if blocks.is_empty() {
            return Err(Error::GridMismatch);
        }
        for b in &blocks {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::GridMismatch);
            }
            let scale = b.amax().max(1.0);
            if (b - b.transpose()).amax() > 1e-12 * scale {
                return Err(Error::InvalidParameter("density block is not symmetric"));
            }
        }
        Ok(Self {
            grid: grid.clone(),
            blocks,
        })
    }

    /// `Γ_ℓ = Σ_k n_k v_k v_kᵀ` for each channel.
    pub fn from_orbitals(grid: &RadialGrid, channels: &[(Vec<f64>, DMatrix<f64>)]) -> Result<Self> {
        let n = grid.len();
        let mut blocks = Vec::with_capacity(channels.len());
        for (occ, vecs) in channels {
            if vecs.nrows() != n || vecs.ncols() != occ.len() {
                return Err(Error::GridMismatch);
            }
            let mut scaled = vecs.clone();
            for (k, &nk) in occ.iter().enumerate() {
                scaled.column_mut(k).scale_mut(nk);
            }
            blocks.push(scaled * vecs.transpose());
        }
        if blocks.is_empty() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: grid.clone(),
            blocks,
        })
    }

    pub fn l_max(&self) -> usize {
        self.blocks.len() - 1
    }

    /// `tr γ = Σ_ℓ (2ℓ+1) tr Γ_ℓ`.
    pub fn trace(&self) -> f64 {
        self.blocks
            .iter()
            .enumerate()
            .map(|(l, b)| (2 * l + 1) as f64 * b.trace())
            .sum()
    }

    /// Eigenvalues of every block, ascending, clipped into `[0, 1]` when
    /// within [`SPECTRUM_TOL`].
    pub fn spectra(&self) -> Result<Vec<Vec<f64>>> {
        self.blocks
            .iter()
            .map(|b| {
                let mut ev = symmetric_eigenvalues(b.clone());
                for v in ev.iter_mut() {
                    if *v < -SPECTRUM_TOL || *v > 1.0 + SPECTRUM_TOL {
                        return Err(Error::SpectrumOutOfRange(*v));
                    }
                    *v = v.clamp(0.0, 1.0);
                }
                Ok(ev)
            })
            .collect()
    }

    pub fn check_spectrum(&self) -> Result<()> {
        self.spectra().map(|_| ())
    }

    fn same_layout(&self, other: &Self) -> bool {
        self.grid == other.grid && self.blocks.len() == other.blocks.len()
    }

    /// `(1−α)·self + α·other`.
    pub fn mix(&self, other: &Self, alpha: f64) -> Result<Self> {
        if !self.same_layout(other) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a * (1.0 - alpha) + b * alpha)
                .collect(),
        })
    }

    /// `max_ℓ ‖Γ_ℓ − Γ′_ℓ‖_F`.
    pub fn max_block_distance(&self, other: &Self) -> Result<f64> {
        if !self.same_layout(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// The same entries on the grid contracted by `eta`.
    ///
    /// Lengths shrink by `eta`, so the kinetic energy scales by `η²`, Coulomb
    /// terms by `η` and the entropy is unchanged, each exactly.
    pub fn dilate(&self, eta: f64) -> Result<Self> {
        Ok(Self {
            grid: self.grid.contracted(eta)?,
            blocks: self.blocks.clone(),
        })
    }
}

/// Radial line density `4πr²ρ(r)` at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensity {
    pub grid: RadialGrid,
    pub rho_line: Vec<f64>,
}

impl RadialDensity {
    /// `h·Σ ρ_i`.
    pub fn charge(&self) -> f64 {
        self.grid.h * self.rho_line.iter().sum::<f64>()
    }
}

/// `ρ_i = (1/h)·Σ_ℓ (2ℓ+1)(Γ_ℓ)_ii`.
pub fn density_from_gamma(gamma: &DensityMatrix) -> RadialDensity {
    let grid = &gamma.grid;
    let mut rho = vec![0.0; grid.len()];
    for (l, b) in gamma.blocks.iter().enumerate() {
        let w = (2 * l + 1) as f64 / grid.h;
        for (i, r) in rho.iter_mut().enumerate() {
            *r += w * b[(i, i)];
        }
    }
    RadialDensity {
        grid: grid.clone(),
        rho_line: rho,
    }
}

/// Potential of a spherical charge distribution by Newton's theorem:
/// charge inside `r_i` acts as a point charge, outer shells contribute
/// `1/r_j` each.
pub fn hartree_potential(grid: &RadialGrid, rho: &RadialDensity) -> Result<Vec<f64>> {
    if rho.grid != *grid {
        return Err(Error::GridMismatch);
    }
    let n = grid.len();
    let h = grid.h;
    let mut v = vec![0.0; n];
    let mut inner = 0.0;
    for i in 0..n {
        inner += rho.rho_line[i];
        v[i] = h * inner / grid.r[i];
    }
    let mut outer = 0.0;
    for i in (0..n).rev() {
        v[i] += h * outer;
        outer += rho.rho_line[i] / grid.r[i];
    }
    Ok(v)
}

/// `−d²/dr² + ℓ(ℓ+1)/r²` with the 3-point stencil.
pub fn kinetic_matrix(grid: &RadialGrid, l: usize) -> Tridiagonal {
    let h2 = grid.h * grid.h;
    let ll = (l * (l + 1)) as f64;
    let diag = grid.r.iter().map(|r| 2.0 / h2 + ll / (r * r)).collect();
    let off = vec![-1.0 / h2; grid.len() - 1];
    Tridiagonal::new(diag, off)
}

/// `−Z/r_i`.
pub fn nuclear_potential(grid: &RadialGrid, z: f64) -> Vec<f64> {
    grid.r.iter().map(|r| -z / r).collect()
}

/// Kinetic plus nuclear operator of channel `ℓ`.
pub fn bare_hamiltonian(grid: &RadialGrid, l: usize, z: f64) -> Tridiagonal {
    let mut t = kinetic_matrix(grid, l);
    for (d, r) in t.diag.iter_mut().zip(&grid.r) {
        *d -= z / r;
    }
    t
}

/// `w_L(r_i, r_j) = r_<^L / r_>^{L+1}`.
pub fn multipole_kernel(grid: &RadialGrid, big_l: u32) -> DMatrix<f64> {
    let n = grid.len();
    DMatrix::from_fn(n, n, |i, j| {
        let (lo, hi) = if grid.r[i] <= grid.r[j] {
            (grid.r[i], grid.r[j])
        } else {
            (grid.r[j], grid.r[i])
        };
        libm::pow(lo / hi, big_l as f64) / hi
    })
}

impl Tridiagonal {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.off[i];
                m[(i + 1, i)] = self.off[i];
            }
        }
        m
    }

    /// `tr(T Γ)` for symmetric `Γ`.
    pub fn trace_product(&self, gamma: &DMatrix<f64>) -> f64 {
        let n = self.len();
        let mut s = 0.0;
        for i in 0..n {
            s += self.diag[i] * gamma[(i, i)];
            if i + 1 < n {
                s += 2.0 * self.off[i] * gamma[(i, i + 1)];
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let g = RadialGrid::new(3, 4.0).unwrap();
        assert_eq!(g.r, vec![1.0, 2.0, 3.0]);
        assert_eq!(g.h, 1.0);
        let g = RadialGrid::new(1999, 100.0).unwrap();
        assert!((g.h - 0.05).abs() < 1e-15);
        assert!(RadialGrid::new(0, 1.0).is_err());
        assert!(RadialGrid::new(4, -1.0).is_err());
    }

    #[test]
    fn multipole_examples() {
        let g = RadialGrid::new(3, 4.0).unwrap();
        let w0 = multipole_kernel(&g, 0);
        let w1 = multipole_kernel(&g, 1);
        assert_eq!(w0[(0, 1)], 0.5);
        assert_eq!(w1[(0, 1)], 0.25);
        assert_eq!(w1[(1, 0)], 0.25);
    }

    #[test]
    fn hartree_single_shell() {
        let g = RadialGrid::new(10, 11.0).unwrap();
        let mut rho = vec![0.0; 10];
        let (a, q) = (4usize, 0.7);
        rho[a] = q / g.h;
        let v = hartree_potential(
            &g,
            &RadialDensity {
                grid: g.clone(),
                rho_line: rho,
            },
        )
        .unwrap();
        for i in 0..10 {
            let expected = q / g.r[i].max(g.r[a]);
            assert!((v[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn density_multiplicity() {
        let g = RadialGrid::new(8, 9.0).unwrap();
        let mut gamma = DensityMatrix::zeros(&g, 1);
        gamma.blocks[0][(2, 2)] = 1.0;
        gamma.blocks[1][(5, 5)] = 1.0;
        let rho = density_from_gamma(&gamma);
        assert!((rho.charge() - 4.0).abs() < 1e-14);
        assert!((gamma.trace() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn trace_product_matches_dense() {
        let g = RadialGrid::new(6, 7.0).unwrap();
        let t = bare_hamiltonian(&g, 1, 1.5);
        let m = DMatrix::from_fn(6, 6, |i, j| 1.0 / (1.0 + (i + j) as f64));
        assert!((t.trace_product(&m) - (t.to_dense() * &m).trace()).abs() < 1e-12);
    }

    #[test]
    fn spectrum_clipping() {
        let g = RadialGrid::new(3, 4.0).unwrap();
        let mut gamma = DensityMatrix::zeros(&g, 0);
        gamma.blocks[0][(0, 0)] = 1.0 + 5e-11;
        assert!(gamma.check_spectrum().is_ok());
        gamma.blocks[0][(0, 0)] = 1.0 + 1e-8;
        assert!(matches!(gamma.check_spectrum(), Err(Error::SpectrumOutOfRange(_))));
    }
}
