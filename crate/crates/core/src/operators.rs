//! The integrated-Brownian-motion operator `A`, the block operators built
//! from it, their inverses and Fredholm determinants.
//!
//! `A f(s) = 𝟙_[0,t)(s) ∫_s^t ∫_0^τ f(r) dr dτ` has the symmetric kernel
//! `t - max(s, r)`. On the grid it is discretized by cell averages
//! (piecewise-constant Galerkin): off-diagonal entries are the kernel at the
//! cell midpoints, the diagonal carries the exact cell average
//! `t - s_i - h/6`. The discrete eigenvectors are then exactly the sampled
//! cosines `cos((m - ½)π s / t)` and the eigenvalues converge at second order.
//!
//! Operators are only represented on `[0, t)`. All drifts, pins and test
//! functions used with them are supported there, so the identity acting on
//! the complement never contributes and is left out.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::timegrid::{DiscreteFunction, PhaseFunction, TimeGrid};
use crate::{Error, Result, SINGULAR_TIME_TOL};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Fails with [`Error::SingularTime`] when `cos(√k t)` is within
/// [`SINGULAR_TIME_TOL`] of zero.
pub fn check_regular_time(k: f64, t: f64) -> Result<()> {
    if k > 0.0 && (k.sqrt() * t).cos().abs() <= SINGULAR_TIME_TOL {
        Err(Error::SingularTime { k, t })
    } else {
        Ok(())
    }
}

/// Matrix of `A` acting on grid values: `(A f)_i = Σ_j M_ij f_j`.
///
/// `diag(w) M` is symmetric and positive definite.
pub fn matrix_a(grid: &TimeGrid) -> DMatrix<f64> {
    let t = grid.t_end();
    let s = grid.nodes();
    let w = grid.weights();
    DMatrix::from_fn(grid.n(), grid.n(), |i, j| {
        if i == j {
            w[i] * (t - s[i] - w[i] / 6.0)
        } else {
            w[j] * (t - s[i].max(s[j]))
        }
    })
}

/// `A f` in O(n) with running sums; agrees with [`matrix_a`] to rounding.
pub fn apply_a(f: &DiscreteFunction) -> DiscreteFunction {
    let out = running_apply(f.grid(), f.values());
    DiscreteFunction::new(f.grid(), out).expect("length preserved")
}

fn running_apply<T>(grid: &TimeGrid, v: &[T]) -> Vec<T>
where
    T: Copy + Default + core::ops::Add<Output = T> + core::ops::Mul<f64, Output = T>,
{
    let t = grid.t_end();
    let s = grid.nodes();
    let w = grid.weights();
    let n = grid.n();

    // tail[i] = Σ_{j>i} w_j (t - s_j) f_j
    let mut tail = alloc::vec![T::default(); n];
    for i in (0..n.saturating_sub(1)).rev() {
        tail[i] = tail[i + 1] + v[i + 1] * (w[i + 1] * (t - s[i + 1]));
    }
    let mut head = T::default();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let diag = w[i] * (t - s[i] - w[i] / 6.0);
        out.push(head * (t - s[i]) + tail[i] + v[i] * diag);
        head = head + v[i] * w[i];
    }
    out
}

/// Leading eigenpairs of the discretized `A`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Decreasing, positive.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal under `Σ w e_m e_l`; sign fixed by a positive first sample.
    pub eigenfunctions: Vec<DiscreteFunction>,
}

/// Symmetric eigendecomposition of `W^{1/2} M W^{-1/2}` for the grid matrix
/// of `A`, sorted by decreasing eigenvalue.
struct ASpectrum {
    values: Vec<f64>,
    /// Columns are orthonormal eigenvectors of the symmetrized matrix.
    vectors: DMatrix<f64>,
    sqrt_w: Vec<f64>,
}

impl ASpectrum {
    fn new(grid: &TimeGrid) -> Self {
        let m = matrix_a(grid);
        let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
        let sym = DMatrix::from_fn(grid.n(), grid.n(), |i, j| sqrt_w[i] * m[(i, j)] / sqrt_w[j]);
        // Average out rounding asymmetry before the symmetric solver.
        let sym = (&sym + sym.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..grid.n()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(grid.n(), grid.n(), |r, c| eig.eigenvectors[(r, order[c])]);
        ASpectrum {
            values,
            vectors,
            sqrt_w,
        }
    }

    /// Matrix of `φ(A)` acting on grid values.
    fn function_of(&self, phi: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let scaled = DMatrix::from_fn(n, n, |r, c| self.vectors[(r, c)] * phi(self.values[c]));
        let mut out = scaled * self.vectors.transpose();
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] *= self.sqrt_w[c] / self.sqrt_w[r];
            }
        }
        out
    }
}

/// Grids up to this size are diagonalized densely in [`spectrum_a`].
const DENSE_SPECTRUM_MAX_N: usize = 256;

/// The `count` largest eigenvalues of the discretized `A` and their
/// eigenfunctions. Small grids are diagonalized densely; larger ones by block
/// subspace iteration with Rayleigh–Ritz, using the O(n) product.
pub fn spectrum_a(grid: &TimeGrid, count: usize) -> Result<SpectralData> {
    if count > grid.n() {
        return Err(Error::invalid(format!(
            "requested {count} eigenpairs from a grid with {} cells",
            grid.n()
        )));
    }
    let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let (values, vectors) = if grid.n() <= DENSE_SPECTRUM_MAX_N {
        let spec = ASpectrum::new(grid);
        let cols = spec.vectors.columns(0, count).clone_owned();
        (spec.values[..count].to_vec(), cols)
    } else {
        subspace_iteration(grid, &sqrt_w, count)
    };
    let eigenfunctions = (0..count)
        .map(|m| {
            let mut vals: Vec<Complex64> = (0..grid.n())
                .map(|i| Complex64::new(vectors[(i, m)] / sqrt_w[i], 0.0))
                .collect();
            if vals[0].re < 0.0 {
                vals.iter_mut().for_each(|v| *v = -*v);
            }
            DiscreteFunction::new(grid, vals).expect("grid sized")
        })
        .collect();
    Ok(SpectralData {
        eigenvalues: values,
        eigenfunctions,
    })
}

/// Leading eigenpairs of `W^{1/2} M W^{-1/2}`; columns of the returned
/// matrix are orthonormal eigenvectors.
fn subspace_iteration(grid: &TimeGrid, sqrt_w: &[f64], count: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = grid.n();
    let block = (2 * count + 8).min(n);
    let apply = |v: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(n, v.ncols());
        for c in 0..v.ncols() {
            let x: Vec<f64> = (0..n).map(|i| v[(i, c)] / sqrt_w[i]).collect();
            let y = running_apply(grid, &x);
            for i in 0..n {
                out[(i, c)] = y[i] * sqrt_w[i];
            }
        }
        out
    };
    // Deterministic start with no special relation to the eigenvectors.
    let start = DMatrix::from_fn(n, block, |i, j| {
        let x = ((i as f64 + 1.0) * 12.9898 + (j as f64 + 1.0) * 78.233).sin() * 43758.5453;
        x - x.floor() - 0.5
    });
    let mut basis = start.qr().q();
    let mut values = Vec::new();
    let mut ritz = basis.clone();
    for _ in 0..2000 {
        let image = apply(&basis);
        let h = basis.transpose() * &image;
        let eig = SymmetricEigen::new((&h + h.transpose()) * 0.5);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let rot = DMatrix::from_fn(block, block, |r, c| eig.eigenvectors[(r, order[c])]);
        values = order.iter().map(|&i| eig.eigenvalues[i]).collect::<Vec<_>>();
        ritz = &basis * &rot;
        let ritz_image = image * &rot;
        let worst = (0..count)
            .map(|j| (ritz_image.column(j) - ritz.column(j) * values[j]).norm())
            .fold(0.0, f64::max);
        if worst <= 1e-13 * values[0] {
            break;
        }
        basis = ritz_image.qr().q();
    }
    values.truncate(count);
    (values, ritz.columns(0, count).clone_owned())
}

/// A 2×2 block of `n×n` complex matrices acting on `(f_x, f_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    grid: TimeGrid,
    pub xx: DMatrix<Complex64>,
    pub xp: DMatrix<Complex64>,
    pub px: DMatrix<Complex64>,
    pub pp: DMatrix<Complex64>,
}

impl BlockOperator {
    pub fn new(
        grid: &TimeGrid,
        xx: DMatrix<Complex64>,
        xp: DMatrix<Complex64>,
        px: DMatrix<Complex64>,
        pp: DMatrix<Complex64>,
    ) -> Result<Self> {
        let n = grid.n();
        if [&xx, &xp, &px, &pp].iter().any(|b| b.shape() != (n, n)) {
            return Err(Error::invalid("block dimensions must match the grid"));
        }
        Ok(BlockOperator {
            grid: grid.clone(),
            xx,
            xp,
            px,
            pp,
        })
    }

    pub fn zero(grid: &TimeGrid) -> Self {
        let z = DMatrix::zeros(grid.n(), grid.n());
        BlockOperator {
            grid: grid.clone(),
            xx: z.clone(),
            xp: z.clone(),
            px: z.clone(),
            pp: z,
        }
    }

    pub fn identity(grid: &TimeGrid) -> Self {
        let mut op = Self::zero(grid);
        op.xx.fill_with_identity();
        op.pp.fill_with_identity();
        op
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(BlockOperator {
            grid: self.grid.clone(),
            xx: &self.xx + &other.xx,
            xp: &self.xp + &other.xp,
            px: &self.px + &other.px,
            pp: &self.pp + &other.pp,
        })
    }

    /// Operator product `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(BlockOperator {
            grid: self.grid.clone(),
            xx: &self.xx * &other.xx + &self.xp * &other.px,
            xp: &self.xx * &other.xp + &self.xp * &other.pp,
            px: &self.px * &other.xx + &self.pp * &other.px,
            pp: &self.px * &other.xp + &self.pp * &other.pp,
        })
    }

    /// Adds `eps · Id` to the momentum-momentum block.
    pub fn with_pp_shift(&self, eps: Complex64) -> Self {
        let mut out = self.clone();
        for i in 0..self.grid.n() {
            out.pp[(i, i)] += eps;
        }
        out
    }

    pub fn apply(&self, f: &PhaseFunction) -> Result<PhaseFunction> {
        self.grid.check_same(f.grid())?;
        let fx = DVector::from_column_slice(f.fx.values());
        let fp = DVector::from_column_slice(f.fp.values());
        let gx = &self.xx * &fx + &self.xp * &fp;
        let gp = &self.px * &fx + &self.pp * &fp;
        PhaseFunction::new(
            DiscreteFunction::new(&self.grid, gx.as_slice().to_vec())?,
            DiscreteFunction::new(&self.grid, gp.as_slice().to_vec())?,
        )
    }

    /// Bilinear form `(a, Op b)`.
    pub fn form(&self, a: &PhaseFunction, b: &PhaseFunction) -> Result<Complex64> {
        a.pair(&self.apply(b)?)
    }

    /// The `2n × 2n` matrix `[[xx, xp], [px, pp]]`.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.grid.n();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.xx);
        m.view_mut((0, n), (n, n)).copy_from(&self.xp);
        m.view_mut((n, 0), (n, n)).copy_from(&self.px);
        m.view_mut((n, n), (n, n)).copy_from(&self.pp);
        m
    }

    pub fn from_dense(grid: &TimeGrid, m: &DMatrix<Complex64>) -> Result<Self> {
        let n = grid.n();
        if m.shape() != (2 * n, 2 * n) {
            return Err(Error::invalid("dense operator must be 2n x 2n"));
        }
        Ok(BlockOperator {
            grid: grid.clone(),
            xx: m.view((0, 0), (n, n)).into_owned(),
            xp: m.view((0, n), (n, n)).into_owned(),
            px: m.view((n, 0), (n, n)).into_owned(),
            pp: m.view((n, n), (n, n)).into_owned(),
        })
    }

    /// Whether the bilinear form `(a, Op b)` is symmetric, i.e. `W·Op` is a
    /// symmetric matrix, to relative tolerance `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.grid.n();
        let w = self.grid.weights();
        let dense = self.to_dense();
        let weighted = DMatrix::from_fn(2 * n, 2 * n, |r, c| dense[(r, c)] * w[r % n]);
        let scale = weighted
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        (&weighted - weighted.transpose())
            .iter()
            .all(|z| z.norm() <= tol * scale)
    }
}

fn complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

fn scaled_identity(n: usize, z: Complex64) -> DMatrix<Complex64> {
    DMatrix::from_diagonal_element(n, n, z)
}

/// Kinetic block operator of the free momentum integrand:
/// `[[-1, i], [i, -1 + (i/t²) A]]` on `[0, t)`.
pub fn assemble_k_free(grid: &TimeGrid) -> BlockOperator {
    let n = grid.n();
    let t = grid.t_end();
    let a = complex(&matrix_a(grid));
    BlockOperator {
        grid: grid.clone(),
        xx: scaled_identity(n, -ONE),
        xp: scaled_identity(n, I),
        px: scaled_identity(n, I),
        pp: a * (I / (t * t)) - scaled_identity(n, ONE),
    }
}

/// Potential block of the harmonic oscillator `V(x) = k x²/2`: only the
/// position block `i k t² · 1` is nonzero.
pub fn assemble_l_ho(grid: &TimeGrid, k: f64) -> Result<BlockOperator> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::invalid("oscillator strength k must be non-negative"));
    }
    let t = grid.t_end();
    let mut op = BlockOperator::zero(grid);
    op.xx = scaled_identity(grid.n(), I * (k * t * t));
    Ok(op)
}

/// `(Id + K_free)^{-1} = i [[A/t², -1], [-1, 0]]` on `[0, t)`.
pub fn closed_inverse_free(grid: &TimeGrid) -> BlockOperator {
    let n = grid.n();
    let t = grid.t_end();
    let a = complex(&matrix_a(grid));
    BlockOperator {
        grid: grid.clone(),
        xx: a * (I / (t * t)),
        xp: scaled_identity(n, -I),
        px: scaled_identity(n, -I),
        pp: DMatrix::zeros(n, n),
    }
}

/// `(Id + K_free + L_ho)^{-1}`, with `(kA - 1)^{-1}` evaluated in the
/// eigenbasis of the discretized `A`:
/// `-i [[A (kA-1)^{-1} / t², -(kA-1)^{-1}], [-(kA-1)^{-1}, k t² (kA-1)^{-1}]]`.
pub fn closed_inverse_ho(grid: &TimeGrid, k: f64) -> Result<BlockOperator> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::invalid("oscillator strength k must be positive"));
    }
    let t = grid.t_end();
    check_regular_time(k, t)?;
    let spec = ASpectrum::new(grid);
    let resolvent = complex(&spec.function_of(|l| 1.0 / (k * l - 1.0)));
    let a_resolvent = complex(&spec.function_of(|l| l / (k * l - 1.0)));
    Ok(BlockOperator {
        grid: grid.clone(),
        xx: a_resolvent * (-I / (t * t)),
        xp: &resolvent * I,
        px: &resolvent * I,
        pp: resolvent * (-I * k * t * t),
    })
}

/// Inverse by dense LU of the `2n × 2n` matrix.
pub fn numeric_inverse(op: &BlockOperator) -> Result<BlockOperator> {
    let inv = op.to_dense().try_inverse().ok_or(Error::DegenerateDeterminant)?;
    BlockOperator::from_dense(op.grid(), &inv)
}

/// `det(Id + L (Id + K)^{-1})` from the dense discretized matrices, as
/// `det(Id + K + L) / det(Id + K)`.
pub fn dense_fredholm_det(k_op: &BlockOperator, l_op: &BlockOperator) -> Result<Complex64> {
    k_op.grid().check_same(l_op.grid())?;
    let dim = 2 * k_op.grid().n();
    let id_k = DMatrix::<Complex64>::identity(dim, dim) + k_op.to_dense();
    let base = id_k.clone().lu().determinant();
    if base == Complex64::new(0.0, 0.0) || !base.is_finite() {
        return Err(Error::DegenerateDeterminant);
    }
    Ok((id_k + l_op.to_dense()).lu().determinant() / base)
}

/// A truncated series with tail correction next to its closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesCheck {
    pub series: Complex64,
    pub closed_form: Complex64,
}

impl SeriesCheck {
    pub fn relative_discrepancy(&self) -> f64 {
        let scale = self.closed_form.norm();
        if scale == 0.0 {
            self.series.norm()
        } else {
            (self.series - self.closed_form).norm() / scale
        }
    }
}

/// `Σ_{n>N} (n - ½)^{-2}` and `Σ_{n>N} (n - ½)^{-4}` to `O(N^-5)`, from the
/// midpoint-rule expansion of `∫_N^∞ x^{-2} dx`.
fn half_odd_tails(terms: usize) -> (f64, f64) {
    let n = terms as f64;
    (1.0 / n - 1.0 / (12.0 * n * n * n), 1.0 / (3.0 * n * n * n))
}

/// `det(Id + L (Id + K)^{-1})^{-1} = Π (1 - k t²/((n-½)²π²))^{-1}` truncated
/// after `terms` factors plus the analytic tail, next to `1/cos(√k t)`.
pub fn fredholm_det(k: f64, t: f64, terms: usize) -> Result<SeriesCheck> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::invalid("oscillator strength k must be non-negative"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid("time t must be positive"));
    }
    if terms == 0 {
        return Err(Error::invalid("need at least one product term"));
    }
    check_regular_time(k, t)?;
    let pi2 = core::f64::consts::PI * core::f64::consts::PI;
    let a = k * t * t / pi2;
    let mut log_abs = 0.0;
    let mut negative = false;
    for n in (1..=terms).rev() {
        let m = n as f64 - 0.5;
        let factor = 1.0 - a / (m * m);
        log_abs += factor.abs().ln();
        negative ^= factor < 0.0;
    }
    let (s2, s4) = half_odd_tails(terms);
    // log(1 - x) = -x - x²/2 - …
    log_abs += -a * s2 - 0.5 * a * a * s4;
    let det = if negative { -log_abs.exp() } else { log_abs.exp() };
    Ok(SeriesCheck {
        series: Complex64::new(1.0 / det, 0.0),
        closed_form: Complex64::new(1.0 / (k.sqrt() * t).cos(), 0.0),
    })
}

/// Pin Gram entry `(η, N^{-1} η)` of the oscillator for `η = (0, 𝟙/t)`,
/// summed over the analytic spectrum of `A`:
/// `i k Σ ⟨e_n, 𝟙⟩² / (1 - l_n)` with `⟨e_n, 𝟙⟩² = 2t/((n-½)π)²`, next to
/// `i √k tan(√k t)`.
pub fn pin_gram_series(k: f64, t: f64, terms: usize) -> Result<SeriesCheck> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::invalid("oscillator strength k must be non-negative"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid("time t must be positive"));
    }
    if terms == 0 {
        return Err(Error::invalid("need at least one series term"));
    }
    check_regular_time(k, t)?;
    let pi = core::f64::consts::PI;
    let a = k * t * t / (pi * pi);
    let mut sum = 0.0;
    for n in (1..=terms).rev() {
        let m = n as f64 - 0.5;
        sum += 1.0 / (m * m - a);
    }
    let (s2, s4) = half_odd_tails(terms);
    sum += s2 + a * s4;
    let gram = k * 2.0 * t / (pi * pi) * sum;
    let root = k.sqrt();
    Ok(SeriesCheck {
        series: Complex64::new(0.0, gram),
        closed_form: Complex64::new(0.0, root * (root * t).tan()),
    })
}
