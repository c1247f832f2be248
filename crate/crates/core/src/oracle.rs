//! Independent reference computations.
//!
//! * [`FiniteModel`] represents a Gauss kernel in the analytic eigenbasis
//!   `e_n(s) = √(2/t) cos((n-½)πs/t)` of `A` on both slots and evaluates its
//!   T-transform with dense linear algebra and explicit Gaussian elimination
//!   of the pin integrals, sharing no code with `gausskernel`.
//! * [`contour_pin_integral`] realizes a Donsker pin as a line integral over a
//!   rotated ray.
//! * [`weak_delta_pairing`] tests amplitudes against test functions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::operators::BlockOperator;
use crate::timegrid::{DiscreteFunction, PhaseFunction, TimeGrid};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default number of trapezoid points for [`contour_pin_integral`].
pub const DEFAULT_CONTOUR_STEPS: usize = 4096;

fn frequency(t: f64, n: usize) -> f64 {
    (n as f64 + 0.5) * PI / t
}

/// `e_{n+1}(s)` for zero-based `n`.
pub fn basis_function(t: f64, n: usize, s: f64) -> f64 {
    (2.0 / t).sqrt() * (frequency(t, n) * s).cos()
}

/// Eigenvalue of `A` belonging to `e_{n+1}`: `(t / ((n+½)π))²`.
pub fn basis_eigenvalue(t: f64, n: usize) -> f64 {
    let w = frequency(t, n);
    1.0 / (w * w)
}

/// `⟨e_{n+1}, 𝟙_{[0,t)}⟩ = √(2t) (-1)^n / ((n+½)π)`.
pub fn indicator_coefficient(t: f64, n: usize) -> f64 {
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (2.0 * t).sqrt() / ((n as f64 + 0.5) * PI)
}

/// `⟨e_{n+1}, s - t⟩ = -√(2/t) / ω²`.
pub fn ramp_coefficient(t: f64, n: usize) -> f64 {
    -(2.0 / t).sqrt() * basis_eigenvalue(t, n)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m + 0.5)).cos();
        let mut deriv = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=order {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            if order == 1 {
                p1 = x;
                p0 = 1.0;
            }
            deriv = m * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / deriv;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule on `[0, t)` fine enough to resolve the first
/// `dim` basis functions against smooth integrands.
fn projection_rule(t: f64, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(16);
    let panels = dim.max(8);
    let h = t / panels as f64;
    let mut nodes = Vec::with_capacity(panels * xs.len());
    let mut weights = Vec::with_capacity(panels * xs.len());
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in xs.iter().zip(&ws) {
            nodes.push(mid + 0.5 * h * x);
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

/// `⟨e_n, f⟩` for `n = 1..=dim` by composite Gauss–Legendre quadrature.
pub fn project(t: f64, dim: usize, f: impl Fn(f64) -> Complex64) -> DVector<Complex64> {
    let (nodes, weights) = projection_rule(t, dim);
    let values: Vec<Complex64> = nodes.iter().zip(&weights).map(|(s, w)| f(*s) * *w).collect();
    DVector::from_fn(dim, |n, _| {
        nodes
            .iter()
            .zip(&values)
            .map(|(s, v)| v * basis_function(t, n, *s))
            .sum()
    })
}

/// Coefficients of `(f_x, f_p)`, position slot first.
pub fn project_phase(
    t: f64,
    dim: usize,
    fx: impl Fn(f64) -> Complex64,
    fp: impl Fn(f64) -> Complex64,
) -> DVector<Complex64> {
    let x = project(t, dim, fx);
    let p = project(t, dim, fp);
    DVector::from_iterator(2 * dim, x.iter().chain(p.iter()).copied())
}

/// Gram matrix of the first `dim` basis functions by quadrature.
pub fn basis_gram(t: f64, dim: usize) -> DMatrix<f64> {
    let (nodes, weights) = projection_rule(t, dim);
    let sampled = DMatrix::from_fn(nodes.len(), dim, |i, n| basis_function(t, n, nodes[i]));
    let weighted = DMatrix::from_fn(nodes.len(), dim, |i, n| sampled[(i, n)] * weights[i]);
    sampled.transpose() * weighted
}

/// Basis functions sampled at the nodes of `grid`, as an `n × dim` matrix.
/// On the midpoint grid these columns are orthonormal under the weighted
/// pairing for `dim ≤ n`.
pub fn basis_on_grid(grid: &TimeGrid, dim: usize) -> Result<DMatrix<f64>> {
    if dim == 0 || dim > grid.n() {
        return Err(Error::invalid("basis dimension must lie in 1..=n"));
    }
    let t = grid.t_end();
    Ok(DMatrix::from_fn(grid.n(), dim, |i, n| {
        basis_function(t, n, grid.nodes()[i])
    }))
}

/// The grid function with basis coefficients `coeffs` (position slot first).
pub fn embed_vector(grid: &TimeGrid, coeffs: &DVector<Complex64>) -> Result<PhaseFunction> {
    if !coeffs.len().is_multiple_of(2) {
        return Err(Error::invalid("coefficient vector must have even length"));
    }
    let dim = coeffs.len() / 2;
    let e = basis_on_grid(grid, dim)?.map(|x| Complex64::new(x, 0.0));
    let fx = &e * coeffs.rows(0, dim);
    let fp = &e * coeffs.rows(dim, dim);
    PhaseFunction::new(
        DiscreteFunction::new(grid, fx.iter().copied().collect())?,
        DiscreteFunction::new(grid, fp.iter().copied().collect())?,
    )
}

/// The grid operator acting as `mat` on the span of the sampled basis and as
/// zero on its weighted orthogonal complement.
pub fn embed_operator(grid: &TimeGrid, mat: &DMatrix<Complex64>) -> Result<BlockOperator> {
    if mat.nrows() != mat.ncols() || !mat.nrows().is_multiple_of(2) {
        return Err(Error::invalid("operator matrix must be square with even size"));
    }
    let dim = mat.nrows() / 2;
    let e = basis_on_grid(grid, dim)?;
    let n = grid.n();
    let mut lift = DMatrix::<Complex64>::zeros(2 * n, 2 * dim);
    let mut restrict = DMatrix::<Complex64>::zeros(2 * dim, 2 * n);
    for block in 0..2 {
        for i in 0..n {
            let w = grid.weights()[i];
            for j in 0..dim {
                let v = e[(i, j)];
                lift[(block * n + i, block * dim + j)] = Complex64::new(v, 0.0);
                restrict[(block * dim + j, block * n + i)] = Complex64::new(v * w, 0.0);
            }
        }
    }
    BlockOperator::from_dense(grid, &(lift * mat * restrict))
}

/// `δ(⟨η, ·⟩ - y)` with `η` given by real basis coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePin {
    pub eta: DVector<f64>,
    pub y: f64,
}

/// A Gauss kernel restricted to the span of the first `dim` basis functions
/// in each slot.
#[derive(Debug, Clone)]
pub struct FiniteModel {
    dim: usize,
    t: f64,
    kmat: DMatrix<Complex64>,
    lmat: DMatrix<Complex64>,
    gvec: DVector<Complex64>,
    phase: Complex64,
    pins: Vec<FinitePin>,
    inverse_pp_shift: Complex64,
}

fn is_complex_symmetric(m: &DMatrix<Complex64>, tol: f64) -> bool {
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).norm() <= tol * scale))
}

impl FiniteModel {
    pub fn new(
        dim: usize,
        t: f64,
        kmat: DMatrix<Complex64>,
        lmat: DMatrix<Complex64>,
        gvec: DVector<Complex64>,
        phase: Complex64,
        pins: Vec<FinitePin>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("basis dimension must be positive"));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::invalid("time t must be positive"));
        }
        let size = 2 * dim;
        if kmat.shape() != (size, size) || lmat.shape() != (size, size) || gvec.len() != size {
            return Err(Error::invalid(format!("model data must have size {size}")));
        }
        if pins.iter().any(|p| p.eta.len() != size) {
            return Err(Error::invalid(format!("pin vectors must have length {size}")));
        }
        if !is_complex_symmetric(&kmat, 1e-12) || !is_complex_symmetric(&lmat, 1e-12) {
            return Err(Error::invalid("K and L must be complex symmetric"));
        }
        Ok(FiniteModel {
            dim,
            t,
            kmat,
            lmat,
            gvec,
            phase,
            pins,
            inverse_pp_shift: ZERO,
        })
    }

    /// ε-regularized free particle: kinetic `K`, drift `(0, (p₀/t)(s-t))`,
    /// phase `-i p₀² t / 2`, pin `((0, 𝟙/t), p₁ - p₀)`, and `ε` added to the
    /// momentum block of `(Id+K)⁻¹`.
    pub fn free(t: f64, p0: f64, p1: f64, eps: f64, dim: usize) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::invalid("regularization eps must be positive"));
        }
        let mut gvec = DVector::zeros(2 * dim);
        for n in 0..dim {
            gvec[dim + n] = Complex64::new(p0 / t * ramp_coefficient(t, n), 0.0);
        }
        let mut model = Self::new(
            dim,
            t,
            kinetic_matrix(t, dim),
            DMatrix::zeros(2 * dim, 2 * dim),
            gvec,
            Complex64::new(0.0, -0.5 * p0 * p0 * t),
            vec![FinitePin {
                eta: momentum_average(t, dim),
                y: p1 - p0,
            }],
        )?;
        model.inverse_pp_shift = Complex64::new(eps, 0.0);
        Ok(model)
    }

    /// Harmonic oscillator `V(x) = k x²/2` with `p₀ = 0` and pin
    /// `((0, 𝟙/t), p₁)`.
    pub fn harmonic(k: f64, t: f64, p1: f64, dim: usize) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::invalid("oscillator strength k must be positive"));
        }
        let mut lmat = DMatrix::zeros(2 * dim, 2 * dim);
        for n in 0..dim {
            lmat[(n, n)] = I * (k * t * t);
        }
        Self::new(
            dim,
            t,
            kinetic_matrix(t, dim),
            lmat,
            DVector::zeros(2 * dim),
            ZERO,
            vec![FinitePin {
                eta: momentum_average(t, dim),
                y: p1,
            }],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn kmat(&self) -> &DMatrix<Complex64> {
        &self.kmat
    }

    pub fn lmat(&self) -> &DMatrix<Complex64> {
        &self.lmat
    }

    pub fn gvec(&self) -> &DVector<Complex64> {
        &self.gvec
    }

    pub fn phase(&self) -> Complex64 {
        self.phase
    }

    pub fn pins(&self) -> &[FinitePin] {
        &self.pins
    }

    pub fn inverse_pp_shift(&self) -> Complex64 {
        self.inverse_pp_shift
    }
}

/// Kinetic operator `[[-1, i], [i, -1 + (i/t²) Λ]]` with `Λ` the diagonal of
/// eigenvalues of `A`.
pub fn kinetic_matrix(t: f64, dim: usize) -> DMatrix<Complex64> {
    let mut k = DMatrix::zeros(2 * dim, 2 * dim);
    for n in 0..dim {
        k[(n, n)] = -ONE;
        k[(n, dim + n)] = I;
        k[(dim + n, n)] = I;
        k[(dim + n, dim + n)] = -ONE + I * (basis_eigenvalue(t, n) / (t * t));
    }
    k
}

/// Coefficients of `(0, 𝟙_{[0,t)} / t)`.
pub fn momentum_average(t: f64, dim: usize) -> DVector<f64> {
    DVector::from_fn(2 * dim, |i, _| {
        if i < dim {
            0.0
        } else {
            indicator_coefficient(t, i - dim) / t
        }
    })
}

/// Normalized T-transform of `model` at the coefficient vector `fvec`.
pub fn finite_dim_t_transform(model: &FiniteModel, fvec: &DVector<Complex64>) -> Result<Complex64> {
    let size = 2 * model.dim;
    if fvec.len() != size {
        return Err(Error::invalid(format!("f must have length {size}")));
    }
    let id = DMatrix::<Complex64>::identity(size, size);
    let id_k = &id + &model.kmat;
    let id_k_inv = id_k.lu().try_inverse().ok_or(Error::DegenerateDeterminant)?;
    let det = (&id + &model.lmat * id_k_inv).lu().determinant();
    if det == ZERO || !det.is_finite() {
        return Err(Error::DegenerateDeterminant);
    }
    let total = id + &model.kmat + &model.lmat;
    let mut ninv = total.lu().try_inverse().ok_or(Error::DegenerateDeterminant)?;
    for n in 0..model.dim {
        ninv[(model.dim + n, model.dim + n)] += model.inverse_pp_shift;
    }

    let h = fvec + &model.gvec;
    let nh = &ninv * &h;
    let mut log_value = -0.5 * h.dot(&nh) + model.phase;
    let mut prefactor = det.sqrt().inv();

    // Exponent of the pin integrand: -½ λᵀQλ - vᵀλ. Integrate the λ_j out one
    // at a time, each a one-dimensional Gaussian, updating the rest.
    let etas: Vec<DVector<Complex64>> = model
        .pins
        .iter()
        .map(|p| p.eta.map(|x| Complex64::new(x, 0.0)))
        .collect();
    let j = etas.len();
    let mut q = DMatrix::from_fn(j, j, |a, b| etas[a].dot(&(&ninv * &etas[b])));
    let mut v = DVector::from_fn(j, |a, _| etas[a].dot(&nh) + I * model.pins[a].y);
    while q.nrows() > 0 {
        let q00 = q[(0, 0)];
        if q00 == ZERO {
            return Err(Error::PinDegenerate("vanishing pin variance".into()));
        }
        if q00.re < -1e-12 * q00.norm() {
            return Err(Error::PinDegenerate("pin integral diverges".into()));
        }
        prefactor *= (2.0 * PI * q00).sqrt().inv();
        log_value += v[0] * v[0] / (2.0 * q00);
        let rest = q.nrows() - 1;
        let col = q.view((1, 0), (rest, 1)).clone_owned();
        let row = q.view((0, 1), (1, rest)).clone_owned();
        let next_q = q.view((1, 1), (rest, rest)) - &col * &row / q00;
        let next_v = v.rows(1, rest) - &col * (v[0] / q00);
        q = next_q;
        v = next_v.column(0).clone_owned();
    }
    Ok(prefactor * log_value.exp())
}

/// Richardson extrapolation of a quantity with an error expansion in `1/dim`,
/// from evaluations at `base`, `2 base` and `4 base`.
pub fn extrapolate_in_dim(base: usize, mut eval: impl FnMut(usize) -> Result<Complex64>) -> Result<Complex64> {
    let v1 = eval(base)?;
    let v2 = eval(2 * base)?;
    let v4 = eval(4 * base)?;
    let a = 2.0 * v2 - v1;
    let b = 2.0 * v4 - v2;
    Ok((4.0 * b - a) / 3.0)
}

/// `(1/2π) ∫ exp(-iλy) tfun(λ) dλ` over `λ = e^{-iα} s`, `s ∈ [-radius, radius]`,
/// trapezoid rule with `steps` points.
pub fn contour_pin_integral(
    tfun: impl Fn(Complex64) -> Complex64,
    y: f64,
    alpha: f64,
    radius: f64,
    steps: usize,
) -> Result<Complex64> {
    if !(0.0..=PI / 4.0).contains(&alpha) {
        return Err(Error::invalid("contour angle must lie in [0, pi/4]"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::invalid("contour radius must be positive"));
    }
    if steps < 3 {
        return Err(Error::invalid("contour needs at least 3 points"));
    }
    let dir = Complex64::from_polar(1.0, -alpha);
    let h = 2.0 * radius / (steps - 1) as f64;
    let integrand = |s: f64| {
        let lambda = dir * s;
        (-I * lambda * y).exp() * tfun(lambda)
    };
    let mut sum = ZERO;
    for i in 0..steps {
        let s = -radius + h * i as f64;
        let w = if i == 0 || i == steps - 1 { 0.5 } else { 1.0 };
        sum += w * integrand(s);
    }
    let total = sum * h * dir / (2.0 * PI);
    let tail = radius * (integrand(-radius).norm() + integrand(radius).norm()) / (2.0 * PI);
    let scale = total.norm();
    if !total.is_finite() || tail > 1e-3 * scale {
        return Err(Error::ContourDivergent { tail, total: scale });
    }
    Ok(total)
}

/// Radius beyond which `|exp(-½Mλ² + c|λ|)|` along `λ = e^{-iα}s` stays below
/// `tol`, with `c` bounding the linear terms of the exponent.
pub fn contour_radius(m: Complex64, alpha: f64, linear: f64, tol: f64) -> Result<f64> {
    let q = (m * Complex64::from_polar(1.0, -2.0 * alpha)).re;
    if !(q > 0.0) {
        return Err(Error::ContourDivergent {
            tail: f64::INFINITY,
            total: 0.0,
        });
    }
    let c = linear.abs();
    let log_tol = -tol.ln();
    Ok((c + (c * c + 2.0 * q * log_tol).sqrt()) / q)
}

/// `∫ amplitude(p) test(p) dp` over `[p_lo, p_hi]` by the trapezoid rule.
pub fn weak_delta_pairing(
    amplitude: impl Fn(f64) -> Complex64,
    test: impl Fn(f64) -> Complex64,
    p_lo: f64,
    p_hi: f64,
    steps: usize,
) -> Result<Complex64> {
    if steps < 2 {
        return Err(Error::invalid("pairing needs at least 2 points"));
    }
    if !(p_hi > p_lo) {
        return Err(Error::invalid("pairing interval must be non-empty"));
    }
    let h = (p_hi - p_lo) / (steps - 1) as f64;
    let mut sum = ZERO;
    for i in 0..steps {
        let p = p_lo + h * i as f64;
        let w = if i == 0 || i == steps - 1 { 0.5 } else { 1.0 };
        sum += w * amplitude(p) * test(p);
    }
    Ok(sum * h)
}
