//! T-transforms of generalized Gauss kernels with drift, constant phase and
//! Donsker delta pins.
//!
//! For `Φ = Nexp(-½⟨·,K·⟩) · exp(-½⟨·,L·⟩) · exp(i⟨·,g⟩ + c) · Π_j δ(⟨·,η_j⟩ - y_j)`
//! and `N = Id + K + L` the transform at `f` is
//!
//! ```text
//! TΦ(f) = D · (2π)^{-J/2} det(M)^{-1/2}
//!           · exp(-½ (f+g, N⁻¹(f+g)))
//!           · exp(+½ uᵀ M⁻¹ u)
//!           · exp(c)
//! ```
//!
//! with `D = det(Id + L(Id+K)⁻¹)^{-1/2}`, `M_ij = (η_i, N⁻¹η_j)` and
//! `u_j = i y_j + (η_j, N⁻¹(f+g))`. The pin exponent carries a plus sign:
//! completing the square in the Donsker integral
//! `(1/2π) ∫ exp(-iλy) T(f + λη) dλ` gives `exp(+u²/2M)`, which is what the
//! free-particle expectation and the closed Donsker formula both require.
//!
//! Square roots take the principal branch.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::operators::BlockOperator;
use crate::timegrid::{PhaseFunction, TimeGrid};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// Pairwise orthogonality tolerance for pin directions, relative to their norms.
pub const PIN_ORTHOGONALITY_TOL: f64 = 1e-10;

/// `δ(⟨·, η⟩ - y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pin {
    pub eta: PhaseFunction,
    pub y: f64,
}

/// Data of a Gauss kernel: `K`, `L`, drift `g`, constant phase `c` and pins.
#[derive(Debug, Clone)]
pub struct GaussKernelSpec {
    k: BlockOperator,
    l: BlockOperator,
    drift: PhaseFunction,
    phase: Complex64,
    pins: Vec<Pin>,
}

impl GaussKernelSpec {
    pub fn new(
        k: BlockOperator,
        l: BlockOperator,
        drift: PhaseFunction,
        phase: Complex64,
        pins: Vec<Pin>,
    ) -> Result<Self> {
        let grid = k.grid().clone();
        grid.check_same(l.grid())?;
        grid.check_same(drift.grid())?;
        for pin in &pins {
            grid.check_same(pin.eta.grid())?;
            if pin.eta.is_zero() {
                return Err(Error::PinDegenerate("pin direction is zero".into()));
            }
        }
        for (i, a) in pins.iter().enumerate() {
            for b in &pins[i + 1..] {
                let overlap = a.eta.pair(&b.eta)?.norm();
                let scale = (a.eta.norm_sqr() * b.eta.norm_sqr()).sqrt();
                if overlap > PIN_ORTHOGONALITY_TOL * scale {
                    return Err(Error::PinDegenerate(format!(
                        "pin directions are not orthogonal (overlap {overlap:e})"
                    )));
                }
            }
        }
        Ok(GaussKernelSpec {
            k,
            l,
            drift,
            phase,
            pins,
        })
    }

    /// `K = L = 0`, no drift, no phase, the given pins.
    pub fn pins_only(grid: &TimeGrid, pins: Vec<Pin>) -> Result<Self> {
        Self::new(
            BlockOperator::zero(grid),
            BlockOperator::zero(grid),
            PhaseFunction::zeros(grid),
            Complex64::new(0.0, 0.0),
            pins,
        )
    }

    pub fn grid(&self) -> &TimeGrid {
        self.k.grid()
    }

    pub fn k(&self) -> &BlockOperator {
        &self.k
    }

    pub fn l(&self) -> &BlockOperator {
        &self.l
    }

    pub fn drift(&self) -> &PhaseFunction {
        &self.drift
    }

    pub fn phase(&self) -> Complex64 {
        self.phase
    }

    pub fn pins(&self) -> &[Pin] {
        &self.pins
    }

    /// `Id + K + L` on the grid.
    pub fn total_operator(&self) -> BlockOperator {
        BlockOperator::identity(self.grid())
            .try_add(&self.k)
            .and_then(|n| n.try_add(&self.l))
            .expect("grids checked at construction")
    }

    pub fn with_drift(&self, drift: PhaseFunction, phase: Complex64) -> Result<Self> {
        self.grid().check_same(drift.grid())?;
        Ok(GaussKernelSpec {
            drift,
            phase,
            ..self.clone()
        })
    }

    pub fn with_pins(&self, pins: Vec<Pin>) -> Result<Self> {
        Self::new(self.k.clone(), self.l.clone(), self.drift.clone(), self.phase, pins)
    }
}

/// A T-transform value and the factors it is the product of.
#[derive(Debug, Clone, PartialEq)]
pub struct TTransformValue {
    pub value: Complex64,
    /// `det(Id + L(Id+K)⁻¹)^{-1/2}` as supplied.
    pub det_factor: Complex64,
    /// `exp(-½ (f+g, N⁻¹(f+g)))`.
    pub quad_factor: Complex64,
    /// `(2π)^{-J/2} det(M)^{-1/2} exp(½ uᵀM⁻¹u)`.
    pub pin_factor: Complex64,
    /// `exp(c)`.
    pub phase_factor: Complex64,
    /// `M_ij = (η_i, N⁻¹η_j)`.
    pub pin_matrix: DMatrix<Complex64>,
}

impl TTransformValue {
    pub fn factor_product(&self) -> Complex64 {
        self.det_factor * self.quad_factor * self.pin_factor * self.phase_factor
    }
}

fn max_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Admissibility of a pin Gram matrix: `Re M` positive definite, or
/// `Re M = 0` with `Im M` nonsingular.
pub fn check_pin_admissible(m: &DMatrix<Complex64>) -> Result<()> {
    if m.is_empty() {
        return Ok(());
    }
    let scale = max_norm(m);
    if scale == 0.0 {
        return Err(Error::PinDegenerate("pin matrix vanishes".into()));
    }
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    let re_scale = re.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if re_scale <= 1e-12 * scale {
        let det = im.clone().lu().determinant();
        let im_scale = im.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if det.abs() > 1e-12 * im_scale.powi(m.nrows() as i32) {
            return Ok(());
        }
        return Err(Error::PinDegenerate("Re M vanishes and Im M is singular".into()));
    }
    let sym = (&re + re.transpose()) * 0.5;
    if sym.cholesky().is_some() {
        Ok(())
    } else {
        Err(Error::PinDegenerate("Re M is not positive definite".into()))
    }
}

/// `(η_i, N⁻¹η_j)`, checked for admissibility.
pub fn pin_matrix(spec: &GaussKernelSpec, ninv: &BlockOperator) -> Result<DMatrix<Complex64>> {
    let m = raw_pin_matrix(spec, ninv)?;
    check_pin_admissible(&m)?;
    Ok(m)
}

fn raw_pin_matrix(spec: &GaussKernelSpec, ninv: &BlockOperator) -> Result<DMatrix<Complex64>> {
    spec.grid().check_same(ninv.grid())?;
    let images = spec
        .pins
        .iter()
        .map(|p| ninv.apply(&p.eta))
        .collect::<Result<Vec<_>>>()?;
    let j = spec.pins.len();
    let mut m = DMatrix::zeros(j, j);
    for (r, pin) in spec.pins.iter().enumerate() {
        for (c, image) in images.iter().enumerate() {
            m[(r, c)] = pin.eta.pair(image)?;
        }
    }
    Ok(m)
}

/// Everything in the transform at a fixed `f` except the pin values `y_j`,
/// which enter only through `u = i y + b`.
#[derive(Debug, Clone)]
pub struct PreparedTransform {
    det_factor: Complex64,
    quad_factor: Complex64,
    phase_factor: Complex64,
    pin_matrix: DMatrix<Complex64>,
    pin_solver: Option<nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>>,
    /// `(2π)^{-J/2} det(M)^{-1/2}`
    pin_prefactor: Complex64,
    /// `b_j = (η_j, N⁻¹(f+g))`
    pin_overlaps: DVector<Complex64>,
    default_ys: Vec<f64>,
}

impl PreparedTransform {
    /// Uses `(η_i, N⁻¹η_j)` computed from `ninv`.
    pub fn new(spec: &GaussKernelSpec, ninv: &BlockOperator, det_factor: Complex64, f: &PhaseFunction) -> Result<Self> {
        let m = raw_pin_matrix(spec, ninv)?;
        Self::with_pin_matrix(spec, ninv, det_factor, m, f)
    }

    /// Uses a pin Gram matrix known by other means (e.g. in closed form).
    pub fn with_pin_matrix(
        spec: &GaussKernelSpec,
        ninv: &BlockOperator,
        det_factor: Complex64,
        pin_matrix: DMatrix<Complex64>,
        f: &PhaseFunction,
    ) -> Result<Self> {
        let grid = spec.grid();
        grid.check_same(ninv.grid())?;
        grid.check_same(f.grid())?;
        let j = spec.pins.len();
        if pin_matrix.shape() != (j, j) {
            return Err(Error::invalid("pin matrix must be J x J"));
        }
        if det_factor == Complex64::new(0.0, 0.0) || !det_factor.is_finite() {
            return Err(Error::DegenerateDeterminant);
        }
        check_pin_admissible(&pin_matrix)?;

        let shifted = f.try_add(&spec.drift)?;
        let image = ninv.apply(&shifted)?;
        let quad_factor = (-0.5 * shifted.pair(&image)?).exp();

        let pin_overlaps = DVector::from_iterator(
            j,
            spec.pins
                .iter()
                .map(|p| p.eta.pair(&image))
                .collect::<Result<Vec<_>>>()?,
        );
        let (pin_solver, pin_prefactor) = if j == 0 {
            (None, Complex64::new(1.0, 0.0))
        } else {
            let lu = pin_matrix.clone().lu();
            let det = lu.determinant();
            if det == Complex64::new(0.0, 0.0) {
                return Err(Error::PinDegenerate("pin matrix is singular".into()));
            }
            let prefactor = (Complex64::new(TWO_PI.powi(j as i32), 0.0) * det).sqrt().inv();
            (Some(lu), prefactor)
        };

        Ok(PreparedTransform {
            det_factor,
            quad_factor,
            phase_factor: spec.phase.exp(),
            pin_matrix,
            pin_solver,
            pin_prefactor,
            pin_overlaps,
            default_ys: spec.pins.iter().map(|p| p.y).collect(),
        })
    }

    /// The transform with the spec's own pin values.
    pub fn value(&self) -> TTransformValue {
        self.at(&self.default_ys).expect("pin count matches")
    }

    /// The transform with pin values `ys` in place of the spec's.
    pub fn at(&self, ys: &[f64]) -> Result<TTransformValue> {
        if ys.len() != self.pin_overlaps.len() {
            return Err(Error::invalid("one pin value per pin is required"));
        }
        let pin_factor = match &self.pin_solver {
            None => Complex64::new(1.0, 0.0),
            Some(lu) => {
                let u = DVector::from_iterator(
                    ys.len(),
                    ys.iter().zip(self.pin_overlaps.iter()).map(|(y, b)| I * *y + b),
                );
                let solved = lu
                    .solve(&u)
                    .ok_or_else(|| Error::PinDegenerate("pin matrix is singular".into()))?;
                self.pin_prefactor * (0.5 * u.dot(&solved)).exp()
            }
        };
        let value = self.det_factor * self.quad_factor * pin_factor * self.phase_factor;
        Ok(TTransformValue {
            value,
            det_factor: self.det_factor,
            quad_factor: self.quad_factor,
            pin_factor,
            phase_factor: self.phase_factor,
            pin_matrix: self.pin_matrix.clone(),
        })
    }
}

/// `TΦ(f)` for the kernel described by `spec`, with `ninv = (Id+K+L)⁻¹` and
/// `det_factor = det(Id + L(Id+K)⁻¹)^{-1/2}`.
pub fn t_transform(
    spec: &GaussKernelSpec,
    ninv: &BlockOperator,
    det_factor: Complex64,
    f: &PhaseFunction,
) -> Result<TTransformValue> {
    Ok(PreparedTransform::new(spec, ninv, det_factor, f)?.value())
}

/// `det(Id + L(Id+K)⁻¹)^{-1/2}` from the inverse determinant
/// `det(Id + L(Id+K)⁻¹)^{-1}` (the quantity the determinant routines return).
pub fn det_factor_from_inverse_det(inverse_det: Complex64) -> Complex64 {
    inverse_det.sqrt()
}

/// Closed form of the transform of Donsker's delta `δ(⟨η,·⟩ - x)`:
/// `(2π⟨η,η⟩)^{-1/2} exp(-(i⟨η,f⟩ - x)²/(2⟨η,η⟩) - ½⟨f,f⟩)`.
pub fn donsker_t_transform(eta: &PhaseFunction, x: f64, f: &PhaseFunction) -> Result<Complex64> {
    let norm = eta.pair(eta)?;
    if norm == Complex64::new(0.0, 0.0) {
        return Err(Error::PinDegenerate("<eta, eta> vanishes".into()));
    }
    let overlap = eta.pair(f)?;
    let shifted = I * overlap - x;
    let exponent = -shifted * shifted / (2.0 * norm) - 0.5 * f.pair(f)?;
    Ok((TWO_PI * norm).sqrt().inv() * exponent.exp())
}

/// `log T` along a ray fitted by a quadratic in `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayFit {
    pub c0: Complex64,
    pub c1: Complex64,
    pub c2: Complex64,
    pub max_residual: f64,
}

impl RayFit {
    pub fn eval(&self, lambda: f64) -> Complex64 {
        self.c0 + self.c1 * lambda + self.c2 * lambda * lambda
    }
}

fn sample_points(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    (0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
        .collect()
}

/// Continuous logarithm of `values`, following the branch from the first
/// sample. A phase step beyond π/2 between neighbours is reported as a
/// branch crossing.
pub fn continuous_log(values: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev_arg = 0.0;
    for (i, v) in values.iter().enumerate() {
        if *v == Complex64::new(0.0, 0.0) || !v.is_finite() {
            return Err(Error::BranchCrossing { index: i });
        }
        let mut arg = v.arg();
        if i > 0 {
            let mut step = arg - prev_arg;
            step -= TWO_PI * (step / TWO_PI).round();
            if step.abs() > core::f64::consts::FRAC_PI_2 {
                return Err(Error::BranchCrossing { index: i });
            }
            arg = prev_arg + step;
        }
        prev_arg = arg;
        out.push(Complex64::new(v.norm().ln(), arg));
    }
    Ok(out)
}

fn fit_quadratic(lambdas: &[f64], logs: &[Complex64]) -> RayFit {
    let design = DMatrix::from_fn(lambdas.len(), 3, |r, c| lambdas[r].powi(c as i32));
    let re = DVector::from_iterator(logs.len(), logs.iter().map(|z| z.re));
    let im = DVector::from_iterator(logs.len(), logs.iter().map(|z| z.im));
    let svd = design.clone().svd(true, true);
    let cr = svd.solve(&re, 1e-14).expect("svd computed with vectors");
    let ci = svd.solve(&im, 1e-14).expect("svd computed with vectors");
    let c = |k: usize| Complex64::new(cr[k], ci[k]);
    let mut fit = RayFit {
        c0: c(0),
        c1: c(1),
        c2: c(2),
        max_residual: 0.0,
    };
    fit.max_residual = lambdas
        .iter()
        .zip(logs)
        .map(|(l, z)| (fit.eval(*l) - z).norm())
        .fold(0.0, f64::max);
    fit
}

/// Fits `log TΦ(f + λ g2)` for `samples` real `λ` evenly spread over
/// `[-1, 1]` by `c0 + c1 λ + c2 λ²`. For a Gauss kernel the exponent is
/// exactly quadratic in the argument, so the residual is rounding only.
pub fn ray_restriction(
    spec: &GaussKernelSpec,
    ninv: &BlockOperator,
    det_factor: Complex64,
    f: &PhaseFunction,
    g2: &PhaseFunction,
    samples: usize,
) -> Result<RayFit> {
    ray_fit_on(spec, ninv, det_factor, f, g2, -1.0, 1.0, samples)
}

#[allow(clippy::too_many_arguments)]
fn ray_fit_on(
    spec: &GaussKernelSpec,
    ninv: &BlockOperator,
    det_factor: Complex64,
    f: &PhaseFunction,
    g2: &PhaseFunction,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<RayFit> {
    if samples < 4 {
        return Err(Error::invalid("a quadratic ray fit needs at least 4 samples"));
    }
    let lambdas = sample_points(lo, hi, samples);
    let values = lambdas
        .iter()
        .map(|&l| {
            let point = f.try_add(&g2.scale(Complex64::new(l, 0.0)))?;
            Ok(t_transform(spec, ninv, det_factor, &point)?.value)
        })
        .collect::<Result<Vec<_>>>()?;
    let logs = continuous_log(&values)?;
    Ok(fit_quadratic(&lambdas, &logs))
}

/// Growth constants of `λ ↦ TΦ(λ g2)`: `|TΦ(λ g2)| ≤ c · exp(b|λ| + d λ² |g2|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub d: f64,
    pub c: f64,
    pub b: f64,
    /// Whether the bound held (to relative 1e-9) at every sample.
    pub holds: bool,
    pub fit: RayFit,
}

/// Fits the growth of `|TΦ(λ g2)|` over `λ ∈ [-radius, radius]`.
pub fn growth_probe(
    spec: &GaussKernelSpec,
    ninv: &BlockOperator,
    det_factor: Complex64,
    g2: &PhaseFunction,
    samples: usize,
    radius: f64,
) -> Result<GrowthFit> {
    if !(radius > 0.0) {
        return Err(Error::invalid("growth probe radius must be positive"));
    }
    let norm = g2.norm_sqr();
    if norm == 0.0 {
        return Err(Error::invalid("growth probe direction must be nonzero"));
    }
    let zero = PhaseFunction::zeros(spec.grid());
    let fit = ray_fit_on(spec, ninv, det_factor, &zero, g2, -radius, radius, samples)?;
    let d = fit.c2.norm() / norm;
    let c = fit.c0.exp().norm();
    let b = fit.c1.norm();
    let holds = sample_points(-radius, radius, samples).iter().all(|&l| {
        let point = g2.scale(Complex64::new(l, 0.0));
        match t_transform(spec, ninv, det_factor, &point) {
            Ok(v) => v.value.norm() <= c * (b * l.abs() + d * l * l * norm).exp() * (1.0 + 1e-9),
            Err(_) => false,
        }
    });
    Ok(GrowthFit { d, c, b, holds, fit })
}
