//! Momentum-space propagators of the free particle (ε-regularized) and the
//! harmonic oscillator, built on the Gauss-kernel T-transform.
//!
//! Free particle: `K_free`, `L = 0`, drift `g = (0, (p₀/t)(s-t))`, phase
//! `c = -i p₀² t/2`, pin `δ(⟨(0, 𝟙/t), ·⟩ - (p′ - p₀))`, and `ε` added to the
//! momentum block of `(Id + K_free)⁻¹`.
//!
//! Harmonic oscillator `V(x) = k x²/2`, `p₀ = 0`: `K_free`, `L_ho`, no drift,
//! pin `δ(⟨(0, 𝟙/t), ·⟩ - p′)`. Its expectation is
//! `(2πi√k sin(√k t))^{-1/2} exp(i p′² / (2√k tan(√k t)))`.

use alloc::vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::gausskernel::{GaussKernelSpec, Pin, PreparedTransform, TTransformValue};
use crate::operators::{
    assemble_k_free, assemble_l_ho, check_regular_time, closed_inverse_free, closed_inverse_ho, BlockOperator,
};
use crate::oracle::weak_delta_pairing;
use crate::timegrid::{build_grid, indicator, DiscreteFunction, PhaseFunction, TestFunctionSpec, TimeGrid};
use crate::{Error, Result, SINGULAR_TIME_TOL};

const PI: f64 = core::f64::consts::PI;
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Grid size used when an operation is not handed a grid.
pub const DEFAULT_GRID_N: usize = 256;

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid("time t must be positive"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParams {
    pub p0: f64,
    /// Final momentum `p′`.
    pub p1: f64,
    pub t: f64,
    pub eps: f64,
}

impl FreeParams {
    pub fn validate(&self) -> Result<()> {
        check_time(self.t)?;
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::invalid("regularization eps must be positive"));
        }
        if !self.p0.is_finite() || !self.p1.is_finite() {
            return Err(Error::invalid("momenta must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HOParams {
    pub k: f64,
    pub t: f64,
    /// Final momentum `p′`.
    pub p1: f64,
}

impl HOParams {
    pub fn validate(&self) -> Result<()> {
        check_time(self.t)?;
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::invalid("oscillator strength k must be positive"));
        }
        if !self.p1.is_finite() {
            return Err(Error::invalid("momentum must be finite"));
        }
        check_regular_time(self.k, self.t)
    }

    /// `0 < t < π/(2√k)`, before the first caustic.
    pub fn first_branch(&self) -> bool {
        self.k.sqrt() * self.t < 0.5 * PI
    }
}

/// `(0, 𝟙_{[0,t)} / t)`.
fn momentum_average(grid: &TimeGrid) -> Result<PhaseFunction> {
    let t = grid.t_end();
    Ok(PhaseFunction::momentum(
        indicator(grid, 0.0, t)?.scale(Complex64::new(1.0 / t, 0.0)),
    ))
}

fn check_grid_time(grid: &TimeGrid, t: f64) -> Result<()> {
    if (grid.t_end() - t).abs() > 1e-12 * t {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// The ε-regularized free particle at fixed `t`, `p₀`, `ε` on one grid,
/// reusable across final momenta and test functions.
#[derive(Debug, Clone)]
pub struct FreeSystem {
    p0: f64,
    spec: GaussKernelSpec,
    ninv: BlockOperator,
    at_zero: PreparedTransform,
}

impl FreeSystem {
    pub fn new(grid: &TimeGrid, p0: f64, eps: f64) -> Result<Self> {
        let t = grid.t_end();
        FreeParams { p0, p1: p0, t, eps }.validate()?;
        let drift = PhaseFunction::momentum(DiscreteFunction::from_real_fn(grid, |s| p0 / t * (s - t)));
        let spec = GaussKernelSpec::new(
            assemble_k_free(grid),
            BlockOperator::zero(grid),
            drift,
            Complex64::new(0.0, -0.5 * p0 * p0 * t),
            vec![Pin {
                eta: momentum_average(grid)?,
                y: 0.0,
            }],
        )?;
        let ninv = closed_inverse_free(grid).with_pp_shift(Complex64::new(eps, 0.0));
        let at_zero = PreparedTransform::new(&spec, &ninv, Complex64::new(1.0, 0.0), &PhaseFunction::zeros(grid))?;
        Ok(FreeSystem {
            p0,
            spec,
            ninv,
            at_zero,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.spec.grid()
    }

    pub fn spec(&self) -> &GaussKernelSpec {
        &self.spec
    }

    /// `N_ε⁻¹`.
    pub fn inverse(&self) -> &BlockOperator {
        &self.ninv
    }

    pub fn t_transform(&self, p1: f64, f: &PhaseFunction) -> Result<TTransformValue> {
        PreparedTransform::new(&self.spec, &self.ninv, Complex64::new(1.0, 0.0), f)?.at(&[p1 - self.p0])
    }

    pub fn expectation(&self, p1: f64) -> Result<Complex64> {
        Ok(self.at_zero.at(&[p1 - self.p0])?.value)
    }
}

/// T-transform of the ε-regularized free integrand on the grid of `f`.
pub fn free_t_transform_eps(params: FreeParams, f: &PhaseFunction) -> Result<TTransformValue> {
    params.validate()?;
    check_grid_time(f.grid(), params.t)?;
    FreeSystem::new(f.grid(), params.p0, params.eps)?.t_transform(params.p1, f)
}

/// Generalized expectation of the ε-regularized free integrand, evaluated on
/// a grid of [`DEFAULT_GRID_N`] points.
pub fn free_expectation_eps(params: FreeParams) -> Result<Complex64> {
    params.validate()?;
    let grid = build_grid(params.t, DEFAULT_GRID_N)?;
    FreeSystem::new(&grid, params.p0, params.eps)?.expectation(params.p1)
}

/// The factored closed form of the free expectation, with the elementary
/// integrals `∫(s-t) ds = -t²/2` and `∫(s-t)² ds = t³/3` done by hand.
pub fn free_expectation_closed_form(params: FreeParams) -> Result<Complex64> {
    params.validate()?;
    let FreeParams { p0, p1, t, eps } = params;
    let lin = -0.5 * t * t;
    let sq = t * t * t / 3.0;
    let dp = p1 - p0;
    let modulus = (t / (2.0 * PI * eps)).sqrt() * (-t * dp * dp / (2.0 * eps)).exp();
    let exponent = Complex64::new(
        -eps / (2.0 * t * t) * p0 * p0 * sq + p0 * p0 * eps / (2.0 * t * t * t) * lin * lin,
        -0.5 * p0 * p0 * t + p0 / t * dp * lin,
    );
    Ok(modulus * exponent.exp())
}

/// `(2πi√k sin(√k t))^{-1/2}`, principal branch.
pub fn ho_prefactor(k: f64, t: f64) -> Result<Complex64> {
    HOParams { k, t, p1: 0.0 }.validate()?;
    let w = k.sqrt();
    let s = (w * t).sin();
    if s.abs() <= SINGULAR_TIME_TOL {
        return Err(Error::SingularTime { k, t });
    }
    Ok((2.0 * PI * I * w * s).sqrt().inv())
}

/// Closed-form momentum-space propagator of the oscillator, principal branches.
pub fn ho_propagator(params: HOParams) -> Result<Complex64> {
    let pre = ho_prefactor(params.k, params.t)?;
    let w = params.k.sqrt();
    let tan = (w * params.t).tan();
    Ok(pre * (I * params.p1 * params.p1 / (2.0 * w * tan)).exp())
}

/// The oscillator at fixed `k`, `t` on one grid.
#[derive(Debug, Clone)]
pub struct HoSystem {
    k: f64,
    spec: GaussKernelSpec,
    ninv: BlockOperator,
    det_factor: Complex64,
    pin_matrix: DMatrix<Complex64>,
}

impl HoSystem {
    pub fn new(grid: &TimeGrid, k: f64) -> Result<Self> {
        let t = grid.t_end();
        HOParams { k, t, p1: 0.0 }.validate()?;
        let spec = GaussKernelSpec::new(
            assemble_k_free(grid),
            assemble_l_ho(grid, k)?,
            PhaseFunction::zeros(grid),
            Complex64::new(0.0, 0.0),
            vec![Pin {
                eta: momentum_average(grid)?,
                y: 0.0,
            }],
        )?;
        let ninv = closed_inverse_ho(grid, k)?;
        let w = k.sqrt();
        // det(Id + L(Id+K)⁻¹) = cos(√k t) and (η, N⁻¹η) = i√k tan(√k t).
        let det_factor = Complex64::new((w * t).cos(), 0.0).sqrt().inv();
        let pin_matrix = DMatrix::from_element(1, 1, I * w * (w * t).tan());
        Ok(HoSystem {
            k,
            spec,
            ninv,
            det_factor,
            pin_matrix,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.spec.grid()
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn spec(&self) -> &GaussKernelSpec {
        &self.spec
    }

    /// `(Id + K_free + L_ho)⁻¹`.
    pub fn inverse(&self) -> &BlockOperator {
        &self.ninv
    }

    /// `cos(√k t)^{-1/2}`.
    pub fn det_factor(&self) -> Complex64 {
        self.det_factor
    }

    /// `(η, N⁻¹η)` in closed form.
    pub fn pin_matrix(&self) -> &DMatrix<Complex64> {
        &self.pin_matrix
    }

    /// `(η, N⁻¹η)` from the grid inverse.
    pub fn grid_pin_matrix(&self) -> Result<DMatrix<Complex64>> {
        crate::gausskernel::pin_matrix(&self.spec, &self.ninv)
    }

    pub fn t_transform(&self, p1: f64, f: &PhaseFunction) -> Result<TTransformValue> {
        PreparedTransform::with_pin_matrix(&self.spec, &self.ninv, self.det_factor, self.pin_matrix.clone(), f)?
            .at(&[p1])
    }
}

/// T-transform of the oscillator integrand on the grid of `f`.
pub fn ho_t_transform(params: HOParams, f: &PhaseFunction) -> Result<TTransformValue> {
    params.validate()?;
    check_grid_time(f.grid(), params.t)?;
    HoSystem::new(f.grid(), params.k)?.t_transform(params.p1, f)
}

/// `|i ∂_t G - (p²/2) G + (k/2) ∂²_p G|` at `(t, p′)` by central differences
/// on the closed-form propagator.
pub fn schrodinger_residual(params: HOParams, h_t: f64, h_p: f64) -> Result<f64> {
    if !(h_t > 0.0) || !(h_p > 0.0) {
        return Err(Error::invalid("difference steps must be positive"));
    }
    let HOParams { k, t, p1: p } = params;
    if !(t - h_t > 0.0) {
        return Err(Error::invalid("time step reaches t <= 0"));
    }
    let w = k.sqrt();
    if ((w * (t - h_t)).cos() > 0.0) != ((w * (t + h_t)).cos() > 0.0) {
        return Err(Error::SingularTime { k, t });
    }
    let g = |t: f64, p: f64| ho_propagator(HOParams { k, t, p1: p });
    let centre = g(t, p)?;
    let dt = (g(t + h_t, p)? - g(t - h_t, p)?) / (2.0 * h_t);
    let dpp = (g(t, p + h_p)? - 2.0 * centre + g(t, p - h_p)?) / (h_p * h_p);
    Ok((I * dt - 0.5 * p * p * centre + 0.5 * k * dpp).norm())
}

/// Window half-width for [`ho_free_limit`] in units of `(k t²)^{1/4}`.
pub const FREE_LIMIT_WINDOW: f64 = 24.0;

/// Trapezoid points per period of the fastest oscillation in [`ho_free_limit`].
const FREE_LIMIT_POINTS_PER_PERIOD: f64 = 64.0;

/// `∫ G(p′) φ(p′) dp′` for small `k`, where the oscillator propagator tends
/// to `δ(p′)`. The window is `±FREE_LIMIT_WINDOW (k t²)^{1/4}`, wide against
/// the Fresnel scale `√(k t)`, and the step resolves the chirp at its edge.
pub fn ho_free_limit(params: HOParams, test: &TestFunctionSpec) -> Result<Complex64> {
    params.validate()?;
    test.validate()?;
    let HOParams { k, t, .. } = params;
    let half = FREE_LIMIT_WINDOW * (k * t * t).sqrt().sqrt();
    let w = k.sqrt();
    let scale = w * (w * t).tan();
    let chirp = half / scale.abs();
    let steps = (2.0 * half * chirp * FREE_LIMIT_POINTS_PER_PERIOD / (2.0 * PI)).ceil() as usize + 1;
    let pre = ho_prefactor(k, t)?;
    weak_delta_pairing(
        |p| pre * (I * p * p / (2.0 * scale)).exp(),
        |p| test.eval(p),
        -half,
        half,
        steps.max(2),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{extrapolate_in_dim, finite_dim_t_transform, project_phase, FiniteModel};
    use crate::timegrid::GaussTerm;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_expectation_at_rest() {
        let p = FreeParams {
            p0: 0.0,
            p1: 0.0,
            t: 1.0,
            eps: 0.01,
        };
        let v = free_expectation_eps(p).unwrap();
        assert_relative_eq!(v.re, 3.989422804014327, max_relative = 1e-12);
        assert!(v.im.abs() < 1e-12);
        assert_eq!(free_expectation_closed_form(p).unwrap(), c(3.989422804014327, 0.0));
    }

    #[test]
    fn free_expectation_moving() {
        let p = FreeParams {
            p0: 1.0,
            p1: 1.0,
            t: 1.0,
            eps: 0.01,
        };
        let closed = free_expectation_closed_form(p).unwrap();
        assert_relative_eq!(
            closed.norm(),
            3.989422804014327 * (-0.01f64 / 24.0).exp(),
            max_relative = 1e-12
        );
        assert_relative_eq!(closed.arg(), -0.5, epsilon = 1e-12);
        let grid = free_expectation_eps(p).unwrap();
        // the grid integrates (s-t)² by the midpoint rule
        assert!((grid - closed).norm() < 1e-6 * closed.norm());
        let q = FreeParams {
            p0: 0.7,
            p1: 0.9,
            t: 1.4,
            eps: 0.05,
        };
        let rel = (free_expectation_eps(q).unwrap() - free_expectation_closed_form(q).unwrap()).norm()
            / free_expectation_closed_form(q).unwrap().norm();
        assert!(rel < 1e-5, "{rel}");
    }

    #[test]
    fn free_transform_at_zero_is_expectation() {
        let g = build_grid(1.0, DEFAULT_GRID_N).unwrap();
        let p = FreeParams {
            p0: 0.3,
            p1: -0.2,
            t: 1.0,
            eps: 0.02,
        };
        let a = free_t_transform_eps(p, &PhaseFunction::zeros(&g)).unwrap().value;
        assert_eq!(a, free_expectation_eps(p).unwrap());
        let other = build_grid(2.0, 10).unwrap();
        assert_eq!(
            free_t_transform_eps(p, &PhaseFunction::zeros(&other)).unwrap_err(),
            Error::GridMismatch
        );
    }

    #[test]
    fn free_momentum_conservation() {
        for eps in [0.1, 0.02] {
            let p0 = 0.4;
            let sys = FreeSystem::new(&build_grid(1.0, 64).unwrap(), p0, eps).unwrap();
            let sigma = eps.sqrt();
            let (lo, hi, steps) = (p0 - 10.0 * sigma, p0 + 10.0 * sigma, 4001);
            let mass = weak_delta_pairing(
                |p| c(sys.expectation(p).unwrap().norm(), 0.0),
                |_| c(1.0, 0.0),
                lo,
                hi,
                steps,
            )
            .unwrap();
            // the drift corrections leave the envelope with mass exp(-ε t p₀²/24)
            assert!((mass.re - (-eps * p0 * p0 / 24.0).exp()).abs() < 1e-6, "{mass}");
            let h = (hi - lo) / (steps - 1) as f64;
            let best = (0..steps)
                .map(|i| lo + h * i as f64)
                .max_by(|a, b| {
                    sys.expectation(*a)
                        .unwrap()
                        .norm()
                        .total_cmp(&sys.expectation(*b).unwrap().norm())
                })
                .unwrap();
            assert!((best - p0).abs() <= h);
        }
    }

    #[test]
    fn free_phase_invariance() {
        let mods: alloc::vec::Vec<f64> = [0.0, 1.0, 3.0]
            .iter()
            .map(|&p0| {
                free_expectation_eps(FreeParams {
                    p0,
                    p1: p0,
                    t: 1.0,
                    eps: 0.01,
                })
                .unwrap()
                .norm()
            })
            .collect();
        let spread = mods.iter().cloned().fold(f64::MIN, f64::max) - mods.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread / mods[0] < 1e-2);
    }

    #[test]
    fn free_matches_oracle() {
        let (t, p0, p1, eps) = (1.0, 0.5, 0.6, 0.05);
        let grid = build_grid(t, 400).unwrap();
        let fp = |s: f64| c(0.4, -0.2) * (-(s - 0.3) * (s - 0.3) / 0.02).exp();
        let fx = |s: f64| c(-0.3, 0.1) * (-(s - 0.7) * (s - 0.7) / 0.05).exp();
        let f = PhaseFunction::new(
            DiscreteFunction::from_fn(&grid, fx),
            DiscreteFunction::from_fn(&grid, fp),
        )
        .unwrap();
        let value = free_t_transform_eps(FreeParams { p0, p1, t, eps }, &f).unwrap().value;
        let oracle = extrapolate_in_dim(50, |d| {
            finite_dim_t_transform(&FiniteModel::free(t, p0, p1, eps, d)?, &project_phase(t, d, fx, fp))
        })
        .unwrap();
        assert!((value - oracle).norm() < 1e-4 * oracle.norm(), "{value} vs {oracle}");
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn ho_propagator_values() {
        let v = ho_propagator(HOParams {
            k: 1.0,
            t: 1.0,
            p1: 0.0,
        })
        .unwrap();
        assert!((v - c(0.30752, -0.30752)).norm() < 1e-5);
        let v = ho_propagator(HOParams {
            k: 1.0,
            t: 1.0,
            p1: 1.0,
        })
        .unwrap();
        assert!((v - c(0.38885028963, -0.19476757349)).norm() < 1e-10);
        assert!(matches!(
            ho_propagator(HOParams {
                k: 1.0,
                t: PI / 2.0,
                p1: 0.0
            }),
            Err(Error::SingularTime { .. })
        ));
        assert!(matches!(
            ho_propagator(HOParams {
                k: 1.0,
                t: 1.5707963,
                p1: 0.0
            }),
            Err(Error::SingularTime { .. })
        ));
    }

    #[test]
    fn ho_prefactor_modulus_and_phase() {
        let pre = ho_prefactor(1.0, 1.0).unwrap();
        assert_relative_eq!(pre.norm(), 0.43490, epsilon = 1e-5);
        assert_relative_eq!(pre.arg(), -PI / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn ho_transform_reduces_to_propagator() {
        let g = build_grid(1.0, 128).unwrap();
        let sys = HoSystem::new(&g, 1.0).unwrap();
        for p1 in [0.0, 0.5, -1.3] {
            let v = sys.t_transform(p1, &PhaseFunction::zeros(&g)).unwrap();
            let closed = ho_propagator(HOParams { k: 1.0, t: 1.0, p1 }).unwrap();
            assert!((v.value - closed).norm() < 1e-12 * closed.norm());
            let pre = v.det_factor * (2.0 * PI * v.pin_matrix[(0, 0)]).sqrt().inv();
            assert!((pre - ho_prefactor(1.0, 1.0).unwrap()).norm() < 1e-12);
        }
        let m = sys.grid_pin_matrix().unwrap()[(0, 0)];
        assert!((m - sys.pin_matrix()[(0, 0)]).norm() < 1e-4);
    }

    #[test]
    fn ho_matches_oracle_for_bump() {
        let (k, t, p1) = (1.0, 1.0, 0.4);
        let grid = build_grid(t, 400).unwrap();
        let fp = |s: f64| c(0.3, 0.2) * (-(s - 0.4) * (s - 0.4) / 0.03).exp();
        let fx = |s: f64| c(0.2, -0.1) * (-(s - 0.6) * (s - 0.6) / 0.04).exp();
        let f = PhaseFunction::new(
            DiscreteFunction::from_fn(&grid, fx),
            DiscreteFunction::from_fn(&grid, fp),
        )
        .unwrap();
        let value = ho_t_transform(HOParams { k, t, p1 }, &f).unwrap().value;
        let oracle = extrapolate_in_dim(50, |d| {
            finite_dim_t_transform(&FiniteModel::harmonic(k, t, p1, d)?, &project_phase(t, d, fx, fp))
        })
        .unwrap();
        assert!((value - oracle).norm() < 1e-4 * oracle.norm(), "{value} vs {oracle}");
        let raw =
            finite_dim_t_transform(&FiniteModel::harmonic(k, t, 0.0, 200).unwrap(), &DVector::zeros(400)).unwrap();
        let closed = ho_propagator(HOParams { k, t, p1: 0.0 }).unwrap();
        assert!((raw - closed).norm() < 1e-4 * closed.norm());
    }

    #[test]
    fn ho_time_reversal() {
        for p in [0.1, 0.7, 2.5] {
            let a = ho_propagator(HOParams { k: 1.3, t: 0.8, p1: p }).unwrap();
            let b = ho_propagator(HOParams { k: 1.3, t: 0.8, p1: -p }).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn schrodinger_residual_examples() {
        let r = schrodinger_residual(
            HOParams {
                k: 1.0,
                t: 1.0,
                p1: 0.3,
            },
            1e-3,
            1e-3,
        )
        .unwrap();
        assert!(r < 1e-5, "{r}");
        let r2 = schrodinger_residual(
            HOParams {
                k: 2.0,
                t: 0.7,
                p1: -0.5,
            },
            1e-3,
            1e-3,
        )
        .unwrap();
        assert!(r2 < 1e-5, "{r2}");
        let coarse = schrodinger_residual(
            HOParams {
                k: 1.0,
                t: 1.0,
                p1: 0.3,
            },
            2e-3,
            2e-3,
        )
        .unwrap();
        let ratio = coarse / r;
        assert!((ratio - 4.0).abs() < 0.5, "{ratio}");
        assert!(matches!(
            schrodinger_residual(
                HOParams {
                    k: 1.0,
                    t: PI / 2.0 - 5e-4,
                    p1: 0.0
                },
                1e-3,
                1e-3
            ),
            Err(Error::SingularTime { .. })
        ));
    }

    #[test]
    fn free_limit_of_oscillator() {
        let bump = TestFunctionSpec::new(vec![GaussTerm {
            a: c(1.0, 0.0),
            b: 1.0,
            c: 0.0,
        }])
        .unwrap();
        let v4 = ho_free_limit(
            HOParams {
                k: 1e-4,
                t: 1.0,
                p1: 0.0,
            },
            &bump,
        )
        .unwrap();
        assert!((v4 - c(1.0, 0.0)).norm() < 2e-2, "{v4}");
        let v6 = ho_free_limit(
            HOParams {
                k: 1e-6,
                t: 1.0,
                p1: 0.0,
            },
            &bump,
        )
        .unwrap();
        assert!((v6 - c(1.0, 0.0)).norm() < 2e-3, "{v6}");
        let flat = TestFunctionSpec::new(vec![GaussTerm {
            a: c(1.0, 0.0),
            b: 1e-12,
            c: 0.0,
        }])
        .unwrap();
        let m = ho_free_limit(
            HOParams {
                k: 1e-6,
                t: 1.0,
                p1: 0.0,
            },
            &flat,
        )
        .unwrap();
        assert!((m.norm() - 1.0).abs() < 1e-2, "{m}");
    }

    #[test]
    fn first_branch_flag() {
        assert!(HOParams {
            k: 1.0,
            t: 1.5,
            p1: 0.0
        }
        .first_branch());
        assert!(!HOParams {
            k: 1.0,
            t: 1.6,
            p1: 0.0
        }
        .first_branch());
    }
}
