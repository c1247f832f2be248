//! Uniform midpoint discretization of `[0, t)`.
//!
//! Functions on the grid are sampled at cell midpoints and integrated with
//! the rectangle rule, so indicators of half-open intervals and kernels with
//! a kink on the diagonal never need an endpoint value.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug)]
struct GridData {
    t_end: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Midpoint grid on `[0, t_end)` with `n` equal cells.
///
/// Cloning is cheap; clones compare equal and functions built on either are
/// compatible.
#[derive(Debug, Clone)]
pub struct TimeGrid(Arc<GridData>);

impl TimeGrid {
    pub fn new(t_end: f64, n: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::invalid("t_end must be positive and finite"));
        }
        if n == 0 {
            return Err(Error::invalid("grid needs at least one cell"));
        }
        let h = t_end / n as f64;
        let nodes = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
        let weights = alloc::vec![h; n];
        Ok(TimeGrid(Arc::new(GridData { t_end, nodes, weights })))
    }

    pub fn t_end(&self) -> f64 {
        self.0.t_end
    }

    pub fn n(&self) -> usize {
        self.0.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.0.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.0.weights
    }

    /// Common cell width.
    pub fn step(&self) -> f64 {
        self.0.t_end / self.n() as f64
    }

    pub(crate) fn check_same(&self, other: &TimeGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

impl PartialEq for TimeGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.n() == other.n() && self.t_end() == other.t_end())
    }
}

/// Shorthand for [`TimeGrid::new`].
pub fn build_grid(t_end: f64, n: usize) -> Result<TimeGrid> {
    TimeGrid::new(t_end, n)
}

/// Complex samples of a function at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction {
    grid: TimeGrid,
    values: Vec<Complex64>,
}

impl DiscreteFunction {
    pub fn new(grid: &TimeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::invalid("value count does not match grid size"));
        }
        Ok(DiscreteFunction {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &TimeGrid) -> Self {
        DiscreteFunction {
            grid: grid.clone(),
            values: alloc::vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn from_fn(grid: &TimeGrid, mut f: impl FnMut(f64) -> Complex64) -> Self {
        DiscreteFunction {
            grid: grid.clone(),
            values: grid.nodes().iter().map(|&s| f(s)).collect(),
        }
    }

    pub fn from_real_fn(grid: &TimeGrid, mut f: impl FnMut(f64) -> f64) -> Self {
        Self::from_fn(grid, |s| Complex64::new(f(s), 0.0))
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        DiscreteFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(DiscreteFunction {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    /// Squared L² norm `Σ w |f|²` (sesquilinear, unlike [`pair`]).
    pub fn norm_sqr(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| w * v.norm_sqr())
            .sum()
    }
}

/// Bilinear pairing `Σ w_i f_i g_i`. No conjugation.
pub fn pair(f: &DiscreteFunction, g: &DiscreteFunction) -> Result<Complex64> {
    f.grid.check_same(&g.grid)?;
    Ok(f.values
        .iter()
        .zip(&g.values)
        .zip(f.grid.weights())
        .map(|((a, b), w)| a * b * *w)
        .sum())
}

/// `𝟙_[a,b)` sampled on the grid: a node `s` is inside iff `a <= s < b`.
pub fn indicator(grid: &TimeGrid, a: f64, b: f64) -> Result<DiscreteFunction> {
    if a > b {
        return Err(Error::invalid("indicator interval needs a <= b"));
    }
    Ok(DiscreteFunction::from_real_fn(grid, |s| {
        if a <= s && s < b {
            1.0
        } else {
            0.0
        }
    }))
}

/// One Gaussian bump `a · exp(-b (s - c)²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussTerm {
    pub a: Complex64,
    pub b: f64,
    pub c: f64,
}

impl GaussTerm {
    pub fn eval(&self, s: f64) -> Complex64 {
        let d = s - self.c;
        self.a * (-self.b * d * d).exp()
    }
}

/// Finite sum of Gaussian bumps, a smooth rapidly decaying stand-in for a
/// Schwartz test function.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TestFunctionSpec {
    pub terms: Vec<GaussTerm>,
}

impl TestFunctionSpec {
    pub fn new(terms: Vec<GaussTerm>) -> Result<Self> {
        let spec = TestFunctionSpec { terms };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for term in &self.terms {
            if !(term.b > 0.0) || !term.b.is_finite() {
                return Err(Error::invalid("Gaussian width parameter b must be positive"));
            }
            if !term.c.is_finite() || !term.a.re.is_finite() || !term.a.im.is_finite() {
                return Err(Error::invalid("test function coefficients must be finite"));
            }
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> Complex64 {
        self.terms.iter().map(|term| term.eval(s)).sum()
    }
}

pub fn sample_test_function(grid: &TimeGrid, spec: &TestFunctionSpec) -> Result<DiscreteFunction> {
    spec.validate()?;
    Ok(DiscreteFunction::from_fn(grid, |s| spec.eval(s)))
}

/// A pair `(f_x, f_p)` on one grid: the position and momentum slots of a
/// two-component test function.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFunction {
    pub fx: DiscreteFunction,
    pub fp: DiscreteFunction,
}

impl PhaseFunction {
    pub fn new(fx: DiscreteFunction, fp: DiscreteFunction) -> Result<Self> {
        fx.grid.check_same(&fp.grid)?;
        Ok(PhaseFunction { fx, fp })
    }

    pub fn zeros(grid: &TimeGrid) -> Self {
        PhaseFunction {
            fx: DiscreteFunction::zeros(grid),
            fp: DiscreteFunction::zeros(grid),
        }
    }

    pub fn momentum(fp: DiscreteFunction) -> Self {
        PhaseFunction {
            fx: DiscreteFunction::zeros(fp.grid()),
            fp,
        }
    }

    pub fn position(fx: DiscreteFunction) -> Self {
        PhaseFunction {
            fp: DiscreteFunction::zeros(fx.grid()),
            fx,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        self.fx.grid()
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        PhaseFunction {
            fx: self.fx.scale(alpha),
            fp: self.fp.scale(alpha),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        Ok(PhaseFunction {
            fx: self.fx.try_add(&other.fx)?,
            fp: self.fp.try_add(&other.fp)?,
        })
    }

    /// Bilinear pairing summed over both slots.
    pub fn pair(&self, other: &Self) -> Result<Complex64> {
        Ok(pair(&self.fx, &other.fx)? + pair(&self.fp, &other.fp)?)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.fx.norm_sqr() + self.fp.norm_sqr()
    }

    pub fn is_zero(&self) -> bool {
        let zero = Complex64::new(0.0, 0.0);
        self.fx.values.iter().chain(&self.fp.values).all(|v| *v == zero)
    }

    /// Stacked `[f_x; f_p]` values.
    pub fn stacked(&self) -> Vec<Complex64> {
        self.fx.values.iter().chain(&self.fp.values).copied().collect()
    }

    pub fn from_stacked(grid: &TimeGrid, values: &[Complex64]) -> Result<Self> {
        let n = grid.n();
        if values.len() != 2 * n {
            return Err(Error::invalid("stacked vector must have length 2n"));
        }
        Ok(PhaseFunction {
            fx: DiscreteFunction::new(grid, values[..n].to_vec())?,
            fp: DiscreteFunction::new(grid, values[n..].to_vec())?,
        })
    }
}

impl Add for &PhaseFunction {
    type Output = PhaseFunction;

    /// Panics on a grid mismatch; use [`PhaseFunction::try_add`] otherwise.
    fn add(self, rhs: Self) -> PhaseFunction {
        self.try_add(rhs).expect("grid mismatch in PhaseFunction addition")
    }
}

impl Sub for &PhaseFunction {
    type Output = PhaseFunction;

    fn sub(self, rhs: Self) -> PhaseFunction {
        self.try_add(&-rhs).expect("grid mismatch in PhaseFunction subtraction")
    }
}

impl Neg for &PhaseFunction {
    type Output = PhaseFunction;

    fn neg(self) -> PhaseFunction {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<&PhaseFunction> for Complex64 {
    type Output = PhaseFunction;

    fn mul(self, rhs: &PhaseFunction) -> PhaseFunction {
        rhs.scale(self)
    }
}
