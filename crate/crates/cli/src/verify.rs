use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use phasepath_core::operators::{assemble_k_free, assemble_l_ho, dense_fredholm_det, fredholm_det, spectrum_a};
use phasepath_core::oracle::{extrapolate_in_dim, finite_dim_t_transform, weak_delta_pairing, FiniteModel};
use phasepath_core::propagators::{
    ho_free_limit, ho_propagator, schrodinger_residual, FreeParams, FreeSystem, HOParams,
};
use phasepath_core::timegrid::{build_grid, GaussTerm, TestFunctionSpec};
use serde::Serialize;

use crate::args::{Format, Suite, VerifyArgs};
use crate::output::{csv_line, emit, json, number};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
struct Check {
    check: String,
    value: f64,
    reference: f64,
    discrepancy: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    /// `|value - reference| / |reference| <= tolerance`.
    fn relative(name: impl Into<String>, value: Complex64, reference: Complex64, tolerance: f64) -> Check {
        let discrepancy = (value - reference).norm() / reference.norm();
        Check {
            check: name.into(),
            value: value.re,
            reference: reference.re,
            discrepancy,
            tolerance,
            pass: discrepancy <= tolerance,
        }
    }

    /// `|value - reference| <= tolerance`.
    fn absolute(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Check {
        let discrepancy = (value - reference).abs();
        Check {
            check: name.into(),
            value,
            reference,
            discrepancy,
            tolerance,
            pass: discrepancy <= tolerance,
        }
    }

    /// `value >= bound`.
    fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Check {
        Check {
            check: name.into(),
            value,
            reference: bound,
            discrepancy: (bound - value).max(0.0),
            tolerance: 0.0,
            pass: value >= bound,
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    suite: String,
    pass: bool,
    checks: &'a [Check],
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn det_suite(a: &VerifyArgs) -> Result<Vec<Check>, CliError> {
    let k = a.k.unwrap_or(1.0);
    let t = a.t.unwrap_or(1.0);
    let terms = a.terms.unwrap_or(100_000);
    let n = a.grid_n.unwrap_or(500);
    let series = fredholm_det(k, t, terms)?;
    let grid = build_grid(t, n)?;
    let dense = dense_fredholm_det(&assemble_k_free(&grid), &assemble_l_ho(&grid, k)?)?.inv();
    let product = Check::relative("product", series.series, series.closed_form, 1e-6);
    let dense = Check::relative("dense", dense, series.closed_form, 1e-2);
    let worst = product.discrepancy.max(dense.discrepancy);
    let summary = Check {
        check: "max_relative_discrepancy".into(),
        value: worst,
        reference: 0.0,
        discrepancy: worst,
        tolerance: 1e-2,
        pass: product.pass && dense.pass,
    };
    Ok(vec![product, dense, summary])
}

fn spectrum_suite(a: &VerifyArgs) -> Result<Vec<Check>, CliError> {
    let t = a.t.unwrap_or(1.0);
    let n = a.grid_n.unwrap_or(2000);
    if n < 20 {
        return Err(CliError::Usage(
            "--grid-n must be at least 20 for the spectrum suite".into(),
        ));
    }
    let modes = 5;
    let exact: Vec<f64> = (1..=modes).map(|m| (t / ((m as f64 - 0.5) * PI)).powi(2)).collect();
    let fine = spectrum_a(&build_grid(t, n)?, modes)?.eigenvalues;
    let coarse = spectrum_a(&build_grid(t, n / 2)?, modes)?.eigenvalues;
    let mut checks: Vec<Check> = (0..modes)
        .map(|m| Check::relative(format!("eigenvalue_{}", m + 1), real(fine[m]), real(exact[m]), 1e-3))
        .collect();
    let err = |v: f64, e: f64| (v - e).abs() / e;
    let order = (err(coarse[modes - 1], exact[modes - 1]) / err(fine[modes - 1], exact[modes - 1])).log2();
    checks.push(Check::at_least(format!("order_m{modes}"), order, 1.9));
    Ok(checks)
}

fn pde_suite(a: &VerifyArgs) -> Result<Vec<Check>, CliError> {
    let k = a.k.unwrap_or(1.0);
    let h = a.h.unwrap_or(1e-3);
    let mut checks = Vec::new();
    for i in 0..5 {
        let t = 0.2 + 1.2 * (i as f64 + 0.5) / 5.0;
        for j in 0..5 {
            let p = -2.0 + 4.0 * (j as f64 + 0.5) / 5.0;
            let params = HOParams { k, t, p1: p };
            let r = schrodinger_residual(params, h, h)?;
            let r_half = schrodinger_residual(params, 0.5 * h, 0.5 * h)?;
            let label = format!("t={t:.2}_p={p:.2}");
            checks.push(Check::absolute(format!("residual_{label}"), r, 0.0, 1e-5));
            checks.push(Check::absolute(format!("order_{label}"), (r / r_half).log2(), 2.0, 0.3));
        }
    }
    Ok(checks)
}

fn oracle_suite(a: &VerifyArgs) -> Result<Vec<Check>, CliError> {
    let k = a.k.unwrap_or(1.0);
    let t = a.t.unwrap_or(1.0);
    let p = a.p.unwrap_or(0.0);
    let dim = a.dim.unwrap_or(200);
    if dim < 8 || !dim.is_multiple_of(4) {
        return Err(CliError::Usage("--dim must be a multiple of 4, at least 8".into()));
    }
    let closed = ho_propagator(HOParams { k, t, p1: p })?;
    let ho = |d: usize| finite_dim_t_transform(&FiniteModel::harmonic(k, t, p, d)?, &DVector::zeros(2 * d));
    let full = Check::relative(format!("ho_dim_{dim}"), ho(dim)?, closed, 1e-4);
    let quarter = Check::relative(format!("ho_dim_{}", dim / 4), ho(dim / 4)?, closed, 1e-3);
    let monotone = Check {
        check: "ho_error_decreases".into(),
        value: full.discrepancy,
        reference: quarter.discrepancy,
        discrepancy: full.discrepancy / quarter.discrepancy,
        tolerance: 1.0,
        pass: full.discrepancy < quarter.discrepancy,
    };
    let extrapolated = Check::relative("ho_extrapolated", extrapolate_in_dim(dim / 4, ho)?, closed, 1e-6);

    let eps = a.eps.unwrap_or(0.05);
    let p0 = a.p0.unwrap_or(0.0);
    let p1 = a.p.unwrap_or(p0);
    let grid = build_grid(t, a.grid_n.unwrap_or(256))?;
    FreeParams { p0, p1, t, eps }.validate()?;
    let free = FreeSystem::new(&grid, p0, eps)?.expectation(p1)?;
    let free_oracle = extrapolate_in_dim(dim / 4, |d| {
        finite_dim_t_transform(&FiniteModel::free(t, p0, p1, eps, d)?, &DVector::zeros(2 * d))
    })?;
    let free = Check::relative("free_grid_vs_extrapolated", free, free_oracle, 1e-4);
    Ok(vec![full, quarter, monotone, extrapolated, free])
}

fn free_limit_suite(a: &VerifyArgs) -> Result<Vec<Check>, CliError> {
    let t = a.t.unwrap_or(1.0);
    let n = a.grid_n.unwrap_or(256);
    let grid = build_grid(t, n)?;
    let momenta = match a.p0 {
        Some(p0) => vec![p0],
        None => vec![0.0, 1.0],
    };
    let mut checks = Vec::new();
    for p0 in momenta {
        // unit-mass bump, off-centre so the first-order error does not vanish
        let centre = p0 + 0.3;
        let bump = move |p: f64| real((-(p - centre) * (p - centre)).exp() / PI.sqrt());
        let limit = bump(p0) * Complex64::new(0.0, -0.5 * p0 * p0 * t).exp();
        let mut errors = Vec::new();
        for eps in [0.1, 0.05, 0.025] {
            let system = FreeSystem::new(&grid, p0, eps)?;
            let pairing = weak_delta_pairing(
                |p| system.expectation(p).unwrap_or(Complex64::new(f64::NAN, 0.0)),
                bump,
                p0 - 8.0,
                p0 + 8.0,
                6401,
            )?;
            errors.push((pairing - limit).norm());
        }
        for (i, pair) in errors.windows(2).enumerate() {
            checks.push(Check::absolute(
                format!("p0={}_ratio_{}", number(p0), i + 1),
                pair[0] / pair[1],
                2.0,
                0.3,
            ));
        }
    }
    let k = a.k.unwrap_or(1e-4);
    let test = TestFunctionSpec::new(vec![GaussTerm {
        a: real(1.0),
        b: 1.0,
        c: 0.0,
    }])?;
    let value = ho_free_limit(HOParams { k, t, p1: 0.0 }, &test)?;
    checks.push(Check::absolute(
        format!("ho_k={}_pairing", number(k)),
        (value - real(1.0)).norm(),
        0.0,
        200.0 * k.sqrt(),
    ));
    Ok(checks)
}

pub fn run(a: &VerifyArgs) -> Result<(), CliError> {
    let checks = match a.suite {
        Suite::Det => det_suite(a)?,
        Suite::Spectrum => spectrum_suite(a)?,
        Suite::Pde => pde_suite(a)?,
        Suite::Oracle => oracle_suite(a)?,
        Suite::FreeLimit => free_limit_suite(a)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    let text = match a.output.format.unwrap_or(Format::Csv) {
        Format::Json => json(&Report {
            suite: a.suite.to_string(),
            pass,
            checks: &checks,
        }),
        Format::Csv => {
            let header = ["check", "value", "reference", "discrepancy", "tolerance", "status"].map(String::from);
            let mut text = csv_line(&header);
            for c in &checks {
                text.push_str(&csv_line(&[
                    c.check.clone(),
                    number(c.value),
                    number(c.reference),
                    number(c.discrepancy),
                    number(c.tolerance),
                    if c.pass { "PASS" } else { "FAIL" }.to_string(),
                ]));
            }
            text
        }
    };
    emit(&text, a.output.out.as_deref())?;
    if pass {
        Ok(())
    } else {
        Err(CliError::VerificationFailed(a.suite.to_string()))
    }
}
