use num_complex::Complex64;
use phasepath_core::gausskernel::TTransformValue;
use phasepath_core::propagators::{ho_propagator, FreeParams, FreeSystem, HOParams, HoSystem};
use phasepath_core::timegrid::{build_grid, PhaseFunction};
use serde::Serialize;

use crate::args::{Format, FreeArgs, HoArgs, TtransformArgs};
use crate::output::{csv_line, emit, json, number, ComplexPair, ComplexRecord};
use crate::{fspec, CliError};

pub(crate) fn branch_flag(params: &HOParams) -> &'static str {
    if params.first_branch() {
        "ok"
    } else {
        "later_branch"
    }
}

fn point_output(value: Complex64, flag: &str, format: Format) -> String {
    let record = ComplexRecord::from(value);
    match format {
        Format::Json => json(&record),
        Format::Csv => {
            let mut row = record.csv_fields().to_vec();
            row.push(flag.to_string());
            csv_line(&["re", "im", "abs", "arg", "flag"].map(String::from)) + &csv_line(&row)
        }
    }
}

pub fn propagator_free(a: &FreeArgs) -> Result<(), CliError> {
    let params = FreeParams {
        p0: a.p0,
        p1: a.p.unwrap_or(a.p0),
        t: a.t,
        eps: a.eps,
    };
    params.validate()?;
    let grid = build_grid(a.t, a.grid_n)?;
    let value = FreeSystem::new(&grid, params.p0, params.eps)?.expectation(params.p1)?;
    let text = point_output(value, "ok", a.output.format.unwrap_or(Format::Json));
    emit(&text, a.output.out.as_deref())
}

#[derive(Serialize)]
struct HoRecord {
    #[serde(flatten)]
    value: ComplexRecord,
    first_branch: bool,
}

pub fn propagator_ho(a: &HoArgs) -> Result<(), CliError> {
    let params = HOParams {
        k: a.k,
        t: a.t,
        p1: a.p,
    };
    let value = ho_propagator(params)?;
    let text = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json(&HoRecord {
            value: value.into(),
            first_branch: params.first_branch(),
        }),
        Format::Csv => point_output(value, branch_flag(&params), Format::Csv),
    };
    emit(&text, a.output.out.as_deref())
}

#[derive(Serialize)]
struct TtransformRecord {
    #[serde(flatten)]
    value: ComplexRecord,
    det_factor: ComplexPair,
    quad_factor: ComplexPair,
    pin_factor: ComplexPair,
    phase_factor: ComplexPair,
    pin_matrix: ComplexPair,
}

pub fn ttransform(a: &TtransformArgs) -> Result<(), CliError> {
    let grid = build_grid(a.t, a.grid_n)?;
    let f = match &a.f_spec {
        Some(path) => fspec::load(path)?.sample(&grid)?,
        None => PhaseFunction::zeros(&grid),
    };
    let result: TTransformValue = match a.k {
        Some(k) => {
            if a.eps.is_some() || a.p0.is_some() {
                return Err(CliError::Usage(
                    "--eps and --p0 apply to the free particle only (omit --k)".into(),
                ));
            }
            let params = HOParams {
                k,
                t: a.t,
                p1: a.p.unwrap_or(0.0),
            };
            params.validate()?;
            HoSystem::new(&grid, k)?.t_transform(params.p1, &f)?
        }
        None => {
            let eps = a.eps.ok_or_else(|| {
                CliError::Usage("the free particle needs --eps (or pass --k for the oscillator)".into())
            })?;
            let p0 = a.p0.unwrap_or(0.0);
            let params = FreeParams {
                p0,
                p1: a.p.unwrap_or(p0),
                t: a.t,
                eps,
            };
            params.validate()?;
            FreeSystem::new(&grid, p0, eps)?.t_transform(params.p1, &f)?
        }
    };
    let pin = result.pin_matrix[(0, 0)];
    let text = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json(&TtransformRecord {
            value: result.value.into(),
            det_factor: result.det_factor.into(),
            quad_factor: result.quad_factor.into(),
            pin_factor: result.pin_factor.into(),
            phase_factor: result.phase_factor.into(),
            pin_matrix: pin.into(),
        }),
        Format::Csv => {
            let header = [
                "re",
                "im",
                "abs",
                "arg",
                "det_re",
                "det_im",
                "quad_re",
                "quad_im",
                "pin_re",
                "pin_im",
                "phase_re",
                "phase_im",
                "pin_matrix_re",
                "pin_matrix_im",
            ]
            .map(String::from);
            let mut row = ComplexRecord::from(result.value).csv_fields().to_vec();
            for z in [
                result.det_factor,
                result.quad_factor,
                result.pin_factor,
                result.phase_factor,
                pin,
            ] {
                row.push(number(z.re));
                row.push(number(z.im));
            }
            csv_line(&header) + &csv_line(&row)
        }
    };
    emit(&text, a.output.out.as_deref())
}
