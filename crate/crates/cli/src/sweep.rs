use std::f64::consts::PI;

use num_complex::Complex64;
use phasepath_core::propagators::{ho_propagator, FreeParams, FreeSystem, HOParams};
use phasepath_core::timegrid::build_grid;
use phasepath_core::Error;
use serde_json::{json as json_value, Value};

use crate::args::{Format, Param, SweepArgs};
use crate::commands::branch_flag;
use crate::output::{csv_line, emit, json, ComplexRecord};
use crate::CliError;

const VALUE_COLUMNS: [&str; 5] = ["re", "im", "abs", "arg", "flag"];

struct Row {
    params: Vec<f64>,
    value: ComplexRecord,
    flag: String,
}

enum System {
    Oscillator,
    Free { grid_n: usize },
}

type Settings = Vec<(&'static str, Param)>;

/// Parameter names in column order, with their settings.
fn parameters(a: &SweepArgs) -> Result<(System, Settings), CliError> {
    match a.k {
        Some(k) => {
            if a.eps.is_some() || a.p0.is_some() {
                return Err(CliError::Usage(
                    "--eps and --p0 apply to the free particle only (omit --k)".into(),
                ));
            }
            let p = a.p.unwrap_or(Param::Value(0.0));
            Ok((System::Oscillator, vec![("k", k), ("t", a.t), ("p", p)]))
        }
        None => {
            let eps = a.eps.ok_or_else(|| {
                CliError::Usage("the free particle needs --eps (or pass --k for the oscillator)".into())
            })?;
            let p0 = a.p0.unwrap_or(Param::Value(0.0));
            // p′ follows p₀ unless given
            let p = a.p.unwrap_or(p0);
            Ok((
                System::Free { grid_n: a.grid_n },
                vec![("t", a.t), ("p", p), ("p0", p0), ("eps", eps)],
            ))
        }
    }
}

/// All parameter tuples, the first swept parameter varying slowest.
fn tuples(settings: &[(&'static str, Param)]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(settings.len())];
    for (_, param) in settings {
        let values = param.values();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push(*v);
                    next
                })
            })
            .collect();
    }
    out
}

fn free_value(
    cache: &mut Option<((u64, u64, u64), FreeSystem)>,
    grid_n: usize,
    params: FreeParams,
) -> Result<Complex64, Error> {
    params.validate()?;
    let key = (params.t.to_bits(), params.p0.to_bits(), params.eps.to_bits());
    if cache.as_ref().map(|(k, _)| *k) != Some(key) {
        let grid = build_grid(params.t, grid_n)?;
        *cache = Some((key, FreeSystem::new(&grid, params.p0, params.eps)?));
    }
    cache.as_ref().expect("filled above").1.expectation(params.p1)
}

fn wrapped_step(a: f64, b: f64) -> f64 {
    let d = b - a;
    (d - 2.0 * PI * (d / (2.0 * PI)).round()).abs()
}

pub fn run(a: &SweepArgs) -> Result<(), CliError> {
    let (system, settings) = parameters(a)?;
    let swept: Vec<usize> = (0..settings.len()).filter(|&i| settings[i].1.is_range()).collect();
    if swept.len() > 2 {
        return Err(CliError::Usage(format!(
            "at most 2 parameters may be swept, got {}",
            swept.len()
        )));
    }

    let mut cache = None;
    let mut rows = Vec::new();
    for values in tuples(&settings) {
        let evaluated = match system {
            System::Oscillator => {
                let params = HOParams {
                    k: values[0],
                    t: values[1],
                    p1: values[2],
                };
                ho_propagator(params).map(|v| (v, branch_flag(&params)))
            }
            System::Free { grid_n } => {
                let params = FreeParams {
                    t: values[0],
                    p1: values[1],
                    p0: values[2],
                    eps: values[3],
                };
                free_value(&mut cache, grid_n, params).map(|v| (v, "ok"))
            }
        };
        let (value, flag) = match evaluated {
            Ok((v, flag)) => (ComplexRecord::from(v), flag.to_string()),
            Err(Error::SingularTime { .. }) => (ComplexRecord::NAN, "singular".to_string()),
            Err(e) => return Err(e.into()),
        };
        rows.push(Row {
            params: swept.iter().map(|&i| values[i]).collect(),
            value,
            flag,
        });
    }

    // Branch continuity of arg along the innermost swept parameter.
    if let Some(&inner) = swept.last() {
        let line = settings[inner].1.values().len();
        for i in 1..rows.len() {
            if i % line == 0 {
                continue;
            }
            let (prev, cur) = (rows[i - 1].value.arg, rows[i].value.arg);
            if prev.is_finite() && cur.is_finite() && wrapped_step(prev, cur) > 0.5 * PI {
                let flag = &mut rows[i].flag;
                *flag = if flag == "ok" {
                    "arg_jump".into()
                } else {
                    format!("{flag}+arg_jump")
                };
            }
        }
    }

    let names: Vec<String> = swept
        .iter()
        .map(|&i| settings[i].0.to_string())
        .chain(VALUE_COLUMNS.iter().map(|c| c.to_string()))
        .collect();
    let text = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut text = csv_line(&names);
            for row in &rows {
                let mut fields: Vec<String> = row.params.iter().map(|v| crate::output::number(*v)).collect();
                fields.extend(row.value.csv_fields());
                fields.push(row.flag.clone());
                text.push_str(&csv_line(&fields));
            }
            text
        }
        Format::Json => {
            let data: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let mut cells: Vec<Value> = row.params.iter().map(|v| json_value!(v)).collect();
                    let r = row.value;
                    cells.extend([r.re, r.im, r.abs, r.arg].map(|x| json_value!(x)));
                    cells.push(json_value!(row.flag));
                    Value::Array(cells)
                })
                .collect();
            json(&json_value!({ "columns": names, "rows": data }))
        }
    };
    emit(&text, a.output.out.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuples_are_lexicographic() {
        let settings = [
            (
                "a",
                Param::Range {
                    lo: 0.0,
                    hi: 1.0,
                    count: 2,
                },
            ),
            ("b", Param::Value(5.0)),
            (
                "c",
                Param::Range {
                    lo: 0.0,
                    hi: 2.0,
                    count: 3,
                },
            ),
        ];
        let t = tuples(&settings);
        assert_eq!(t.len(), 6);
        assert_eq!(t[0], vec![0.0, 5.0, 0.0]);
        assert_eq!(t[2], vec![0.0, 5.0, 2.0]);
        assert_eq!(t[3], vec![1.0, 5.0, 0.0]);
    }

    #[test]
    fn wrapped_steps() {
        assert!((wrapped_step(3.1, -3.1) - (2.0 * PI - 6.2)).abs() < 1e-12);
        assert!((wrapped_step(0.0, 2.0) - 2.0).abs() < 1e-12);
    }
}
