//! Test-function files: `{"terms": [{"a_re", "a_im", "b", "c"}, ...]}` gives
//! the momentum slot `Σ a exp(-b (s - c)²)`; an optional `"x_terms"` list
//! gives the position slot the same way.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use phasepath_core::timegrid::{sample_test_function, GaussTerm, PhaseFunction, TestFunctionSpec, TimeGrid};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermFile {
    a_re: f64,
    #[serde(default)]
    a_im: f64,
    b: f64,
    c: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    #[serde(default)]
    terms: Vec<TermFile>,
    #[serde(default)]
    x_terms: Vec<TermFile>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionPair {
    pub momentum: TestFunctionSpec,
    pub position: TestFunctionSpec,
}

fn convert(terms: Vec<TermFile>) -> Result<TestFunctionSpec, CliError> {
    let terms = terms
        .into_iter()
        .map(|t| GaussTerm {
            a: Complex64::new(t.a_re, t.a_im),
            b: t.b,
            c: t.c,
        })
        .collect();
    TestFunctionSpec::new(terms).map_err(|e| CliError::Usage(format!("test function: {e}")))
}

pub fn parse(text: &str) -> Result<TestFunctionPair, CliError> {
    let file: SpecFile =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("malformed test function: {e}")))?;
    Ok(TestFunctionPair {
        momentum: convert(file.terms)?,
        position: convert(file.x_terms)?,
    })
}

pub fn load(path: &Path) -> Result<TestFunctionPair, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

impl TestFunctionPair {
    pub fn sample(&self, grid: &TimeGrid) -> Result<PhaseFunction, CliError> {
        let fx = sample_test_function(grid, &self.position)?;
        let fp = sample_test_function(grid, &self.momentum)?;
        Ok(PhaseFunction::new(fx, fp)?)
    }
}
