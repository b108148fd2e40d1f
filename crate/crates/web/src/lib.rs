//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every function returns a JSON string; failures come back as
//! `{"error": "..."}` so the page never has to catch exceptions.

use cstar_dilation::cpmaps::{check_cp_map, CPMapAlgebra};
use cstar_dilation::cstar::{choi_blocks, CStarAlgebra};
use cstar_dilation::numkernel::{eigenvalues_hermitian, eye, r, zeros};
use cstar_dilation::scenario::{
    emit_certificate, generate_scenario, parse_scenario, run, scenario_to_json, CheckEntry, Format,
    GenParams, Kind, RunOptions,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn error(msg: impl std::fmt::Display) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

/// Choi spectrum of `a -> (1 - lambda) a^T + lambda tr(a) 1` on `M_2`.
/// The map is CP exactly when `lambda >= 1/2`.
#[wasm_bindgen]
pub fn choi_spectrum(lambda: f64) -> String {
    let alg = CStarAlgebra::matrix(2);
    let images: Vec<_> = (0..alg.dim())
        .map(|k| {
            let (_, i, j) = alg.basis_entry(k);
            let mut m = zeros(2, 2);
            m[(j, i)] = r(1.0 - lambda);
            if i == j {
                m += eye(2) * r(lambda);
            }
            m
        })
        .collect();
    let choi = choi_blocks(&alg, &images, 1e-12);
    let mut eig = eigenvalues_hermitian(&choi.choi[0]);
    eig.sort_by(f64::total_cmp);
    let phi = CPMapAlgebra::new(alg, 2, images).expect("shapes are fixed");
    let rep = check_cp_map(&phi, 1e-12);
    json!({
        "lambda": lambda,
        "eigenvalues": eig,
        "min_eig": rep.choi_min_eig,
        "cp": rep.cp,
    })
    .to_string()
}

fn summarize(cert: &cstar_dilation::scenario::Certificate) -> Value {
    let residual = cert
        .checks
        .values()
        .filter_map(|c| match c {
            CheckEntry::Residual { value, .. } => Some(*value),
            _ => None,
        })
        .fold(0.0, f64::max);
    let spectra: serde_json::Map<String, Value> = cert
        .checks
        .iter()
        .filter_map(|(k, c)| match c {
            CheckEntry::Rank {
                singular_values, ..
            } => Some((k.clone(), json!(singular_values))),
            _ => None,
        })
        .collect();
    json!({
        "dims": cert.dims,
        "passed": cert.passed,
        "checks": cert.checks.len(),
        "failures": cert.failures(),
        "max_residual": residual,
        "singular_values": spectra,
    })
}

/// Seeded random module CP map on `C^{p x n}`, dilated and verified.
#[wasm_bindgen]
pub fn random_dilation(p: usize, n: usize, amplification: usize, seed: u64) -> String {
    let params = GenParams {
        kind: Kind::Dilate,
        p,
        n,
        group: None,
        amplification,
        seed,
    };
    let s = match generate_scenario(&params) {
        Ok(s) => s,
        Err(e) => return error(e),
    };
    let text = scenario_to_json(&s);
    match run(&s, text.as_bytes(), "random", &RunOptions::default()) {
        Ok(cert) => summarize(&cert).to_string(),
        Err(e) => error(e),
    }
}

/// Runs scenario JSON under `command` (`dilate`, `dilate-covariant`,
/// `crossed`, `uniqueness`, `verify`) and returns the full certificate.
#[wasm_bindgen]
pub fn run_scenario(text: &str, command: &str) -> String {
    let kind: Kind = match serde_json::from_value(Value::String(command.to_string())) {
        Ok(k) => k,
        Err(_) => return error(format!("unknown command {command:?}")),
    };
    let mut s = match parse_scenario(text.as_bytes()) {
        Ok(s) => s,
        Err(e) => return error(e),
    };
    s.kind = kind;
    match run(&s, text.as_bytes(), "browser", &RunOptions::default()) {
        Ok(cert) => emit_certificate(&cert, Format::Json),
        Err(e) => error(e),
    }
}
