//! JSON and CSV encodings of matrices, states, duality results, reports and
//! trajectories.
//!
//! JSON numbers use the shortest representation that reads back to the same
//! `f64`; CSV cells carry 17 significant digits.

use std::io::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::duality::DualityResiduals;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::kernel::CMatrix;
use crate::model::{Coupling, ModelState, OrbitVector, RsState, SutherlandState};
use crate::reduction::{KElement, UnreducedPoint};
use crate::verify::VerifyReport;

fn invalid(msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(msg.to_string())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJson {
    n: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

pub fn matrix_to_json(m: &CMatrix<f64>) -> Value {
    let rows = |f: fn(&Complex<f64>) -> f64| -> Vec<Vec<f64>> { m.rows().map(|r| r.iter().map(f).collect()).collect() };
    json!(MatrixJson {
        n: m.n(),
        re: rows(|z| z.re),
        im: rows(|z| z.im),
    })
}

pub fn matrix_from_json(v: &Value) -> Result<CMatrix<f64>> {
    let m: MatrixJson = serde_json::from_value(v.clone()).map_err(|e| invalid(format!("matrix: {e}")))?;
    let out = CMatrix::from_parts(&m.re, &m.im)?;
    if out.n() != m.n {
        return Err(Error::DimensionMismatch {
            expected: m.n,
            found: out.n(),
        });
    }
    out.ensure_finite("matrix")?;
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
enum StateJson {
    Sutherland {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
        q: Vec<f64>,
        p: Vec<f64>,
    },
    Rs {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
        p_hat: Vec<f64>,
        q_hat: Vec<f64>,
    },
}

/// A state read from JSON, with the coupling it declares, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFile {
    pub state: ModelState<f64>,
    pub kappa: Option<f64>,
}

fn check_len(what: &str, n: usize, v: &[f64]) -> Result<()> {
    if v.len() != n {
        return Err(invalid(format!("{what} has {} entries, expected n = {n}", v.len())));
    }
    Ok(())
}

fn state_from_json(raw: StateJson) -> Result<StateFile> {
    let (state, kappa) = match raw {
        StateJson::Sutherland { n, kappa, q, p } => {
            check_len("q", n, &q)?;
            check_len("p", n, &p)?;
            (ModelState::Sutherland(SutherlandState::new(q, p)?), kappa)
        }
        StateJson::Rs { n, kappa, p_hat, q_hat } => {
            check_len("p_hat", n, &p_hat)?;
            check_len("q_hat", n, &q_hat)?;
            (ModelState::Rs(RsState::new(p_hat, q_hat)?), kappa)
        }
    };
    if state.n() == 0 {
        return Err(invalid("n must be positive"));
    }
    if let Some(k) = kappa {
        Coupling::new(k, state.n())?;
    }
    Ok(StateFile { state, kappa })
}

/// Parses and validates a state document; chamber violations are errors.
pub fn parse_state(text: &str) -> Result<StateFile> {
    let raw: StateJson = serde_json::from_str(text).map_err(|e| invalid(format!("state: {e}")))?;
    state_from_json(raw)
}

pub fn state_to_json(s: &ModelState<f64>, kappa: Option<f64>) -> Value {
    let raw = match s {
        ModelState::Sutherland(x) => StateJson::Sutherland {
            n: x.n(),
            kappa,
            q: x.q.clone(),
            p: x.p.clone(),
        },
        ModelState::Rs(x) => StateJson::Rs {
            n: x.n(),
            kappa,
            p_hat: x.p_hat.clone(),
            q_hat: x.q_hat.clone(),
        },
    };
    json!(raw)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorJson {
    re: Vec<f64>,
    im: Vec<f64>,
}

pub fn unreduced_to_json(pt: &UnreducedPoint<f64>) -> Value {
    let v = pt.orbit.as_slice();
    json!({
        "g": matrix_to_json(&pt.group),
        "J": matrix_to_json(&pt.momentum),
        "v": VectorJson {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        },
    })
}

pub fn unreduced_from_json(v: &Value) -> Result<UnreducedPoint<f64>> {
    let obj = v.as_object().ok_or_else(|| invalid("unreduced point must be an object"))?;
    if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "g" | "J" | "v")) {
        return Err(invalid(format!("unreduced point: unknown field {k}")));
    }
    let field = |k: &str| obj.get(k).ok_or_else(|| invalid(format!("unreduced point: missing field {k}")));
    let group = matrix_from_json(field("g")?)?;
    let momentum = matrix_from_json(field("J")?)?;
    let vec: VectorJson = serde_json::from_value(field("v")?.clone()).map_err(|e| invalid(format!("v: {e}")))?;
    if vec.re.len() != vec.im.len() || vec.re.len() != group.n() || momentum.n() != group.n() {
        return Err(Error::DimensionMismatch {
            expected: group.n(),
            found: vec.re.len(),
        });
    }
    let orbit = OrbitVector::new(vec.re.iter().zip(&vec.im).map(|(r, i)| Complex::new(*r, *i)).collect())?;
    Ok(UnreducedPoint { group, momentum, orbit })
}

fn residuals_to_json(r: &DualityResiduals<f64>) -> Value {
    json!({
        "constraint": r.constraint,
        "slice": r.slice,
        "transform": r.transform,
        "roundtrip": r.roundtrip,
    })
}

pub fn duality_result_to_json(
    state: &ModelState<f64>,
    kappa: f64,
    transform: &KElement<f64>,
    residuals: &DualityResiduals<f64>,
) -> Value {
    json!({
        "state": state_to_json(state, Some(kappa)),
        "eta_L": matrix_to_json(&transform.eta_l),
        "eta_R": matrix_to_json(&transform.eta_r),
        "residuals": residuals_to_json(residuals),
    })
}

/// A Lax matrix with its eigenvalues in descending order.
pub fn lax_to_json(m: &CMatrix<f64>, eigenvalues: &[f64]) -> Value {
    json!({ "matrix": matrix_to_json(m), "eigenvalues": eigenvalues })
}

pub fn report_to_json(r: &VerifyReport) -> Value {
    json!(r)
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Formats a number with 17 significant digits.
pub fn format_sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV header `t,q1..qn,p1..pn,H1..Hn` or `t,p_hat1..,q_hat1..,Hhat1..`.
pub fn trajectory_header(model: &ModelState<f64>) -> Vec<String> {
    let n = model.n();
    let names: [&str; 3] = match model {
        ModelState::Sutherland(_) => ["q", "p", "H"],
        ModelState::Rs(_) => ["p_hat", "q_hat", "Hhat"],
    };
    std::iter::once("t".to_string())
        .chain(names.iter().flat_map(|b| (1..=n).map(move |i| format!("{b}{i}"))))
        .collect()
}

/// Writes one row per sample; `template` fixes the column layout.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory<f64>, template: &ModelState<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| invalid(format!("csv: {e}"));
    w.write_record(trajectory_header(template)).map_err(io_err)?;
    for ((t, s), h) in traj.times.iter().zip(&traj.states).zip(&traj.conserved) {
        let row = std::iter::once(*t).chain(s.darboux()).chain(h.iter().copied()).map(format_sci);
        w.write_record(row).map_err(io_err)?;
    }
    w.flush().map_err(|e| invalid(format!("csv: {e}")))?;
    Ok(())
}
