//! JSON input specs and report serialization.
//!
//! Complex numbers are `[re, im]` pairs (a bare real is also accepted),
//! matrices are row-major nested arrays, and a moment or cumulant tensor of
//! arity `n` is the flat array of its values on all `(k²)^n` tuples of
//! matrix units, first argument most significant.

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::algebra::{c64, real, AlgElem, CMat, PsdReport, C64};
use crate::cpmaps::CpMap;
use crate::error::{Error, Result};
use crate::ovdist::{
    cumulants_from_moments, moments_from_cumulants, moments_from_realization, MultiMap,
    OvDistribution, Realization,
};

/// Significant digits kept by [`round_numbers`].
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Number> for C64 {
    fn from(n: Number) -> C64 {
        match n {
            Number::Real(re) => real(re),
            Number::Complex([re, im]) => c64(re, im),
        }
    }
}

pub type MatrixSpec = Vec<Vec<Number>>;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub k: usize,
    #[serde(default)]
    pub kraus: Option<Vec<MatrixSpec>>,
    #[serde(default)]
    pub choi: Option<MatrixSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    /// Diagonal state with these weights.
    Weights(Vec<f64>),
    Matrix(MatrixSpec),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationSpec {
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(rename = "X")]
    pub x: MatrixSpec,
    #[serde(default)]
    pub embedding: Option<String>,
    pub p: usize,
    /// Defaults to the normalized trace on `C^p`.
    #[serde(default)]
    pub state: Option<StateSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSpec {
    pub k: usize,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub realization: Option<RealizationSpec>,
    #[serde(default)]
    pub cumulants: Option<Vec<Vec<MatrixSpec>>>,
    #[serde(default)]
    pub moments: Option<Vec<Vec<MatrixSpec>>>,
}

/// Input of the commands that take both a distribution and a map.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub distribution: DistSpec,
    pub map: MapSpec,
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("malformed JSON: {e}")))
}

pub fn matrix(spec: &MatrixSpec) -> Result<CMat> {
    let rows = spec.len();
    let cols = spec.first().map_or(0, Vec::len);
    if let Some(bad) = spec.iter().find(|r| r.len() != cols) {
        return Err(Error::Input(format!(
            "ragged matrix: row of length {} in a matrix with {cols} columns",
            bad.len()
        )));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| spec[i][j].into()))
}

fn square(spec: &MatrixSpec, n: usize, what: &str) -> Result<CMat> {
    let m = matrix(spec)?;
    if m.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "{what} must be {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

pub fn map_from_spec(spec: &MapSpec) -> Result<CpMap> {
    let k = spec.k;
    if k == 0 {
        return Err(Error::Input("k must be positive".into()));
    }
    match (&spec.kraus, &spec.choi) {
        (Some(kraus), None) => {
            let ops = kraus
                .iter()
                .map(|m| square(m, k, "Kraus operator"))
                .collect::<Result<Vec<_>>>()?;
            CpMap::from_kraus(k, ops)
        }
        (None, Some(choi)) => CpMap::from_choi(k, square(choi, k * k, "Choi matrix")?),
        _ => Err(Error::Input(
            "map spec needs exactly one of \"kraus\" and \"choi\"".into(),
        )),
    }
}

fn tensor(k: usize, arity: usize, spec: &[MatrixSpec]) -> Result<MultiMap> {
    let values = spec
        .iter()
        .map(|m| AlgElem::new(square(m, k, "tensor entry")?))
        .collect::<Result<Vec<_>>>()?;
    MultiMap::from_values(k, arity, values)
}

fn tensors(k: usize, spec: &[Vec<MatrixSpec>]) -> Result<Vec<MultiMap>> {
    spec.iter()
        .enumerate()
        .map(|(i, t)| tensor(k, i, t))
        .collect()
}

pub fn realization_from_spec(k: usize, spec: &RealizationSpec) -> Result<Realization> {
    if let Some(e) = &spec.embedding {
        if e != "tensor-block" {
            return Err(Error::Input(format!(
                "unknown embedding {e:?}, only \"tensor-block\" is supported"
            )));
        }
    }
    let d = k * spec.p;
    if let Some(given) = spec.d {
        if given != d {
            return Err(Error::Dimension(format!("d = {given} but k p = {d}")));
        }
    }
    let x = square(&spec.x, d, "X")?;
    match &spec.state {
        None => Realization::normalized_trace(k, spec.p, x),
        Some(StateSpec::Weights(w)) => {
            if w.len() != spec.p {
                return Err(Error::Dimension(format!(
                    "state has {} weights, p = {}",
                    w.len(),
                    spec.p
                )));
            }
            Realization::with_weights(k, x, w)
        }
        Some(StateSpec::Matrix(m)) => Realization::new(k, spec.p, x, square(m, spec.p, "state")?),
    }
}

/// The distribution described by `spec`, with moments up to `order` (or
/// the input's own order, or everything the tensors determine).
pub fn dist_from_spec(spec: &DistSpec, order: Option<usize>) -> Result<OvDistribution> {
    let k = spec.k;
    if k == 0 {
        return Err(Error::Input("k must be positive".into()));
    }
    let label = spec.label.clone().unwrap_or_else(|| "input".into());
    let order = order.or(spec.order);
    let d = match (&spec.realization, &spec.cumulants, &spec.moments) {
        (Some(r), None, None) => {
            let order = order.ok_or_else(|| Error::Input("realization needs an order".into()))?;
            moments_from_realization(&realization_from_spec(k, r)?, order)?
        }
        (None, Some(c), None) => {
            let cums = tensors(k, c)?;
            let n = order.unwrap_or(cums.len());
            if n > cums.len() {
                return Err(Error::Input(format!(
                    "order {n} needs {n} cumulant tensors, got {}",
                    cums.len()
                )));
            }
            moments_from_cumulants(&cums[..n], n)?
        }
        (None, None, Some(m)) => {
            let full = OvDistribution::new(k, tensors(k, m)?, label.clone())?;
            match order {
                Some(n) => full.truncate(n)?,
                None => full,
            }
        }
        _ => return Err(Error::Input(
            "distribution spec needs exactly one of \"realization\", \"cumulants\", \"moments\""
                .into(),
        )),
    };
    Ok(d.with_label(label))
}

pub fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn tensor_json(t: &MultiMap) -> Value {
    Value::Array(t.values().iter().map(|v| matrix_json(v.matrix())).collect())
}

pub fn psd_json(r: &PsdReport) -> Value {
    json!({
        "psd": r.is_psd(),
        "min_eigenvalue": r.min_eigenvalue,
        "tol": r.tol,
        "witness": r.witness.as_ref().map(|v| Value::Array(v.iter().map(|&z| complex_json(z)).collect())),
    })
}

/// Moments and cumulants of `d`.
pub fn dist_json(d: &OvDistribution) -> Result<Value> {
    let cums = cumulants_from_moments(d)?;
    Ok(json!({
        "label": d.label(),
        "k": d.k(),
        "order": d.order(),
        "moments": d.moments().iter().map(tensor_json).collect::<Vec<_>>(),
        "cumulants": cums.iter().map(tensor_json).collect::<Vec<_>>(),
    }))
}

/// `x` rounded to [`SIGNIFICANT_DIGITS`] significant digits; `-0` becomes `0`.
pub fn round_significant(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Rounds every float in `v`; integers are left alone.
pub fn round_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_significant(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_numbers).collect()),
        Value::Object(o) => Value::Object(
            o.into_iter()
                .map(|(key, val)| (key, round_numbers(val)))
                .collect::<Map<_, _>>(),
        ),
        other => other,
    }
}

/// Canonical report text: rounded numbers, sorted keys, pretty-printed,
/// trailing newline.
pub fn to_canonical_string(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&round_numbers(v)).expect("JSON values serialize");
    s.push('\n');
    s
}
