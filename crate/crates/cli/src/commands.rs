use serde_json::{json, Value};

use ovfree::converse::counterexample_report;
use ovfree::cpmaps::CpMap;
use ovfree::freeprod::compressed_distribution_at_depth;
use ovfree::io::{self, DistSpec, MapSpec, PairSpec};
use ovfree::ovdist::{eta_power, moments_from_realization, positivity_certificate};
use ovfree::{Error, Result};

/// Largest allowed deviation in `verify-realization`.
pub const VERIFY_TOL: f64 = 1e-8;

pub const DEFAULT_ORDER: usize = 6;

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub order: Option<usize>,
    pub level: usize,
    pub depth: Option<usize>,
    pub tol: f64,
}

pub enum Outcome {
    /// Exit 0.
    Done(Value),
    /// A check ran and failed; exit 1.
    CheckFailed(Value),
    /// A precondition does not hold; exit 3 with the certificate.
    Precondition { report: Value, message: String },
}

pub fn check_cp(input: &str, opts: &Options) -> Result<Outcome> {
    let eta = io::map_from_spec(&io::parse::<MapSpec>(input)?)?;
    Ok(Outcome::Done(json!({
        "k": eta.k(),
        "eta": io::psd_json(&eta.is_cp(opts.tol)),
        "eta_minus_id": io::psd_json(&eta.eta_minus_id_cp(opts.tol)),
    })))
}

pub fn convolve_power(input: &str, opts: &Options) -> Result<Outcome> {
    let pair = io::parse::<PairSpec>(input)?;
    let eta = io::map_from_spec(&pair.map)?;
    let spec = &pair.distribution;
    let mut order = opts.order.or(spec.order);
    if spec.realization.is_some() {
        order = order.or(Some(DEFAULT_ORDER));
    }
    let d = io::dist_from_spec(spec, order)?;
    let powered = eta_power(&d, &eta)?.with_label("eta power");
    Ok(Outcome::Done(json!({
        "order": powered.order(),
        "distribution": io::dist_json(&powered)?,
    })))
}

pub fn positivity(input: &str, opts: &Options) -> Result<Outcome> {
    let spec = io::parse::<DistSpec>(input)?;
    let needed = 2 * opts.level;
    let order = match (&spec.realization, opts.order.or(spec.order)) {
        (Some(_), given) => Some(given.unwrap_or(needed).max(needed)),
        (None, given) => given,
    };
    let d = io::dist_from_spec(&spec, order)?;
    let report = positivity_certificate(&d, opts.level, opts.tol)?;
    Ok(Outcome::Done(json!({
        "level": opts.level,
        "order": d.order(),
        "report": io::psd_json(&report),
    })))
}

fn not_cp_precondition(eta: &CpMap, tol: f64) -> Option<Outcome> {
    let report = eta.eta_minus_id_cp(tol);
    if report.is_psd() {
        return None;
    }
    Some(Outcome::Precondition {
        report: json!({ "eta_minus_id": io::psd_json(&report) }),
        message: format!(
            "eta - id is not completely positive (min Choi eigenvalue {:.6e}); \
             run `ovfree counterexample` on this map",
            report.min_eigenvalue
        ),
    })
}

pub fn verify_realization(input: &str, opts: &Options) -> Result<Outcome> {
    let pair = io::parse::<PairSpec>(input)?;
    let eta = io::map_from_spec(&pair.map)?;
    let spec = pair
        .distribution
        .realization
        .as_ref()
        .ok_or_else(|| Error::Input("verify-realization needs a realization spec".into()))?;
    let r = io::realization_from_spec(pair.distribution.k, spec)?;
    if let Some(outcome) = not_cp_precondition(&eta, opts.tol) {
        return Ok(outcome);
    }
    let order = opts
        .order
        .or(pair.distribution.order)
        .unwrap_or(DEFAULT_ORDER);
    let depth = opts.depth.unwrap_or(order + 2);
    let compressed = compressed_distribution_at_depth(&r, &eta, order, depth)?;
    let powered = eta_power(&moments_from_realization(&r, order)?, &eta)?;
    let deviation = compressed.max_abs_diff(&powered);
    let pass = deviation < VERIFY_TOL;
    let report = json!({
        "order": order,
        "depth": depth,
        "max_deviation": deviation,
        "tolerance": VERIFY_TOL,
        "pass": pass,
    });
    Ok(if pass {
        Outcome::Done(report)
    } else {
        Outcome::CheckFailed(report)
    })
}

pub fn counterexample(input: &str, opts: &Options) -> Result<Outcome> {
    let eta = io::map_from_spec(&io::parse::<MapSpec>(input)?)?;
    let report = counterexample_report(&eta, opts.level, opts.tol)?;
    let value = serde_json::to_value(&report).map_err(|e| Error::Input(e.to_string()))?;
    Ok(Outcome::Done(value))
}
