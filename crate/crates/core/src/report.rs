//! Statistic reports with provenance, and JSON rendering helpers shared by
//! the CLI and tests.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value as Json};

/// How a reported number was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Enumeration,
    TransferDp,
    ChainIdentityDp,
    MonteCarlo,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Enumeration => "enumeration",
            Method::TransferDp => "transfer-dp",
            Method::ChainIdentityDp => "chain-identity-dp",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

/// An exact rational or floating value.
#[derive(Debug, Clone, PartialEq)]
pub enum ReportValue {
    Exact(BigRational),
    Real(f64),
}

impl ReportValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            ReportValue::Exact(r) => ratio_to_f64(r),
            ReportValue::Real(v) => *v,
        }
    }
}

/// A statistic with its provenance; exact methods carry no standard error.
#[derive(Debug, Clone)]
pub struct StatReport {
    pub method: Method,
    pub n: Option<usize>,
    pub c_lek: Option<f64>,
    pub d: Option<f64>,
    pub sigma2: Option<f64>,
    pub value: Option<ReportValue>,
    pub stderr: Option<f64>,
}

impl StatReport {
    pub fn new(method: Method) -> Self {
        StatReport {
            method,
            n: None,
            c_lek: None,
            d: None,
            sigma2: None,
            value: None,
            stderr: None,
        }
    }

    pub fn with_value(mut self, v: ReportValue) -> Self {
        self.value = Some(v);
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn to_json(&self) -> Json {
        let mut obj = serde_json::Map::new();
        obj.insert("method".into(), json!(self.method.tag()));
        if let Some(n) = self.n {
            obj.insert("n".into(), json!(n));
        }
        if let Some(v) = self.c_lek {
            obj.insert("c_lek".into(), json!(v));
        }
        if let Some(v) = self.d {
            obj.insert("d".into(), json!(v));
        }
        if let Some(v) = self.sigma2 {
            obj.insert("sigma2".into(), json!(v));
        }
        match &self.value {
            Some(ReportValue::Exact(r)) => {
                obj.insert("value".into(), rational_json(r));
            }
            Some(ReportValue::Real(v)) => {
                obj.insert("value".into(), json!(v));
            }
            None => {}
        }
        if let Some(v) = self.stderr {
            obj.insert("stderr".into(), json!(v));
        }
        Json::Object(obj)
    }
}

/// Converts an exact rational to the nearest `f64`, robust to numerators and
/// denominators far beyond the `f64` range.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let negative = r.is_negative();
    let num = r.numer().abs();
    let den = r.denom().abs();
    // Shift the numerator so the quotient keeps at least 80 significant
    // bits even for values far below 1.
    let extra = den.bits().saturating_sub(num.bits());
    if extra > 1100 {
        return if negative { -0.0 } else { 0.0 }; // below f64 subnormals
    }
    let shift = 80 + extra as i32;
    let q = (num << (shift as u32)) / den;
    let mag = match q.to_f64() {
        Some(v) if v.is_finite() => v * 2f64.powi(-shift),
        _ => f64::INFINITY,
    };
    if negative {
        -mag
    } else {
        mag
    }
}

/// Exact rational as `{num, den, decimal}` with string numerator/denominator.
pub fn rational_json(r: &BigRational) -> Json {
    json!({
        "num": r.numer().to_string(),
        "den": r.denom().to_string(),
        "decimal": ratio_to_f64(r),
    })
}

/// Big integer as a JSON string (exact at any size).
pub fn bigint_json(v: &BigInt) -> Json {
    json!(v.to_string())
}
