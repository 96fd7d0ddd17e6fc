//! Metric reports comparing a prediction against ground truth.

use num_rational::Ratio;
use serde_json::{json, Map, Value};

use crate::chimap::{chi_map, ChiMapParams};
use crate::error::Result;
use crate::grid::BinaryGrid;
use crate::homology::{betti, betti_error, dice, BettiError, BettiVector};
use crate::pattern::chi;
use crate::tvd::chi_error;

/// Digits kept when a fraction has no finite decimal expansion.
const DECIMAL_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub chi_pred: i64,
    pub chi_gt: i64,
    pub betti_pred: BettiVector,
    pub betti_gt: BettiVector,
    pub betti_error: BettiError,
    pub dice: Ratio<u64>,
    pub chi_error: Ratio<u64>,
    pub params: ChiMapParams,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
}

impl MetricsReport {
    pub fn compute(pred: &BinaryGrid, gt: &BinaryGrid, params: &ChiMapParams) -> Result<Self> {
        pred.require_same_shape(gt)?;
        let betti_pred = betti(pred)?;
        let betti_gt = betti(gt)?;
        let err = chi_error(&chi_map(pred, params)?, &chi_map(gt, params)?)?;
        Ok(Self {
            chi_pred: chi(pred)?,
            chi_gt: chi(gt)?,
            betti_error: betti_error(&betti_pred, &betti_gt)?,
            betti_pred,
            betti_gt,
            dice: dice(pred, gt)?,
            chi_error: err.value(),
            params: *params,
            threshold: None,
            seed: None,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut params = Map::new();
        params.insert("patch".into(), json!(self.params.patch));
        params.insert("stride".into(), json!(self.params.stride));
        params.insert("mode".into(), json!(self.params.mode.to_string()));
        params.insert("threshold".into(), json!(self.threshold));
        params.insert("seed".into(), json!(self.seed));

        let mut obj = Map::new();
        obj.insert("chi_pred".into(), json!(self.chi_pred));
        obj.insert("chi_gt".into(), json!(self.chi_gt));
        obj.insert("betti_pred".into(), json!(self.betti_pred.betti));
        obj.insert("betti_gt".into(), json!(self.betti_gt.betti));
        obj.insert("betti_error_per_dim".into(), json!(self.betti_error.per_dim));
        obj.insert("betti_error_mean".into(), exact_number(self.betti_error.mean));
        obj.insert("betti_error_sum".into(), json!(self.betti_error.sum));
        obj.insert("dice".into(), exact_number(self.dice));
        obj.insert("chi_error".into(), exact_number(self.chi_error));
        obj.insert("params".into(), Value::Object(params));
        Value::Object(obj)
    }
}

/// Serializes a report as pretty JSON with sorted keys and a final newline.
pub fn write_metrics(report: &MetricsReport) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&report.to_json()).expect("report values always serialize");
    out.push(b'\n');
    out
}

/// Integers become JSON integers; other fractions become decimal strings,
/// exact when the expansion terminates.
pub fn exact_number(r: Ratio<u64>) -> Value {
    if r.is_integer() {
        return json!(r.to_integer());
    }
    Value::String(decimal_string(r))
}

pub fn decimal_string(r: Ratio<u64>) -> String {
    let (n, d) = (*r.numer() as u128, *r.denom() as u128);
    let int = n / d;
    let mut rem = n % d;
    let mut digits = String::new();
    let mut denom = d;
    while denom % 2 == 0 {
        denom /= 2;
    }
    while denom % 5 == 0 {
        denom /= 5;
    }
    let terminates = denom == 1;
    let limit = if terminates { usize::MAX } else { DECIMAL_DIGITS + 1 };
    while rem != 0 && digits.len() < limit {
        rem *= 10;
        digits.push(char::from(b'0' + (rem / d) as u8));
        rem %= d;
    }
    if !terminates {
        // round half up on the extra digit
        let last = digits.pop().map(|c| c as u8 - b'0').unwrap_or(0);
        let mut bytes: Vec<u8> = digits.into_bytes();
        let mut int = int;
        if last >= 5 {
            let mut k = bytes.len();
            loop {
                if k == 0 {
                    int += 1;
                    break;
                }
                k -= 1;
                if bytes[k] == b'9' {
                    bytes[k] = b'0';
                } else {
                    bytes[k] += 1;
                    break;
                }
            }
        }
        return format!("{int}.{}", String::from_utf8(bytes).unwrap());
    }
    format!("{int}.{digits}")
}
