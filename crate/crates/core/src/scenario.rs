//! Input data types, unit conversions and the scenario configuration format.
//!
//! SNRs are kept in linear units everywhere; decibels only appear when a
//! document is loaded or a value is printed.
//!
//! A scenario document is a flat JSON object:
//!
//! ```json
//! {
//!   "delta_a_db": 20, "delta_b_db": 10,
//!   "lambda_a": 1, "lambda_b": 2, "lambda_r": 1,
//!   "r_s": 0.1, "r_0": 3, "r_b": 2, "r_r": 7,
//!   "a1": 1, "a2": 1, "beta_ratio": 0.95,
//!   "model": "as-printed"
//! }
//! ```
//!
//! `a1`, `a2`, `beta_ratio` and `model` are optional. Any other key is rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub fn db_to_linear(x_db: f64) -> Result<f64> {
    if !x_db.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite dB value {x_db}")));
    }
    Ok(10f64.powf(x_db / 10.0))
}

pub fn linear_to_db(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::InvalidInput(format!(
            "linear ratio must be finite and positive, got {x}"
        )));
    }
    Ok(10.0 * x.log10())
}

fn check_nonneg(key: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::invalid(key, "not finite"));
    }
    if v < 0.0 {
        return Err(Error::invalid(key, format!("must be >= 0, got {v}")));
    }
    Ok(())
}

fn check_positive(key: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(key, format!("must be finite and > 0, got {v}")));
    }
    Ok(())
}

/// Linear SNRs of the Alice–Ray and Bob–Ray links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegitimateChannel {
    pub delta_a: f64,
    pub delta_b: f64,
}

impl LegitimateChannel {
    pub fn new(delta_a: f64, delta_b: f64) -> Result<Self> {
        check_nonneg("delta_a", delta_a)?;
        check_nonneg("delta_b", delta_b)?;
        Ok(Self { delta_a, delta_b })
    }

    pub fn from_db(delta_a_db: f64, delta_b_db: f64) -> Result<Self> {
        Self::new(db_to_linear(delta_a_db)?, db_to_linear(delta_b_db)?)
    }
}

/// Exponential rates of Eve's squared channel gains. `1/lambda_x` is the
/// average SNR of the x–Eve link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveFadingParams {
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub lambda_r: f64,
}

impl EveFadingParams {
    pub fn new(lambda_a: f64, lambda_b: f64, lambda_r: f64) -> Result<Self> {
        check_positive("lambda_a", lambda_a)?;
        check_positive("lambda_b", lambda_b)?;
        check_positive("lambda_r", lambda_r)?;
        Ok(Self {
            lambda_a,
            lambda_b,
            lambda_r,
        })
    }

    /// Scale used by the branch-singularity tolerance of the closed forms.
    pub(crate) fn scale(&self) -> f64 {
        1.0 + self.lambda_a.abs() + self.lambda_b.abs() + self.lambda_r.abs()
    }
}

/// Rates in bit/s/Hz. `r_a` is always `r_0 + r_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateAllocation {
    r_s: f64,
    r_0: f64,
    r_b: f64,
    r_r: f64,
    r_a: f64,
}

impl RateAllocation {
    pub fn new(r_s: f64, r_0: f64, r_b: f64, r_r: f64) -> Result<Self> {
        for (key, v) in [("r_s", r_s), ("r_0", r_0), ("r_b", r_b), ("r_r", r_r)] {
            if !v.is_finite() {
                return Err(Error::invalid(key, "not finite"));
            }
            if v < 0.0 {
                return Err(Error::NegativeRate {
                    key: key.to_string(),
                    value: v,
                });
            }
        }
        Ok(Self {
            r_s,
            r_0,
            r_b,
            r_r,
            r_a: r_0 + r_s,
        })
    }

    /// Builds the allocation from Alice's total rate; `r_0 = r_a - r_s`.
    pub fn from_total(r_a: f64, r_s: f64, r_b: f64, r_r: f64) -> Result<Self> {
        let r_0 = r_a - r_s;
        if r_0 < 0.0 {
            return Err(Error::NegativeRate {
                key: "r_0".into(),
                value: r_0,
            });
        }
        Self::new(r_s, r_0, r_b, r_r)
    }

    pub fn r_s(&self) -> f64 {
        self.r_s
    }
    pub fn r_0(&self) -> f64 {
        self.r_0
    }
    pub fn r_b(&self) -> f64 {
        self.r_b
    }
    pub fn r_r(&self) -> f64 {
        self.r_r
    }
    pub fn r_a(&self) -> f64 {
        self.r_a
    }

    /// Rate of the random binning message Ray uses in the second phase.
    ///
    /// Negative under [`RayRateConvention::TotalRate`] when `r_a > r_r`;
    /// callers treat that as infeasible.
    pub fn phase2_random_rate(&self, convention: RayRateConvention) -> f64 {
        match convention {
            RayRateConvention::RandomRate => self.r_r,
            RayRateConvention::TotalRate => self.r_r - self.r_a,
        }
    }

    /// Rate of Ray's second-phase codeword.
    pub fn ray_codeword_rate(&self, convention: RayRateConvention) -> f64 {
        match convention {
            RayRateConvention::RandomRate => self.r_r + self.r_a,
            RayRateConvention::TotalRate => self.r_r,
        }
    }
}

/// Integer combination coefficients and lattice scaling factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeScaling {
    pub a1: i64,
    pub a2: i64,
    pub beta_a: f64,
    pub beta_b: f64,
}

impl LatticeScaling {
    pub fn new(a1: i64, a2: i64, beta_a: f64, beta_b: f64) -> Result<Self> {
        if a1 == 0 {
            return Err(Error::invalid("a1", "must be a nonzero integer"));
        }
        if a2 == 0 {
            return Err(Error::invalid("a2", "must be a nonzero integer"));
        }
        check_positive("beta_a", beta_a)?;
        check_positive("beta_b", beta_b)?;
        Ok(Self {
            a1,
            a2,
            beta_a,
            beta_b,
        })
    }

    /// `a1 = a2 = 1`, `beta_b = 1` and `beta_a = ratio`.
    pub fn unit_with_ratio(ratio: f64) -> Result<Self> {
        check_positive("beta_ratio", ratio)?;
        Ok(Self {
            a1: 1,
            a2: 1,
            beta_a: ratio,
            beta_b: 1.0,
        })
    }

    pub fn ratio(&self) -> f64 {
        self.beta_a / self.beta_b
    }
}

/// Which form of the relay effective-noise expression to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MnForm {
    /// `(a1 βA)² δA²` and `(a2 βB)² δB`, exactly as typeset.
    AsPrinted,
    /// Both self terms squared in the SNR: `(a1 βA)² δA²` and `(a2 βB)² δB²`.
    SymmetrizedSquare,
    /// Both self terms linear in the SNR: `(a1 βA)² δA` and `(a2 βB)² δB`.
    Linear,
}

/// Which form of the Ray→Bob forwarding constraint to enforce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelayForm {
    /// `log2(1 + δB²) >= Ray's codeword rate`.
    AsPrinted,
    /// `log2(1 + δB) >= Ray's codeword rate`.
    Linear,
    Disabled,
}

/// How `r_r` relates to Ray's second-phase transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RayRateConvention {
    /// `r_r` is the random binning rate; Ray's codeword carries `r_r + r_a`.
    RandomRate,
    /// `r_r` is Ray's codeword rate; the random binning rate is `r_r - r_a`.
    TotalRate,
}

/// Model conventions that the closed forms leave open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub mn_form: MnForm,
    pub relay_form: RelayForm,
    pub ray_rate: RayRateConvention,
}

impl ModelOptions {
    /// Every expression exactly as typeset.
    pub const fn as_printed() -> Self {
        Self {
            mn_form: MnForm::AsPrinted,
            relay_form: RelayForm::AsPrinted,
            ray_rate: RayRateConvention::RandomRate,
        }
    }

    /// Conventions under which the published rate-region and outage figures
    /// are reproduced: linear effective noise, no forwarding constraint, and
    /// `r_r` read as Ray's total second-phase rate.
    pub const fn figure_reproduction() -> Self {
        Self {
            mn_form: MnForm::Linear,
            relay_form: RelayForm::Disabled,
            ray_rate: RayRateConvention::TotalRate,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "as-printed" => Ok(Self::as_printed()),
            "figure-reproduction" => Ok(Self::figure_reproduction()),
            other => Err(Error::invalid(
                "model",
                format!("expected \"as-printed\" or \"figure-reproduction\", got {other:?}"),
            )),
        }
    }
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self::as_printed()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    pub channel: LegitimateChannel,
    pub fading: EveFadingParams,
    pub rates: RateAllocation,
    /// `None` means `a1 = a2 = 1` with the secrecy-optimal β ratio.
    pub scaling: Option<LatticeScaling>,
    pub model: ModelOptions,
}

impl Scenario {
    /// Explicit scaling, or `a1 = a2 = 1` with the secrecy-optimal β ratio.
    pub fn effective_scaling(&self) -> Result<LatticeScaling> {
        match self.scaling {
            Some(s) => Ok(s),
            None => LatticeScaling::unit_with_ratio(crate::rates::optimal_beta_ratio(
                &self.channel,
            )?),
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        load_scenario(&text)
    }
}

const REQUIRED_KEYS: [&str; 9] = [
    "delta_a_db",
    "delta_b_db",
    "lambda_a",
    "lambda_b",
    "lambda_r",
    "r_s",
    "r_0",
    "r_b",
    "r_r",
];
const OPTIONAL_KEYS: [&str; 4] = ["a1", "a2", "beta_ratio", "model"];

fn number(map: &Map<String, Value>, key: &str) -> Result<f64> {
    match map.get(key) {
        None => Err(Error::MissingField(key.to_string())),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::invalid(key, format!("expected a number, got {v}"))),
    }
}

fn integer(map: &Map<String, Value>, key: &str) -> Result<Option<i64>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_i64()
            .map(Some)
            .ok_or_else(|| Error::invalid(key, format!("expected an integer, got {v}"))),
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(document: &str) -> Result<Scenario> {
    let value: Value =
        serde_json::from_str(document).map_err(|e| Error::Malformed(e.to_string()))?;
    let map = value
        .as_object()
        .ok_or_else(|| Error::Malformed("top level must be an object".into()))?;

    if let Some(key) = map
        .keys()
        .find(|k| !REQUIRED_KEYS.contains(&k.as_str()) && !OPTIONAL_KEYS.contains(&k.as_str()))
    {
        return Err(Error::UnknownField(key.clone()));
    }
    for key in REQUIRED_KEYS {
        if !map.contains_key(key) {
            return Err(Error::MissingField(key.to_string()));
        }
    }

    let delta_a = db_to_linear(number(map, "delta_a_db")?)
        .map_err(|_| Error::invalid("delta_a_db", "not finite"))?;
    let delta_b = db_to_linear(number(map, "delta_b_db")?)
        .map_err(|_| Error::invalid("delta_b_db", "not finite"))?;
    let channel = LegitimateChannel::new(delta_a, delta_b)?;
    let fading = EveFadingParams::new(
        number(map, "lambda_a")?,
        number(map, "lambda_b")?,
        number(map, "lambda_r")?,
    )?;
    let rates = RateAllocation::new(
        number(map, "r_s")?,
        number(map, "r_0")?,
        number(map, "r_b")?,
        number(map, "r_r")?,
    )?;

    let a1 = integer(map, "a1")?;
    let a2 = integer(map, "a2")?;
    let ratio = match map.get("beta_ratio") {
        None => None,
        Some(_) => Some(number(map, "beta_ratio")?),
    };
    let scaling = if a1.is_none() && a2.is_none() && ratio.is_none() {
        None
    } else {
        let ratio = match ratio {
            Some(r) => r,
            None => crate::rates::optimal_beta_ratio(&channel)
                .map_err(|e| Error::invalid("beta_ratio", e.to_string()))?,
        };
        check_positive("beta_ratio", ratio)?;
        Some(LatticeScaling::new(a1.unwrap_or(1), a2.unwrap_or(1), ratio, 1.0)?)
    };

    let model = match map.get("model") {
        None => ModelOptions::default(),
        Some(Value::String(s)) => ModelOptions::from_name(s)?,
        Some(v) => return Err(Error::invalid("model", format!("expected a string, got {v}"))),
    };

    Ok(Scenario {
        channel,
        fading,
        rates,
        scaling,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIG1: &str = r#"{
        "delta_a_db": 20, "delta_b_db": 10,
        "lambda_a": 1, "lambda_b": 2, "lambda_r": 1,
        "r_s": 0.1, "r_0": 3, "r_b": 2, "r_r": 7
    }"#;

    #[test]
    fn db_conversions() {
        assert_eq!(db_to_linear(20.0).unwrap(), 100.0);
        assert_eq!(db_to_linear(0.0).unwrap(), 1.0);
        assert_eq!(db_to_linear(10.0).unwrap(), 10.0);
        assert!(db_to_linear(f64::NAN).is_err());
        assert!(db_to_linear(f64::INFINITY).is_err());
        assert!(linear_to_db(0.0).is_err());
    }

    proptest! {
        #[test]
        fn db_round_trip(exp in -6.0f64..6.0) {
            let x = 10f64.powf(exp);
            let back = db_to_linear(linear_to_db(x).unwrap()).unwrap();
            prop_assert!(((back - x) / x).abs() <= 1e-12);
        }

        #[test]
        fn r_a_is_sum(r_s in 0.0f64..10.0, r_0 in 0.0f64..10.0) {
            let r = RateAllocation::new(r_s, r_0, 1.0, 1.0).unwrap();
            prop_assert_eq!(r.r_a(), r_0 + r_s);
        }
    }

    #[test]
    fn loads_figure_parameters() {
        let s = load_scenario(FIG1).unwrap();
        assert_eq!(s.channel.delta_a, 100.0);
        assert_eq!(s.channel.delta_b, 10.0);
        assert_eq!(s.rates.r_a(), 3.1);
        assert_eq!(s.fading.lambda_b, 2.0);
        assert!(s.scaling.is_none());
        assert_eq!(s.model, ModelOptions::as_printed());
    }

    #[test]
    fn missing_key_is_named() {
        let doc = FIG1.replace("\"lambda_b\": 2,", "");
        match load_scenario(&doc) {
            Err(Error::MissingField(k)) => assert_eq!(k, "lambda_b"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_rate_is_rejected() {
        let doc = FIG1.replace("\"r_s\": 0.1", "\"r_s\": -1");
        let err = load_scenario(&doc).unwrap_err();
        assert!(matches!(err, Error::NegativeRate { ref key, .. } if key == "r_s"));
        assert!(err.to_string().contains("negative rate"));
    }

    #[test]
    fn non_positive_lambda_and_unknown_keys() {
        let doc = FIG1.replace("\"lambda_r\": 1", "\"lambda_r\": 0");
        let err = load_scenario(&doc).unwrap_err();
        assert!(err.to_string().contains("lambda_r"));

        let doc = FIG1.replace("\"r_r\": 7", "\"r_r\": 7, \"lamda_a\": 3");
        assert!(matches!(load_scenario(&doc), Err(Error::UnknownField(k)) if k == "lamda_a"));

        assert!(matches!(load_scenario("[1,2]"), Err(Error::Malformed(_))));
        assert!(matches!(load_scenario("{"), Err(Error::Malformed(_))));
    }

    #[test]
    fn optional_scaling_and_model() {
        let doc = FIG1.replace(
            "\"r_r\": 7",
            "\"r_r\": 7, \"a1\": 2, \"beta_ratio\": 0.5, \"model\": \"figure-reproduction\"",
        );
        let s = load_scenario(&doc).unwrap();
        let sc = s.scaling.unwrap();
        assert_eq!((sc.a1, sc.a2, sc.beta_a, sc.beta_b), (2, 1, 0.5, 1.0));
        assert_eq!(s.model, ModelOptions::figure_reproduction());

        let doc = FIG1.replace("\"r_r\": 7", "\"r_r\": 7, \"a2\": 0");
        assert!(load_scenario(&doc).unwrap_err().to_string().contains("a2"));
        let doc = FIG1.replace("\"r_r\": 7", "\"r_r\": 7, \"model\": \"nope\"");
        assert!(load_scenario(&doc).unwrap_err().to_string().contains("model"));
    }

    #[test]
    fn phase2_rates() {
        let r = RateAllocation::new(0.1, 3.0, 2.0, 7.0).unwrap();
        assert_eq!(r.phase2_random_rate(RayRateConvention::RandomRate), 7.0);
        assert_eq!(r.ray_codeword_rate(RayRateConvention::RandomRate), 7.0 + 3.1);
        assert_eq!(r.phase2_random_rate(RayRateConvention::TotalRate), 7.0 - 3.1);
        assert_eq!(r.ray_codeword_rate(RayRateConvention::TotalRate), 7.0);
    }
}
