//! Closed-form region integrals and the outage bound built from them.
//!
//! `Z(A, B, C, D, C', D', E, F)` is the probability mass of
//!
//! ```text
//! A <= q_r <= B
//! D q_r + D' <= q_b <= C q_r + C'
//! E (q_r / phi - 1 - q_b) <= q_a <= F q_r + F - q_b
//! ```
//!
//! under independent exponential gains. It splits as `T2 - T1`, one term per
//! end of the `q_a` range, and each term is a difference of two one-sided
//! pieces (`x = C` paired with `C'`, `x = D` paired with `D'`).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{derive_thresholds_with, Thresholds};
use crate::oracles::quadrature::z_quadrature;
use crate::rates::check_decodability;
use crate::scenario::{EveFadingParams, Scenario};

/// A coefficient `k` is zero when `|k| <= SINGULAR_REL_TOL * (1 + λA + λB + λR)`.
pub const SINGULAR_REL_TOL: f64 = 1e-12;
/// Below this (scaled) magnitude both the generic and the limiting branch
/// are evaluated and compared.
pub const NEAR_SINGULAR: f64 = 1e-6;
/// Between the singular tolerance and this magnitude the limiting branch is
/// the more accurate of the two and is the one returned.
const LIMIT_PREFERRED: f64 = 1.5e-8;

/// Relative disagreement with quadrature that counts as an erratum.
pub const ERRATUM_REL_TOL: f64 = 1e-6;
/// Absolute floor of the erratum test, for values near zero.
pub const ERRATUM_ABS_TOL: f64 = 1e-10;

/// Upper `q_r` limit: a finite value or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LimitRepr", into = "LimitRepr")]
pub enum UpperLimit {
    Finite(f64),
    Infinity,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LimitRepr {
    Number(f64),
    Text(String),
}

impl From<UpperLimit> for LimitRepr {
    fn from(b: UpperLimit) -> Self {
        match b {
            UpperLimit::Finite(v) => LimitRepr::Number(v),
            UpperLimit::Infinity => LimitRepr::Text("inf".into()),
        }
    }
}

impl TryFrom<LimitRepr> for UpperLimit {
    type Error = String;
    fn try_from(r: LimitRepr) -> std::result::Result<Self, String> {
        match r {
            LimitRepr::Number(v) => Ok(UpperLimit::from(v)),
            LimitRepr::Text(s) => s.parse().map_err(|e: Error| e.to_string()),
        }
    }
}

impl From<f64> for UpperLimit {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            UpperLimit::Infinity
        } else {
            UpperLimit::Finite(v)
        }
    }
}

impl FromStr for UpperLimit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" | "∞" => Ok(UpperLimit::Infinity),
            t => t
                .parse::<f64>()
                .map(UpperLimit::from)
                .map_err(|_| Error::InvalidInput(format!("not a number or \"inf\": {s:?}"))),
        }
    }
}

impl fmt::Display for UpperLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpperLimit::Finite(v) => write!(f, "{v}"),
            UpperLimit::Infinity => f.write_str("inf"),
        }
    }
}

impl UpperLimit {
    pub fn as_f64(&self) -> f64 {
        match *self {
            UpperLimit::Finite(v) => v,
            UpperLimit::Infinity => f64::INFINITY,
        }
    }
}

/// Parameters of one region integral.
///
/// Field names follow the defining integral: the `q_b` band is
/// `[d q_r + d_prime, c q_r + c_prime]`. The case lists write their
/// arguments in a different order; see [`ZSpec::from_table_args`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZSpec {
    pub a: f64,
    pub b: UpperLimit,
    pub c: f64,
    pub d: f64,
    pub c_prime: f64,
    pub d_prime: f64,
    pub e: f64,
    pub f: f64,
}

impl ZSpec {
    /// Arguments in the order of the defining integral's signature.
    #[allow(clippy::too_many_arguments)]
    pub const fn new(a: f64, b: UpperLimit, c: f64, d: f64, c_prime: f64, d_prime: f64, e: f64, f: f64) -> Self {
        Self {
            a,
            b,
            c,
            d,
            c_prime,
            d_prime,
            e,
            f,
        }
    }

    /// Arguments as written in the case lists:
    /// `(A, B, upper slope, upper intercept, lower slope, lower intercept, E, F)`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_table_args(
        a: f64,
        b: UpperLimit,
        upper_slope: f64,
        upper_intercept: f64,
        lower_slope: f64,
        lower_intercept: f64,
        e: f64,
        f: f64,
    ) -> Self {
        Self::new(a, b, upper_slope, lower_slope, upper_intercept, lower_intercept, e, f)
    }

    /// Back to case-list order; inverse of [`ZSpec::from_table_args`].
    pub fn table_args(&self) -> [f64; 8] {
        [self.a, self.b.as_f64(), self.c, self.c_prime, self.d, self.d_prime, self.e, self.f]
    }

    /// Parses eight comma-separated values in case-list order. The second
    /// entry may be `inf`.
    pub fn parse_table_tuple(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.trim().trim_matches(|c| c == '(' || c == ')').split(',').collect();
        if parts.len() != 8 {
            return Err(Error::InvalidInput(format!(
                "expected 8 comma-separated values, got {}",
                parts.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            parts[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("entry {} is not a number: {:?}", i + 1, parts[i])))
        };
        let b: UpperLimit = parts[1].parse()?;
        Ok(Self::from_table_args(num(0)?, b, num(2)?, num(3)?, num(4)?, num(5)?, num(6)?, num(7)?))
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("a", self.a),
            ("c", self.c),
            ("d", self.d),
            ("c_prime", self.c_prime),
            ("d_prime", self.d_prime),
            ("e", self.e),
            ("f", self.f),
        ];
        for (key, v) in named {
            if !v.is_finite() {
                return Err(Error::invalid(key, format!("must be finite, got {v}")));
            }
        }
        if self.a < 0.0 {
            return Err(Error::invalid("a", format!("must be >= 0, got {}", self.a)));
        }
        if let UpperLimit::Finite(b) = self.b {
            if !b.is_finite() || b < self.a {
                return Err(Error::invalid("b", format!("must be >= a = {}, got {b}", self.a)));
            }
        }
        Ok(())
    }

    /// The `q_r` interval has zero length.
    pub fn empty_interval(&self) -> bool {
        matches!(self.b, UpperLimit::Finite(b) if b == self.a)
    }

    /// The `q_b` band has zero width for every `q_r`.
    pub fn empty_band(&self) -> bool {
        self.c == self.d && self.c_prime == self.d_prime
    }
}

impl fmt::Display for ZSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.table_args();
        write!(
            f,
            "Z({}, {}, {}, {}, {}, {}, {}, {})",
            t[0], self.b, t[2], t[3], t[4], t[5], t[6], t[7]
        )
    }
}

/// Which formula produced one half (`T1` or `T2`) of a Z value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Difference of the two one-sided pieces.
    Generic,
    /// Zero `q_b` exponent: the band width integrates linearly.
    Limiting,
}

/// Both branches evaluated for a coefficient close to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NearSingular {
    pub coefficient: f64,
    pub generic: f64,
    pub limiting: f64,
    pub used: Branch,
}

impl NearSingular {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.generic.abs().max(self.limiting.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.generic - self.limiting).abs() / scale
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZEvaluation {
    pub value: f64,
    /// Term from the `q_a` lower limit.
    pub t2: f64,
    /// Term from the `q_a` upper limit.
    pub t1: f64,
    pub t2_branch: Branch,
    pub t1_branch: Branch,
    pub near_singular: [Option<NearSingular>; 2],
}

impl ZEvaluation {
    fn zero() -> Self {
        Self {
            value: 0.0,
            t2: 0.0,
            t1: 0.0,
            t2_branch: Branch::Generic,
            t1_branch: Branch::Generic,
            near_singular: [None, None],
        }
    }
}

/// `∫_a^b e^(offset + rho r) dr`.
fn exp_segment(offset: f64, rho: f64, a: f64, b: UpperLimit, tol: f64) -> Result<f64> {
    match b {
        UpperLimit::Infinity => {
            if rho < -tol {
                Ok(-(offset + rho * a).exp() / rho)
            } else {
                Err(Error::DivergentTail { coefficient: rho })
            }
        }
        UpperLimit::Finite(b) => {
            if rho.abs() <= tol {
                return Ok(offset.exp() * (b - a));
            }
            let span = rho * (b - a);
            if span.abs() <= 1.0 {
                Ok((offset + rho * a).exp() * span.exp_m1() / rho)
            } else {
                Ok(((offset + rho * b).exp() - (offset + rho * a).exp()) / rho)
            }
        }
    }
}

/// `∫_a^b e^(offset - sigma r) (slope r + intercept) dr`.
fn linear_exp_segment(
    offset: f64,
    sigma: f64,
    slope: f64,
    intercept: f64,
    a: f64,
    b: UpperLimit,
    tol: f64,
) -> Result<f64> {
    if slope == 0.0 && intercept == 0.0 {
        return Ok(0.0);
    }
    if sigma.abs() <= tol {
        return match b {
            UpperLimit::Infinity => Err(Error::DivergentTail { coefficient: -sigma }),
            UpperLimit::Finite(b) => {
                Ok(offset.exp() * (0.5 * slope * (b * b - a * a) + intercept * (b - a)))
            }
        };
    }
    // Antiderivative -e^(offset - σr) [slope (σr + 1) + intercept σ] / σ².
    let g = |r: f64| -(offset - sigma * r).exp() * (slope * (sigma * r + 1.0) + intercept * sigma) / (sigma * sigma);
    match b {
        UpperLimit::Infinity if sigma > 0.0 => Ok(-g(a)),
        UpperLimit::Infinity => Err(Error::DivergentTail { coefficient: -sigma }),
        UpperLimit::Finite(b) => Ok(g(b) - g(a)),
    }
}

/// One of `T1`, `T2`. The integrand in `q_r` is
/// `λB λR e^(offset + rho_base r) ∫ e^(k q_b) dq_b` over the `q_b` band.
struct HalfTerm {
    k: f64,
    offset: f64,
    rho_base: f64,
}

impl HalfTerm {
    /// `(λB λR / k) e^(offset + k x') ∫ e^((k x + rho_base) r) dr`.
    fn piece(&self, pref: f64, x: f64, x_prime: f64, spec: &ZSpec, tol: f64) -> Result<f64> {
        let rho = self.k * x + self.rho_base;
        let seg = exp_segment(self.offset + self.k * x_prime, rho, spec.a, spec.b, tol)?;
        Ok(pref / self.k * seg)
    }

    fn generic(&self, pref: f64, spec: &ZSpec, tol: f64) -> Result<f64> {
        let upper = self.piece(pref, spec.c, spec.c_prime, spec, tol)?;
        let lower = self.piece(pref, spec.d, spec.d_prime, spec, tol)?;
        Ok(upper - lower)
    }

    fn limiting(&self, pref: f64, spec: &ZSpec, tol: f64) -> Result<f64> {
        let seg = linear_exp_segment(
            self.offset,
            -self.rho_base,
            spec.c - spec.d,
            spec.c_prime - spec.d_prime,
            spec.a,
            spec.b,
            tol,
        )?;
        Ok(pref * seg)
    }

    fn evaluate(&self, pref: f64, spec: &ZSpec, tol: f64) -> Result<(f64, Branch, Option<NearSingular>)> {
        if self.k.abs() <= tol {
            return Ok((self.limiting(pref, spec, tol)?, Branch::Limiting, None));
        }
        if self.k.abs() >= NEAR_SINGULAR * tol / SINGULAR_REL_TOL {
            return Ok((self.generic(pref, spec, tol)?, Branch::Generic, None));
        }
        let generic = self.generic(pref, spec, tol)?;
        let limiting = self.limiting(pref, spec, tol)?;
        let used = if self.k.abs() < LIMIT_PREFERRED * tol / SINGULAR_REL_TOL {
            Branch::Limiting
        } else {
            Branch::Generic
        };
        let value = if used == Branch::Limiting { limiting } else { generic };
        let check = NearSingular {
            coefficient: self.k,
            generic,
            limiting,
            used,
        };
        Ok((value, used, Some(check)))
    }
}

/// Closed-form value of the region integral with branch diagnostics.
pub fn z_evaluate(spec: &ZSpec, fading: &EveFadingParams, phi: f64) -> Result<ZEvaluation> {
    spec.validate()?;
    if spec.empty_interval() || spec.empty_band() {
        return Ok(ZEvaluation::zero());
    }
    if spec.e != 0.0 && !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "a q_a lower limit depending on q_r needs a finite phi > 0, got {phi}"
        )));
    }
    let EveFadingParams { lambda_a: la, lambda_b: lb, lambda_r: lr } = *fading;
    let tol = SINGULAR_REL_TOL * fading.scale();
    let pref = lb * lr;
    let e_over_phi = if spec.e == 0.0 { 0.0 } else { spec.e / phi };

    let lower_end = HalfTerm {
        k: la * spec.e - lb,
        offset: la * spec.e,
        rho_base: -lr - la * e_over_phi,
    };
    let upper_end = HalfTerm {
        k: la - lb,
        offset: -la * spec.f,
        rho_base: -lr - la * spec.f,
    };
    let (t2, t2_branch, ns2) = lower_end.evaluate(pref, spec, tol)?;
    let (t1, t1_branch, ns1) = upper_end.evaluate(pref, spec, tol)?;
    let value = t2 - t1;
    if !value.is_finite() {
        return Err(Error::InvalidInput(format!("{spec} evaluates to {value}")));
    }
    Ok(ZEvaluation {
        value,
        t2,
        t1,
        t2_branch,
        t1_branch,
        near_singular: [ns2, ns1],
    })
}

/// Closed-form value of the region integral.
pub fn z_value(spec: &ZSpec, fading: &EveFadingParams, phi: f64) -> Result<f64> {
    z_evaluate(spec, fading, phi).map(|z| z.value)
}

/// Which case lists to use for the event probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTable {
    /// The printed lists plus the `q_r` tail term that the second and
    /// fourth `S2` cases omit (where `O2^C` lies beyond the `ν` boundary and
    /// only the MAC constraint binds `q_b`).
    #[default]
    Complete,
    /// Exactly the printed sums.
    AsPrinted,
}

/// How the dispatched Z terms are valued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Authority {
    /// Closed form only.
    #[default]
    ClosedForm,
    /// Closed form, cross-checked against quadrature; disagreements are
    /// recorded as errata.
    Audit,
    /// As `Audit`, but the quadrature value is used.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub table: CaseTable,
    pub authority: Authority,
    pub quad_tol: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            table: CaseTable::Complete,
            authority: Authority::ClosedForm,
            quad_tol: crate::oracles::quadrature::DEFAULT_TOL,
        }
    }
}

impl EvalOptions {
    pub fn with_authority(self, authority: Authority) -> Self {
        Self { authority, ..self }
    }
    pub fn with_table(self, table: CaseTable) -> Self {
        Self { table, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Event {
    /// `S1 ∩ O2^C`
    S1,
    /// `S2 ∩ O2^C`
    S2,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Event::S1 => "S1∩O2c",
            Event::S2 => "S2∩O2c",
        })
    }
}

/// A term selected by the case dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispatchedTerm {
    pub spec: ZSpec,
    /// `false` for terms added by [`CaseTable::Complete`].
    pub printed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dispatch {
    pub event: Event,
    pub case_id: u8,
    /// Non-empty terms only; printed terms with a zero-length `q_r`
    /// interval are dropped.
    pub terms: Vec<DispatchedTerm>,
}

fn missing(name: &str) -> Error {
    Error::InvalidInput(format!("threshold {name} is required by this case but absent"))
}

fn push_terms(out: &mut Vec<DispatchedTerm>, printed: bool, specs: impl IntoIterator<Item = ZSpec>) {
    out.extend(
        specs
            .into_iter()
            .filter(|s| !s.empty_interval() && !matches!(s.b, UpperLimit::Finite(b) if b < s.a))
            .map(|spec| DispatchedTerm { spec, printed }),
    );
}

/// Case selection for `S1 ∩ O2^C`.
pub fn dispatch_s1(t: &Thresholds) -> Result<Dispatch> {
    let (mu, nu, phi) = (t.mu, t.nu, t.phi);
    let z = ZSpec::from_table_args;
    let inf = UpperLimit::Infinity;
    let mut terms = Vec::new();
    let case_id = if mu * phi >= 1.0 {
        if nu * phi < 1.0 {
            let delta = t.delta.ok_or_else(|| missing("delta"))?;
            push_terms(
                &mut terms,
                true,
                [
                    z(0.0, delta.into(), mu, mu, nu, nu, 0.0, mu),
                    z(delta, inf, 1.0 / phi, -1.0, nu, nu, 1.0, mu),
                    z(delta, inf, mu, mu, 1.0 / phi, -1.0, 0.0, mu),
                ],
            );
            1
        } else {
            push_terms(&mut terms, true, [z(0.0, inf, mu, mu, nu, nu, 0.0, mu)]);
            2
        }
    } else {
        let delta = t.delta.ok_or_else(|| missing("delta"))?;
        let gamma = t.gamma.ok_or_else(|| missing("gamma"))?;
        push_terms(
            &mut terms,
            true,
            [
                z(0.0, delta.into(), mu, mu, nu, nu, 0.0, mu),
                z(delta, gamma.into(), 1.0 / phi, -1.0, nu, nu, 1.0, mu),
                z(delta, gamma.into(), mu, mu, 1.0 / phi, -1.0, 0.0, mu),
            ],
        );
        3
    };
    Ok(Dispatch {
        event: Event::S1,
        case_id,
        terms,
    })
}

/// Case selection for `S2 ∩ O2^C`.
pub fn dispatch_s2(t: &Thresholds, table: CaseTable) -> Result<Dispatch> {
    let (mp, nu, phi) = (t.mu_prime, t.nu, t.phi);
    let z = ZSpec::from_table_args;
    let inf = UpperLimit::Infinity;
    // When μ' <= ν the ν bound never binds and the band slope is μ'.
    let slope = if mp > nu { nu } else { mp };
    let three = |end: UpperLimit| {
        [
            z(0.0, phi.into(), slope, slope, 0.0, 0.0, 0.0, mp),
            z(phi, end, 1.0 / phi, -1.0, 0.0, 0.0, 1.0, mp),
            z(phi, end, slope, slope, 1.0 / phi, -1.0, 0.0, mp),
        ]
    };
    let complete = table == CaseTable::Complete;
    let mut terms = Vec::new();
    let case_id = match (mp * phi >= 1.0, mp > nu) {
        (true, true) if nu * phi >= 1.0 => {
            push_terms(&mut terms, true, three(inf));
            1
        }
        (true, true) => {
            let delta = t.delta.ok_or_else(|| missing("delta"))?;
            push_terms(&mut terms, true, three(delta.into()));
            if complete {
                push_terms(&mut terms, false, [z(delta, inf, nu, nu, 0.0, 0.0, 1.0, mp)]);
            }
            2
        }
        (true, false) => {
            push_terms(&mut terms, true, three(inf));
            3
        }
        (false, true) => {
            let delta = t.delta.ok_or_else(|| missing("delta"))?;
            let gamma_p = t.gamma_prime.ok_or_else(|| missing("gamma'"))?;
            let end = gamma_p.min(delta);
            push_terms(&mut terms, true, three(end.into()));
            if complete {
                push_terms(&mut terms, false, [z(end, gamma_p.into(), nu, nu, 0.0, 0.0, 1.0, mp)]);
            }
            4
        }
        (false, false) => {
            let gamma_p = t.gamma_prime.ok_or_else(|| missing("gamma'"))?;
            push_terms(&mut terms, true, three(gamma_p.into()));
            5
        }
    };
    Ok(Dispatch {
        event: Event::S2,
        case_id,
        terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TermRecord {
    pub spec: ZSpec,
    pub printed: bool,
    pub closed_form: f64,
    pub quadrature: Option<f64>,
    /// The value summed into the event probability.
    pub value: f64,
}

/// A dispatched term whose closed form disagrees with quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Erratum {
    pub event: Event,
    pub case_id: u8,
    pub term: usize,
    pub spec: ZSpec,
    pub closed_form: f64,
    pub quadrature: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventProbability {
    pub event: Event,
    pub case_id: u8,
    pub probability: f64,
    pub terms: Vec<TermRecord>,
    pub errata: Vec<Erratum>,
}

/// `|closed_form - quadrature| <= max(1e-6 |quadrature|, 1e-10)`.
pub fn within_erratum_tolerance(closed_form: f64, quadrature: f64) -> bool {
    (closed_form - quadrature).abs() <= (ERRATUM_REL_TOL * quadrature.abs()).max(ERRATUM_ABS_TOL)
}

fn evaluate_dispatch(
    dispatch: Dispatch,
    fading: &EveFadingParams,
    phi: f64,
    opts: &EvalOptions,
) -> Result<EventProbability> {
    let terms = dispatch
        .terms
        .par_iter()
        .map(|term| {
            let closed_form = z_value(&term.spec, fading, phi)?;
            let quadrature = match opts.authority {
                Authority::ClosedForm => None,
                Authority::Audit | Authority::Strict => {
                    Some(z_quadrature(&term.spec, fading, phi, opts.quad_tol)?)
                }
            };
            let value = match (opts.authority, quadrature) {
                (Authority::Strict, Some(q)) => q,
                _ => closed_form,
            };
            Ok(TermRecord {
                spec: term.spec,
                printed: term.printed,
                closed_form,
                quadrature,
                value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let errata = terms
        .iter()
        .enumerate()
        .filter_map(|(i, t)| {
            let q = t.quadrature?;
            (!within_erratum_tolerance(t.closed_form, q)).then_some(Erratum {
                event: dispatch.event,
                case_id: dispatch.case_id,
                term: i,
                spec: t.spec,
                closed_form: t.closed_form,
                quadrature: q,
                abs_diff: (t.closed_form - q).abs(),
            })
        })
        .collect();
    Ok(EventProbability {
        event: dispatch.event,
        case_id: dispatch.case_id,
        probability: terms.iter().map(|t| t.value).sum(),
        terms,
        errata,
    })
}

/// `P[S1 ∩ O2^C]` from the case list.
pub fn prob_s1_o2c(t: &Thresholds, fading: &EveFadingParams, opts: &EvalOptions) -> Result<EventProbability> {
    evaluate_dispatch(dispatch_s1(t)?, fading, t.phi, opts)
}

/// `P[S2 ∩ O2^C]` from the case list.
pub fn prob_s2_o2c(t: &Thresholds, fading: &EveFadingParams, opts: &EvalOptions) -> Result<EventProbability> {
    evaluate_dispatch(dispatch_s2(t, opts.table)?, fading, t.phi, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageResult {
    pub p_s1_o2c: f64,
    pub p_s2_o2c: f64,
    /// `1 - p_s1_o2c - p_s2_o2c` clamped to `[0, 1]`.
    pub bound: f64,
    pub unclamped: f64,
    pub case_s1: u8,
    pub case_s2: u8,
    pub thresholds: Thresholds,
    pub s1: EventProbability,
    pub s2: EventProbability,
}

impl OutageResult {
    pub fn errata(&self) -> impl Iterator<Item = &Erratum> {
        self.s1.errata.iter().chain(&self.s2.errata)
    }

    pub fn terms(&self) -> impl Iterator<Item = &TermRecord> {
        self.s1.terms.iter().chain(&self.s2.terms)
    }

    pub fn clamped(&self) -> bool {
        self.bound != self.unclamped
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outage result serializes")
    }
}

/// Outage bound from thresholds directly, without a feasibility gate.
pub fn outage_from_thresholds(
    t: &Thresholds,
    fading: &EveFadingParams,
    opts: &EvalOptions,
) -> Result<OutageResult> {
    let s1 = prob_s1_o2c(t, fading, opts)?;
    let s2 = prob_s2_o2c(t, fading, opts)?;
    let unclamped = 1.0 - (s1.probability + s2.probability);
    Ok(OutageResult {
        p_s1_o2c: s1.probability,
        p_s2_o2c: s2.probability,
        bound: unclamped.clamp(0.0, 1.0),
        unclamped,
        case_s1: s1.case_id,
        case_s2: s2.case_id,
        thresholds: *t,
        s1,
        s2,
    })
}

/// Outage bound for a scenario whose rates are decodable at Ray, satisfy
/// the model's forwarding constraint, and keep the secret rate below the
/// Ray-secrecy bound.
pub fn outage_bound(scenario: &Scenario, opts: &EvalOptions) -> Result<OutageResult> {
    let scaling = scenario
        .effective_scaling()
        .map_err(|e| Error::Infeasible(e.to_string()))?;
    let report = check_decodability(&scenario.rates, &scaling, &scenario.channel, &scenario.model);
    if !report.is_feasible() {
        let mut failed = Vec::new();
        if report.degenerate {
            failed.push("effective noise at Ray is zero".to_string());
        }
        if !report.degenerate && !report.alice_ok {
            failed.push(format!("r_a exceeds Ray's decoding bound by {:.4}", -report.slack_alice.unwrap_or(0.0)));
        }
        if !report.degenerate && !report.bob_ok {
            failed.push(format!("r_b exceeds Ray's decoding bound by {:.4}", -report.slack_bob.unwrap_or(0.0)));
        }
        if !report.relay_forward_ok {
            failed.push(format!(
                "Ray's codeword rate exceeds the Ray-Bob capacity by {:.4}",
                -report.slack_relay.unwrap_or(0.0)
            ));
        }
        if !report.ray_secrecy_ok {
            failed.push(format!("r_s exceeds the Ray-secrecy bound by {:.4}", -report.slack_secrecy));
        }
        if !report.phase2_rate_ok {
            failed.push("Ray's random binning rate is negative".to_string());
        }
        return Err(Error::Infeasible(failed.join("; ")));
    }
    let thresholds = derive_thresholds_with(&scenario.rates, scenario.model.ray_rate)?;
    outage_from_thresholds(&thresholds, &scenario.fading, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::quadrature::{z_quadrature, DEFAULT_TOL};
    use proptest::prelude::*;

    fn fading(a: f64, b: f64, r: f64) -> EveFadingParams {
        EveFadingParams::new(a, b, r).unwrap()
    }

    fn close(cf: f64, q: f64) -> bool {
        within_erratum_tolerance(cf, q)
    }

    #[test]
    fn empty_domains_are_zero() {
        let f = fading(1.0, 2.0, 1.0);
        let a_eq_b = ZSpec::new(2.0, UpperLimit::Finite(2.0), 3.0, 1.0, 1.0, 0.0, 1.0, 4.0);
        assert_eq!(z_value(&a_eq_b, &f, 0.5).unwrap(), 0.0);
        let flat = ZSpec::new(0.0, UpperLimit::Infinity, 1.0, 1.0, 0.5, 0.5, 0.0, 1.0);
        assert_eq!(z_value(&flat, &f, 1.0).unwrap(), 0.0);
        assert_eq!(z_quadrature(&flat, &f, 1.0, DEFAULT_TOL).unwrap(), 0.0);
    }

    #[test]
    fn table_order_example_matches_quadrature() {
        // q_b in [0.5 q_r + 0.5, q_r + 1], q_a in [0, q_r + 1 - q_b].
        let f = fading(1.0, 2.0, 1.0);
        let spec = ZSpec::parse_table_tuple("0, inf, 1, 1, 0.5, 0.5, 0, 1").unwrap();
        assert_eq!(spec.c_prime, 1.0);
        assert_eq!(spec.d, 0.5);
        let cf = z_value(&spec, &f, 1.0).unwrap();
        let q = z_quadrature(&spec, &f, 1.0, DEFAULT_TOL).unwrap();
        assert!(cf > 0.01, "{cf}");
        assert!(((cf - q) / q).abs() <= 1e-6, "{cf} vs {q}");
        // Independent oracle (mpmath, 30 digits).
        assert!((cf - 0.050_547_353_545_848_19).abs() < 1e-12, "{cf}");
    }

    #[test]
    fn divergent_tail_is_reported() {
        let f = fading(1.0, 2.0, 1.0);
        // With λA > λB a steep upper q_b slope makes the upper-end piece grow in q_r.
        let g = fading(3.0, 1.0, 0.1);
        let spec = ZSpec::from_table_args(0.0, UpperLimit::Infinity, 10.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(z_value(&spec, &g, 1.0), Err(Error::DivergentTail { .. })));
        assert!(z_value(&spec, &f, 1.0).is_ok());
    }

    #[test]
    fn rejects_bad_specs() {
        let f = fading(1.0, 1.0, 1.0);
        let nan = ZSpec::new(0.0, UpperLimit::Finite(1.0), f64::NAN, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!(z_value(&nan, &f, 1.0).is_err());
        let reversed = ZSpec::new(2.0, UpperLimit::Finite(1.0), 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!(z_value(&reversed, &f, 1.0).is_err());
        let needs_phi = ZSpec::new(0.0, UpperLimit::Finite(1.0), 1.0, 0.0, 0.0, 0.0, 1.0, 1.0);
        assert!(z_value(&needs_phi, &f, 0.0).is_err());
    }

    #[test]
    fn singular_branches_match_quadrature() {
        // λA = λB: the upper-end half uses the limiting branch.
        let f = fading(1.5, 1.5, 0.7);
        let spec = ZSpec::from_table_args(0.3, UpperLimit::Finite(4.0), 2.0, 1.0, 0.5, 0.2, 0.0, 3.0);
        let z = z_evaluate(&spec, &f, 0.8).unwrap();
        assert_eq!(z.t1_branch, Branch::Limiting);
        let q = z_quadrature(&spec, &f, 0.8, DEFAULT_TOL).unwrap();
        assert!(close(z.value, q), "{} vs {q}", z.value);

        // λA E = λB with E = 1: the lower-end half uses the limiting branch.
        let f = fading(2.0, 2.0, 1.0);
        let spec = ZSpec::from_table_args(1.0, UpperLimit::Infinity, 3.0, -1.0, 0.5, 0.5, 1.0, 3.0);
        let z = z_evaluate(&spec, &f, 0.5).unwrap();
        assert_eq!(z.t2_branch, Branch::Limiting);
        let q = z_quadrature(&spec, &f, 0.5, DEFAULT_TOL).unwrap();
        assert!(close(z.value, q), "{} vs {q}", z.value);
    }

    #[test]
    fn inner_zero_exponent_matches_quadrature() {
        // (λA - λB) C - λR - λA F = 0 with C = 3: 1*3 - 1 - 2*1 = 0.
        let f = fading(2.0, 1.0, 1.0);
        let spec = ZSpec::from_table_args(0.0, UpperLimit::Finite(2.0), 3.0, 0.0, 1.0, 0.0, 0.0, 1.0);
        let cf = z_value(&spec, &f, 1.0).unwrap();
        let q = z_quadrature(&spec, &f, 1.0, DEFAULT_TOL).unwrap();
        assert!(close(cf, q), "{cf} vs {q}");
    }

    #[test]
    fn near_singular_branches_are_checked() {
        let spec = ZSpec::from_table_args(0.0, UpperLimit::Finite(3.0), 2.0, 0.5, 0.5, 0.0, 0.0, 2.0);
        for eps in [3e-7, 1e-8, 1e-10] {
            let f = fading(1.0 + eps, 1.0, 1.0);
            let z = z_evaluate(&spec, &f, 1.0).unwrap();
            let ns = z.near_singular[1].expect("checked");
            let q = z_quadrature(&spec, &f, 1.0, DEFAULT_TOL).unwrap();
            assert!(close(z.value, q), "eps {eps}: {} vs {q}", z.value);
            if eps > 1e-7 {
                assert!(ns.relative_gap() < 1e-6, "eps {eps}: {ns:?}");
            }
        }
    }

    fn th(r_0: f64, r_b: f64, p2: f64) -> Thresholds {
        Thresholds::from_rates(r_0, r_b, p2).unwrap()
    }

    #[test]
    fn case_two_of_s1_is_a_single_term() {
        // μ = 7, ν = 1, φ = 3: μφ >= 1, νφ >= 1.
        let d = dispatch_s1(&th(2.0, 1.0, 2.0)).unwrap();
        assert_eq!(d.case_id, 2);
        assert_eq!(d.terms.len(), 1);
        let t = th(2.0, 1.0, 2.0);
        let s = d.terms[0].spec;
        assert_eq!(s.table_args(), [0.0, f64::INFINITY, t.mu, t.mu, t.nu, t.nu, 0.0, t.mu]);
    }

    #[test]
    fn s2_case_one_terms() {
        // μ' = 7, ν = 1, φ = 3.
        let t = th(3.0, 1.0, 2.0);
        let d = dispatch_s2(&t, CaseTable::Complete).unwrap();
        assert_eq!(d.case_id, 1);
        let phi = t.phi;
        let expect = [
            ZSpec::from_table_args(0.0, phi.into(), t.nu, t.nu, 0.0, 0.0, 0.0, t.mu_prime),
            ZSpec::from_table_args(phi, UpperLimit::Infinity, 1.0 / phi, -1.0, 0.0, 0.0, 1.0, t.mu_prime),
            ZSpec::from_table_args(phi, UpperLimit::Infinity, t.nu, t.nu, 1.0 / phi, -1.0, 0.0, t.mu_prime),
        ];
        let got: Vec<ZSpec> = d.terms.iter().map(|t| t.spec).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn all_cases_reachable() {
        // (r_0, r_b, phase-2 rate) -> (S1 case, S2 case)
        let table = [
            ((2.0, 0.1, 3.0), (1, 2)),
            ((2.0, 1.0, 2.0), (2, 1)),
            ((1.0, 2.0, 1.0), (2, 3)),
            ((0.3, 0.2, 0.5), (3, 4)),
            ((0.1, 0.5, 0.5), (3, 5)),
        ];
        for ((r0, rb, p2), (c1, c2)) in table {
            let t = th(r0, rb, p2);
            assert_eq!(dispatch_s1(&t).unwrap().case_id, c1, "{t:?}");
            assert_eq!(dispatch_s2(&t, CaseTable::Complete).unwrap().case_id, c2, "{t:?}");
        }
    }

    #[test]
    fn printed_table_omits_tail_terms() {
        let t = th(2.0, 0.1, 3.0);
        let full = dispatch_s2(&t, CaseTable::Complete).unwrap();
        let printed = dispatch_s2(&t, CaseTable::AsPrinted).unwrap();
        assert_eq!(full.terms.len(), printed.terms.len() + 1);
        assert!(!full.terms.last().unwrap().printed);
    }

    #[test]
    fn zero_rates_give_zero_probabilities() {
        let f = fading(1.0, 2.0, 1.0);
        let opts = EvalOptions::default();
        let t = th(0.0, 0.0, 3.0);
        assert_eq!(prob_s1_o2c(&t, &f, &opts).unwrap().probability, 0.0);
        let t = th(0.0, 1.0, 3.0);
        assert_eq!(prob_s2_o2c(&t, &f, &opts).unwrap().probability, 0.0);
    }

    #[test]
    fn zero_phi_gives_unit_bound() {
        let f = fading(1.0, 2.0, 1.0);
        let r = outage_from_thresholds(&th(1.0, 1.0, 0.0), &f, &EvalOptions::default()).unwrap();
        assert_eq!(r.bound, 1.0);
        assert!(r.terms().next().is_none());
    }

    #[test]
    fn audit_mode_records_quadrature() {
        let f = fading(1.0, 2.0, 1.0);
        let t = th(2.0, 1.0, 3.0);
        let opts = EvalOptions::default().with_authority(Authority::Audit);
        let r = outage_from_thresholds(&t, &f, &opts).unwrap();
        assert!(r.terms().all(|t| t.quadrature.is_some()));
        assert_eq!(r.errata().count(), 0);
        let strict = outage_from_thresholds(&t, &f, &opts.with_authority(Authority::Strict)).unwrap();
        assert!((strict.bound - r.bound).abs() < 1e-9);
        let json = r.to_json();
        assert!(json.contains("\"inf\""));
    }

    #[test]
    fn upper_limit_serde() {
        let s = ZSpec::from_table_args(0.0, UpperLimit::Infinity, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let text = serde_json::to_string(&s).unwrap();
        let back: ZSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
        assert_eq!("2.5".parse::<UpperLimit>().unwrap(), UpperLimit::Finite(2.5));
        assert!("x".parse::<UpperLimit>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn dispatched_terms_are_probabilities(
            r0 in 0.0f64..4.0, rb in 0.0f64..4.0, p2 in 0.0f64..8.0,
            la in 0.2f64..5.0, lb in 0.2f64..5.0, lr in 0.2f64..5.0,
        ) {
            let t = th(r0, rb, p2);
            let f = fading(la, lb, lr);
            let r = outage_from_thresholds(&t, &f, &EvalOptions::default()).unwrap();
            for term in r.terms() {
                prop_assert!(term.value >= -1e-9 && term.value <= 1.0 + 1e-9, "{term:?}");
            }
            prop_assert!(r.unclamped >= -1e-9 && r.unclamped <= 1.0 + 1e-9);
        }
    }
}
