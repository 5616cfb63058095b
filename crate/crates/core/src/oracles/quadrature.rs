//! Nested adaptive quadrature of the region integral.
//!
//! The `q_a` integral is done in closed form (it is a single exponential
//! antiderivative); the `q_b` and `q_r` integrals are adaptive 15-point
//! Gauss–Kronrod. Neither level uses the branch formulas in
//! [`crate::closedform`].

use crate::closedform::{UpperLimit, ZSpec};
use crate::error::{Error, Result};
use crate::scenario::EveFadingParams;

pub const DEFAULT_TOL: f64 = 1e-10;

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss
// weights (QUADPACK qk15). The last abscissa is the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and `|Kronrod - Gauss|` on `[a, b]`.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();
    for j in 0..7 {
        let x = half * XGK[j];
        let (f1, f2) = (f(center - x), f(center + x));
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let err = ((kronrod - gauss) * half).abs();
    let floor = 50.0 * f64::EPSILON * (res_abs * half).abs();
    (kronrod * half, err.max(floor))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive GK15 on a finite interval. Bisects the worst segment
/// until the summed error estimate is at most `abs_tol`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_segments: usize,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut segments = vec![(a, b, v, e)];
    loop {
        let (value, error) = segments
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.2, e + s.3));
        if !value.is_finite() {
            return Err(Error::NonConvergence { estimate: value, error });
        }
        if error <= abs_tol {
            return Ok(Integral { value, error });
        }
        if segments.len() >= max_segments {
            return Err(Error::NonConvergence { estimate: value, error });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("at least one segment");
        let (lo, hi, _, _) = segments.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            // Interval exhausted at machine precision.
            return Err(Error::NonConvergence { estimate: value, error });
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
    }
}

/// Breakpoints growing geometrically away from both ends of `[lo, hi]`,
/// starting at width `w`. Exponential integrands concentrate their mass
/// near one end; this keeps a narrow panel there.
fn two_ended_breaks(lo: f64, hi: f64, w: f64) -> Vec<f64> {
    let len = hi - lo;
    let mut left = vec![lo];
    let mut right = vec![hi];
    let mut width = w;
    while 2.0 * width < len {
        left.push(lo + width);
        right.push(hi - width);
        width *= 2.0;
    }
    left.extend(right.into_iter().rev());
    left.dedup();
    left
}

fn integrate_piecewise<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    w: f64,
    abs_tol: f64,
) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    if hi < lo {
        return integrate_piecewise(f, hi, lo, w, abs_tol).map(|v| -v);
    }
    let breaks = two_ended_breaks(lo, hi, w);
    let share = abs_tol / (breaks.len() - 1) as f64;
    let mut total = 0.0;
    for pair in breaks.windows(2) {
        total += integrate(&mut f, pair[0], pair[1], share, 2000)?.value;
    }
    Ok(total)
}

/// Direct numerical value of the region integral with absolute error `tol`.
pub fn z_quadrature(spec: &ZSpec, fading: &EveFadingParams, phi: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be > 0, got {tol}")));
    }
    if let UpperLimit::Finite(b) = spec.b {
        if b == spec.a {
            return Ok(0.0);
        }
    }
    if spec.e != 0.0 && !(phi > 0.0) {
        return Err(Error::InvalidInput(format!(
            "a q_a lower limit depending on q_r needs phi > 0, got {phi}"
        )));
    }
    let EveFadingParams { lambda_a: la, lambda_b: lb, lambda_r: lr } = *fading;
    let e_over_phi = if spec.e == 0.0 { 0.0 } else { spec.e / phi };

    let rate_b = lb + la * (1.0 + spec.e.abs());
    let rate_r = lr
        + la * (spec.f.abs() + e_over_phi.abs())
        + (la + lb) * (spec.c.abs() + spec.d.abs());
    let (w_b, w_r) = (1.0 / rate_b, 1.0 / rate_r);
    let inner_tol = tol * 1e-2;
    let mut inner_failure: Option<Error> = None;

    let mut outer = |r: f64| -> f64 {
        let b_lo = spec.d * r + spec.d_prime;
        let b_hi = spec.c * r + spec.c_prime;
        let a_hi_base = spec.f * r + spec.f;
        let a_lo_base = e_over_phi * r - spec.e;
        let inner = |qb: f64| {
            let lo = a_lo_base - spec.e * qb;
            let hi = a_hi_base - qb;
            lb * (-lb * qb).exp() * ((-la * lo).exp() - (-la * hi).exp())
        };
        match integrate_piecewise(inner, b_lo, b_hi, w_b, inner_tol) {
            Ok(v) => lr * (-lr * r).exp() * v,
            Err(e) => {
                inner_failure.get_or_insert(e);
                f64::NAN
            }
        }
    };

    let result = match spec.b {
        UpperLimit::Finite(b) => integrate_piecewise(&mut outer, spec.a, b, w_r, tol * 0.5),
        UpperLimit::Infinity => integrate_tail(&mut outer, spec.a, lr, w_r, tol * 0.5),
    };
    if let Some(e) = inner_failure {
        return Err(e);
    }
    let value = result?;
    if !value.is_finite() {
        return Err(Error::NonConvergence { estimate: value, error: f64::INFINITY });
    }
    Ok(value)
}

/// `[a, inf)` as outward panels of doubling width. For regions inside the
/// positive orthant the mass beyond `r` is at most `exp(-lambda_r r)`, so the
/// march stops once that bound is below `tol/10` and two panels in a row
/// contributed less than `tol/20`.
fn integrate_tail<F: FnMut(f64) -> f64>(mut f: F, a: f64, lambda_r: f64, w: f64, tol: f64) -> Result<f64> {
    let floor = a + (10.0 / tol).ln() / lambda_r;
    let mut start = a;
    let mut width = w;
    let mut total = 0.0;
    let mut quiet = 0;
    let mut panel_tol = tol * 0.5;
    for _ in 0..200 {
        let end = start + width;
        if !end.is_finite() {
            break;
        }
        let v = integrate(&mut f, start, end, panel_tol, 2000)?.value;
        total += v;
        quiet = if v.abs() <= tol / 20.0 { quiet + 1 } else { 0 };
        if quiet >= 2 && end >= floor {
            return Ok(total);
        }
        start = end;
        width *= 2.0;
        panel_tol *= 0.5;
    }
    Err(Error::NonConvergence { estimate: total, error: f64::INFINITY })
}
