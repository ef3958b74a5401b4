//! Threshold algebra and bound-direction regions for offspring laws on `{0,1,2,3}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fl_bounds::{matching_fl, switch_generation};
use crate::pgf_core::{extinction_probability, FixedPoint, OffspringModel};
use crate::scalar::Scalar;

const TIE_TOL: f64 = 1e-12;
const SCAN_TOL: f64 = 1e-12;
const SCAN_POINTS: usize = 4096;
const SWITCH_SCAN_MAX: u32 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F3Thresholds<T> {
    /// Zero of `f''(P_inf)` in `p0`.
    pub p0_plus: T,
    /// Zero of `f(0)` in `p0`.
    pub p0_r: T,
    /// Zero of `gamma m - 1` in `p0`.
    pub p0_gamma: T,
    pub plus_admissible: bool,
    pub r_admissible: bool,
    pub gamma_admissible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum F3Region {
    /// The fractional linear iterates bound `P^(n)` from below for every `n`.
    LowerBoundOnP,
    Switches,
    UpperBoundOnP,
}

/// Case of the sign analysis; the third case is split by the position of the sign change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaCase {
    One,
    Two,
    ThreeBelow,
    ThreeAt,
    ThreeAbove,
    Four,
    Five,
}

impl LemmaCase {
    pub fn number(self) -> u8 {
        match self {
            LemmaCase::One => 1,
            LemmaCase::Two => 2,
            LemmaCase::ThreeBelow | LemmaCase::ThreeAt | LemmaCase::ThreeAbove => 3,
            LemmaCase::Four => 4,
            LemmaCase::Five => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F3Class<T> {
    pub region: F3Region,
    pub case_label: LemmaCase,
    /// Signs of `f` at `0`, `P_inf/2` and `(P_inf+1)/2`.
    pub sign_profile: [i8; 3],
    /// First generation where `P^(n) - P_FL^(n)` changes sign, if one was seen.
    pub switch_generation: Option<u32>,
    pub thresholds: Option<F3Thresholds<T>>,
}

pub fn thresholds_f3<T: Scalar>(p2: T, p3: T) -> Result<F3Thresholds<T>> {
    if !(p3 > T::zero()) {
        return domain(format!("thresholds_f3 needs p3 > 0, got {p3}"));
    }
    if !(p2 >= T::zero()) {
        return domain(format!("thresholds_f3 needs p2 >= 0, got {p2}"));
    }
    let half = T::lit(0.5);
    let eight = T::lit(8.0);
    let a = p2 + p3;
    let b = p2 + T::lit(3.0) * p3;
    let p0_plus = (p3 - a * a) / (T::lit(4.0) * p3);
    let p0_r = half - a / (eight * p3) * (a + (eight * p3 + a * a).sqrt());
    let p0_gamma = half - (T::lit(2.0) * a * a + b * (eight * p3 + b * b).sqrt() - b * b) / (eight * p3);
    Ok(F3Thresholds {
        p0_plus,
        p0_r,
        p0_gamma,
        plus_admissible: p0_plus > T::zero(),
        r_admissible: p0_r > T::zero(),
        gamma_admissible: p0_gamma > T::zero(),
    })
}

/// Membership in the parameter region: a distribution with `p0 > 0`, `p3 >= 0` and mean above 1.
pub fn in_region_r<T: Scalar>(p0: T, p2: T, p3: T) -> bool {
    let zero = T::zero();
    p0 > zero
        && p2 >= zero
        && p3 >= zero
        && p0 + p2 + p3 <= T::one()
        && p0 < p2 + T::lit(2.0) * p3
}

fn check_r<T: Scalar>(p0: T, p2: T, p3: T) -> Result<()> {
    if in_region_r(p0, p2, p3) {
        Ok(())
    } else {
        domain(format!("(p0,p2,p3) = ({p0},{p2},{p3}) is outside the admissible region"))
    }
}

fn f3_fixed_point<T: Scalar>(p0: T, p2: T, p3: T) -> T {
    let a = p2 + p3;
    let q = (T::lit(4.0) * p0 * p3 + a * a).sqrt();
    T::lit(2.0) * p0 / (q + a)
}

fn f_factored<T: Scalar>(p: T, p2: T, p3: T, x: T) -> T {
    let one = T::one();
    let a = p2 + p3 + T::lit(2.0) * p3 * p;
    let px = p - x;
    (one - x) * px * px * (-p3 + a * (p2 + p3 + p3 * p + p3 * x)) / (one + a * px)
}

/// `f(x) = phi(x) - phi_FL(x)` in factored form.
pub fn f3_sign_values<T: Scalar>(p0: T, p2: T, p3: T, xs: &[T]) -> Result<Vec<T>> {
    check_r(p0, p2, p3)?;
    let p = f3_fixed_point(p0, p2, p3);
    Ok(xs.iter().map(|&x| f_factored(p, p2, p3, x)).collect())
}

fn sign_of<T: Scalar>(v: T) -> i8 {
    let tol = T::lit(1e-15);
    if v > tol {
        1
    } else if v < -tol {
        -1
    } else {
        0
    }
}

fn lemma_case<T: Scalar>(p0: T, th: &F3Thresholds<T>) -> LemmaCase {
    let tol = T::lit(TIE_TOL);
    if (p0 - th.p0_r).abs() <= tol {
        LemmaCase::Two
    } else if p0 > th.p0_r {
        LemmaCase::One
    } else if (p0 - th.p0_gamma).abs() <= tol {
        LemmaCase::Four
    } else if p0 < th.p0_gamma {
        LemmaCase::Five
    } else if (p0 - th.p0_plus).abs() <= tol {
        LemmaCase::ThreeAt
    } else if p0 > th.p0_plus {
        LemmaCase::ThreeBelow
    } else {
        LemmaCase::ThreeAbove
    }
}

/// Region from the threshold comparisons alone.
pub fn region_from_thresholds<T: Scalar>(p0: T, th: &F3Thresholds<T>) -> F3Region {
    let tol = T::lit(TIE_TOL);
    if p0 >= th.p0_r - tol {
        F3Region::LowerBoundOnP
    } else if p0 <= th.p0_gamma + tol {
        F3Region::UpperBoundOnP
    } else {
        F3Region::Switches
    }
}

pub fn classify_f3<T: Scalar>(p0: T, p2: T, p3: T) -> Result<F3Class<T>> {
    check_r(p0, p2, p3)?;
    if p3 == T::zero() {
        return f3_p3zero(p0, p2).map(|(_, c)| c);
    }
    let th = thresholds_f3(p2, p3)?;
    let region = region_from_thresholds(p0, &th);
    let case_label = lemma_case(p0, &th);
    let p = f3_fixed_point(p0, p2, p3);

    let h = T::one() / T::from_count(SCAN_POINTS as u64);
    let mut fmin = T::infinity();
    let mut fmax = T::neg_infinity();
    for i in 0..=SCAN_POINTS {
        let v = f_factored(p, p2, p3, T::from_count(i as u64) * h);
        fmin = fmin.min(v);
        fmax = fmax.max(v);
    }
    let tol = T::lit(SCAN_TOL);
    let f0 = f_factored(p, p2, p3, T::zero());
    let model = OffspringModel::finite_three(p0, p2, p3)?;
    let fp = extinction_probability(&model)?;
    // f'(1) = m - 1/gamma
    let slope1 = model.mean() - T::one() / fp.gamma;
    let consistent = match region {
        F3Region::LowerBoundOnP => fmin >= -tol,
        F3Region::UpperBoundOnP => fmax <= tol,
        F3Region::Switches => f0 <= tol && slope1 <= tol,
    };
    if !consistent {
        return Err(Error::Inconsistency(format!(
            "region {region:?} contradicts scan of f on [0,1]: min {fmin}, max {fmax}, f(0) {f0}"
        )));
    }
    let half = T::lit(0.5);
    let sign_profile = [
        sign_of(f0),
        sign_of(f_factored(p, p2, p3, half * p)),
        sign_of(f_factored(p, p2, p3, half * (p + T::one()))),
    ];
    let switch = if region == F3Region::Switches {
        let fl = matching_fl(&fp)?;
        switch_generation(&model, &fl, SWITCH_SCAN_MAX)
    } else {
        None
    };
    Ok(F3Class {
        region,
        case_label,
        sign_profile,
        switch_generation: switch,
        thresholds: Some(th),
    })
}

/// Number of sign changes of `f` on an evenly spaced grid of `[0,1]`, ignoring values below `tol`.
pub fn f3_sign_changes<T: Scalar>(p0: T, p2: T, p3: T, points: usize, tol: T) -> Result<usize> {
    check_r(p0, p2, p3)?;
    let p = f3_fixed_point(p0, p2, p3);
    let h = T::one() / T::from_count(points as u64);
    let mut last = 0i8;
    let mut changes = 0;
    for i in 0..=points {
        let v = f_factored(p, p2, p3, T::from_count(i as u64) * h);
        let s = if v > tol {
            1
        } else if v < -tol {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                changes += 1;
            }
            last = s;
        }
    }
    Ok(changes)
}

/// Monte-Carlo volume fractions of the three regions, using `samples` accepted points.
pub fn f3_region_volumes(samples: u64, seed: u64) -> Result<(f64, f64, f64)> {
    if samples < 100_000 {
        return domain(format!("f3_region_volumes needs at least 1e5 samples, got {samples}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; 3];
    let mut accepted = 0u64;
    while accepted < samples {
        let p0: f64 = rng.random();
        let p2: f64 = rng.random();
        let p3: f64 = rng.random();
        if !(p3 > 0.0 && in_region_r(p0, p2, p3)) {
            continue;
        }
        accepted += 1;
        let th = thresholds_f3(p2, p3)?;
        let idx = match region_from_thresholds(p0, &th) {
            F3Region::LowerBoundOnP => 0,
            F3Region::Switches => 1,
            F3Region::UpperBoundOnP => 2,
        };
        counts[idx] += 1;
    }
    let n = accepted as f64;
    let a = counts[0] as f64 / n;
    let b = counts[1] as f64 / n;
    Ok((a, b, 1.0 - a - b))
}

/// The degenerate law without triplets: always `LowerBoundOnP`.
pub fn f3_p3zero<T: Scalar>(p0: T, p2: T) -> Result<(FixedPoint<T>, F3Class<T>)> {
    if !(p0 > T::zero() && p0 < p2 && p0 + p2 <= T::one()) {
        return domain(format!("f3_p3zero needs 0 < p0 < p2 and p0 + p2 <= 1, got p0={p0} p2={p2}"));
    }
    let one = T::one();
    let p = p0 / p2;
    let fp = FixedPoint {
        p_inf: p,
        s_inf: one - p,
        gamma: one + p0 - p2,
    };
    let f = |x: T| {
        let u = p0 - p2 * x;
        (one - x) * u * u / (one + p0 - p2 * x)
    };
    let half = T::lit(0.5);
    let cls = F3Class {
        region: F3Region::LowerBoundOnP,
        case_label: LemmaCase::One,
        sign_profile: [sign_of(f(T::zero())), sign_of(f(half * p)), sign_of(f(half * (p + one)))],
        switch_generation: None,
        thresholds: None,
    };
    Ok((fp, cls))
}

/// `f(x)` for the law without triplets.
pub fn f3_p3zero_f<T: Scalar>(p0: T, p2: T, x: T) -> T {
    let u = p0 - p2 * x;
    (T::one() - x) * u * u / (T::one() + p0 - p2 * x)
}
