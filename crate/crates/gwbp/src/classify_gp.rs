//! Critical values of `lambda` for the generalized Poisson family with mean `1 + s`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fl_bounds::{matching_fl, sign_scan, switch_generation, BoundDirection, FLParams};
use crate::pgf_core::{extinction_probability, FixedPoint, OffspringModel};
use crate::scalar::Scalar;

const LAMBDA_HI: f64 = 0.6;
const SCAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GPThresholds<T> {
    /// `f(0)` changes sign.
    pub lambda_c0: T,
    /// `f'(1)`, equivalently `(1+s) gamma - 1`, changes sign.
    pub lambda_c1: T,
    /// `f''(P_inf)` changes sign.
    pub lambda_c2: T,
    pub lambda_c0_approx: T,
    pub lambda_c1_approx: T,
    pub lambda_c2_approx: T,
}

struct GpState<T> {
    model: OffspringModel<T>,
    fp: FixedPoint<T>,
    fl: FLParams<T>,
}

fn state<T: Scalar>(s: T, lambda: T) -> Result<GpState<T>> {
    let model = OffspringModel::generalized_poisson((T::one() + s) * (T::one() - lambda), lambda)?;
    let fp = extinction_probability(&model)?;
    let fl = matching_fl(&fp)?;
    Ok(GpState { model, fp, fl })
}

/// `f(0) = e^{-mu} - rho`.
pub fn gp_f0<T: Scalar>(s: T, lambda: T) -> Result<T> {
    let st = state(s, lambda)?;
    Ok(st.model.p0() - st.fl.rho)
}

/// `(1 + s) gamma - 1`.
pub fn gp_c1<T: Scalar>(s: T, lambda: T) -> Result<T> {
    let st = state(s, lambda)?;
    Ok((T::one() + s) * st.fp.gamma - T::one())
}

/// `phi''(P_inf) - phi_FL''(P_inf)`.
pub fn gp_c2<T: Scalar>(s: T, lambda: T) -> Result<T> {
    let st = state(s, lambda)?;
    let p = st.fp.p_inf;
    Ok(st.model.derivs(p)[2] - st.fl.derivative(p, 2))
}

/// `f(x) = phi_GP(x) - phi_FL(x)` at each `x`.
pub fn gp_f_values<T: Scalar>(s: T, lambda: T, xs: &[T]) -> Result<Vec<T>> {
    let st = state(s, lambda)?;
    Ok(xs.iter().map(|&x| st.model.phi(x) - st.fl.eval(x)).collect())
}

fn bisect<T: Scalar>(g: impl Fn(T) -> Result<T>, name: &str) -> Result<T> {
    let mut lo = T::zero();
    let mut hi = T::lit(LAMBDA_HI);
    let glo = g(lo)?;
    let ghi = g(hi)?;
    if glo == T::zero() {
        return Ok(lo);
    }
    if glo.signum() == ghi.signum() {
        return Err(Error::Bracket(format!(
            "{name} has no sign change for lambda in [0, {LAMBDA_HI}]"
        )));
    }
    let tol = T::tol_floor(1e-12);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = T::lit(0.5) * (lo + hi);
        let gm = g(mid)?;
        if gm.signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(0.5) * (lo + hi))
}

pub fn gp_thresholds<T: Scalar>(s: T) -> Result<GPThresholds<T>> {
    if !(s > T::zero()) {
        return domain(format!("gp_thresholds needs s > 0, got {s}"));
    }
    Ok(GPThresholds {
        lambda_c0: bisect(|l| gp_f0(s, l), "f(0)")?,
        lambda_c1: bisect(|l| gp_c1(s, l), "(1+s) gamma - 1")?,
        lambda_c2: bisect(|l| gp_c2(s, l), "f''(P_inf)")?,
        lambda_c0_approx: T::lit(0.25915) + T::lit(0.1997) * s,
        lambda_c1_approx: T::lit(0.25) * (T::one() + T::lit(0.75) * s),
        lambda_c2_approx: T::lit(0.25) + T::lit(0.202) * s,
    })
}

/// Direction of the matching fractional linear bound, confirmed by a sign scan of `f` on `[0, P_inf]`.
pub fn classify_gp<T: Scalar>(s: T, lambda: T) -> Result<BoundDirection> {
    if !(lambda >= T::zero() && lambda < T::one()) {
        return domain(format!("lambda must lie in [0,1), got {lambda}"));
    }
    let th = gp_thresholds(s)?;
    let st = state(s, lambda)?;
    let scan = sign_scan(&st.model, &st.fl, st.fp.p_inf, 2048);
    let tol = T::lit(SCAN_TOL);
    let (dir, ok) = if lambda < th.lambda_c2 {
        (BoundDirection::UpperOnS, scan.min >= -tol)
    } else if lambda > th.lambda_c0 {
        (BoundDirection::LowerOnS, scan.max <= tol)
    } else {
        let n = switch_generation(&st.model, &st.fl, 100_000);
        (BoundDirection::SwitchesAt(n), scan.at_zero >= -tol)
    };
    if !ok {
        return Err(Error::Inconsistency(format!(
            "{dir:?} contradicts scan on [0, P_inf]: min {}, max {}",
            scan.min, scan.max
        )));
    }
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_end_is_upper() {
        assert_eq!(classify_gp(0.1f64, 0.0).unwrap(), BoundDirection::UpperOnS);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(gp_thresholds(0.0f64).is_err());
        assert!(classify_gp(0.1f64, 1.0).is_err());
    }
}
