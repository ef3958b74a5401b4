//! Bounds and small-`s` expansions of `S_inf` and `gamma`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::pgf_core::{extinction_probability, Family, Moments, OffspringModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesCoeffs<T> {
    pub theta: T,
    pub delta2: T,
    pub delta3: T,
    pub gamma2: T,
    pub gamma3: T,
}

/// Mixed partials `d^k/dx^k d^l/ds^l phi(x; s)` at `x = 1`, `s = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuDerivatives<T> {
    pub mu20: T,
    pub mu21: T,
    pub mu22: T,
    pub mu30: T,
    pub mu31: T,
    pub mu40: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinfBounds<T> {
    pub beta: T,
    /// Lower Quine formula, evaluated even when its condition fails.
    pub quine_lower: T,
    /// Upper Quine formula; `None` when the power base is not positive.
    pub quine_upper: Option<T>,
    pub quine_applicable: bool,
    pub dn_upper: Option<T>,
    pub series3: T,
    pub haldane: T,
    pub exact: T,
}

pub fn beta_bound<T: Scalar>(mo: &Moments<T>) -> Result<T> {
    if !(mo.m > T::one() && mo.b > T::zero()) {
        return domain("beta_bound needs m > 1 and b > 0");
    }
    Ok(T::lit(2.0) * (mo.m - T::one()) / mo.b)
}

/// Quine's formulas without checking their condition.
pub fn quine_formulas<T: Scalar>(model: &OffspringModel<T>) -> Result<(T, Option<T>)> {
    let mo = model.moments();
    let beta = beta_bound(&mo)?;
    let three_b = T::lit(3.0) * mo.b;
    let x = T::one() - T::lit(2.0) * beta;
    let lower = beta + beta * beta * model.derivs(x)[3] / three_b;
    let base = T::one() - T::lit(4.0) * mo.c * beta / three_b;
    let upper = if base > T::zero() {
        Some(beta + beta * beta * (mo.c / three_b) * base.powf(T::lit(-1.5)))
    } else {
        None
    };
    Ok((lower, upper))
}

/// `(L^Q, U^Q)`, provided `2 beta < min(1, 3b/(2c))`.
pub fn quine_bounds<T: Scalar>(model: &OffspringModel<T>) -> Result<(T, T)> {
    let mo = model.moments();
    let beta = beta_bound(&mo)?;
    let two_beta = T::lit(2.0) * beta;
    let cap = if mo.c > T::zero() {
        (T::lit(1.5) * mo.b / mo.c).min(T::one())
    } else {
        T::one()
    };
    if !(two_beta < cap) {
        return Err(Error::Applicability {
            condition: "2 beta < min(1, 3b/(2c))",
            lhs: two_beta.as_f64(),
            rhs: cap.as_f64(),
        });
    }
    let (lower, upper) = quine_formulas(model)?;
    let upper = upper.ok_or(Error::Applicability {
        condition: "1 - 4 c beta / (3b) > 0",
        lhs: (T::lit(4.0) * mo.c * beta / (T::lit(3.0) * mo.b)).as_f64(),
        rhs: 1.0,
    })?;
    Ok((lower, upper))
}

/// Daley-Narayan upper bound, provided `8 c (m-1) < 3 b^2`.
pub fn dn_upper<T: Scalar>(mo: &Moments<T>) -> Result<T> {
    let lhs = T::lit(8.0) * mo.c * (mo.m - T::one());
    let rhs = T::lit(3.0) * mo.b * mo.b;
    if !(lhs < rhs) {
        return Err(Error::Applicability {
            condition: "8 c (m-1) < 3 b^2",
            lhs: lhs.as_f64(),
            rhs: rhs.as_f64(),
        });
    }
    if mo.c == T::zero() {
        return Ok(T::lit(2.0) * (mo.m - T::one()) / mo.b);
    }
    let three = T::lit(3.0);
    let disc = mo.b * mo.b - T::lit(8.0 / 3.0) * mo.c * (mo.m - T::one());
    Ok((three * mo.b - three * disc.sqrt()) / (T::lit(2.0) * mo.c))
}

pub fn mu_derivatives<T: Scalar>(family: &Family<T>) -> Result<MuDerivatives<T>> {
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    Ok(match *family {
        Family::Poisson => MuDerivatives {
            mu20: one,
            mu21: two,
            mu22: two,
            mu30: one,
            mu31: three,
            mu40: one,
        },
        Family::Binomial(n) => {
            if n < 2 {
                return domain("binomial needs n >= 2");
            }
            let nf = T::from_count(n as u64);
            let a1 = (nf - one) / nf;
            let a2 = a1 * (nf - two) / nf;
            let a3 = a2 * (nf - three) / nf;
            MuDerivatives {
                mu20: a1,
                mu21: two * a1,
                mu22: two * a1,
                mu30: a2,
                mu31: three * a2,
                mu40: a3,
            }
        }
        Family::NegBinomial(r) => {
            if r < 1 {
                return domain("negative binomial needs r >= 1");
            }
            let rf = T::from_count(r as u64);
            let a1 = (rf + one) / rf;
            let a2 = a1 * (rf + two) / rf;
            let a3 = a2 * (rf + three) / rf;
            MuDerivatives {
                mu20: a1,
                mu21: two * a1,
                mu22: two * a1,
                mu30: a2,
                mu31: three * a2,
                mu40: a3,
            }
        }
        Family::GeneralizedPoisson(l) => {
            if !(l >= T::zero() && l < one) {
                return domain(format!("lambda must lie in [0,1), got {l}"));
            }
            let d = one - l;
            let d2 = d * d;
            let d4 = d2 * d2;
            let l2 = l * l;
            MuDerivatives {
                mu20: one / d2,
                mu21: (l2 - two * l + two) / d2,
                mu22: two,
                mu30: (one + two * l) / d4,
                mu31: (three - three * l2 + T::lit(4.0) * l2 * l - l2 * l2) / d4,
                mu40: (one + T::lit(6.0) * l + T::lit(9.0) * l2 - l2 * l2) / (d4 * d2),
            }
        }
        Family::FractionalLinear(pi) => {
            if !(pi > T::zero() && pi < one) {
                return domain(format!("pi must lie in (0,1), got {pi}"));
            }
            let k = pi / (one - pi);
            MuDerivatives {
                mu20: two * k,
                mu21: two * k,
                mu22: T::zero(),
                mu30: T::lit(6.0) * k * k,
                mu31: T::lit(6.0) * k * k,
                mu40: T::lit(24.0) * k * k * k,
            }
        }
    })
}

pub fn sinf_series<T: Scalar>(mu: &MuDerivatives<T>) -> Result<SeriesCoeffs<T>> {
    if !(mu.mu20 > T::zero()) {
        return domain("sinf_series needs mu20 > 0");
    }
    let c = |x: f64| T::lit(x);
    let MuDerivatives {
        mu20: a,
        mu21,
        mu22,
        mu30,
        mu31,
        mu40,
    } = *mu;
    let a2 = a * a;
    let a3 = a2 * a;
    let theta = c(2.0) / a;
    let delta2 = (c(6.0) * a * mu21 - c(4.0) * mu30) / (c(3.0) * a3);
    let delta3 = (c(18.0) * a2 * mu21 * mu21 - c(9.0) * a3 * mu22 + c(16.0) * mu30 * mu30
        - c(36.0) * a * mu21 * mu30
        + c(12.0) * a2 * mu31
        - c(6.0) * a * mu40)
        / (c(9.0) * a3 * a2);
    let gamma2 = c(2.0) * mu30 / (c(3.0) * a2);
    let gamma3 = c(2.0) / (c(9.0) * a2 * a2)
        * (c(6.0) * a * mu21 * mu30 - c(4.0) * mu30 * mu30 - c(3.0) * a2 * mu31 + c(3.0) * a * mu40);
    Ok(SeriesCoeffs {
        theta,
        delta2,
        delta3,
        gamma2,
        gamma3,
    })
}

fn check_order(order: u32) -> Result<()> {
    if (1..=3).contains(&order) {
        Ok(())
    } else {
        domain(format!("series order must be 1, 2 or 3, got {order}"))
    }
}

/// `theta s - delta2 s^2 + delta3 s^3`, truncated after `order` terms.
pub fn sinf_series_eval<T: Scalar>(family: &Family<T>, s: T, order: u32) -> Result<T> {
    check_order(order)?;
    let k = sinf_series(&mu_derivatives(family)?)?;
    let terms = [k.theta * s, -k.delta2 * s * s, k.delta3 * s * s * s];
    Ok(terms[..order as usize].iter().fold(T::zero(), |a, &t| a + t))
}

/// `1 - s + gamma2 s^2 - gamma3 s^3`, truncated after `order` correction terms.
pub fn gamma_series_eval<T: Scalar>(family: &Family<T>, s: T, order: u32) -> Result<T> {
    check_order(order)?;
    let k = sinf_series(&mu_derivatives(family)?)?;
    let terms = [-s, k.gamma2 * s * s, -k.gamma3 * s * s * s];
    Ok(terms[..order as usize].iter().fold(T::one(), |a, &t| a + t))
}

/// `ceil((1/s - 1/2 + gamma2) ln(1 + 1/eps) - theta)`.
pub fn t_ser<T: Scalar>(family: &Family<T>, s: T, eps: T) -> Result<i64> {
    if !(s > T::zero() && eps > T::zero()) {
        return domain("t_ser needs s > 0 and eps > 0");
    }
    let k = sinf_series(&mu_derivatives(family)?)?;
    let v = (T::one() / s - T::lit(0.5) + k.gamma2) * (T::one() + T::one() / eps).ln() - k.theta;
    v.ceil()
        .to_i64()
        .ok_or_else(|| Error::Domain(format!("t_ser value {v} not representable")))
}

/// First-order approximation of `P^(n) / P_inf`; accurate roughly when `s n < 1`.
pub fn pn_ratio_series<T: Scalar>(family: &Family<T>, s: T, n: u32) -> Result<T> {
    let k = sinf_series(&mu_derivatives(family)?)?;
    let nf = T::from_count(n as u64);
    let two = T::lit(2.0);
    let d = nf + k.theta;
    Ok(T::one() - k.theta / d
        + nf * (k.theta * (nf + T::one()) + two * k.delta2 - two * k.theta * k.gamma2) / (two * d * d) * s)
}

/// Every bound and approximation of `S_inf` for one family at one `s`.
pub fn sinf_bounds<T: Scalar>(family: &Family<T>, s: T) -> Result<SinfBounds<T>> {
    let model = family.model(s)?;
    let mo = model.moments();
    let (quine_lower, quine_upper) = quine_formulas(&model)?;
    let coeffs = sinf_series(&mu_derivatives(family)?)?;
    Ok(SinfBounds {
        beta: beta_bound(&mo)?,
        quine_lower,
        quine_upper,
        quine_applicable: quine_bounds(&model).is_ok(),
        dn_upper: dn_upper(&mo).ok(),
        series3: sinf_series_eval(family, s, 3)?,
        haldane: coeffs.theta * s,
        exact: extinction_probability(&model)?.s_inf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_coefficients() {
        let k = sinf_series(&mu_derivatives::<f64>(&Family::Poisson).unwrap()).unwrap();
        assert!((k.theta - 2.0).abs() < 1e-15);
        assert!((k.delta2 - 8.0 / 3.0).abs() < 1e-14);
        assert!((k.delta3 - 28.0 / 9.0).abs() < 1e-14);
        assert!((k.gamma2 - 2.0 / 3.0).abs() < 1e-15);
        assert!((k.gamma3 - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn fractional_linear_series_is_exact() {
        let k = sinf_series(&mu_derivatives(&Family::FractionalLinear(0.2f64)).unwrap()).unwrap();
        assert!((k.theta - 4.0).abs() < 1e-14);
        assert!(k.delta2.abs() < 1e-13 && k.delta3.abs() < 1e-12);
        assert!((k.gamma2 - 1.0).abs() < 1e-14 && (k.gamma3 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn order_is_checked() {
        assert!(sinf_series_eval(&Family::Poisson, 0.1f64, 0).is_err());
        assert!(sinf_series_eval(&Family::Poisson, 0.1f64, 4).is_err());
    }

    #[test]
    fn quine_fails_for_poisson_at_large_s() {
        let m = Family::Poisson.model(0.7f64).unwrap();
        assert!(matches!(quine_bounds(&m), Err(Error::Applicability { .. })));
    }
}
