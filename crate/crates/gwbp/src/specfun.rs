//! Principal-branch Lambert W and the exponential integral E1.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            max_iter: 100,
        }
    }
}

impl ToleranceConfig {
    pub fn new(abs_tol: f64, max_iter: usize) -> Result<Self> {
        let cfg = Self { abs_tol, max_iter };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return domain(format!("abs_tol must be positive, got {}", self.abs_tol));
        }
        if self.max_iter < 1 {
            return domain("max_iter must be at least 1");
        }
        Ok(())
    }
}

/// Principal branch W0 of the Lambert W function on `[-1/e, inf)`.
pub fn lambert_w0<T: Scalar>(z: T) -> Result<T> {
    lambert_w0_with(z, &ToleranceConfig::default())
}

pub fn lambert_w0_with<T: Scalar>(z: T, cfg: &ToleranceConfig) -> Result<T> {
    cfg.validate()?;
    let one = T::one();
    let e = T::E();
    let branch = -one / e;
    if z.is_nan() || z < branch - T::lit(1e-15) {
        return domain(format!("lambert_w0 needs z >= -1/e, got {z}"));
    }
    if z == T::zero() {
        return Ok(T::zero());
    }
    if z.is_infinite() {
        return Ok(z);
    }
    // distance to the branch point, scaled so that p = sqrt(2(ez+1))
    let q = (e * z + one).max(T::zero());
    if q <= T::lit(1e-12) {
        return Ok(branch_series(q));
    }

    let mut w = if z < T::lit(-0.25) {
        branch_series(q)
    } else if z < T::lit(3.0) {
        z.ln_1p()
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    let tol = T::tol_floor(cfg.abs_tol);
    let two = T::lit(2.0);
    // near the branch point the step stalls at rounding noise; the residual still settles
    let res_tol = tol * z.abs().max(one);
    for _ in 0..cfg.max_iter {
        let ew = w.exp();
        let f = w * ew - z;
        if f.abs() <= res_tol * T::lit(1e-2) {
            return Ok(w);
        }
        let wp1 = w + one;
        let denom = ew * wp1 - (w + two) * f / (two * wp1);
        let dw = f / denom;
        w = w - dw;
        if dw.abs() <= tol * (one + w.abs()) {
            return Ok(w);
        }
    }
    let f = w * w.exp() - z;
    if f.abs() <= res_tol {
        return Ok(w);
    }
    Err(Error::Convergence {
        what: "lambert_w0 Halley iteration",
        iters: cfg.max_iter,
    })
}

fn branch_series<T: Scalar>(q: T) -> T {
    let p = (T::lit(2.0) * q).sqrt();
    let p2 = p * p;
    -T::one() + p - p2 / T::lit(3.0) + T::lit(11.0 / 72.0) * p2 * p
        - T::lit(43.0 / 540.0) * p2 * p2
        + T::lit(769.0 / 17280.0) * p2 * p2 * p
}

/// Exponential integral `E1(x) = int_x^inf e^{-t}/t dt` for `x > 0`.
pub fn exp_integral_e1<T: Scalar>(x: T) -> Result<T> {
    if x.is_nan() || x <= T::zero() {
        return domain(format!("exp_integral_e1 needs x > 0, got {x}"));
    }
    if x < T::one() {
        Ok(e1_series(x))
    } else {
        Ok(e1_scaled_cf(x)? * (-x).exp())
    }
}

/// `e^x E1(x)` evaluated without forming `e^x` separately for `x >= 1`.
pub fn exp_e1_scaled<T: Scalar>(x: T) -> Result<T> {
    if x.is_nan() || x <= T::zero() {
        return domain(format!("exp_e1_scaled needs x > 0, got {x}"));
    }
    if x < T::one() {
        Ok(e1_series(x) * x.exp())
    } else {
        e1_scaled_cf(x)
    }
}

fn e1_series<T: Scalar>(x: T) -> T {
    let eps = T::epsilon();
    let mut sum = T::zero();
    let mut fact_term = T::one();
    for k in 1..200u32 {
        let kf = T::from_count(k as u64);
        fact_term = -fact_term * x / kf;
        let term = fact_term / kf;
        sum = sum - term;
        if term.abs() < eps * sum.abs() {
            break;
        }
    }
    -T::lit(EULER_GAMMA) - x.ln() + sum
}

// modified Lentz on the continued fraction for e^x E1(x)
fn e1_scaled_cf<T: Scalar>(x: T) -> Result<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let tiny = T::min_positive_value() / T::epsilon();
    let mut b = x + one;
    let mut c = one / tiny;
    let mut d = one / b;
    let mut h = d;
    for i in 1..1000u64 {
        let ii = T::from_count(i);
        let a = -ii * ii;
        b = b + two;
        d = one / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h = h * del;
        if (del - one).abs() <= T::epsilon() {
            return Ok(h);
        }
    }
    Err(Error::Convergence {
        what: "E1 continued fraction",
        iters: 1000,
    })
}
