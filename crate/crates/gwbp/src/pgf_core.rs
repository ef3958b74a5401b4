//! Offspring models, pgf evaluation and derivatives, extinction probability and exact iteration.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;
use crate::specfun::{lambert_w0, ToleranceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum OffspringModel<T> {
    Poisson { m: T },
    Binomial { n: u32, p: T },
    NegBinomial { r: u32, p: T },
    FractionalLinear { pi: T, rho: T },
    FiniteThree { p0: T, p1: T, p2: T, p3: T },
    GeneralizedPoisson { mu: T, lambda: T },
}

/// One-parameter families indexed by the selective advantage `s`, with mean `1 + s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "param", rename_all = "snake_case")]
pub enum Family<T> {
    Poisson,
    Binomial(u32),
    NegBinomial(u32),
    GeneralizedPoisson(T),
    /// Fractional linear with `pi` held fixed and `rho = pi (1 + s) - s`.
    FractionalLinear(T),
}

impl<T: Scalar> Family<T> {
    pub fn model(&self, s: T) -> Result<OffspringModel<T>> {
        if !(s > T::zero()) {
            return domain(format!("selective advantage must be positive, got {s}"));
        }
        let m = T::one() + s;
        match *self {
            Family::Poisson => OffspringModel::poisson(m),
            Family::Binomial(n) => {
                if n < 2 {
                    return domain("binomial needs n >= 2");
                }
                OffspringModel::binomial(n, m / T::from_count(n as u64))
            }
            Family::NegBinomial(r) => {
                let rf = T::from_count(r as u64);
                OffspringModel::negbinomial(r, rf / (rf + m))
            }
            Family::GeneralizedPoisson(lambda) => {
                OffspringModel::generalized_poisson(m * (T::one() - lambda), lambda)
            }
            Family::FractionalLinear(pi) => OffspringModel::fractional_linear(pi, pi * m - s),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Family::Poisson => "poisson".into(),
            Family::Binomial(n) => format!("binomial(n={n})"),
            Family::NegBinomial(r) => format!("negbinomial(r={r})"),
            Family::GeneralizedPoisson(l) => format!("gp(lambda={l})"),
            Family::FractionalLinear(pi) => format!("fl(pi={pi})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments<T> {
    pub m: T,
    pub var: T,
    pub b: T,
    pub c: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint<T> {
    pub p_inf: T,
    pub s_inf: T,
    pub gamma: T,
}

fn check_prob<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v > T::zero() && v < T::one() {
        Ok(())
    } else {
        domain(format!("{name} must lie in (0,1), got {v}"))
    }
}

impl<T: Scalar> OffspringModel<T> {
    pub fn poisson(m: T) -> Result<Self> {
        Self::Poisson { m }.validated()
    }

    pub fn binomial(n: u32, p: T) -> Result<Self> {
        Self::Binomial { n, p }.validated()
    }

    pub fn negbinomial(r: u32, p: T) -> Result<Self> {
        Self::NegBinomial { r, p }.validated()
    }

    pub fn fractional_linear(pi: T, rho: T) -> Result<Self> {
        Self::FractionalLinear { pi, rho }.validated()
    }

    /// Three-offspring law with `p1 = 1 - p0 - p2 - p3`.
    pub fn finite_three(p0: T, p2: T, p3: T) -> Result<Self> {
        let p1 = T::one() - p0 - p2 - p3;
        Self::FiniteThree { p0, p1, p2, p3 }.validated()
    }

    pub fn generalized_poisson(mu: T, lambda: T) -> Result<Self> {
        Self::GeneralizedPoisson { mu, lambda }.validated()
    }

    /// Checks parameter ranges and supercriticality.
    pub fn validated(self) -> Result<Self> {
        let zero = T::zero();
        let one = T::one();
        match self {
            Self::Poisson { m } => {
                if !(m > zero && m.is_finite()) {
                    return domain(format!("poisson mean must be positive, got {m}"));
                }
            }
            Self::Binomial { n, p } => {
                if n < 2 {
                    return domain(format!("binomial needs n >= 2, got {n}"));
                }
                check_prob("binomial p", p)?;
            }
            Self::NegBinomial { r, p } => {
                if r < 1 {
                    return domain("negative binomial needs r >= 1");
                }
                check_prob("negative binomial p", p)?;
            }
            Self::FractionalLinear { pi, rho } => {
                check_prob("pi", pi)?;
                check_prob("rho", rho)?;
                if !(rho < pi) {
                    return domain(format!("fractional linear needs rho < pi, got rho={rho} pi={pi}"));
                }
            }
            Self::FiniteThree { p0, p1, p2, p3 } => {
                let tol = T::lit(1e-12);
                if p0 <= zero || p1 < -tol || p2 < zero || p3 < zero {
                    return domain("three-offspring probabilities must be nonnegative with p0 > 0");
                }
                if (p0 + p1 + p2 + p3 - one).abs() > tol {
                    return domain("three-offspring probabilities must sum to 1");
                }
                if !(p0 + p1 < one) {
                    return domain("three-offspring law needs p0 + p1 < 1");
                }
            }
            Self::GeneralizedPoisson { mu, lambda } => {
                if !(mu > zero && mu.is_finite()) {
                    return domain(format!("generalized poisson mu must be positive, got {mu}"));
                }
                if !(lambda >= zero && lambda < one) {
                    return domain(format!("generalized poisson lambda must lie in [0,1), got {lambda}"));
                }
            }
        }
        let m = self.mean();
        if !(m > one) {
            return domain(format!("model is not supercritical (mean {m})"));
        }
        Ok(self)
    }

    pub fn mean(&self) -> T {
        let one = T::one();
        match *self {
            Self::Poisson { m } => m,
            Self::Binomial { n, p } => T::from_count(n as u64) * p,
            Self::NegBinomial { r, p } => T::from_count(r as u64) * (one - p) / p,
            Self::FractionalLinear { pi, rho } => (one - rho) / (one - pi),
            Self::FiniteThree { p1, p2, p3, .. } => p1 + T::lit(2.0) * p2 + T::lit(3.0) * p3,
            Self::GeneralizedPoisson { mu, lambda } => mu / (one - lambda),
        }
    }

    /// `phi(0)`.
    pub fn p0(&self) -> T {
        self.phi(T::zero())
    }

    /// Unchecked pgf value; also meaningful slightly outside `[0,1]` where the closed form extends.
    pub fn phi(&self, x: T) -> T {
        let one = T::one();
        match *self {
            Self::Poisson { m } => (m * (x - one)).exp(),
            Self::Binomial { n, p } => (one - p + p * x).powi(n as i32),
            Self::NegBinomial { r, p } => (p / (one - (one - p) * x)).powi(r as i32),
            Self::FractionalLinear { pi, rho } => (rho + x * (one - pi - rho)) / (one - pi * x),
            Self::FiniteThree { p0, p1, p2, p3 } => p0 + x * (p1 + x * (p2 + x * p3)),
            Self::GeneralizedPoisson { mu, lambda } => {
                if x == T::zero() {
                    return (-mu).exp();
                }
                (mu * (gp_t(lambda, x) - one)).exp()
            }
        }
    }

    /// `[phi, phi', phi'', phi''']` at `x`, unchecked.
    pub fn derivs(&self, x: T) -> [T; 4] {
        let zero = T::zero();
        let one = T::one();
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        match *self {
            Self::Poisson { m } => {
                let v = (m * (x - one)).exp();
                [v, m * v, m * m * v, m * m * m * v]
            }
            Self::Binomial { n, p } => {
                let u = one - p + p * x;
                let mut out = [zero; 4];
                let mut coef = one;
                for (k, slot) in out.iter_mut().enumerate() {
                    let k = k as u32;
                    if k > n {
                        break;
                    }
                    if k > 0 {
                        coef = coef * T::from_count((n - k + 1) as u64) * p;
                    }
                    *slot = coef * u.powi((n - k) as i32);
                }
                out
            }
            Self::NegBinomial { r, p } => {
                let q = one - p;
                let w = one - q * x;
                let pr = p.powi(r as i32);
                let mut out = [zero; 4];
                let mut coef = pr;
                for (k, slot) in out.iter_mut().enumerate() {
                    if k > 0 {
                        coef = coef * T::from_count((r as u64) + (k as u64) - 1) * q;
                    }
                    *slot = coef * w.powi(-(r as i32) - k as i32);
                }
                out
            }
            Self::FractionalLinear { pi, rho } => {
                let c = (one - pi) * (one - rho) / pi;
                let d = one - pi * x;
                let v = (rho + x * (one - pi - rho)) / d;
                let d1 = c * pi / (d * d);
                let d2 = two * d1 * pi / d;
                let d3 = three * d2 * pi / d;
                [v, d1, d2, d3]
            }
            Self::FiniteThree { p0, p1, p2, p3 } => [
                p0 + x * (p1 + x * (p2 + x * p3)),
                p1 + x * (two * p2 + three * x * p3),
                two * p2 + T::lit(6.0) * p3 * x,
                T::lit(6.0) * p3,
            ],
            Self::GeneralizedPoisson { mu, lambda } => gp_derivs(mu, lambda, x),
        }
    }

    pub fn moments(&self) -> Moments<T> {
        let d = self.derivs(T::one());
        let m = d[1];
        Moments {
            m,
            var: d[2] + m - m * m,
            b: d[2],
            c: d[3],
        }
    }
}

/// `t(x) = -W(-x lambda e^{-lambda}) / lambda`, the Lagrangian inverse for the generalized Poisson pgf.
fn gp_t<T: Scalar>(lambda: T, x: T) -> T {
    if lambda == T::zero() {
        return x;
    }
    let z = -x * lambda * (-lambda).exp();
    match lambert_w0(z) {
        Ok(w) => -w / lambda,
        Err(_) => T::nan(),
    }
}

fn gp_derivs<T: Scalar>(mu: T, lambda: T, x: T) -> [T; 4] {
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let t = if x == T::zero() { T::zero() } else { gp_t(lambda, x) };
    let e = (lambda * (t - one)).exp();
    let d = one - lambda * t;
    let q = e / d;
    let h = (two - lambda * t) / d;
    let t2 = lambda * q * q * h;
    let t3 = lambda * (two * q * t2 * h + lambda * q * q * q / (d * d));
    let phi = (mu * (t - one)).exp();
    let g1 = mu * q;
    let g2 = mu * t2;
    let g3 = mu * t3;
    [
        phi,
        g1 * phi,
        (g2 + g1 * g1) * phi,
        (g3 + three * g1 * g2 + g1 * g1 * g1) * phi,
    ]
}

fn check_unit<T: Scalar>(x: T) -> Result<()> {
    if x >= T::zero() && x <= T::one() {
        Ok(())
    } else {
        domain(format!("pgf argument must lie in [0,1], got {x}"))
    }
}

pub fn pgf_eval<T: Scalar>(model: &OffspringModel<T>, x: T) -> Result<T> {
    check_unit(x)?;
    Ok(model.phi(x))
}

pub fn pgf_derivative<T: Scalar>(model: &OffspringModel<T>, x: T, order: u32) -> Result<T> {
    check_unit(x)?;
    if !(1..=3).contains(&order) {
        return domain(format!("derivative order must be 1, 2 or 3, got {order}"));
    }
    Ok(model.derivs(x)[order as usize])
}

pub fn moments<T: Scalar>(model: &OffspringModel<T>) -> Moments<T> {
    model.moments()
}

pub fn extinction_probability<T: Scalar>(model: &OffspringModel<T>) -> Result<FixedPoint<T>> {
    extinction_probability_with(model, &ToleranceConfig::default())
}

pub fn extinction_probability_with<T: Scalar>(
    model: &OffspringModel<T>,
    cfg: &ToleranceConfig,
) -> Result<FixedPoint<T>> {
    cfg.validate()?;
    let one = T::one();
    let p = match *model {
        OffspringModel::FractionalLinear { pi, rho } => rho / pi,
        OffspringModel::Poisson { m } => {
            let w = lambert_w0(-m * (-m).exp())?;
            polish(model, -w / m, cfg)
        }
        OffspringModel::FiniteThree { p0, p2, p3, .. } => {
            let seed = if p3 > T::zero() {
                let a = p2 + p3;
                let q = (T::lit(4.0) * p0 * p3 + a * a).sqrt();
                // rationalized root of p3 x^2 + (p2+p3) x - p0 = 0
                T::lit(2.0) * p0 / (q + a)
            } else {
                p0 / p2
            };
            polish(model, seed, cfg)
        }
        _ => bracketed_root(model, cfg)?,
    };
    if !(p > T::zero() && p < one) {
        return Err(Error::Convergence {
            what: "extinction probability",
            iters: cfg.max_iter,
        });
    }
    Ok(FixedPoint {
        p_inf: p,
        s_inf: one - p,
        gamma: model.derivs(p)[1],
    })
}

// Newton steps on phi(x) - x, kept only while the residual shrinks.
fn polish<T: Scalar>(model: &OffspringModel<T>, seed: T, cfg: &ToleranceConfig) -> T {
    let mut x = seed;
    let mut res = (model.phi(x) - x).abs();
    for _ in 0..cfg.max_iter.min(8) {
        let d = model.derivs(x);
        let step = (d[0] - x) / (d[1] - T::one());
        let y = x - step;
        let r = (model.phi(y) - y).abs();
        if !(r < res) {
            break;
        }
        x = y;
        res = r;
    }
    x
}

fn bracketed_root<T: Scalar>(model: &OffspringModel<T>, cfg: &ToleranceConfig) -> Result<T> {
    let one = T::one();
    let g = |x: T| model.phi(x) - x;
    let mut lo = T::zero();
    let mut hi = one - T::lit(1e-9);
    if !(g(hi) < T::zero()) {
        return Err(Error::Bracket(
            "phi(x) - x does not change sign on [0, 1-1e-9]; mean too close to 1".into(),
        ));
    }
    let mut it = 0;
    while hi - lo > T::lit(1e-6) {
        let mid = T::lit(0.5) * (lo + hi);
        if g(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        it += 1;
        if it > cfg.max_iter {
            return Err(Error::Convergence {
                what: "extinction bisection",
                iters: cfg.max_iter,
            });
        }
    }
    let tol = T::tol_floor(cfg.abs_tol);
    let mut x = T::lit(0.5) * (lo + hi);
    for _ in 0..cfg.max_iter {
        let d = model.derivs(x);
        let step = (d[0] - x) / (d[1] - one);
        let mut y = x - step;
        if !(y > lo && y < hi) {
            y = T::lit(0.5) * (lo + hi);
        }
        if g(y) > T::zero() {
            lo = y;
        } else {
            hi = y;
        }
        let done = (y - x).abs() <= tol * y.max(tol);
        x = y;
        if done {
            return Ok(polish(model, x, cfg));
        }
    }
    Err(Error::Convergence {
        what: "extinction Newton polish",
        iters: cfg.max_iter,
    })
}

/// `P^(n) = phi^(n)(0)`.
pub fn iterate_extinction<T: Scalar>(model: &OffspringModel<T>, n: u64) -> T {
    let mut x = T::zero();
    for _ in 0..n {
        x = model.phi(x);
    }
    x
}

/// `S^(n) = 1 - P^(n)` for `n = 0..=n_max`.
pub fn survival_curve<T: Scalar>(model: &OffspringModel<T>, n_max: u64) -> Result<Vec<T>> {
    if n_max < 1 {
        return domain("survival_curve needs n_max >= 1");
    }
    let mut out = Vec::with_capacity(n_max as usize + 1);
    let mut x = T::zero();
    out.push(T::one());
    for _ in 0..n_max {
        x = model.phi(x);
        out.push(T::one() - x);
    }
    Ok(out)
}

/// `xi = P_inf^(1/n)` for a binomial fixed point.
pub fn bin_xi<T: Scalar>(p_inf: T, n: u32) -> T {
    p_inf.powf(T::one() / T::from_count(n as u64))
}

/// Convergence rate of the binomial written through `xi`.
pub fn gamma_bin_closed<T: Scalar>(p_inf: T, n: u32) -> T {
    let xi = bin_xi(p_inf, n);
    let nf = T::from_count(n as u64);
    nf * xi.powi(n as i32 - 1) * (T::one() - xi) / (T::one() - xi.powi(n as i32))
}

/// `zeta = P_inf^(1/r)` for a negative binomial fixed point.
pub fn nb_zeta<T: Scalar>(p_inf: T, r: u32) -> T {
    p_inf.powf(T::one() / T::from_count(r as u64))
}

/// Convergence rate of the negative binomial written through `zeta`.
pub fn gamma_nb_closed<T: Scalar>(p_inf: T, r: u32) -> T {
    let z = nb_zeta(p_inf, r);
    let rf = T::from_count(r as u64);
    rf * (T::one() - z) * z.powi(r as i32) / (T::one() - z.powi(r as i32))
}
