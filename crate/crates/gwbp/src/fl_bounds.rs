//! Fractional-linear closed forms, matching bounds on `S^(n)`, and convergence times.

use serde::{Deserialize, Serialize};

use crate::classify_f3::{classify_f3, F3Region};
use crate::classify_gp::classify_gp;
use crate::error::{domain, Error, Result};
use crate::pgf_core::{extinction_probability, FixedPoint, OffspringModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FLParams<T> {
    pub pi: T,
    pub rho: T,
}

impl<T: Scalar> FLParams<T> {
    pub fn new(pi: T, rho: T) -> Result<Self> {
        let zero = T::zero();
        let one = T::one();
        if !(zero < rho && rho < pi && pi < one) {
            return domain(format!("need 0 < rho < pi < 1, got pi={pi} rho={rho}"));
        }
        Ok(Self { pi, rho })
    }

    /// Parameters with the given mean and variance.
    pub fn from_mean_var(m: T, var: T) -> Result<Self> {
        let one = T::one();
        if !(m > one && var > T::zero()) {
            return domain("from_mean_var needs m > 1 and var > 0");
        }
        let k = var / m;
        let pi = (k + m - one) / (one + m + k);
        Self::new(pi, one - m * (one - pi))
    }

    pub fn mean(&self) -> T {
        (T::one() - self.rho) / (T::one() - self.pi)
    }

    pub fn variance(&self) -> T {
        let one = T::one();
        let d = one - self.pi;
        (one - self.rho) * (self.pi + self.rho) / (d * d)
    }

    pub fn gamma(&self) -> T {
        (T::one() - self.pi) / (T::one() - self.rho)
    }

    pub fn p_inf(&self) -> T {
        self.rho / self.pi
    }

    pub fn s_inf(&self) -> T {
        T::one() - self.rho / self.pi
    }

    pub fn eval(&self, x: T) -> T {
        (self.rho + x * (T::one() - self.pi - self.rho)) / (T::one() - self.pi * x)
    }

    /// `k`-th derivative for `k >= 1`.
    pub fn derivative(&self, x: T, k: u32) -> T {
        let one = T::one();
        let c = (one - self.pi) * (one - self.rho) / self.pi;
        let d = one - self.pi * x;
        let mut fact = one;
        for i in 2..=k {
            fact = fact * T::from_count(i as u64);
        }
        c * fact * self.pi.powi(k as i32) / d.powi(k as i32 + 1)
    }

    pub fn model(&self) -> OffspringModel<T> {
        OffspringModel::FractionalLinear {
            pi: self.pi,
            rho: self.rho,
        }
    }
}

/// Parameters of the `n`-fold composition.
pub fn fl_iterate_params<T: Scalar>(fl: &FLParams<T>, n: u32) -> Result<FLParams<T>> {
    if n < 1 {
        return domain("fl_iterate_params needs n >= 1");
    }
    let mn = fl.mean().powi(-(n as i32));
    if (fl.mean() - T::one()).abs() < T::epsilon() {
        return domain("fl_iterate_params needs m != 1");
    }
    let den = fl.pi - fl.rho * mn;
    Ok(FLParams {
        pi: fl.pi * (T::one() - mn) / den,
        rho: fl.rho * (T::one() - mn) / den,
    })
}

/// Closed-form `S^(n)` of the fractional linear process.
pub fn fl_survival_by_n<T: Scalar>(fl: &FLParams<T>, n: u32) -> T {
    let s = fl.s_inf();
    s / (T::one() - fl.mean().powi(-(n as i32)) * (T::one() - s))
}

/// The fractional linear pgf sharing the fixed point and its slope.
pub fn matching_fl<T: Scalar>(fp: &FixedPoint<T>) -> Result<FLParams<T>> {
    let one = T::one();
    let (p, g) = (fp.p_inf, fp.gamma);
    if !(p > T::zero() && p < one && g > T::zero() && g < one) {
        return domain(format!("matching_fl needs P, gamma in (0,1), got P={p} gamma={g}"));
    }
    let pi = (one - g) / (one - p * g);
    FLParams::new(pi, p * pi)
}

fn bound_from_fp<T: Scalar>(fp: &FixedPoint<T>, n: u32) -> T {
    fp.s_inf / (T::one() - fp.gamma.powi(n as i32) * fp.p_inf)
}

pub fn sn_fl_bound<T: Scalar>(model: &OffspringModel<T>, n: u32) -> Result<T> {
    let fp = extinction_probability(model)?;
    Ok(bound_from_fp(&fp, n))
}

pub fn sn_simple_bound<T: Scalar>(model: &OffspringModel<T>, n: u32) -> Result<T> {
    let fp = extinction_probability(model)?;
    Ok(fp.s_inf + fp.p_inf * fp.gamma.powi(n as i32))
}

/// Pollak's upper bound `S_inf + dbar^(n) gamma^n`.
pub fn sn_pollak_bound<T: Scalar>(model: &OffspringModel<T>, n: u32) -> Result<T> {
    let fp = extinction_probability(model)?;
    Ok(pollak_from_fp(model, &fp, n))
}

fn pollak_from_fp<T: Scalar>(model: &OffspringModel<T>, fp: &FixedPoint<T>, n: u32) -> T {
    let two = T::lit(2.0);
    let (p, g) = (fp.p_inf, fp.gamma);
    let gn = g.powi(n as i32);
    let b2 = model.derivs(p)[2];
    let dbar = two * (T::one() - g) * p / (two * (T::one() - g) + b2 * p * (T::one() - gn) / g);
    fp.s_inf + dbar * gn
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub n: u32,
    pub exact: T,
    pub fl_bound: T,
    pub simple_bound: T,
    pub pollak_bound: T,
    pub agresti_bound: Option<T>,
}

pub fn bound_report<T: Scalar>(model: &OffspringModel<T>, n: u32) -> Result<BoundReport<T>> {
    let fp = extinction_probability(model)?;
    let exact = T::one() - crate::pgf_core::iterate_extinction(model, n as u64);
    let agresti_bound = match *model {
        OffspringModel::Poisson { m } => {
            let pi = agresti_pi_poisson(m, AgrestiDirection::Lower)?;
            Some(agresti_survival_bound(&fp, pi, n))
        }
        _ => None,
    };
    Ok(BoundReport {
        n,
        exact,
        fl_bound: bound_from_fp(&fp, n),
        simple_bound: fp.s_inf + fp.p_inf * fp.gamma.powi(n as i32),
        pollak_bound: pollak_from_fp(model, &fp, n),
        agresti_bound,
    })
}

/// Which side of the pgf the bounding function lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgrestiDirection {
    Upper,
    Lower,
}

/// `v(x)` whose supremum/infimum over `[0,1)` gives the bounding parameter; `x = 1` is the limit.
pub fn agresti_v<T: Scalar>(model: &OffspringModel<T>, fp: &FixedPoint<T>, x: T) -> T {
    let one = T::one();
    let (p, g) = (fp.p_inf, fp.gamma);
    if x >= one {
        let c2 = p * model.derivs(p)[2];
        return c2 / (T::lit(2.0) * g + c2);
    }
    let psi = model.phi(p * x) / p;
    let y = one - x;
    (psi - one + g * y) / (x * psi - x + g * y)
}

fn golden_min<T: Scalar, F: Fn(T) -> T>(f: F, mut a: T, mut b: T, tol: T) -> T {
    let r = T::lit(0.618_033_988_749_894_8);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = T::lit(0.5) * (a + b);
    f(x).min(fc).min(fd)
}

/// Supremum (upper) or infimum (lower) of `agresti_v` over `[0,1)`, by grid scan and golden-section refinement.
pub fn agresti_pi<T: Scalar>(model: &OffspringModel<T>, direction: AgrestiDirection) -> Result<T> {
    let fp = extinction_probability(model)?;
    let sign = match direction {
        AgrestiDirection::Upper => -T::one(),
        AgrestiDirection::Lower => T::one(),
    };
    let grid = 4096usize;
    let h = T::one() / T::from_count(grid as u64);
    let vals: Vec<T> = (0..=grid)
        .map(|i| sign * agresti_v(model, &fp, T::from_count(i as u64) * h))
        .collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Optimization("v(x) is not finite on the grid".into()));
    }
    let (imin, _) = vals
        .iter()
        .enumerate()
        .fold((0, vals[0]), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let best = if imin == 0 || imin == grid {
        vals[imin]
    } else {
        let f = |x: T| sign * agresti_v(model, &fp, x);
        let a = T::from_count(imin as u64 - 1) * h;
        let b = T::from_count(imin as u64 + 1) * h;
        golden_min(f, a, b, T::tol_floor(1e-12)).min(vals[imin])
    };
    Ok(sign * best)
}

/// Agresti's parameter for the Poisson pgf; requires `v` to be monotone on the grid.
pub fn agresti_pi_poisson<T: Scalar>(m: T, direction: AgrestiDirection) -> Result<T> {
    let model = OffspringModel::poisson(m)?;
    let fp = extinction_probability(&model)?;
    let grid = 4096usize;
    let h = T::one() / T::from_count(grid as u64);
    let vals: Vec<T> = (0..=grid)
        .map(|i| agresti_v(&model, &fp, T::from_count(i as u64) * h))
        .collect();
    let tol = T::lit(1e-7);
    let rising = vals.windows(2).filter(|w| w[1] > w[0] + tol * w[0].abs()).count();
    if rising > 0 {
        return Err(Error::Optimization(format!(
            "v(x, m={m}) is not monotone decreasing ({rising} rising grid steps)"
        )));
    }
    agresti_pi(&model, direction)
}

/// Survival bound from Agresti's bounding function with parameter `pi`.
pub fn agresti_survival_bound<T: Scalar>(fp: &FixedPoint<T>, pi: T, n: u32) -> T {
    let one = T::one();
    let g = fp.gamma;
    let gn = g.powi(n as i32);
    let c = pi / (one - pi);
    fp.s_inf + fp.p_inf * gn / (one + c * (one - gn) / (one - g))
}

/// Smallest `n` with `S^(n) <= (1 + eps) S_inf`.
pub fn t_eps_exact<T: Scalar>(model: &OffspringModel<T>, eps: T) -> Result<u64> {
    t_eps_exact_with(model, eps, 10_000_000)
}

pub fn t_eps_exact_with<T: Scalar>(model: &OffspringModel<T>, eps: T, cap: u64) -> Result<u64> {
    if !(eps > T::zero()) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    let fp = extinction_probability(model)?;
    let target = (T::one() + eps) * fp.s_inf;
    let mut x = T::zero();
    for n in 0..=cap {
        if T::one() - x <= target {
            return Ok(n);
        }
        x = model.phi(x);
    }
    Err(Error::Convergence {
        what: "t_eps_exact iteration",
        iters: cap as usize,
    })
}

/// Real-valued `ln((1 + 1/eps) P_inf) / (-ln gamma)`, clamped at 0.
pub fn t_eps_fl<T: Scalar>(fp: &FixedPoint<T>, eps: T) -> Result<T> {
    if !(eps > T::zero()) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    let arg = (T::one() + T::one() / eps) * fp.p_inf;
    if arg <= T::one() {
        return Ok(T::zero());
    }
    Ok(arg.ln() / -fp.gamma.ln())
}

/// `ceil(t_eps_fl)`.
pub fn t_app<T: Scalar>(fp: &FixedPoint<T>, eps: T) -> Result<u64> {
    Ok(t_eps_fl(fp, eps)?.ceil().to_u64().unwrap_or(u64::MAX))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "direction", content = "n", rename_all = "snake_case")]
pub enum BoundDirection {
    /// The matching fractional linear survival curve bounds `S^(n)` from above.
    UpperOnS,
    LowerOnS,
    /// Upper for small `n`, lower from the given generation on (when observed).
    SwitchesAt(Option<u32>),
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignScan<T> {
    pub min: T,
    pub max: T,
    pub at_zero: T,
}

/// `f(x) = phi(x) - phi_FL(x)` with the matching fractional linear pgf.
pub fn f_minus_fl<T: Scalar>(model: &OffspringModel<T>, fl: &FLParams<T>, x: T) -> T {
    model.phi(x) - fl.eval(x)
}

/// Extremes of `f` on an evenly spaced grid over `[0, upper]`.
pub fn sign_scan<T: Scalar>(model: &OffspringModel<T>, fl: &FLParams<T>, upper: T, points: usize) -> SignScan<T> {
    let h = upper / T::from_count(points as u64);
    let mut min = T::infinity();
    let mut max = T::neg_infinity();
    for i in 0..=points {
        let v = f_minus_fl(model, fl, T::from_count(i as u64) * h);
        min = min.min(v);
        max = max.max(v);
    }
    SignScan {
        min,
        max,
        at_zero: f_minus_fl(model, fl, T::zero()),
    }
}

/// First generation at which the sign of `P^(n) - P_FL^(n)` differs from its sign at `n = 1`.
pub fn switch_generation<T: Scalar>(model: &OffspringModel<T>, fl: &FLParams<T>, n_max: u32) -> Option<u32> {
    let flm = fl.model();
    let tiny = T::lit(1e-15);
    let (mut x, mut y) = (T::zero(), T::zero());
    let mut first = 0i8;
    for n in 1..=n_max {
        let (nx, ny) = (model.phi(x), flm.phi(y));
        if nx == x && ny == y {
            break;
        }
        x = nx;
        y = ny;
        let d = x - y;
        let s = if d > tiny {
            1
        } else if d < -tiny {
            -1
        } else {
            0
        };
        if s == 0 {
            continue;
        }
        if first == 0 {
            first = s;
        } else if s != first {
            return Some(n);
        }
    }
    None
}

const SCAN_POINTS: usize = 2048;
const SCAN_TOL: f64 = 1e-12;

pub fn bound_direction<T: Scalar>(model: &OffspringModel<T>) -> Result<BoundDirection> {
    match *model {
        OffspringModel::FiniteThree { p0, p2, p3, .. } => {
            let cls = classify_f3(p0, p2, p3)?;
            Ok(match cls.region {
                F3Region::LowerBoundOnP => BoundDirection::UpperOnS,
                F3Region::UpperBoundOnP => BoundDirection::LowerOnS,
                F3Region::Switches => BoundDirection::SwitchesAt(cls.switch_generation),
            })
        }
        OffspringModel::GeneralizedPoisson { mu, lambda } => {
            let s = mu / (T::one() - lambda) - T::one();
            classify_gp(s, lambda)
        }
        _ => {
            let fp = extinction_probability(model)?;
            let fl = matching_fl(&fp)?;
            let scan = sign_scan(model, &fl, fp.p_inf, SCAN_POINTS);
            if scan.min < -T::lit(SCAN_TOL) {
                return Err(Error::Inconsistency(format!(
                    "phi falls below the matching fractional linear pgf on [0, P_inf] (min f = {})",
                    scan.min
                )));
            }
            Ok(BoundDirection::UpperOnS)
        }
    }
}

fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Binomial expansion coefficient `C(n, j+2)(k+1) - n C(k+1, j+2)`.
pub fn bin_coeff_cf<T: Scalar>(n: u32, j: u32, k: u32) -> T {
    let (n, j, k) = (n as u64, j as u64, k as u64);
    T::lit(binom(n, j + 2) * (k + 1) as f64 - n as f64 * binom(k + 1, j + 2))
}

/// Negative binomial expansion coefficient in `zeta`.
pub fn nb_coeff_cg<T: Scalar>(r: u32, j: u32, zeta: T) -> Result<T> {
    if !(zeta > T::zero() && zeta < T::one()) {
        return domain(format!("zeta must lie in (0,1), got {zeta}"));
    }
    if r < 1 {
        return domain("nb_coeff_cg needs r >= 1");
    }
    let rf = T::from_count(r as u64);
    let jf = T::from_count(j as u64);
    let one = T::one();
    let two = T::lit(2.0);
    let mut sum = T::zero();
    if r >= 2 {
        for k in 0..=(r - 2) {
            let kf = T::from_count(k as u64);
            sum = sum
                + zeta.powi(k as i32)
                    * (kf + one)
                    * (two * rf * (one + jf) - (two + jf) * kf - two);
        }
    }
    sum = sum + zeta.powi(r as i32 - 1) / (one - zeta) * rf * (rf + one) * jf;
    Ok(sum / (two * (jf + two)))
}
