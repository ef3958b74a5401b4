//! Mutant-frequency density, trait variance under recurrent mutation, and Wright-Fisher fixation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::pgf_core::{extinction_probability, Family, OffspringModel};
use crate::scalar::Scalar;
use crate::sinf_estimates::{mu_derivatives, sinf_series};
use crate::specfun::exp_e1_scaled;

pub const WF_MAX_N: u32 = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraitModel<T> {
    /// Expected number of new mutations per generation in the whole population.
    pub theta_mut: T,
    pub alpha: T,
    pub s_sel: T,
    pub pop_size: u64,
}

impl<T: Scalar> TraitModel<T> {
    pub fn new(theta_mut: T, alpha: T, s_sel: T, pop_size: u64) -> Result<Self> {
        if !(theta_mut >= T::zero() && alpha > T::zero() && s_sel > T::zero() && pop_size >= 1) {
            return domain("trait model needs theta_mut >= 0, alpha > 0, s > 0, N >= 1");
        }
        Ok(Self {
            theta_mut,
            alpha,
            s_sel,
            pop_size,
        })
    }

    /// `s * alpha`.
    pub fn s_alpha(&self) -> T {
        self.s_sel * self.alpha
    }

    /// Mean offspring number `exp(s alpha)` of a mutant.
    pub fn fitness(&self) -> T {
        self.s_alpha().exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WFModel<T> {
    pub pop_size: u32,
    pub s_sel: T,
    pub effective_size: T,
}

impl<T: Scalar> WFModel<T> {
    pub fn new(pop_size: u32, s_sel: T, effective_size: T) -> Result<Self> {
        if pop_size < 2 || !(effective_size > T::zero()) {
            return domain("Wright-Fisher model needs N >= 2 and N_e > 0");
        }
        Ok(Self {
            pop_size,
            s_sel,
            effective_size,
        })
    }

    /// Variance-effective size `N m / sigma^2` from an offspring model.
    pub fn from_offspring(pop_size: u32, s_sel: T, model: &OffspringModel<T>) -> Result<Self> {
        let mo = model.moments();
        Self::new(pop_size, s_sel, T::from_count(pop_size as u64) * mo.m / mo.var)
    }
}

/// `g_a(x) = a/(1-x)^2 exp(-a x/(1-x))`.
pub fn mutant_density<T: Scalar>(a: T, x: T) -> Result<T> {
    if !(a > T::zero()) {
        return domain(format!("mutant_density needs a > 0, got {a}"));
    }
    if !(x >= T::zero() && x < T::one()) {
        return domain(format!("mutant_density needs x in [0,1), got {x}"));
    }
    let y = T::one() - x;
    Ok((a.ln() - T::lit(2.0) * y.ln() - a * x / y).exp())
}

/// `w(a) = a (1+a) e^a E1(a) - a`, the mean of `x(1-x)` under `g_a`.
pub fn within_variance<T: Scalar>(a: T) -> Result<T> {
    if !(a > T::zero()) {
        return domain(format!("within_variance needs a > 0, got {a}"));
    }
    Ok(a * ((T::one() + a) * exp_e1_scaled(a)? - T::one()))
}

/// `a_k = N S^(k) / m^k`.
pub fn a_n<T: Scalar>(tm: &TraitModel<T>, s_n: T, n: u64) -> T {
    T::from_count(tm.pop_size) * s_n * (-tm.s_alpha() * T::from_count(n)).exp()
}

fn w_or_zero<T: Scalar>(a: T) -> Result<T> {
    if a > T::zero() {
        within_variance(a)
    } else {
        Ok(T::zero())
    }
}

/// Length of `[0, tau]` covered by nearest-integer cell `k`.
fn cell_weight<T: Scalar>(k: u64, tau: T) -> T {
    let half = T::lit(0.5);
    let kf = T::from_count(k);
    let lo = if k == 0 { T::zero() } else { kf - half };
    let hi = (kf + half).min(tau);
    (hi - lo).max(T::zero())
}

/// `V_G(tau) = Theta alpha^2 int_0^tau S^([t]) w(a_[t]) dt`.
pub fn vg_tau<T: Scalar>(tm: &TraitModel<T>, model: &OffspringModel<T>, tau: T) -> Result<T> {
    if !(tau > T::zero()) {
        return domain(format!("vg_tau needs tau > 0, got {tau}"));
    }
    let mut x = T::zero();
    let mut sum = T::zero();
    let mut k = 0u64;
    loop {
        let wgt = cell_weight(k, tau);
        if wgt <= T::zero() {
            break;
        }
        let s_k = T::one() - x;
        sum = sum + wgt * s_k * w_or_zero(a_n(tm, s_k, k))?;
        x = model.phi(x);
        k += 1;
    }
    Ok(tm.theta_mut * tm.alpha * tm.alpha * sum)
}

/// `V_1^inf = (1/(s alpha)) N S_inf e^{N S_inf} E1(N S_inf)`.
pub fn v1_inf<T: Scalar>(pop_size: u64, s_alpha: T, s_inf: T) -> Result<T> {
    if !(s_alpha > T::zero() && s_inf > T::zero() && pop_size > 0) {
        return domain("v1_inf needs positive arguments");
    }
    let x = T::from_count(pop_size) * s_inf;
    Ok(x * exp_e1_scaled(x)? / s_alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VgInf<T> {
    /// `Theta S_inf alpha^2 V_1^inf`.
    pub leading: T,
    /// `Theta alpha^2 theta (1 - delta2 s alpha)`.
    pub simple: T,
    /// Asymptotic per-generation response of the mean, `Theta theta s alpha^2 (1 - delta2 s alpha)`.
    pub delta_g: T,
}

/// Long-run trait variance; the offspring law is `family` at `s = e^{s alpha} - 1`.
pub fn vg_inf<T: Scalar>(tm: &TraitModel<T>, family: &Family<T>) -> Result<VgInf<T>> {
    let sa = tm.s_alpha();
    let model = family.model(sa.exp_m1())?;
    let fp = extinction_probability(&model)?;
    let k = sinf_series(&mu_derivatives(family)?)?;
    let a2 = tm.alpha * tm.alpha;
    let corr = T::one() - k.delta2 * sa;
    Ok(VgInf {
        leading: tm.theta_mut * fp.s_inf * a2 * v1_inf(tm.pop_size, sa, fp.s_inf)?,
        simple: tm.theta_mut * a2 * k.theta * corr,
        delta_g: tm.theta_mut * k.theta * sa * a2 * corr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectSplit<T> {
    /// Integral of `S^([t]) w(a_[t]) - S_inf w(a_inf(t))` over `[0, T]`.
    pub head: T,
    /// The same integral over `[T, inf)`.
    pub tail: T,
    /// `S_inf int_0^inf w(a_inf(t)) dt`.
    pub fixed_part: T,
    pub split_at: u64,
}

const GL_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss8<T: Scalar>(f: &impl Fn(T) -> Result<T>, a: T, b: T) -> Result<T> {
    let c = T::lit(0.5) * (a + b);
    let h = T::lit(0.5) * (b - a);
    let mut acc = T::zero();
    for (x, w) in GL_X.iter().zip(GL_W.iter()) {
        let dx = h * T::lit(*x);
        acc = acc + T::lit(*w) * (f(c - dx)? + f(c + dx)?);
    }
    Ok(acc * h)
}

/// Splits the defect between the generation-wise integral and its `S_inf` counterpart at `split_at`.
pub fn defect_split<T: Scalar>(tm: &TraitModel<T>, model: &OffspringModel<T>, split_at: u64) -> Result<DefectSplit<T>> {
    let fp = extinction_probability(model)?;
    let n = T::from_count(tm.pop_size);
    let sa = tm.s_alpha();
    let a_inf = |t: T| n * fp.s_inf * (-sa * t).exp();
    let g = |t: T| -> Result<T> { Ok(fp.s_inf * w_or_zero(a_inf(t))?) };
    let cutoff = ((n * fp.s_inf).max(T::one()).ln() + T::lit(60.0)) / sa;
    let split = T::from_count(split_at);
    let (mut head, mut tail, mut fixed) = (T::zero(), T::zero(), T::zero());
    let mut x = T::zero();
    let mut k = 0u64;
    let half = T::lit(0.5);
    loop {
        let kf = T::from_count(k);
        let lo = if k == 0 { T::zero() } else { kf - half };
        if lo > cutoff {
            break;
        }
        let hi = kf + half;
        let s_k = T::one() - x;
        let gen = s_k * w_or_zero(a_n(tm, s_k, k))?;
        for (a, b) in [(lo, hi.min(split).max(lo)), (lo.max(split).min(hi), hi)] {
            if b <= a {
                continue;
            }
            let asym = gauss8(&g, a, b)?;
            let piece = gen * (b - a) - asym;
            fixed = fixed + asym;
            if b <= split {
                head = head + piece;
            } else {
                tail = tail + piece;
            }
        }
        x = model.phi(x);
        k += 1;
    }
    Ok(DefectSplit {
        head,
        tail,
        fixed_part: fixed,
        split_at,
    })
}

/// Exponent `K` with `N s^K = C^K`.
pub fn scaling_exponent<T: Scalar>(pop_size: u64, s: T, c: T) -> Result<T> {
    if !(s > T::zero() && c > s) {
        return domain("scaling_exponent needs 0 < s < C");
    }
    Ok(T::from_count(pop_size).ln() / (c.ln() - s.ln()))
}

/// Fixation probability of one mutant copy in the haploid Wright-Fisher chain.
pub fn wf_fixation_exact<T: Scalar>(wf: &WFModel<T>) -> Result<T> {
    let n = wf.pop_size;
    if n > WF_MAX_N {
        return Err(Error::Size(format!("N = {n} exceeds the dense-solve budget {WF_MAX_N}")));
    }
    if n < 2 {
        return domain("wf_fixation_exact needs N >= 2");
    }
    let s = wf.s_sel.as_f64();
    let nn = n as usize;
    let mut lnfact = vec![0.0f64; nn + 1];
    for k in 1..=nn {
        lnfact[k] = lnfact[k - 1] + (k as f64).ln();
    }
    let dim = nn - 1;
    let mut a = DMatrix::<f64>::identity(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    for i in 1..nn {
        let x = i as f64 / nn as f64;
        let xp = x * (1.0 + s) / (1.0 + s * x);
        let (lx, ly) = (xp.ln(), (-xp).ln_1p());
        for j in 1..=nn {
            let lp = lnfact[nn] - lnfact[j] - lnfact[nn - j] + j as f64 * lx + (nn - j) as f64 * ly;
            let p = lp.exp();
            if j == nn {
                rhs[i - 1] = p;
            } else {
                a[(i - 1, j - 1)] -= p;
            }
        }
    }
    let u = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Domain("singular absorption system".into()))?;
    Ok(T::lit(u[0]))
}

/// `(1 - e^{-2 s N_e / N}) / (1 - e^{-2 s N_e})`.
pub fn wf_fixation_diffusion<T: Scalar>(wf: &WFModel<T>) -> Result<T> {
    if wf.s_sel == T::zero() {
        return domain("diffusion formula needs s != 0");
    }
    let two_s_ne = T::lit(2.0) * wf.s_sel * wf.effective_size;
    let n = T::from_count(wf.pop_size as u64);
    Ok((-two_s_ne / n).exp_m1() / (-two_s_ne).exp_m1())
}

/// `(1 - e^{-A}) / (1 - e^{-A N})` with `A = a1 s + a2 s^2`.
pub fn wf_fixation_a<T: Scalar>(pop_size: u32, s: T, a1: T, a2: T) -> Result<T> {
    let a = a1 * s + a2 * s * s;
    if a == T::zero() {
        return domain("wf_fixation_a needs A(s) != 0");
    }
    let n = T::from_count(pop_size as u64);
    Ok((-a).exp_m1() / (-a * n).exp_m1())
}

/// Second-order coefficient `-2/3 - 1/(3 N s)` that reproduces the exact chain.
pub fn improved_a2<T: Scalar>(pop_size: u32, s: T) -> T {
    let nu = T::from_count(pop_size as u64) * s;
    -T::lit(2.0 / 3.0) - T::one() / (T::lit(3.0) * nu)
}
