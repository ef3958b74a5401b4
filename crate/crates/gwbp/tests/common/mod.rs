//! Independent reference computations used by the integration tests.
#![allow(dead_code, clippy::too_many_arguments)]

use gwbp::fl_bounds::FLParams;
use gwbp::Model;

/// Adaptive Simpson on `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Composite 8-point Gauss-Legendre with `panels` equal panels.
pub fn gauss_composite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (x, w) in GL8 {
            total += w * (f(c - 0.5 * h * x) + f(c + 0.5 * h * x));
        }
    }
    0.5 * h * total
}

/// `E1(x)` by quadrature after substituting `t = x e^v`.
pub fn e1_quad(x: f64) -> f64 {
    let vmax = ((x + 60.0) / x).ln();
    let f = |v: f64| (-x * v.exp()).exp();
    gauss_composite(&f, 0.0, vmax, 4000)
}

/// Principal `W(z)` by bisection on `w e^w = z`.
pub fn w_bisect(z: f64) -> f64 {
    let mut lo = -1.0;
    let mut hi = if z <= 1.0 { 1.0 } else { z.ln().max(1.0) };
    while hi * hi.exp() < z {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid.exp() < z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest fixed point of `phi` in `(0,1)` by plain bisection.
pub fn fixed_point_bisect(model: &Model) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0 - 1e-9);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model.phi(mid) - mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn iterate(model: &Model, n: u64) -> f64 {
    (0..n).fold(0.0, |x, _| model.phi(x))
}

pub fn central_diff(f: &dyn Fn(f64) -> f64, x: f64, h: f64, order: u32) -> f64 {
    match order {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        _ => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
    }
}

/// Central difference with one Richardson step, error `O(h^4)`.
pub fn richardson_diff(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d1 = central_diff(f, x, h, 1);
    let d2 = central_diff(f, x, 0.5 * h, 1);
    (4.0 * d2 - d1) / 3.0
}

pub fn fl_compose(fl: &FLParams<f64>, n: u32, x: f64) -> f64 {
    (0..n).fold(x, |y, _| fl.eval(y))
}

/// `int x(1-x) g_a(x) dx` with `x = u/(a+u)` mapping `[0, inf)` onto `[0, 1)`.
pub fn within_variance_quad(a: f64) -> f64 {
    // with x = u/(a+u): g_a(x) dx = e^{-u} du
    let f = |u: f64| {
        let x = u / (a + u);
        x * (1.0 - x) * (-u).exp()
    };
    simpson(&f, 0.0, 5.0, 1e-15) + simpson(&f, 5.0, 60.0, 1e-15)
}

/// Midpoint Riemann sum of `Theta alpha^2 S^([t]) w(a_[t])` over `[0, tau]`.
pub fn vg_tau_riemann(theta: f64, alpha: f64, s: f64, n_pop: f64, model: &Model, tau: f64, dt: f64, w: &dyn Fn(f64) -> f64) -> f64 {
    let kmax = tau.round() as usize + 2;
    let mut sk = Vec::with_capacity(kmax);
    let mut x = 0.0;
    for _ in 0..kmax {
        sk.push(1.0 - x);
        x = model.phi(x);
    }
    let mut vals = Vec::with_capacity(kmax);
    for (k, &s_k) in sk.iter().enumerate() {
        let a = n_pop * s_k * (-(s * alpha) * k as f64).exp();
        vals.push(s_k * w(a));
    }
    let steps = (tau / dt).round() as usize;
    let mut sum = 0.0;
    for i in 0..steps {
        let t = (i as f64 + 0.5) * dt;
        let k = (t + 0.5).floor() as usize;
        sum += vals[k];
    }
    theta * alpha * alpha * sum * dt
}

/// Relative difference.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// `sum k(k-1)...(k-j+1) p_k` for the generalized Poisson law, summed in log space.
pub fn gp_factorial_moment(mu: f64, lambda: f64, j: u32) -> f64 {
    let mut lfact = 0.0;
    let mut total = 0.0;
    for k in 1..200_000u32 {
        let kf = k as f64;
        lfact += kf.ln();
        if k < j {
            continue;
        }
        let lp = mu.ln() + (kf - 1.0) * (mu + lambda * kf).ln() - mu - lambda * kf - lfact;
        let falling: f64 = (0..j).map(|i| kf - i as f64).product();
        let term = falling * lp.exp();
        total += term;
        if kf > 100.0 && term < 1e-18 * total {
            break;
        }
    }
    total
}
