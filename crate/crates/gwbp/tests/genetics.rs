mod common;

use gwbp::fl_bounds::t_eps_exact;
use gwbp::genetics::{
    defect_split, improved_a2, mutant_density, scaling_exponent, v1_inf, vg_inf, vg_tau, wf_fixation_a,
    wf_fixation_diffusion, wf_fixation_exact, within_variance, TraitModel, WFModel, WF_MAX_N,
};
use gwbp::pgf_core::{extinction_probability, Family};
use gwbp::specfun::exp_integral_e1;
use gwbp::{Error, Model};
use proptest::prelude::*;

fn wf(n: u32, s: f64) -> WFModel<f64> {
    WFModel::new(n, s, n as f64).unwrap()
}

#[test]
fn density_normalizes() {
    assert!((mutant_density(2.0f64, 0.5).unwrap() - 1.0827).abs() < 1e-4);
    for a in [0.1, 1.0, 10.0] {
        // x = u/(a+u) turns g_a dx into e^{-u} du
        let f = |u: f64| {
            let x = u / (a + u);
            mutant_density(a, x).unwrap() * a / (a + u).powi(2)
        };
        let total = common::simpson(&f, 0.0, 5.0, 1e-13) + common::simpson(&f, 5.0, 60.0, 1e-13);
        assert!((total - 1.0).abs() < 1e-9, "a={a}: {total}");
    }
}

#[test]
fn within_variance_matches_quadrature() {
    for a in [0.01, 0.5, 1.0, 3.0, 20.0, 300.0] {
        let got = within_variance(a).unwrap();
        let want = common::within_variance_quad(a);
        assert!((got - want).abs() < 1e-9, "a={a}: {got} vs {want}");
        assert!(got > 0.0 && got <= 0.25);
    }
    assert!((within_variance(1.0f64).unwrap() - 0.192694).abs() < 1e-6);
    assert!(within_variance(1e8f64).unwrap() < 1e-7);
    assert!(within_variance(0.0f64).is_err());
}

#[test]
fn vg_tau_matches_riemann_sum() {
    let tm = TraitModel::new(0.1, 0.1, 0.1, 10_000).unwrap();
    let model = Model::poisson(tm.fitness()).unwrap();
    let got = vg_tau(&tm, &model, 200.0).unwrap();
    let w = |a: f64| common::within_variance_quad(a);
    let want = common::vg_tau_riemann(0.1, 0.1, 0.1, 1e4, &model, 200.0, 1e-3, &w);
    assert!(common::rel(got, want) < 1e-9, "{got} vs {want}");
    let mut prev = 0.0;
    for i in 1..=60 {
        let v = vg_tau(&tm, &model, 5.0 * i as f64).unwrap();
        assert!(v >= prev);
        prev = v;
    }
    assert!(vg_tau(&tm, &model, 1e-9).unwrap() < 1e-9);
    assert!(vg_tau(&tm, &model, 0.0).is_err());
}

#[test]
fn v1_inf_examples() {
    let v = v1_inf(200, 0.01f64, 1.0).unwrap();
    assert!((v - 99.5025).abs() < 1e-2);
    assert!(common::rel(v, 100.0 * (1.0 - 1.0 / 200.0)) < 1e-4);
    assert!(common::rel(v1_inf(200, 0.02f64, 1.0).unwrap(), 0.5 * v) < 1e-14);
    let e = std::f64::consts::E * exp_integral_e1(1.0f64).unwrap();
    assert!((0.01 * v1_inf(1, 0.01f64, 1.0).unwrap() - e).abs() < 1e-12);
    assert!((e - 0.59634).abs() < 1e-5);
    // e^x alone would overflow here
    let big = v1_inf(1_000_000_000, 0.01f64, 0.9).unwrap();
    assert!(big.is_finite() && (big - 100.0).abs() < 1e-6);
}

#[test]
fn vg_inf_limits() {
    let small = TraitModel::new(1.0f64, 1e-3, 1e-3, 1u64 << 40).unwrap();
    let v = vg_inf(&small, &Family::Poisson).unwrap();
    assert!((v.simple / (small.theta_mut * small.alpha * small.alpha) - 2.0).abs() < 1e-5);
    // leading ~ theta + (theta/2 - delta2) s alpha, simple = theta - theta delta2 s alpha,
    // so the gap is first order with slope theta/2 - delta2 + theta delta2 (11/3 for Poisson)
    let slope = |sa: f64| {
        let tm = TraitModel::new(1.0, 1.0, sa, 1u64 << 50).unwrap();
        let v = vg_inf(&tm, &Family::Poisson).unwrap();
        (v.leading - v.simple) / sa
    };
    let errs: Vec<f64> = [0.02, 0.01, 0.005, 0.0025].iter().map(|&sa| (slope(sa) - 11.0 / 3.0).abs()).collect();
    assert!(errs[3] < 0.05, "{errs:?}");
    assert!(errs.windows(2).all(|w| w[1] / w[0] < 0.6), "{errs:?}");
}

#[test]
fn vg_inf_matches_long_horizon() {
    let tm = TraitModel::new(1.0, 0.05, 0.1, 100_000).unwrap();
    let v = vg_inf(&tm, &Family::Poisson).unwrap();
    let model = Model::poisson(tm.fitness()).unwrap();
    let long = vg_tau(&tm, &model, 1e5).unwrap();
    assert!(common::rel(v.leading, long) < 0.01, "{} vs {long}", v.leading);
}

#[test]
fn defect_tail_is_small() {
    let tm = TraitModel::new(1.0, 0.05, 0.1, 100_000).unwrap();
    let model = Model::poisson(tm.fitness()).unwrap();
    let t = t_eps_exact(&model, 0.01).unwrap();
    let d = defect_split(&tm, &model, t).unwrap();
    let total = d.head + d.tail;
    // the tail is of order eps relative to the long-run variance, and the head is smaller still
    assert!(d.tail.abs() <= 0.02 * d.fixed_part, "tail {} fixed {}", d.tail, d.fixed_part);
    assert!(d.head.abs() < d.tail.abs(), "head {} tail {}", d.head, d.tail);
    // the split pieces recombine to the full integral
    let long = vg_tau(&tm, &model, 1e5).unwrap() / (tm.theta_mut * tm.alpha * tm.alpha);
    assert!(common::rel(d.fixed_part + total, long) < 1e-6);
}

#[test]
fn wright_fisher_exact() {
    assert!((wf_fixation_exact(&wf(1000, 0.1)).unwrap() - 0.1761).abs() <= 1e-4);
    assert!((wf_fixation_exact(&wf(100, 0.1)).unwrap() - 0.1758).abs() <= 1e-4);
    for n in [10, 50, 200] {
        let p = wf_fixation_exact(&wf(n, 1e-9)).unwrap();
        assert!((p - 1.0 / n as f64).abs() < 1e-8, "N={n}");
    }
    let over = wf_fixation_exact(&WFModel::new(WF_MAX_N + 1, 0.1, 100.0).unwrap());
    assert!(matches!(over, Err(Error::Size(_))));
    assert!(WFModel::new(1, 0.1f64, 1.0).is_err());
}

#[test]
fn wright_fisher_small_chain_by_iteration() {
    // absorption probability from power iteration on the transition matrix
    let (n, s) = (12usize, 0.2);
    let mut ln_fact = vec![0.0f64; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let trans = |i: usize, j: usize| {
        let x = i as f64 / n as f64;
        let xp = x * (1.0 + s) / (1.0 + s * x);
        (ln_fact[n] - ln_fact[j] - ln_fact[n - j]).exp() * xp.powi(j as i32) * (1.0 - xp).powi((n - j) as i32)
    };
    let mut dist = vec![0.0; n + 1];
    dist[1] = 1.0;
    for _ in 0..5000 {
        let mut next = vec![0.0; n + 1];
        for (i, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (j, q) in next.iter_mut().enumerate() {
                *q += p * trans(i, j);
            }
        }
        dist = next;
    }
    let got = wf_fixation_exact(&wf(n as u32, s)).unwrap();
    assert!((got - dist[n]).abs() < 1e-12, "{got} vs {}", dist[n]);
}

#[test]
fn diffusion_examples_and_upper_bound() {
    for (ne, want) in [(2000.0f64, 0.3297), (1000.0, 0.1813), (200.0, 0.0392)] {
        let d = wf_fixation_diffusion(&WFModel::new(1000, 0.1, ne).unwrap()).unwrap();
        assert!((d - want).abs() <= 1e-4, "Ne={ne}: {d}");
    }
    for n in [50, 100, 500, 1000] {
        for i in 1..=20 {
            let s = 0.01 * i as f64;
            let exact = wf_fixation_exact(&wf(n, s)).unwrap();
            let diff = wf_fixation_diffusion(&wf(n, s)).unwrap();
            assert!(diff > exact, "N={n} s={s}: {diff} vs {exact}");
        }
    }
    assert!(wf_fixation_diffusion(&wf(100, 0.0)).is_err());
}

#[test]
fn second_order_approximation() {
    let a = |n: u32| wf_fixation_a(n, 0.1f64, 2.0, improved_a2(n, 0.1)).unwrap();
    assert!((a(1000) - 0.1758).abs() <= 1e-4, "{}", a(1000));
    assert!((a(100) - 0.1755).abs() <= 1e-4, "{}", a(100));
    for (n, s) in [(100, 0.05), (1000, 0.1), (30, 0.3)] {
        let plain = wf_fixation_a(n, s, 2.0, 0.0).unwrap();
        let diff = wf_fixation_diffusion(&wf(n, s)).unwrap();
        assert!(common::rel(plain, diff) < 1e-14);
    }
    assert!(wf_fixation_a(100, 0.1f64, 0.0, 0.0).is_err());
}

#[test]
fn fractional_linear_close_to_diffusion() {
    let (n, m) = (1000u32, 1.1f64);
    for (factor, ne) in [(0.5, 2000.0), (1.0, 1000.0), (5.0, 200.0)] {
        // FL with mean m and variance factor * m
        let k = (factor * m - m + m * m) / (2.0 * m);
        let pi = k / (1.0 + k);
        let rho = 1.0 - m * (1.0 - pi);
        let fl = Model::fractional_linear(pi, rho).unwrap();
        let mo = fl.moments();
        assert!(common::rel(mo.var, factor * m) < 1e-12);
        let wfm = WFModel::from_offspring(n, 0.1, &fl).unwrap();
        assert!(common::rel(wfm.effective_size, ne) < 1e-12);
        let s_fl = extinction_probability(&fl).unwrap().s_inf;
        let d = wf_fixation_diffusion(&wfm).unwrap();
        assert!((s_fl - d).abs() <= 0.004, "factor {factor}: {s_fl} vs {d}");
    }
}

#[test]
fn scaling_exponent_report() {
    let k = scaling_exponent(1_000_000, 0.01f64, 1.0).unwrap();
    assert!((k - 3.0).abs() < 1e-12);
    let n = 1e6f64;
    assert!((n * 0.01f64.powf(k) - 1.0).abs() < 1e-9);
    assert!(scaling_exponent(100, 0.5f64, 0.1).is_err());
}

proptest! {
    #[test]
    fn density_is_positive(a in 1e-3f64..1e3, x in 0.0f64..0.999) {
        let g = mutant_density(a, x).unwrap();
        prop_assert!(g >= 0.0 && g.is_finite());
    }

    #[test]
    fn within_variance_is_bounded(a in 1e-6f64..1e6) {
        let w = within_variance(a).unwrap();
        prop_assert!(w > 0.0 && w <= 0.25);
    }
}
