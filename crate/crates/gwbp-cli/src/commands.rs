//! Subcommand implementations. Every number comes from a library call.

use anyhow::{bail, Result};
use serde_json::{json, Value};

use gwbp::classify_f3::{classify_f3, f3_region_volumes};
use gwbp::classify_gp::{classify_gp, gp_f_values, gp_thresholds};
use gwbp::fl_bounds::{
    fl_survival_by_n, matching_fl, sign_scan, sn_fl_bound, sn_pollak_bound, sn_simple_bound, switch_generation,
    t_app, t_eps_exact_with, t_eps_fl, BoundDirection,
};
use gwbp::genetics::{
    improved_a2, v1_inf, vg_inf, vg_tau, wf_fixation_a, wf_fixation_diffusion, wf_fixation_exact, TraitModel,
    WFModel, WF_MAX_N,
};
use gwbp::pgf_core::{extinction_probability_with, survival_curve, Family};
use gwbp::sinf_estimates::{dn_upper, quine_bounds, sinf_bounds, t_ser, SinfBounds};
use gwbp::specfun::ToleranceConfig;
use gwbp::{Error, Fam, Fixed, Model};

use crate::output::{Cell, Table};
use crate::spec::{ClassifyKind, Command, Dist, Figure, Params};

/// Result of a command: a table for CSV/JSON, or a free-form JSON report.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Table(Table),
    Report(Value),
}

/// Iteration cap, overridable through `GWB_MAX_ITER`.
pub fn max_iter() -> Result<u64> {
    match std::env::var("GWB_MAX_ITER") {
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Domain(format!("GWB_MAX_ITER must be a positive integer, got {v:?}")).into()),
        },
        Err(_) => Ok(10_000_000),
    }
}

fn tolerance() -> Result<ToleranceConfig> {
    let cap = max_iter()?.min(usize::MAX as u64) as usize;
    Ok(ToleranceConfig::new(ToleranceConfig::default().abs_tol, cap)?)
}

fn fixed_point(model: &Model) -> Result<Fixed> {
    Ok(extinction_probability_with(model, &tolerance()?)?)
}

fn missing(what: &str) -> anyhow::Error {
    Error::Domain(format!("missing parameter {what}")).into()
}

fn need<T: Copy>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| missing(what))
}

/// Mean from `--m`, or `1 + s` from `--s`.
fn mean(p: &Params) -> Option<f64> {
    p.m.or(p.s.map(|s| 1.0 + s))
}

pub fn build_model(p: &Params) -> Result<Model> {
    let dist = need(p.dist, "--dist")?;
    Ok(match dist {
        Dist::Poisson => Model::poisson(need(mean(p), "--m or --s")?)?,
        Dist::Binomial => {
            let n = need(p.n, "--n")?;
            let prob = match (p.p, mean(p)) {
                (Some(q), _) => q,
                (None, Some(m)) => m / n as f64,
                _ => return Err(missing("--p, --m or --s")),
            };
            Model::binomial(n, prob)?
        }
        Dist::Negbinomial => {
            let r = need(p.r, "--r")?;
            let prob = match (p.p, mean(p)) {
                (Some(q), _) => q,
                (None, Some(m)) => r as f64 / (r as f64 + m),
                _ => return Err(missing("--p, --m or --s")),
            };
            Model::negbinomial(r, prob)?
        }
        Dist::Fl => {
            let pi = need(p.pi, "--pi")?;
            let rho = match (p.rho, p.s) {
                (Some(rho), _) => rho,
                (None, Some(s)) => pi * (1.0 + s) - s,
                _ => return Err(missing("--rho or --s")),
            };
            Model::fractional_linear(pi, rho)?
        }
        Dist::F3 => Model::finite_three(need(p.p0, "--p0")?, need(p.p2, "--p2")?, need(p.p3, "--p3")?)?,
        Dist::Gp => {
            let lambda = need(p.lambda, "--lambda")?;
            let mu = match (p.mu, mean(p)) {
                (Some(mu), _) => mu,
                (None, Some(m)) => m * (1.0 - lambda),
                _ => return Err(missing("--mu, --m or --s")),
            };
            Model::generalized_poisson(mu, lambda)?
        }
    })
}

/// The one-parameter family behind `--dist`, indexed by `s`.
pub fn build_family(p: &Params) -> Result<Fam> {
    let dist = need(p.dist, "--dist")?;
    Ok(match dist {
        Dist::Poisson => Family::Poisson,
        Dist::Binomial => Family::Binomial(need(p.n, "--n")?),
        Dist::Negbinomial => Family::NegBinomial(need(p.r, "--r")?),
        Dist::Gp => Family::GeneralizedPoisson(need(p.lambda, "--lambda")?),
        Dist::Fl => Family::FractionalLinear(need(p.pi, "--pi")?),
        Dist::F3 => return Err(Error::Domain("the three-offspring law has no s-indexed family".into()).into()),
    })
}

pub fn execute(command: &Command, p: &Params) -> Result<Output> {
    match command {
        Command::Table { id: 1 } => table1().map(Output::Table),
        Command::Table { id: 2 } => table2(p.s.unwrap_or(0.2)).map(Output::Table),
        Command::Table { id: 3 } => table3().map(Output::Table),
        Command::Table { id } => Err(Error::Domain(format!("no table {id}")).into()),
        Command::Classify { kind: ClassifyKind::F3 } => classify_f3_report(p).map(Output::Report),
        Command::Classify { kind: ClassifyKind::Gp } => classify_gp_report(p).map(Output::Report),
        Command::Survival => survival(p).map(Output::Table),
        Command::Sinf => sinf(p).map(Output::Table),
        Command::Teps => teps(p).map(Output::Table),
        Command::Genetics => genetics(p).map(Output::Table),
        Command::Figdata { fig } => figdata(*fig, p).map(Output::Table),
        Command::Run { .. } => bail!("a saved run specification cannot itself be a run command"),
    }
}

type BoundFn = fn(&Model, u32) -> gwbp::Result<f64>;
type SinfCell = fn(&SinfBounds<f64>) -> Option<f64>;

pub const TABLE1_MEANS: [f64; 3] = [1.5, 1.1, 1.02];
pub const TABLE1_GENERATIONS: [u32; 6] = [1, 5, 10, 20, 50, 100];

/// Relative errors of the three Poisson survival bounds.
pub fn table1() -> Result<Table> {
    let mut header = vec!["m".to_string(), "bound".to_string()];
    header.extend(TABLE1_GENERATIONS.iter().map(|n| format!("n={n}")));
    let mut t = Table::new(&header);
    for m in TABLE1_MEANS {
        let model = Model::poisson(m)?;
        let curve = survival_curve(&model, 100)?;
        let bounds: [(&str, BoundFn); 3] = [
            ("simple", sn_simple_bound),
            ("fl", sn_fl_bound),
            ("pollak", sn_pollak_bound),
        ];
        for (name, bound) in bounds {
            let mut row = vec![Cell::Num(m), name.into()];
            for n in TABLE1_GENERATIONS {
                let exact = curve[n as usize];
                row.push(((bound(&model, n)? - exact) / exact).into());
            }
            t.push(row);
        }
    }
    Ok(t)
}

pub fn table2_families() -> [Fam; 7] {
    [
        Family::Binomial(5),
        Family::NegBinomial(5),
        Family::GeneralizedPoisson(0.0),
        Family::GeneralizedPoisson(0.2),
        Family::GeneralizedPoisson(0.5),
        Family::GeneralizedPoisson(0.9),
        Family::FractionalLinear(0.2),
    ]
}

/// S_inf, its bounds and approximations across seven families at `s`.
pub fn table2(s: f64) -> Result<Table> {
    let fams = table2_families();
    let mut header = vec!["quantity".to_string()];
    header.extend(fams.iter().map(|f| f.label()));
    let mut t = Table::new(&header);
    let bounds = fams.iter().map(|f| sinf_bounds(f, s)).collect::<gwbp::Result<Vec<_>>>()?;
    let rows: [(&str, SinfCell); 6] = [
        ("beta", |b| Some(b.beta)),
        ("L^Q", |b| Some(b.quine_lower)),
        ("S_inf", |b| Some(b.exact)),
        ("S_ser", |b| Some(b.series3)),
        ("U^DN", |b| b.dn_upper),
        ("theta s", |b| Some(b.haldane)),
    ];
    for (name, get) in rows {
        let mut row = vec![Cell::from(name)];
        row.extend(bounds.iter().map(|b| Cell::from(get(b))));
        t.push(row);
    }
    Ok(t)
}

/// `(s, eps, gp lambdas)` for each block of table 3.
pub const TABLE3_BLOCKS: [(f64, f64, [f64; 5]); 5] = [
    (0.01, 0.01, [0.0, 0.1, 0.259, 0.5, 0.9]),
    (0.1, 0.1, [0.0, 0.1, 0.276, 0.5, 0.9]),
    (0.1, 0.01, [0.0, 0.1, 0.276, 0.5, 0.9]),
    (0.1, 1e-4, [0.0, 0.1, 0.276, 0.5, 0.9]),
    (0.3, 0.01, [0.0, 0.2, 0.312, 0.5, 0.9]),
];

/// Exact, approximate and series convergence times.
pub fn table3() -> Result<Table> {
    let cap = max_iter()?;
    let header = [
        "s", "eps", "quantity", "binomial", "negbinomial", "gp1", "gp2", "gp3", "gp4", "gp5", "simple",
    ];
    let mut t = Table::new(&header);
    for (s, eps, lambdas) in TABLE3_BLOCKS {
        let mut fams = vec![Family::Binomial(5), Family::NegBinomial(5)];
        fams.extend(lambdas.iter().map(|&l| Family::GeneralizedPoisson(l)));
        let mut param_row = vec![Cell::Num(s), Cell::Num(eps), "parameter".into(), "n=5".into(), "r=5".into()];
        param_row.extend(lambdas.iter().map(|l| Cell::Text(format!("lambda={l}"))));
        param_row.push("ln(1+1/eps)/s".into());
        t.push(param_row);
        let mut rows: [Vec<Cell>; 3] = ["T_exact", "T_app", "T_ser"].map(|q| vec![Cell::Num(s), Cell::Num(eps), q.into()]);
        for fam in &fams {
            let model = fam.model(s)?;
            let fp = fixed_point(&model)?;
            rows[0].push(t_eps_exact_with(&model, eps, cap)?.into());
            rows[1].push(t_app(&fp, eps)?.into());
            rows[2].push(t_ser(fam, s, eps)?.into());
        }
        let simple = ((1.0 + 1.0 / eps).ln() / s).ceil() as i64;
        rows[0].push(simple.into());
        rows[1].push(Cell::Empty);
        rows[2].push(Cell::Empty);
        for row in rows {
            t.push(row);
        }
    }
    Ok(t)
}

fn direction_label(d: BoundDirection) -> (&'static str, Option<u32>) {
    match d {
        BoundDirection::UpperOnS => ("UpperOnS", None),
        BoundDirection::LowerOnS => ("LowerOnS", None),
        BoundDirection::SwitchesAt(n) => ("SwitchesAt", n),
        BoundDirection::Undetermined => ("Undetermined", None),
    }
}

fn classify_f3_report(p: &Params) -> Result<Value> {
    let (p0, p2, p3) = (need(p.p0, "--p0")?, need(p.p2, "--p2")?, need(p.p3, "--p3")?);
    let cls = classify_f3(p0, p2, p3)?;
    let model = Model::finite_three(p0, p2, p3)?;
    let fp = fixed_point(&model)?;
    let fl = matching_fl(&fp)?;
    let scan = sign_scan(&model, &fl, 1.0, 2048);
    Ok(json!({
        "kind": "f3",
        "params": {"p0": p0, "p2": p2, "p3": p3},
        "region": cls.region,
        "case": cls.case_label,
        "case_number": cls.case_label.number(),
        "switch_generation": cls.switch_generation,
        "thresholds": cls.thresholds,
        "sign_profile": cls.sign_profile,
        "p_inf": fp.p_inf,
        "gamma": fp.gamma,
        "fl": {"pi": fl.pi, "rho": fl.rho},
        "scan": {"min": scan.min, "max": scan.max, "f0": scan.at_zero},
    }))
}

fn classify_gp_report(p: &Params) -> Result<Value> {
    let s = need(p.s, "--s")?;
    let lambda = need(p.lambda, "--lambda")?;
    let dir = classify_gp(s, lambda)?;
    let th = gp_thresholds(s)?;
    let model = Model::generalized_poisson((1.0 + s) * (1.0 - lambda), lambda)?;
    let fp = fixed_point(&model)?;
    let fl = matching_fl(&fp)?;
    let scan = sign_scan(&model, &fl, fp.p_inf, 2048);
    let (label, n) = direction_label(dir);
    let xs = [0.0, 0.5 * fp.p_inf, 0.5 * (1.0 + fp.p_inf)];
    let f = gp_f_values(s, lambda, &xs)?;
    Ok(json!({
        "kind": "gp",
        "params": {"s": s, "lambda": lambda},
        "direction": label,
        "switch_generation": n,
        "thresholds": th,
        "p_inf": fp.p_inf,
        "gamma": fp.gamma,
        "fl": {"pi": fl.pi, "rho": fl.rho},
        "f_at": {"x": xs, "f": f},
        "scan": {"min": scan.min, "max": scan.max, "f0": scan.at_zero},
    }))
}

fn survival(p: &Params) -> Result<Table> {
    let model = build_model(p)?;
    let nmax = p.nmax.unwrap_or(50);
    if nmax > max_iter()? {
        return Err(Error::Size(format!("--nmax {nmax} exceeds the iteration cap")).into());
    }
    let curve = survival_curve(&model, nmax)?;
    let fp = fixed_point(&model)?;
    let fl = matching_fl(&fp)?;
    let mut t = Table::new(&["n", "P", "S", "S_FL"]);
    for (n, &s_n) in curve.iter().enumerate() {
        let s_fl = fl_survival_by_n(&fl, u32::try_from(n).unwrap_or(u32::MAX));
        t.push(vec![(n as u64).into(), (1.0 - s_n).into(), s_n.into(), s_fl.into()]);
    }
    Ok(t)
}

fn sinf(p: &Params) -> Result<Table> {
    let fam = build_family(p)?;
    let s = need(p.s, "--s")?;
    let b = sinf_bounds(&fam, s)?;
    let model = fam.model(s)?;
    let note = match dn_upper(&model.moments()) {
        Ok(_) => String::new(),
        Err(e) if p.strict => return Err(e.into()),
        Err(e) => e.to_string(),
    };
    if p.strict {
        quine_bounds(&model)?;
    }
    let mut t = Table::new(&[
        "family", "s", "beta", "L^Q", "U^Q", "quine_applicable", "S_inf", "S_ser", "U^DN", "theta s", "note",
    ]);
    t.push(vec![
        fam.label().into(),
        s.into(),
        b.beta.into(),
        b.quine_lower.into(),
        b.quine_upper.into(),
        b.quine_applicable.to_string().into(),
        b.exact.into(),
        b.series3.into(),
        b.dn_upper.into(),
        b.haldane.into(),
        note.into(),
    ]);
    Ok(t)
}

fn teps(p: &Params) -> Result<Table> {
    let model = build_model(p)?;
    let fp = fixed_point(&model)?;
    let cap = max_iter()?;
    let eps = if p.eps.is_empty() { vec![0.1, 0.01, 1e-4] } else { p.eps.clone() };
    // the series time needs an s-indexed family
    let family = match (build_family(p), p.s) {
        (Ok(f), Some(s)) => Some((f, s)),
        _ => None,
    };
    let mut t = Table::new(&["eps", "T_exact", "T_FL", "T_app", "T_ser"]);
    for e in eps {
        let ser = match &family {
            Some((f, s)) => Cell::from(t_ser(f, *s, e)?),
            None => Cell::Empty,
        };
        t.push(vec![
            e.into(),
            t_eps_exact_with(&model, e, cap)?.into(),
            t_eps_fl(&fp, e)?.into(),
            t_app(&fp, e)?.into(),
            ser,
        ]);
    }
    Ok(t)
}

fn genetics(p: &Params) -> Result<Table> {
    let s = need(p.s, "--s")?;
    let n_pop = need(p.pop_size, "--N")?;
    let mut t = Table::new(&["quantity", "value"]);
    let mut row = |name: &str, v: Cell| t.push(vec![name.into(), v]);
    if let Some(alpha) = p.alpha {
        let theta = p.theta_mut.unwrap_or(1.0);
        let tm = TraitModel::new(theta, alpha, s, n_pop)?;
        let fam = if p.dist.is_some() { build_family(p)? } else { Family::Poisson };
        let v = vg_inf(&tm, &fam)?;
        let model = fam.model(tm.s_alpha().exp_m1())?;
        let fp = fixed_point(&model)?;
        row("S_inf", fp.s_inf.into());
        row("V1_inf", v1_inf(n_pop, tm.s_alpha(), fp.s_inf)?.into());
        row("VG_inf_leading", v.leading.into());
        row("VG_inf_simple", v.simple.into());
        row("delta_G_inf", v.delta_g.into());
        if let Some(tau) = p.tau {
            row("VG_tau", vg_tau(&tm, &model, tau)?.into());
        }
    }
    let n_wf = u32::try_from(n_pop).map_err(|_| Error::Size(format!("--N {n_pop} too large for Wright-Fisher")))?;
    let ne = p.effective_size.unwrap_or(n_pop as f64);
    let wf = WFModel::new(n_wf, s, ne)?;
    row("P_fix_diffusion", wf_fixation_diffusion(&wf)?.into());
    row("P_fix_A", wf_fixation_a(n_wf, s, 2.0, improved_a2(n_wf, s))?.into());
    if n_wf <= WF_MAX_N {
        let exact = wf_fixation_exact(&WFModel::new(n_wf, s, n_wf as f64)?)?;
        row("P_fix_exact", exact.into());
    } else {
        row("P_fix_exact", Cell::Empty);
    }
    Ok(t)
}

fn grid(points: usize) -> impl Iterator<Item = f64> {
    (0..=points).map(move |i| i as f64 / points as f64)
}

fn figdata(fig: Figure, p: &Params) -> Result<Table> {
    match fig {
        Figure::One => {
            let m = p.m.unwrap_or(1.5);
            let model = Model::poisson(m)?;
            let fl = matching_fl(&fixed_point(&model)?)?;
            let mut t = Table::new(&["x", "f"]);
            for x in grid(200) {
                t.push(vec![x.into(), (model.phi(x) - fl.eval(x)).into()]);
            }
            Ok(t)
        }
        Figure::Two => {
            let s = p.s.unwrap_or(0.3);
            let th = gp_thresholds(s)?;
            let lambdas = match p.lambda {
                Some(l) => vec![l],
                None => vec![0.30, th.lambda_c1, th.lambda_c2, th.lambda_c0, 0.3145],
            };
            let xs: Vec<f64> = grid(200).collect();
            let mut t = Table::new(&["lambda", "x", "f"]);
            for l in lambdas {
                for (x, f) in xs.iter().zip(gp_f_values(s, l, &xs)?) {
                    t.push(vec![l.into(), (*x).into(), f.into()]);
                }
            }
            Ok(t)
        }
        Figure::ThreeVolumes => {
            let samples = p.samples.unwrap_or(1e6);
            if !(samples.is_finite() && samples >= 1.0 && samples.fract() == 0.0) {
                return Err(Error::Domain(format!("--samples must be a positive integer, got {samples}")).into());
            }
            let (lower, switches, upper) = f3_region_volumes(samples as u64, p.seed)?;
            let mut t = Table::new(&["region", "fraction"]);
            t.push(vec!["LowerBoundOnP".into(), lower.into()]);
            t.push(vec!["Switches".into(), switches.into()]);
            t.push(vec!["UpperBoundOnP".into(), upper.into()]);
            Ok(t)
        }
        Figure::Four => {
            let s = p.s.unwrap_or(0.1);
            let nmax = p.nmax.unwrap_or(50);
            let lambdas = match p.lambda {
                Some(l) => vec![l],
                None => vec![0.0, 0.1, 0.276, 0.5, 0.9],
            };
            let mut t = Table::new(&["lambda", "n", "rel_err"]);
            for l in lambdas {
                let model = Family::GeneralizedPoisson(l).model(s)?;
                let curve = survival_curve(&model, nmax)?;
                let fl = matching_fl(&fixed_point(&model)?)?;
                for n in 1..=nmax {
                    let exact = curve[n as usize];
                    let approx = fl_survival_by_n(&fl, u32::try_from(n).unwrap_or(u32::MAX));
                    t.push(vec![l.into(), n.into(), ((approx - exact) / exact).into()]);
                }
            }
            Ok(t)
        }
    }
}

/// First generation where `P^(n) - P_FL^(n)` changes sign, for scripting.
pub fn switch_of(model: &Model) -> Result<Option<u32>> {
    let fl = matching_fl(&fixed_point(model)?)?;
    let cap = u32::try_from(max_iter()?).unwrap_or(u32::MAX);
    Ok(switch_generation(model, &fl, cap.min(1_000_000)))
}
