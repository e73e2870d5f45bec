//! Subcommand execution: build the instance the resolved config describes,
//! call the library, and assemble the report plus any curve files.
//! Single-threaded by design; no output file is written twice.

use std::path::PathBuf;

use wdro::error::{Error, Result};
use wdro::{
    asymptotic_gap_curve, choice_probabilities, exactness_report, fit_regularized, lower_bound,
    oracle_worst_case, representative_agent_value, solve_alpha0, upper_bound, worst_case_dual,
    worst_case_inf, Composition, Data, FitConfig, FitProblem, Generator, Norm, Order, ParamDomain,
    Sampler, SearchMode, SearchSpec, StepSchedule,
};

use crate::config::{
    ChoiceKind, DataSource, DomainKind, FamilyKind, Inst, OracleMode, Resolved, SamplerKind,
    StepKind, Sub,
};
use crate::ingest::{ingest_dataset, Schema};
use crate::report::{fmt_float, Report};

pub struct RunArtifacts {
    pub report: String,
    /// Curve files to write, path + contents, at most one entry per path.
    pub curves: Vec<(PathBuf, String)>,
}

pub fn run(cfg: &Resolved) -> Result<RunArtifacts> {
    let mut rep = Report::new(cfg.sub);
    crate::report::emit_config(&mut rep, cfg);
    let mut curves = Vec::new();
    match cfg.sub {
        Sub::WorstCase => worst_case(cfg, &mut rep)?,
        Sub::Oracle => oracle(cfg, &mut rep)?,
        Sub::EquivalenceCheck => equivalence(cfg, &mut rep)?,
        Sub::Bounds => bounds(cfg, &mut rep)?,
        Sub::Asymptotics => asymptotics(cfg, &mut rep, &mut curves)?,
        Sub::Choice => choice(cfg, &mut rep)?,
        Sub::Fit => fit(cfg, &mut rep)?,
    }
    Ok(RunArtifacts { report: rep.finish(), curves })
}

fn parts(cfg: &Resolved) -> (&Inst, &DataSource) {
    (cfg.inst.as_ref().unwrap(), cfg.data.as_ref().unwrap())
}

fn build_sampler(inst: &Inst, src: &DataSource) -> Result<Sampler<f64>> {
    match src {
        DataSource::Csv { path, labeled } => {
            let schema = Schema {
                labeled: *labeled,
                classification: inst.family == FamilyKind::Classification,
            };
            let data = ingest_dataset(path, &schema)?;
            Sampler::discrete(data.points().to_vec())
        }
        DataSource::Synthetic { sampler, dim, lo, hi, .. } => match sampler {
            SamplerKind::Gaussian => Sampler::gaussian(*dim),
            SamplerKind::Uniform => Sampler::uniform_box(lo.clone(), hi.clone()),
        },
    }
}

fn load_data(inst: &Inst, src: &DataSource) -> Result<Data> {
    match src {
        DataSource::Csv { path, labeled } => {
            let schema = Schema {
                labeled: *labeled,
                classification: inst.family == FamilyKind::Classification,
            };
            ingest_dataset(path, &schema)
        }
        DataSource::Synthetic { n, seed, sign_labels, .. } => {
            let data = build_sampler(inst, src)?.sample(*n, *seed)?;
            if !*sign_labels {
                return Ok(data);
            }
            // Classification labels: last coordinate collapses to its sign,
            // with 0 mapped to +1.
            let points: Vec<Vec<f64>> = data
                .points()
                .iter()
                .map(|z| {
                    let mut z = z.clone();
                    let last = z.len() - 1;
                    z[last] = if z[last] >= 0.0 { 1.0 } else { -1.0 };
                    z
                })
                .collect();
            Data::uniform(points)
        }
    }
}

/// Exact worst case by the order: multiplier dual for finite p, per-ball
/// enumeration at p = ∞.
fn exact_worst(loss: &wdro::Loss, data: &Data, p: Order, alpha: f64, norm: &Norm) -> Result<f64> {
    match p {
        Order::Infinity => Ok(worst_case_inf(loss, data, alpha, norm)?.0),
        p => Ok(worst_case_dual(loss, data, p, alpha, norm)?.dual_value),
    }
}

fn worst_case(cfg: &Resolved, rep: &mut Report) -> Result<()> {
    let (inst, src) = parts(cfg);
    let loss = inst.build_loss()?;
    let data = load_data(inst, src)?;
    let norm = Norm::new(inst.q);
    let alpha = inst.alpha.unwrap();
    let erm = data.try_expectation(|z| loss.eval(z))?;
    rep.table("result");
    rep.float("erm", erm);
    match inst.p.unwrap() {
        Order::Infinity => {
            let (v, _) = worst_case_inf(&loss, &data, alpha, &norm)?;
            rep.float("worst_case", v);
        }
        p => {
            let cert = worst_case_dual(&loss, &data, p, alpha, &norm)?;
            rep.float("worst_case", cert.dual_value);
            rep.float("lambda_star", cert.lambda_star);
            rep.int("iterations", cert.iterations as u64);
            rep.int("polish_warnings", cert.polish_warnings as u64);
        }
    }
    Ok(())
}

fn oracle(cfg: &Resolved, rep: &mut Report) -> Result<()> {
    let (inst, src) = parts(cfg);
    let loss = inst.build_loss()?;
    let data = load_data(inst, src)?;
    let norm = Norm::new(inst.q);
    let alpha = inst.alpha.unwrap();
    let p = inst.p.unwrap();
    let o = cfg.oracle.as_ref().unwrap();
    let spec = SearchSpec {
        levels: o.levels,
        mode: match &o.mode {
            OracleMode::Directional => SearchMode::Directional,
            OracleMode::Grid { resolution, halfwidth } => SearchMode::ExhaustiveGrid {
                resolution: *resolution,
                halfwidth: *halfwidth,
            },
        },
    };
    let (oval, cand) = oracle_worst_case(&loss, &data, p, alpha, &norm, &spec)?;
    let exact = exact_worst(&loss, &data, p, alpha, &norm)?;
    rep.table("result");
    rep.float("oracle_value", oval);
    rep.float("budget_usage", cand.budget_usage);
    rep.float("worst_case", exact);
    rep.float("gap", exact - oval);
    Ok(())
}

fn equivalence(cfg: &Resolved, rep: &mut Report) -> Result<()> {
    let (inst, src) = parts(cfg);
    let loss = inst.build_loss()?;
    let data = load_data(inst, src)?;
    let norm = Norm::new(inst.q);
    let alpha = inst.alpha.unwrap();
    let r = exactness_report(&loss, &data, alpha, &norm)?;
    rep.table("result");
    rep.float("dual_value", r.dual_value);
    rep.float("closed_form_value", r.closed_form_value);
    rep.float("absolute_gap", r.absolute_gap);
    rep.float("relative_gap", r.relative_gap);
    rep.float("lambda_star", r.lambda_star);
    rep.string("instance", &r.instance);
    rep.boolean("within_tolerance", r.absolute_gap <= cfg.gap_tol);
    Ok(())
}

fn bounds(cfg: &Resolved, rep: &mut Report) -> Result<()> {
    let (inst, src) = parts(cfg);
    let loss = inst.build_loss()?;
    let data = load_data(inst, src)?;
    let norm = Norm::new(inst.q);
    let alpha = inst.alpha.unwrap();
    let p = inst.p.unwrap();
    let Some(cert) = loss.certificate(&norm) else {
        return Err(Error::Domain(
            "this loss family does not expose a smoothness certificate; bounds need one".into(),
        ));
    };
    let erm = data.try_expectation(|z| loss.eval(z))?;
    let exact = exact_worst(&loss, &data, p, alpha, &norm)?;
    let lo = lower_bound(&loss, &cert, &data, p, alpha, &norm)?;
    // The certificate form needs a positive Hölder exponent; the order-1
    // slope form upper-bounds any Lipschitz family.
    let up = if p.is_one() || cert.kappa > 0.0 {
        Some(upper_bound(&loss, &cert, &data, p, alpha, &norm)?)
    } else {
        None
    };
    rep.table("result");
    rep.float("erm", erm);
    rep.float("holder_exponent", cert.kappa);
    rep.float("growth_constant", cert.c);
    rep.float("lower_bound", lo);
    rep.float("worst_case", exact);
    rep.float("lower_gap", exact - lo);
    if let Some(up) = up {
        rep.float("upper_bound", up);
        rep.float("upper_gap", up - exact);
    }
    Ok(())
}

fn asymptotics(cfg: &Resolved, rep: &mut Report, curves: &mut Vec<(PathBuf, String)>) -> Result<()> {
    let (inst, src) = parts(cfg);
    let loss = inst.build_loss()?;
    let norm = Norm::new(inst.q);
    let p = inst.p.unwrap();
    let a = cfg.asym.as_ref().unwrap();
    let sampler = build_sampler(inst, src)?;
    let n = match src {
        DataSource::Synthetic { n, .. } => *n,
        DataSource::Csv { .. } => match &sampler {
            Sampler::Discrete { points } => points.len(),
            _ => unreachable!(),
        },
    };
    let out = asymptotic_gap_curve(&loss, &sampler, n, &a.alphas, p, &norm, &a.seeds)?;
    let dir = cfg.curve_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    rep.table("result");
    rep.string("loss", &out[0].loss);
    rep.string("sampler", &out[0].sampler);
    rep.int("n", n as u64);
    for curve in &out {
        let file = dir.join(format!("gap_curve_seed{}.csv", curve.seed));
        let mut text = String::from("alpha,worst_case,regularized,gap,gap_ratio\n");
        for row in &curve.rows {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_float(row.alpha),
                fmt_float(row.worst_case),
                fmt_float(row.regularized),
                fmt_float(row.gap),
                fmt_float(row.gap_ratio)
            ));
        }
        let first = curve.rows.first().unwrap().gap_ratio;
        let last = curve.rows.last().unwrap().gap_ratio;
        rep.array_table("result.curves");
        rep.int("seed", curve.seed);
        rep.string("file", &file.display().to_string());
        rep.float("first_gap_ratio", first);
        rep.float("last_gap_ratio", last);
        rep.float("decay", if first > 0.0 { last / first } else { 0.0 });
        curves.push((file, text));
    }
    Ok(())
}

fn choice(cfg: &Resolved, rep: &mut Report) -> Result<()> {
    let c = cfg.choice.as_ref().unwrap();
    let gen = match c.family {
        ChoiceKind::Mnl => Generator::mnl(c.zbar.len())?,
        ChoiceKind::NestedLogit => Generator::nested_logit(c.nests.clone(), c.taus.clone())?,
    }
    .with_eta(c.eta)?;
    let alpha0 = solve_alpha0(&gen, &c.zbar)?;
    let probs = choice_probabilities(&gen, &c.zbar)?;
    let value = representative_agent_value(&probs, &c.zbar, &gen)?;
    rep.table("result");
    rep.float("alpha0", alpha0);
    rep.float_list("probabilities", &probs);
    rep.float("representative_value", value);
    Ok(())
}

fn fit(cfg: &Resolved, rep: &mut Report) -> Result<()> {
    let (inst, src) = parts(cfg);
    let data = load_data(inst, src)?;
    let norm = Norm::new(inst.q);
    let alpha = inst.alpha.unwrap();
    let f = cfg.fit.as_ref().unwrap();
    let problem = FitProblem {
        composition: match inst.family {
            FamilyKind::Regression => Composition::Regression,
            FamilyKind::Classification => Composition::Classification,
            _ => unreachable!("validated during config resolution"),
        },
        uni: inst.uni.unwrap(),
    };
    let fc = FitConfig {
        max_iters: f.max_iters,
        step: match &f.step {
            StepKind::Geometric { initial, rate } => {
                StepSchedule::Geometric { initial: *initial, rate: *rate }
            }
            StepKind::InvSqrt { scale } => StepSchedule::InvSqrt { scale: *scale },
        },
        domain: match &f.domain {
            DomainKind::Unconstrained => ParamDomain::Unconstrained,
            DomainKind::Simplex => ParamDomain::Simplex,
            DomainKind::Box { lo, hi } => ParamDomain::Box { lo: lo.clone(), hi: hi.clone() },
        },
        seed: f.seed,
        init: f.init.clone(),
        tol: f.tol,
    };
    let res = fit_regularized(&problem, &data, alpha, &norm, &fc)?;
    rep.table("result");
    rep.float_list("beta", &res.beta);
    rep.float("objective", res.objective);
    rep.int("iterations", res.iterations as u64);
    rep.boolean("converged", res.converged);
    Ok(())
}
