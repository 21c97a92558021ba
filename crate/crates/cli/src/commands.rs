use rayon::prelude::*;

use growth_core::compete::{coexistence_table, compete_seed, replicate, CompeteConfig};
use growth_core::crosscheck::Scenario;
use growth_core::env::{validate_law, EnvConfig, PoissonEnv};
use growth_core::geom::Point;
use growth_core::oracle::{oracle_passage, passage_box};
use growth_core::passage::{
    coupled_triple, diff_meets_bound, diff_replication, diff_rows, mu_from_samples, passage_budget, passage_time,
    passage_times, replication_seed, telescoping_from, DiffConfig, PassageResult,
};
use growth_core::stats::{ks_two_sample, MeanSe};

use crate::args::*;
use crate::output::{flag, num, opt, write_csv, Failure, Report};

fn par_map<R, F>(jobs: usize, n: usize, f: F) -> Result<Vec<R>, Failure>
where
    R: Send,
    F: Fn(u64) -> Result<R, Failure> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Failure::Io(e.to_string()))?;
    pool.install(|| (0..n as u64).into_par_iter().map(&f).collect())
}

fn usage<T>(r: Result<T, String>) -> Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn env_config(env: &EnvArgs, rate: f64, fallback: LawKind, report: &mut Report) -> Result<EnvConfig, Failure> {
    let cfg = env.config(rate, fallback);
    cfg.validate()?;
    report.resolved.push(("lambda".into(), rate.to_string()));
    report.resolved.push(("law".into(), law_name(env.law.kind(fallback)).into()));
    Ok(cfg)
}

fn count_stop(report: &mut Report, stop: impl ToString) {
    *report.stops.entry(stop.to_string()).or_default() += 1;
}

fn point(v: Vec<f64>) -> Point<f64> {
    Point::new(v)
}

pub fn env_check(a: &EnvCheckArgs) -> Result<Report, Failure> {
    let law = a.law.build(LawKind::Dirac);
    let r = validate_law(&law)?;
    println!("law = {law}");
    println!("eq1_satisfied = {}", r.eq1_satisfied);
    println!("small_support = {}", r.small_support);
    println!("radius_bound = {}", r.radius_bound);
    println!("moment_abscissa = {}", r.moment_abscissa);
    Ok(Report {
        pass: r.eq1_satisfied,
        ..Report::default()
    })
}

fn summary_row(ts: &[PassageResult<f64>]) -> Vec<String> {
    let kept: Vec<f64> = ts.iter().filter(|r| !r.censored).map(|r| r.t).collect();
    let m = MeanSe::of(&kept);
    vec![
        ts.len().to_string(),
        kept.len().to_string(),
        (ts.len() - kept.len()).to_string(),
        num(m.mean),
        num(m.se),
    ]
}

pub fn passage(a: &PassageArgs) -> Result<Report, Failure> {
    let mut report = Report::default();
    let cfg = env_config(&a.env, a.env.lambda.unwrap_or(1.0), LawKind::Dirac, &mut report)?;
    let x = match &a.x {
        Some(x) => usage(parse_point(x, cfg.dim))?,
        None => vec![0.0; cfg.dim],
    };
    let y = usage(parse_point(&a.y, cfg.dim))?;
    let (x, y) = (point(x), point(y));
    let budget = passage_budget(x.dist(&y));
    let runs = par_map(a.run.jobs, a.run.reps, |r| {
        let seed = replication_seed(cfg.seed, 0, r);
        let env = PoissonEnv::new(cfg.with_seed(seed))?;
        Ok((seed, passage_time(&env, &x, &y, a.run.delta, &budget)?))
    })?;
    let mut rows = Vec::new();
    for (r, (seed, p)) in runs.iter().enumerate() {
        count_stop(&mut report, p.stop);
        rows.push(vec![
            r.to_string(),
            seed.to_string(),
            num(p.t),
            flag(p.censored),
            p.events_used.to_string(),
            p.stop.to_string(),
        ]);
    }
    let out = &a.run.out;
    write_csv(out, "passage.csv", &["rep", "seed", "t", "censored", "events_used", "stop"], &rows)?;
    let results: Vec<PassageResult<f64>> = runs.into_iter().map(|(_, p)| p).collect();
    let summary = summary_row(&results);
    println!("reps {} kept {} censored {} mean {} se {}", summary[0], summary[1], summary[2], summary[3], summary[4]);
    write_csv(out, "passage_summary.csv", &["reps", "kept", "censored", "mean", "se"], &[summary])?;
    report.out = Some(out.clone());
    report.pass = true;
    Ok(report)
}

pub fn mu(a: &MuArgs) -> Result<Report, Failure> {
    let mut report = Report::default();
    let cfg = env_config(&a.env, a.env.lambda.unwrap_or(1.0), LawKind::Dirac, &mut report)?;
    let ns: Vec<f64> = usage(parse_list(&a.n_list))?;
    if ns.len() < 2 || a.run.reps < 30 {
        return Err(Failure::Infeasible("need at least two separations and 30 replications".into()));
    }
    let mut samples = Vec::new();
    let mut rows = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let x = Point::origin(cfg.dim);
        let y = Point::on_axis(cfg.dim, n);
        let budget = passage_budget(n);
        let runs = par_map(a.run.jobs, a.run.reps, |r| {
            let seed = replication_seed(cfg.seed, i as u64, r);
            let env = PoissonEnv::new(cfg.with_seed(seed))?;
            Ok((seed, passage_time(&env, &x, &y, a.run.delta, &budget)?))
        })?;
        for (r, (seed, p)) in runs.iter().enumerate() {
            count_stop(&mut report, p.stop);
            rows.push(vec![num(n), r.to_string(), seed.to_string(), num(p.t), flag(p.censored), p.stop.to_string()]);
        }
        samples.push((n, runs.into_iter().map(|(_, p)| p).collect::<Vec<_>>()));
    }
    let est = mu_from_samples(cfg.rate, &samples, a.confidence)?;
    let out = &a.run.out;
    write_csv(out, "mu_runs.csv", &["n", "rep", "seed", "t", "censored", "stop"], &rows)?;
    let table: Vec<Vec<String>> = est
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.n),
                r.per_unit.n.to_string(),
                r.censored.to_string(),
                num(r.per_unit.mean),
                num(r.per_unit.se),
                num(r.interval.0),
                num(r.interval.1),
            ]
        })
        .collect();
    for r in &est.rows {
        println!("n {} T/n {:.5} ± {:.5}", r.n, r.per_unit.mean, r.per_unit.se);
    }
    println!("mu_hat {:.5} overlapping {} unreliable {}", est.mu_hat, est.overlapping, est.unreliable);
    write_csv(out, "mu.csv", &["n", "kept", "censored", "mean_t_over_n", "se", "lower", "upper"], &table)?;
    write_csv(
        out,
        "mu_summary.csv",
        &["mu_hat", "confidence", "overlapping", "unreliable"],
        &[vec![num(est.mu_hat), num(est.confidence), flag(est.overlapping), flag(est.unreliable)]],
    )?;
    report.out = Some(out.clone());
    report.pass = true;
    Ok(report)
}

pub fn subadd(a: &SubaddArgs) -> Result<Report, Failure> {
    let mut report = Report::default();
    let cfg = env_config(&a.env, a.env.lambda.unwrap_or(1.0), LawKind::Uniform, &mut report)?;
    let x = point(usage(parse_point(&a.x, cfg.dim))?);
    let z = point(usage(parse_point(&a.z, cfg.dim))?);
    let y = point(usage(parse_point(&a.y, cfg.dim))?);
    let budget = passage_budget(x.dist(&z) + z.dist(&y) + x.dist(&y));
    let runs = par_map(a.run.jobs, a.run.reps, |r| {
        let seed = replication_seed(cfg.seed, 0, r);
        let env = PoissonEnv::new(cfg.with_seed(seed))?;
        Ok((seed, coupled_triple(&env, &x, &z, &y, a.run.delta, &budget, a.probes, seed ^ 0x9e37_79b9)?))
    })?;
    let mut rows = Vec::new();
    let (mut violations, mut failures, mut censored) = (0, 0, 0);
    for (r, (seed, t)) in runs.iter().enumerate() {
        count_stop(&mut report, if t.censored { "censored" } else { "complete" });
        violations += t.violation() as usize;
        failures += t.audit.event_failures + t.audit.probe_failures;
        censored += t.censored as usize;
        rows.push(vec![
            r.to_string(),
            seed.to_string(),
            num(t.txy),
            num(t.txz),
            num(t.tzy),
            num(t.slack),
            flag(t.violation()),
            flag(t.censored),
            t.audit.events_checked.to_string(),
            t.audit.event_failures.to_string(),
            t.audit.probes.to_string(),
            t.audit.probe_failures.to_string(),
        ]);
    }
    let out = &a.run.out;
    write_csv(
        out,
        "subadd.csv",
        &[
            "rep", "seed", "txy", "txz", "tzy", "slack", "violation", "censored", "events_checked", "event_failures",
            "probes", "probe_failures",
        ],
        &rows,
    )?;
    println!("triples {} censored {censored} violations {violations} audit failures {failures}", runs.len());
    report.out = Some(out.clone());
    report.pass = violations == 0 && failures == 0;
    Ok(report)
}

pub fn diff(a: &DiffArgs) -> Result<Report, Failure> {
    let mut report = Report::default();
    let cfg = env_config(&a.env, a.env.lambda.unwrap_or(1.0), LawKind::Dirac, &mut report)?;
    let ms: Vec<u32> = usage(parse_list(&a.m_list))?;
    let dc = DiffConfig {
        n: a.n,
        ms: ms.clone(),
        epsilon: a.epsilon,
        reps: a.run.reps,
    };
    dc.validate()?;
    let mut reps = Vec::new();
    for &m in &ms {
        reps.extend(par_map(a.run.jobs, a.run.reps, |r| Ok(diff_replication(&cfg, a.n, m, r, a.run.delta)?))?);
    }
    let out = &a.run.out;
    let mut rows = Vec::new();
    let mut rep_of_m = std::collections::BTreeMap::<u32, usize>::new();
    for d in &reps {
        let r = rep_of_m.entry(d.m).or_default();
        count_stop(&mut report, if d.censored { "censored" } else { "complete" });
        rows.push(vec![
            d.m.to_string(),
            r.to_string(),
            d.seed.to_string(),
            num(d.from_n),
            num(d.from_origin),
            num(d.from_n - d.from_origin),
            flag(d.censored),
        ]);
        *r += 1;
    }
    write_csv(out, "diff.csv", &["m", "rep", "seed", "t_from_n", "t_from_origin", "difference", "censored"], &rows)?;
    let table = diff_rows(&reps, &ms);
    let summary: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            println!("m {} difference {:.5} ± {:.5}", r.m, r.difference.mean, r.difference.se);
            vec![r.m.to_string(), r.difference.n.to_string(), r.censored.to_string(), num(r.difference.mean), num(r.difference.se)]
        })
        .collect();
    write_csv(out, "diff_summary.csv", &["m", "kept", "censored", "mean", "se"], &summary)?;
    let mut pass = true;
    if let Some(mu_hat) = a.mu_hat {
        let met = diff_meets_bound(&table, a.n, mu_hat, cfg.rate, a.epsilon, a.confidence);
        let goal = (1.0 - a.epsilon) * a.n as f64 * mu_hat / cfg.rate;
        println!("bound {goal:.5} met {met}");
        write_csv(
            out,
            "diff_bound.csv",
            &["mu_hat", "epsilon", "confidence", "goal", "met"],
            &[vec![num(mu_hat), num(a.epsilon), num(a.confidence), num(goal), flag(met)]],
        )?;
        pass &= met;
    }
    if a.k > 0 {
        let targets: Vec<Point<f64>> = (1..=a.k).map(|i| Point::on_axis(cfg.dim, (i * a.n) as f64)).collect();
        let budget = passage_budget((a.k * a.n) as f64);
        let runs = par_map(a.run.jobs, a.run.reps, |r| {
            let seed = replication_seed(cfg.seed, 0x7e1e, r);
            let env = PoissonEnv::new(cfg.with_seed(seed))?;
            let (res, _) = passage_times(&env, &Point::origin(cfg.dim), &targets, a.run.delta, &budget)?;
            Ok((seed, res))
        })?;
        let mut rows = Vec::new();
        let mut complete = Vec::new();
        for (r, (seed, res)) in runs.iter().enumerate() {
            let cens = res.iter().any(|p| p.censored);
            let mut row = vec![r.to_string(), seed.to_string()];
            row.extend(res.iter().map(|p| num(p.t)));
            row.push(flag(cens));
            rows.push(row);
            if !cens {
                complete.push(res.iter().map(|p| p.t).collect::<Vec<f64>>());
            }
        }
        let mut header: Vec<String> = vec!["rep".into(), "seed".into()];
        header.extend((1..=a.k).map(|i| format!("t_{i}")));
        header.push("censored".into());
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(out, "telescoping.csv", &header, &rows)?;
        if !complete.is_empty() {
            let (total, sum) = telescoping_from(&complete);
            let rel = ((total - sum) / total).abs();
            println!("telescoping total {total:.6} increments {sum:.6} relative error {rel:.3e}");
            write_csv(
                out,
                "telescoping_summary.csv",
                &["replications", "total", "increment_sum", "relative_error"],
                &[vec![complete.len().to_string(), num(total), num(sum), num(rel)]],
            )?;
            pass &= rel <= 1e-12;
        }
    }
    report.out = Some(out.clone());
    report.pass = pass;
    Ok(report)
}

pub fn coexist(a: &CoexistArgs) -> Result<Report, Failure> {
    let mut report = Report::default();
    let rate = a.env.lambda.unwrap_or(a.lambda1.max(a.lambda2));
    let env = env_config(&a.env, rate, LawKind::Uniform, &mut report)?;
    if !env.law.radius_bound().is_finite() {
        return Err(Failure::Infeasible(format!(
            "frozen-type certification needs a bounded radius law, {} is unbounded",
            env.law
        )));
    }
    let ks: Vec<f64> = usage(parse_list(&a.k_list))?;
    let cfg = CompeteConfig::two_seeds(env, a.lambda1, a.lambda2, a.n, ks.clone());
    cfg.validate()?;
    let runs = par_map(a.run.jobs, a.run.reps, |r| Ok(replicate(&cfg, r)?))?;
    let mut rows = Vec::new();
    for (r, o) in runs.iter().enumerate() {
        count_stop(&mut report, o.stop);
        for (k, &kv) in ks.iter().enumerate() {
            rows.push(vec![
                r.to_string(),
                compete_seed(cfg.env.seed, r as u64).to_string(),
                num(kv),
                o.outcome(k).to_string(),
                opt(o.exits[0][k]),
                opt(o.exits[1][k]),
                opt(o.frozen[0].map(|f| f.time)),
                opt(o.frozen[1].map(|f| f.time)),
                o.stop.to_string(),
                o.events.to_string(),
            ]);
        }
    }
    let out = &a.run.out;
    write_csv(
        out,
        "coexist_runs.csv",
        &["rep", "seed", "k", "outcome", "exit1", "exit2", "frozen1", "frozen2", "stop", "events"],
        &rows,
    )?;
    let table = coexistence_table(&runs, a.confidence)?;
    let mut lines = Vec::new();
    for r in &table {
        println!(
            "k {} coexist {}/{} censored {} estimate {:.4} lower {:.4} upper {:.4}",
            r.k,
            r.coexist,
            r.trials,
            r.censored,
            r.estimate(),
            r.pessimistic.lower,
            r.optimistic.upper
        );
        lines.push(vec![
            num(r.k),
            r.trials.to_string(),
            r.coexist.to_string(),
            r.censored.to_string(),
            num(r.estimate()),
            num(r.pessimistic.lower),
            num(r.pessimistic.upper),
            num(r.optimistic.lower),
            num(r.optimistic.upper),
        ]);
    }
    write_csv(
        out,
        "coexist.csv",
        &[
            "k", "trials", "coexist", "censored", "estimate", "pessimistic_lower", "pessimistic_upper",
            "optimistic_lower", "optimistic_upper",
        ],
        &lines,
    )?;
    report.out = Some(out.clone());
    report.pass = table.windows(2).all(|w| w[0].coexist >= w[1].coexist);
    Ok(report)
}

pub fn oracle_compare(a: &OracleArgs) -> Result<Report, Failure> {
    let mut report = Report::default();
    let rate = a.env.lambda.unwrap_or(1.0);
    let cfg = env_config(&a.env, rate, LawKind::Dirac, &mut report)?;
    let sc = Scenario {
        dim: cfg.dim,
        law: cfg.law,
        engine_rate: rate,
        oracle_rate: if a.scenario == ScenarioKind::Mismatch { 2.0 * rate } else { rate },
        distance: a.distance,
        delta: a.run.delta,
        margin: a.margin,
    };
    let x = Point::origin(sc.dim);
    let y = Point::on_axis(sc.dim, sc.distance);
    let budget = passage_budget(sc.distance);
    let engine_side = |stream: u64| {
        par_map(a.run.jobs, a.run.reps, |r| {
            let env = PoissonEnv::new(cfg.with_seed(replication_seed(cfg.seed, stream, r)))?;
            let p = passage_time(&env, &x, &y, sc.delta, &budget)?;
            Ok((!p.censored).then_some(p.t))
        })
    };
    let first = engine_side(0)?;
    let second = match a.scenario {
        ScenarioKind::SelfCheck => engine_side(1)?,
        _ => {
            let bounds = passage_box(&x, &y, sc.margin);
            par_map(a.run.jobs, a.run.reps, |r| {
                let seed = replication_seed(cfg.seed ^ 0x5eed, 0x0c1e, r);
                Ok(oracle_passage(sc.oracle_rate, sc.law, &x, &y, bounds.clone(), sc.delta, seed)?)
            })?
        }
    };
    let mut rows = Vec::new();
    for (side, v) in [("engine", &first), ("other", &second)] {
        for (i, t) in v.iter().enumerate() {
            count_stop(&mut report, if t.is_some() { "complete" } else { "censored" });
            rows.push(vec![side.to_string(), i.to_string(), opt(*t), flag(t.is_none())]);
        }
    }
    let out = &a.run.out;
    write_csv(out, "samples.csv", &["side", "rep", "t", "censored"], &rows)?;
    let fa: Vec<f64> = first.iter().flatten().copied().collect();
    let fb: Vec<f64> = second.iter().flatten().copied().collect();
    let ks = ks_two_sample(&fa, &fb)?;
    println!(
        "ks statistic {:.5} p-value {:.3e} (n = {}, {})",
        ks.statistic,
        ks.p_value,
        fa.len(),
        fb.len()
    );
    let scenario = match a.scenario {
        ScenarioKind::Standard => "standard",
        ScenarioKind::SelfCheck => "self",
        ScenarioKind::Mismatch => "mismatch",
    };
    write_csv(
        out,
        "ks.csv",
        &["scenario", "n_engine", "n_other", "censored_engine", "censored_other", "statistic", "p_value"],
        &[vec![
            scenario.into(),
            fa.len().to_string(),
            fb.len().to_string(),
            (first.len() - fa.len()).to_string(),
            (second.len() - fb.len()).to_string(),
            num(ks.statistic),
            num(ks.p_value),
        ]],
    )?;
    report.out = Some(out.clone());
    report.pass = ks.p_value >= 0.001;
    Ok(report)
}
