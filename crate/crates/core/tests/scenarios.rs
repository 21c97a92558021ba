use growth_core::engine::{run, Budget, NeverStop};
use growth_core::env::{EnvConfig, ListEnv, PoissonEnv, RadiusLaw};
use growth_core::geom::{Ball, Point};
use growth_core::history::{classify_point, Classification, History, InfectionType};
use growth_core::passage::{
    coupled_triple, diff_meets_bound, diff_replication, diff_rows, estimate_mu, passage_budget, passage_sample,
    passage_time,
};
use growth_core::stats::MeanSe;

const DELTA: f64 = 1e-3;

fn p2(x: f64, y: f64) -> Point<f64> {
    Point::new([x, y])
}

fn standard_seeds() -> Vec<(Ball<f64>, InfectionType)> {
    vec![
        (Ball::unit(p2(0.0, 0.0)), InfectionType::One),
        (Ball::unit(p2(2.0, 0.0)), InfectionType::Two),
    ]
}

#[test]
fn classification_of_the_initial_configuration() {
    let mut h = History::new(&standard_seeds(), 1.0).unwrap();
    assert_eq!(
        classify_point(&h, &p2(0.0, 0.0), 0.0),
        Classification::Infected { kind: InfectionType::One, tau: 0.0 }
    );
    // On both closed seed boundaries: the lower tag wins.
    assert_eq!(classify_point(&h, &p2(1.0, 0.0), 0.0).kind(), Some(InfectionType::One));

    let mut env = ListEnv::empty(2, 1.0);
    let key = env.push(p2(3.0, 0.0), 0.7, 1.0);
    h.push_event(Ball::new(p2(3.0, 0.0), 1.0), 0.7, InfectionType::Two, key);
    assert_eq!(
        classify_point(&h, &p2(3.5, 0.0), 1.0),
        Classification::Infected { kind: InfectionType::Two, tau: 0.7 }
    );
    assert_eq!(classify_point(&h, &p2(3.5, 0.0), 0.5), Classification::Uninfected);
}

#[test]
fn two_type_run_keeps_types_disjoint() {
    let env = PoissonEnv::new(EnvConfig::new(2, 1.0, 33, RadiusLaw::UniformHalfOpen { a: 0.0, b: 1.0 })).unwrap();
    let out = run(&env, &standard_seeds(), 1.0, 1.0, &mut NeverStop, &Budget::new(400, 50.0)).unwrap();
    let h = &out.history;
    assert!(h.events().len() >= 100);
    for (i, e) in h.events().iter().enumerate() {
        // every outburst starts at a point already held by its own type
        let at = classify_point(h, &e.ball.center, e.birth);
        assert_eq!(at.kind(), Some(e.kind), "event {i}");
    }
    for i in 0..200 {
        let x = p2((i as f64 * 0.37).sin() * 6.0, (i as f64 * 0.71).cos() * 6.0);
        let early = classify_point(h, &x, h.clock() / 2.0);
        if early.is_infected() {
            assert_eq!(classify_point(h, &x, h.clock()), early);
        }
    }
}

#[test]
fn one_event_passage() {
    let mut env = ListEnv::empty(2, 1.0);
    env.push(p2(0.1, 0.0), 0.2, 3.0);
    let r = passage_time(&env, &p2(0.0, 0.0), &p2(1.0, 0.0), DELTA, &passage_budget(1.0)).unwrap();
    assert!(!r.censored);
    assert_eq!(r.t, 0.2);
}

#[test]
fn degenerate_triple_is_an_equality() {
    let env = PoissonEnv::new(EnvConfig::new(2, 1.0, 5, RadiusLaw::UniformHalfOpen { a: 0.0, b: 1.0 })).unwrap();
    let x = p2(0.0, 0.0);
    let y = p2(3.0, 0.0);
    let t = coupled_triple(&env, &x, &x, &y, DELTA, &passage_budget(3.0), 20, 1).unwrap();
    assert!(!t.censored);
    assert_eq!(t.txz, 0.0);
    assert_eq!(t.txy, t.tzy);
    assert!(t.audit.clean());
}

#[test]
fn farther_targets_take_longer() {
    let cfg = EnvConfig::new(2, 1.0, 17, RadiusLaw::Dirac { r: 1.0 });
    let mean = |n: f64, stream: u64| {
        let res = passage_sample(&cfg, n, 1000, DELTA, stream).unwrap();
        assert!(res.iter().all(|r| !r.censored));
        MeanSe::of(&res.iter().map(|r| r.t).collect::<Vec<_>>())
    };
    let near = mean(2.0, 1);
    let far = mean(4.0, 2);
    let se = (near.se * near.se + far.se * far.se).sqrt();
    assert!(far.mean - near.mean > 3.0 * se, "{near:?} {far:?}");
}

#[test]
fn shifted_start_costs_about_n_mu() {
    let cfg = EnvConfig::new(2, 1.0, 22, RadiusLaw::Dirac { r: 1.0 });
    let mu_hat = estimate_mu(&cfg, &[10.0, 20.0], 40, 0.95, DELTA).unwrap().mu_hat;
    let (n, ms) = (4, [8, 16, 24]);
    let mut reps = Vec::new();
    for &m in &ms {
        for r in 0..60 {
            reps.push(diff_replication(&cfg, n, m, r, DELTA).unwrap());
        }
    }
    let rows = diff_rows(&reps, &ms);
    assert!(rows.iter().all(|r| r.censored == 0));
    assert!(diff_meets_bound(&rows, n, mu_hat, 1.0, 0.25, 0.90), "mu_hat {mu_hat}, rows {rows:?}");
}
