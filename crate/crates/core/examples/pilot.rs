//! Pilot run for the coexistence experiment: prints per-k estimates and
//! timing for a small number of replications.
//!
//! cargo run --release -p growth-core --example pilot -- [reps] [lambda2]

use std::time::Instant;

use growth_core::compete::{coexistence_table, replicate, CompeteConfig};
use growth_core::env::{EnvConfig, RadiusLaw};

fn main() {
    let mut args = std::env::args().skip(1);
    let reps: u64 = args.next().map_or(50, |a| a.parse().expect("reps"));
    let lambda2: f64 = args.next().map_or(1.0, |a| a.parse().expect("lambda2"));
    let law = RadiusLaw::UniformHalfOpen { a: 0.0, b: 1.0 };
    let env = EnvConfig::new(2, lambda2.max(1.0), 2024, law);
    let cfg = CompeteConfig::two_seeds(env, 1.0, lambda2, 8.0, vec![5.0, 10.0, 15.0]);
    let start = Instant::now();
    let mut outcomes = Vec::new();
    for r in 0..reps {
        let t = Instant::now();
        let o = replicate(&cfg, r).expect("run");
        eprintln!(
            "rep {r}: {:?} events {} stop {} {:.2}s",
            o.outcomes(),
            o.events,
            o.stop,
            t.elapsed().as_secs_f64()
        );
        outcomes.push(o);
    }
    for row in coexistence_table(&outcomes, 0.95).expect("table") {
        println!(
            "k={} coexist={} censored={} of {} pessimistic=[{:.4},{:.4}]",
            row.k, row.coexist, row.censored, row.trials, row.pessimistic.lower, row.pessimistic.upper
        );
    }
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
}
