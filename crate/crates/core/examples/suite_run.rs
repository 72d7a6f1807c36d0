use curvelab::harness::{run_suite, SuiteConfig};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mut config = SuiteConfig::default();
    if args.len() > 1 {
        config.checks = Some(args[1..].iter().map(|s| s.to_string()).collect());
    }
    let t0 = Instant::now();
    let report = run_suite(&config).unwrap();
    for c in &report.checks {
        println!(
            "{:<28} {:>6?} {:>8} ms {}",
            c.name,
            c.status,
            c.runtime_ms,
            if c.passed() { "" } else { "<-- FAIL" }
        );
    }
    println!("verdict: {} in {:.1}s", report.verdict, t0.elapsed().as_secs_f64());
}
