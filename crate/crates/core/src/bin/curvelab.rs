//! Batch front end: curvature bundles, bump deformations with norm scans,
//! exact coefficient tables, infeasibility certificates, and the
//! verification suite.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage or precondition error,
//! 3 inconclusive.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;

use curvelab::aubin::{deform_metric, norm_sq_at, BumpParams, NormKind};
use curvelab::catalog::catalog_metric;
use curvelab::curvature::CurvatureBundle;
use curvelab::error::Error;
use curvelab::harness::{min_norm_scan, run_suite, sample_ball, SuiteConfig};
use curvelab::jets::ChartPoint;
use curvelab::obstruction::{
    bach_system, certify_no_nonzero_solution, replay_certificate, spot_check,
    weyl_single_coordinate_system, wplus_system, BachParamMode, CertOutcome,
};
use curvelab::poly::rat_int;

#[derive(Parser)]
#[command(name = "curvelab", version, about = "chart-local curvature tensors, bump deformations, and obstruction certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the curvature bundle of a catalog metric at a point.
    Curvature(CurvatureArgs),
    /// Deform a catalog metric with the bump and scan tensor norms.
    Deform(DeformArgs),
    /// Print the exact-rational principal coefficient tables.
    Coeffs(CoeffsArgs),
    /// Build and certify an obstruction system.
    Obstruction(ObstructionArgs),
    /// Run the verification suite.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CurvatureArgs {
    /// Catalog metric name (see README for the list).
    #[arg(long)]
    metric: String,
    /// Comma-separated chart coordinates.
    #[arg(long)]
    point: String,
    /// Jet order (2..=4); Cotton needs 3, Bach needs 4.
    #[arg(long, default_value_t = 4)]
    order: usize,
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args)]
struct DeformArgs {
    #[arg(long, default_value = "flat4")]
    metric: String,
    /// Comma-separated tensor kinds: weyl, wplus, wminus, mixed, cotton, bach.
    #[arg(long, default_value = "weyl")]
    kind: String,
    /// Mixing parameter t for the mixed kind.
    #[arg(long, default_value_t = -0.5)]
    mix_t: f64,
    #[arg(long, default_value_t = 1.3)]
    lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    r: f64,
    #[arg(long, default_value_t = 10.0)]
    b: f64,
    /// Comma-separated alphas, rationals or decimals (e.g. "1,5/4,3/2,2").
    #[arg(long, default_value = "1,5/4,3/2,2")]
    alpha: String,
    #[arg(long, default_value_t = 2000)]
    count: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Sample region: ball (includes the center) or annulus (|x| >= r/100).
    #[arg(long, default_value = "ball")]
    region: String,
    #[arg(long)]
    output: Option<String>,
    /// Output format: json or csv (per-point rows).
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct CoeffsArgs {
    /// Coefficient family: weyl, cotton, or bach.
    #[arg(long, default_value = "weyl")]
    family: String,
    #[arg(long, default_value = "1,5/4,3/2,2")]
    alpha: String,
    #[arg(long, default_value_t = 4)]
    n: usize,
}

#[derive(Args)]
struct ObstructionArgs {
    /// System: wplus, bach, bach-free, or weyl-single.
    #[arg(long, default_value = "wplus")]
    system: String,
    #[arg(long, default_value = "1,5/4,3/2,2")]
    alpha: String,
    /// Nonzero coordinate (1-based) for the weyl-single system.
    #[arg(long, default_value_t = 1)]
    coordinate: usize,
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Random points for the soundness spot check (branch-and-bound only).
    #[arg(long, default_value_t = 0)]
    spot_check: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Write the certificate as JSON.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args)]
struct ValidateArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<String>,
    /// Check names to run (repeatable); defaults to every check.
    #[arg(long = "check")]
    checks: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance overrides as name=value (repeatable).
    #[arg(long = "tolerance")]
    tolerances: Vec<String>,
    #[arg(long)]
    output: Option<String>,
    /// List available checks and exit.
    #[arg(long, default_value_t = false)]
    list_checks: bool,
}

fn parse_point(s: &str) -> Result<ChartPoint, Error> {
    let coords: Result<Vec<f64>, _> = s.split(',').map(|v| v.trim().parse::<f64>()).collect();
    let coords = coords.map_err(|e| Error::usage(format!("bad point '{s}': {e}")))?;
    ChartPoint::new(coords)
}

fn parse_rational(s: &str) -> Result<BigRational, Error> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: i64 = num
            .trim()
            .parse()
            .map_err(|_| Error::usage(format!("bad rational '{s}'")))?;
        let d: i64 = den
            .trim()
            .parse()
            .map_err(|_| Error::usage(format!("bad rational '{s}'")))?;
        if d == 0 {
            return Err(Error::usage("zero denominator"));
        }
        Ok(BigRational::new(n.into(), d.into()))
    } else if let Some((int, frac)) = s.split_once('.') {
        let digits = frac.len() as u32;
        let scale = 10i64.pow(digits);
        let whole: i64 = if int.is_empty() {
            0
        } else {
            int.parse()
                .map_err(|_| Error::usage(format!("bad decimal '{s}'")))?
        };
        let fpart: i64 = if frac.is_empty() {
            0
        } else {
            frac.parse()
                .map_err(|_| Error::usage(format!("bad decimal '{s}'")))?
        };
        let sign = if whole < 0 || int.starts_with('-') { -1 } else { 1 };
        Ok(BigRational::new(
            (whole * scale + sign * fpart).into(),
            scale.into(),
        ))
    } else {
        let n: i64 = s
            .parse()
            .map_err(|_| Error::usage(format!("bad rational '{s}'")))?;
        Ok(rat_int(n))
    }
}

fn parse_alpha(s: &str) -> Result<Vec<BigRational>, Error> {
    s.split(',').map(parse_rational).collect()
}

fn parse_kinds(s: &str, mix_t: f64) -> Result<Vec<NormKind>, Error> {
    s.split(',')
        .map(|k| match k.trim() {
            "weyl" => Ok(NormKind::Weyl),
            "wplus" => Ok(NormKind::WeylPlus),
            "wminus" => Ok(NormKind::WeylMinus),
            "mixed" => Ok(NormKind::Mixed(mix_t)),
            "cotton" => Ok(NormKind::Cotton),
            "bach" => Ok(NormKind::Bach),
            other => Err(Error::usage(format!("unknown tensor kind '{other}'"))),
        })
        .collect()
}

fn write_output(path: &Option<String>, contents: &str) -> Result<(), Error> {
    if let Some(path) = path {
        fs::write(path, contents).map_err(|e| Error::usage(format!("cannot write {path}: {e}")))?;
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Usage(_) | Error::Precondition(_) | Error::Domain(_) | Error::Capability { .. } => 2,
        Error::Geometry(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Curvature(args) => cmd_curvature(args),
        Command::Deform(args) => cmd_deform(args),
        Command::Coeffs(args) => cmd_coeffs(args),
        Command::Obstruction(args) => cmd_obstruction(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn cmd_curvature(args: CurvatureArgs) -> Result<u8, Error> {
    let metric = catalog_metric(&args.metric)?;
    let p = parse_point(&args.point)?;
    if p.dim() != metric.dim {
        return Err(Error::usage(format!(
            "point has dimension {}, metric '{}' has {}",
            p.dim(),
            metric.name,
            metric.dim
        )));
    }
    let bundle = CurvatureBundle::compute(&metric.field, &p, args.order)?;
    let mj = curvelab::jets::eval_metric_jet(&metric.field, &p, args.order)?;
    let weyl_sq = curvelab::curvature::tensor_norm_sq(&bundle.weyl, &mj);
    let ricci_sq = curvelab::curvature::tensor_norm_sq(&bundle.ricci, &mj);
    let cotton_sq = bundle
        .cotton
        .as_ref()
        .map(|c| curvelab::curvature::tensor_norm_sq(c, &mj));
    let bach_sq = bundle
        .bach
        .as_ref()
        .map(|b| curvelab::curvature::tensor_norm_sq(b, &mj));
    let payload = serde_json::json!({
        "metric": metric.name,
        "point": p.coords(),
        "order": args.order,
        "scalar_curvature": bundle.scalar,
        "ricci": bundle.ricci.components(),
        "schouten": bundle.schouten.components(),
        "norms_squared": {
            "ricci": ricci_sq,
            "weyl": weyl_sq,
            "cotton": cotton_sq,
            "bach": bach_sq,
        },
        "weyl": bundle.weyl.components(),
        "cotton": bundle.cotton.as_ref().map(|c| c.components().to_vec()),
        "bach": bundle.bach.as_ref().map(|b| b.components().to_vec()),
    });
    let text = serde_json::to_string_pretty(&payload).unwrap();
    println!(
        "{} at {:?}: R = {:.6}, |W|² = {:.3e}, |C|² = {}, |B|² = {}",
        metric.name,
        p.coords(),
        bundle.scalar,
        weyl_sq,
        cotton_sq.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "n/a".into()),
        bach_sq.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "n/a".into()),
    );
    write_output(&args.output, &text)?;
    Ok(0)
}

fn cmd_deform(args: DeformArgs) -> Result<u8, Error> {
    let metric = catalog_metric(&args.metric)?;
    let alpha = parse_alpha(&args.alpha)?;
    let kinds = parse_kinds(&args.kind, args.mix_t)?;
    let params = BumpParams::new(
        args.lambda,
        args.r,
        args.b,
        alpha,
        ChartPoint::origin(metric.dim),
    )?;
    let needs_distinct = kinds
        .iter()
        .any(|k| matches!(k, NormKind::Cotton | NormKind::Bach));
    if needs_distinct && !params.alpha_pairwise_distinct() {
        return Err(Error::precondition(
            "cotton and bach scans need pairwise-distinct alpha",
        ));
    }
    let deformed = deform_metric(&metric.field, &params)?;
    let points = sample_ball(
        params.center(),
        params.r(),
        params.alpha(),
        args.count,
        args.seed,
    );
    let region_points: Vec<ChartPoint> = match args.region.as_str() {
        "ball" => points,
        "annulus" => points
            .into_iter()
            .filter(|p| {
                let d: f64 = p
                    .coords()
                    .iter()
                    .zip(params.center().coords())
                    .map(|(x, c)| (x - c) * (x - c))
                    .sum();
                d.sqrt() >= params.r() / 100.0
            })
            .collect(),
        other => return Err(Error::usage(format!("unknown region '{other}'"))),
    };
    let includes_center = args.region == "ball";
    let mut all_ok = true;
    let mut kinds_json = Vec::new();
    let mut csv = String::from("kind,index,norm_sq,coords\n");
    for kind in &kinds {
        let scan = min_norm_scan(&deformed, *kind, &region_points)?;
        let mut ok = scan.min > 0.0;
        let mut center_note = serde_json::Value::Null;
        if matches!(kind, NormKind::Cotton) && includes_center {
            let center_nsq = norm_sq_at(&deformed, params.center(), NormKind::Cotton)?;
            // the deformed Cotton tensor vanishes at the bump center
            if center_nsq <= 1e-10 {
                ok = false;
                center_note = serde_json::json!({
                    "vanishes_at_center": true,
                    "center_norm_sq": center_nsq,
                });
            }
        }
        all_ok &= ok;
        println!(
            "{:<7} min |T|² = {:.6e} at {:?}{}",
            scan.kind,
            scan.min,
            scan.argmin,
            if ok { "" } else { "  (vanishing)" }
        );
        for row in &scan.rows {
            csv.push_str(&format!(
                "{},{},{:e},\"{:?}\"\n",
                scan.kind, row.index, row.norm_sq, row.coords
            ));
        }
        kinds_json.push(serde_json::json!({
            "kind": scan.kind,
            "min": scan.min,
            "argmin": scan.argmin,
            "histogram": scan.histogram,
            "center": center_note,
            "nonvanishing": ok,
        }));
    }
    let payload = serde_json::json!({
        "metric": metric.name,
        "lambda": args.lambda,
        "r": args.r,
        "b": args.b,
        "alpha": params.alpha(),
        "count": region_points.len(),
        "seed": args.seed,
        "region": args.region,
        "kinds": kinds_json,
        "verdict": all_ok,
    });
    match args.format.as_str() {
        "json" => write_output(&args.output, &serde_json::to_string_pretty(&payload).unwrap())?,
        "csv" => write_output(&args.output, &csv)?,
        other => return Err(Error::usage(format!("unknown format '{other}'"))),
    }
    Ok(if all_ok { 0 } else { 1 })
}

fn cmd_coeffs(args: CoeffsArgs) -> Result<u8, Error> {
    let alpha = parse_alpha(&args.alpha)?;
    let n = args.n;
    match args.family.as_str() {
        "weyl" | "cotton" => {
            let coeffs = if args.family == "weyl" {
                curvelab::aubin::weyl_coeffs(&alpha, n)?
            } else {
                curvelab::aubin::cotton_coeffs(&alpha, n)?
            };
            println!("family: {} (r-free normalization over xi = x/r)", args.family);
            println!("a_ij:");
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        println!("  a[{}][{}] = {}", i + 1, j + 1, coeffs.a(i, j));
                    }
                }
            }
            println!("a_ijk:");
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if i != j && j != k && i != k {
                            println!(
                                "  a[{}][{}][{}] = {}",
                                i + 1,
                                j + 1,
                                k + 1,
                                coeffs.a3(i, j, k)
                            );
                        }
                    }
                }
            }
            println!("b_ij (coefficients of xi_m^2):");
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let row: Vec<String> = (0..n)
                            .map(|m| coeffs.b_coeff(i, j, m).to_string())
                            .collect();
                        println!("  b[{}][{}] = [{}]", i + 1, j + 1, row.join(", "));
                    }
                }
            }
        }
        "bach" => {
            if n != 4 {
                return Err(Error::usage("the bach family needs n = 4"));
            }
            let polys = curvelab::aubin::bach_delta_polys(&alpha)?;
            println!("family: bach (B_ij corrections = (lambda^2/2r^2) P_ij(xi; A, B, C), r-free)");
            for i in 0..4 {
                for j in i..4 {
                    println!("  P[{}][{}] = {}", i + 1, j + 1, polys[i * 4 + j]);
                }
            }
        }
        other => return Err(Error::usage(format!("unknown family '{other}'"))),
    }
    Ok(0)
}

fn cmd_obstruction(args: ObstructionArgs) -> Result<u8, Error> {
    let alpha = parse_alpha(&args.alpha)?;
    let sys = match args.system.as_str() {
        "wplus" => wplus_system(&alpha)?,
        "bach" => bach_system(&alpha, BachParamMode::SignConstrained)?,
        "bach-free" => bach_system(&alpha, BachParamMode::FreeNonzero)?,
        "weyl-single" => {
            if args.coordinate == 0 || args.coordinate > 4 {
                return Err(Error::usage("coordinate must be 1..=4"));
            }
            weyl_single_coordinate_system(&alpha, 4, args.coordinate - 1)?
        }
        other => return Err(Error::usage(format!("unknown system '{other}'"))),
    };
    println!("system '{}', {} equations", sys.name, sys.equations.len());
    for (i, eq) in sys.equations.iter().enumerate().take(3) {
        println!("  eq[{}]: {} = 0", i, eq.primitive_integer_form());
    }
    let outcome = certify_no_nonzero_solution(&sys, args.budget)?;
    match outcome {
        CertOutcome::Infeasible(cert) => {
            let replay = replay_certificate(&sys, &cert)?;
            println!(
                "INFEASIBLE ({}; {} subdivisions; replay {})",
                cert.method, cert.subdivisions, replay
            );
            println!("region: {}", cert.region);
            if args.spot_check > 0 {
                let sc = spot_check(&sys, args.spot_check, args.seed)?;
                println!(
                    "spot check: {} samples, min violation margin {:.3e}",
                    sc.samples, sc.min_margin
                );
                if sc.min_margin <= 0.0 {
                    return Ok(1);
                }
            }
            write_output(&args.output, &serde_json::to_string_pretty(&cert).unwrap())?;
            if !replay {
                return Ok(1);
            }
            Ok(0)
        }
        CertOutcome::Counterexample { point, residual } => {
            println!("COUNTEREXAMPLE at {point:?} (residual {residual:.3e})");
            Ok(1)
        }
        CertOutcome::Inconclusive { processed, budget } => {
            println!("INCONCLUSIVE after {processed}/{budget} subdivisions");
            Ok(3)
        }
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<u8, Error> {
    if args.list_checks {
        for check in curvelab::harness::checks::registry() {
            println!("{}", check.name);
        }
        return Ok(0);
    }
    let mut config: SuiteConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::usage(format!("cannot read {path}: {e}")))?;
            serde_json::from_str(&text).map_err(|e| Error::usage(format!("bad config: {e}")))?
        }
        None => SuiteConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if !args.checks.is_empty() {
        config.checks = Some(args.checks.clone());
    }
    if !args.tolerances.is_empty() {
        let mut tol = serde_json::to_value(&config.tolerances).unwrap();
        for pair in &args.tolerances {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::usage(format!("bad tolerance override '{pair}'")))?;
            let parsed: f64 = value
                .parse()
                .map_err(|_| Error::usage(format!("bad tolerance value '{value}'")))?;
            let slot = tol
                .get_mut(key)
                .ok_or_else(|| Error::usage(format!("unknown tolerance '{key}'")))?;
            *slot = serde_json::json!(parsed);
        }
        config.tolerances =
            serde_json::from_value(tol).map_err(|e| Error::usage(format!("bad tolerances: {e}")))?;
    }
    let report = run_suite(&config)?;
    for check in &report.checks {
        println!(
            "{:<26} {}  ({} ms)",
            check.name,
            match check.status {
                curvelab::harness::CheckStatus::Pass => "pass",
                curvelab::harness::CheckStatus::Fail => "FAIL",
                curvelab::harness::CheckStatus::Diagnostic => "diag",
            },
            check.runtime_ms
        );
    }
    println!("verdict: {}", if report.verdict { "pass" } else { "FAIL" });
    write_output(&args.output, &report.to_json())?;
    Ok(if report.verdict { 0 } else { 1 })
}
