//! Command-line front end: certify trace-convexity, verify certificates,
//! fuzz-check convexity, and print nc Hessians.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use traceconvex::calculus;
use traceconvex::certificate::{self, Certificate, Shape};
use traceconvex::codec;
use traceconvex::coeff::{parse_scalar, Mode};
use traceconvex::error::Error;
use traceconvex::scalar::{parse_unipoly, IntervalSpec, UniPoly};
use traceconvex::verify;

#[derive(Parser)]
#[command(
    name = "traceconvex",
    about = "Decide trace-convexity of a univariate polynomial and build or check algebraic certificates"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct PolyArgs {
    /// polynomial in x, e.g. "15*x^2 - 5*x^4 + x^6"
    #[arg(short, long)]
    poly: String,

    /// bounded open interval (a, b)
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
    interval: Option<Vec<String>>,

    /// half line (b, inf)
    #[arg(long, value_name = "B", conflicts_with = "interval", allow_hyphen_values = true)]
    ge: Option<String>,

    /// half line (-inf, a)
    #[arg(long, value_name = "A", conflicts_with_all = ["interval", "ge"], allow_hyphen_values = true)]
    le: Option<String>,

    /// force the coefficient mode
    #[arg(long, value_parser = ["exact", "float"])]
    mode: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct a trace-convexity certificate
    Certify {
        #[command(flatten)]
        poly: PolyArgs,
        /// residual tolerance
        #[arg(long, default_value = "1e-9")]
        tol: String,
        /// write the certificate document here instead of stdout
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        /// machine-readable output
        #[arg(long)]
        json: bool,
    },
    /// Check a certificate document against a polynomial
    Verify {
        #[command(flatten)]
        poly: PolyArgs,
        /// certificate document path
        #[arg(long)]
        cert: std::path::PathBuf,
        #[arg(long, default_value = "1e-9")]
        tol: String,
        #[arg(long)]
        json: bool,
    },
    /// Randomized trace-positivity and midpoint-convexity fuzzing
    Check {
        #[command(flatten)]
        poly: PolyArgs,
        /// trials per oracle
        #[arg(long, default_value_t = 500)]
        trials: usize,
        /// maximum matrix size
        #[arg(long, default_value_t = 4)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// violation tolerance
        #[arg(long, default_value = "1e-8")]
        tol: String,
        #[arg(long)]
        json: bool,
    },
    /// Print the noncommutative Hessian of the polynomial
    Hessian {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long)]
        json: bool,
    },
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Input(_) | Error::Parse { .. } => 2,
        Error::NotConvex { .. }
        | Error::NotConvexOnInterval { .. }
        | Error::NotNonnegative { .. }
        | Error::NotNonnegativeOnInterval { .. } => 1,
        _ => 3,
    }
}

fn parse_inputs(args: &PolyArgs) -> Result<(UniPoly, IntervalSpec), Error> {
    let mut p = parse_unipoly(&args.poly)?;
    match args.mode.as_deref() {
        Some("exact") => p = p.into_mode(Mode::Exact),
        Some("float") => p = p.into_mode(Mode::Float),
        _ => {}
    }
    let mode = p.mode();
    let scalar = |text: &str| -> Result<traceconvex::coeff::Coeff, Error> {
        Ok(parse_scalar(text)?.into_mode(mode))
    };
    let interval = if let Some(ab) = &args.interval {
        let iv = IntervalSpec::Interval(scalar(&ab[0])?, scalar(&ab[1])?);
        iv.validate()?;
        iv
    } else if let Some(b) = &args.ge {
        IntervalSpec::RayRight(scalar(b)?)
    } else if let Some(a) = &args.le {
        IntervalSpec::RayLeft(scalar(a)?)
    } else {
        IntervalSpec::Global
    };
    Ok((p, interval))
}

fn parse_tol(text: &str) -> Result<f64, Error> {
    let v = parse_scalar(text)?.to_f64();
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Input(format!("invalid tolerance {:?}", text)));
    }
    Ok(v)
}

fn shape_counts(c: &Certificate) -> String {
    [Shape::Q, Shape::R, Shape::T, Shape::U]
        .iter()
        .map(|s| format!("{}: {}", s.as_str(), c.count_shape(*s)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn run_certify(
    args: &PolyArgs,
    tol: &str,
    out: &Option<std::path::PathBuf>,
    json: bool,
) -> Result<u8, Error> {
    let (p, interval) = parse_inputs(args)?;
    let tol = parse_tol(tol)?;
    match certificate::certify(&p, &interval, tol) {
        Ok(cert) => {
            let residual = certificate::symbolic_residual(&p, &cert);
            let doc = codec::codec_write(&cert);
            if let Some(path) = out {
                std::fs::write(path, &doc)
                    .map_err(|e| Error::Input(format!("cannot write {:?}: {}", path, e)))?;
            }
            if json {
                println!(
                    "{}",
                    json!({
                        "status": "convex",
                        "mode": cert.mode.to_string(),
                        "residual": residual,
                        "certificate": serde_json::from_str::<serde_json::Value>(&doc).unwrap(),
                    })
                );
            } else {
                println!("trace-convex on {}", interval);
                println!("certificate terms: {}", shape_counts(&cert));
                println!("symbolic residual: {:e}", residual);
                if out.is_none() {
                    println!("{}", doc);
                }
            }
            Ok(0)
        }
        Err(e @ (Error::NotConvex { .. } | Error::NotConvexOnInterval { .. })) => {
            let witness = match &e {
                Error::NotConvex { witness } | Error::NotConvexOnInterval { witness } => witness,
                _ => unreachable!(),
            };
            if json {
                println!(
                    "{}",
                    json!({"status": "not_convex", "witness": witness.to_string()})
                );
            } else {
                println!("not trace-convex on {}", interval);
                println!("second derivative is negative at x0 = {}", witness);
            }
            Ok(1)
        }
        Err(e) => Err(e),
    }
}

fn run_verify(
    args: &PolyArgs,
    cert_path: &std::path::Path,
    tol: &str,
    json: bool,
) -> Result<u8, Error> {
    let (p, interval) = parse_inputs(args)?;
    let tol = parse_tol(tol)?;
    let text = std::fs::read_to_string(cert_path)
        .map_err(|e| Error::Input(format!("cannot read {:?}: {}", cert_path, e)))?;
    let cert = codec::codec_read(&text)?;
    let mut report = verify::verify_certificate(&p, &cert, tol);
    if cert.interval != interval.into_mode(cert.mode) {
        report.structural_ok = false;
        report.pass = false;
    }
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report);
    }
    Ok(if report.pass { 0 } else { 1 })
}

fn run_check(
    args: &PolyArgs,
    trials: usize,
    size: usize,
    seed: u64,
    tol: &str,
    json: bool,
) -> Result<u8, Error> {
    if trials == 0 || size == 0 {
        return Err(Error::Input("--trials and --size must be at least 1".into()));
    }
    let (p, interval) = parse_inputs(args)?;
    let eps = parse_tol(tol)?;
    let trace = verify::trace_positivity_fuzz(&p, &interval, size, trials, seed, eps);
    let midpoint = verify::midpoint_convexity_fuzz(&p, &interval, size, trials, seed, eps);
    let clean = trace.pass && midpoint.pass;
    if json {
        println!(
            "{}",
            json!({
                "status": if clean { "clean" } else { "violation" },
                "trace_positivity": serde_json::from_str::<serde_json::Value>(&trace.to_json()).unwrap(),
                "midpoint_convexity": serde_json::from_str::<serde_json::Value>(&midpoint.to_json()).unwrap(),
            })
        );
    } else {
        println!("trace positivity:   {} failures / {} trials (worst margin {:e})",
            trace.trials_failed, trace.trials_run, trace.worst_margin);
        println!("midpoint convexity: {} failures / {} trials (worst margin {:e})",
            midpoint.trials_failed, midpoint.trials_run, midpoint.worst_margin);
        for (name, rep) in [("trace positivity", &trace), ("midpoint convexity", &midpoint)] {
            if let Some(w) = &rep.witness {
                println!("{} witness (n = {}): value {:e}", name, w.n, w.value);
                println!("  X = {:?}", w.x);
                if let Some(h) = &w.h {
                    println!("  H = {:?}", h);
                }
                if let Some(y) = &w.y {
                    println!("  Y = {:?}", y);
                }
            }
        }
    }
    Ok(if clean { 0 } else { 1 })
}

fn run_hessian(args: &PolyArgs, json: bool) -> Result<u8, Error> {
    let (p, _) = parse_inputs(args)?;
    let hess = calculus::hessian(&p.to_ncpoly())?;
    if json {
        let entries: Vec<serde_json::Value> = hess
            .terms()
            .map(|(w, c)| json!([c.to_string(), w.render()]))
            .collect();
        println!("{}", json!({ "hessian": entries }));
    } else {
        println!("{}", hess);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Certify { poly, tol, out, json } => run_certify(poly, tol, out, *json),
        Cmd::Verify { poly, cert, tol, json } => run_verify(poly, cert, tol, *json),
        Cmd::Check { poly, trials, size, seed, tol, json } => {
            run_check(poly, *trials, *size, *seed, tol, *json)
        }
        Cmd::Hessian { poly, json } => run_hessian(poly, *json),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(exit_for(&e))
        }
    }
}
