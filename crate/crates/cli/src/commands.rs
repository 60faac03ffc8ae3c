use std::fs;
use std::path::Path;

use prguess::behavior::{pr_product, Behavior, BehaviorFile, NoiseParameter};
use prguess::certify::{parse_bits, verify_certificate, verify_sandwich, Certificate, Report};
use prguess::guessprob::{guessing_probability, guessing_probability_with, AnalyticPiece, GuessingResult};
use prguess::nosig::ScenarioKind;
use prguess::numeric::{Mode, Rational, Scalar};
use prguess::Error;
use rayon::prelude::*;

use crate::grid::{parse_grid, parse_v, table1_grid};
use crate::{SolveArgs, SweepArgs, Table1Args, VerifyArgs, VertexArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Solver(_) => EXIT_SOLVER,
            Error::Rejected(_) => EXIT_CHECK,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

type Outcome = Result<u8, Failure>;

fn default_mode(n: usize) -> Mode {
    if n <= 3 {
        Mode::Exact
    } else {
        Mode::Float
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
}

fn print_report(report: &Report) {
    for c in &report.checks {
        println!("{:<24} {}  {}", c.name, if c.passed { "ok  " } else { "FAIL" }, c.detail);
    }
}

fn summary(r: &GuessingResult) {
    let (lo, hi) = r.bounds();
    println!("scenario={} n={} v={} mode={}", r.scenario, r.n, r.v, r.mode);
    println!("G={} ({:.6})", r.g, r.g.to_f64());
    println!("H={:.6} bits ({:.6} per round)", r.h, r.h / r.n as f64);
    println!("bounds=[{lo}, {hi}]");
}

pub fn solve(a: SolveArgs) -> Outcome {
    let mode = a.mode.unwrap_or(default_mode(a.n));
    let v = parse_v(&a.v, mode).map_err(Failure::config)?;
    let bits = |s: &Option<String>| -> Result<usize, Failure> {
        match s {
            Some(s) => Ok(parse_bits(a.n, s)?),
            None => Ok(0),
        }
    };
    let (x, y) = (bits(&a.x_star)?, bits(&a.y_star)?);
    let result = guessing_probability_with(a.formulation, a.n, a.scenario, &v, x, y)?;
    let report = verify_certificate(&result.certificate)?;
    write(&a.out, &result.certificate.to_json()?)?;
    summary(&result);
    println!("certificate={}", a.out.display());
    if !report.accepted() {
        print_report(&report);
        return Err(Failure { code: EXIT_CHECK, message: report.reason.unwrap_or_default() });
    }
    Ok(EXIT_OK)
}

pub fn sweep(a: SweepArgs) -> Outcome {
    let scenarios = if a.scenario.is_empty() { ScenarioKind::ALL.to_vec() } else { a.scenario.clone() };
    let mut jobs = Vec::new();
    for &n in &a.n {
        let mode = a.mode.unwrap_or(default_mode(n));
        let grid = match &a.v_grid {
            Some(g) => parse_grid(g, mode),
            None => a.v.iter().map(|v| parse_v(v, mode)).collect(),
        }
        .map_err(Failure::config)?;
        for &s in &scenarios {
            for v in &grid {
                jobs.push((n, s, v.clone()));
            }
        }
    }
    let cores = std::thread::available_parallelism().map_or(1, |c| c.get());
    let threads = a.jobs.unwrap_or(jobs.len().min(cores)).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    let results: Vec<Result<GuessingResult, Error>> =
        pool.install(|| jobs.par_iter().map(|(n, s, v)| guessing_probability(*n, *s, v)).collect());

    let mut records = Vec::with_capacity(results.len());
    for ((n, s, v), r) in jobs.iter().zip(results) {
        let r = r.map_err(|e| {
            let mut f = Failure::from(e);
            f.message = format!("n={n} scenario={s} v={v}: {}", f.message);
            f
        })?;
        records.push(r.csv_record());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &records {
        w.serialize(r).map_err(|e| Failure::config(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::config(format!("csv: {e}")))?;
    let text = String::from_utf8(bytes).expect("csv output is utf-8");
    match &a.out {
        Some(path) => {
            if let Err(e) = write(path, &text) {
                let _ = fs::remove_file(path);
                return Err(e);
            }
            eprintln!("wrote {} rows to {}", records.len(), path.display());
        }
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

pub fn verify(a: VerifyArgs) -> Outcome {
    let load = |p: &Path| -> Result<Certificate, Failure> { Ok(Certificate::from_json(&read(p)?)?) };
    let cert = load(&a.certificate)?;
    let report = match &a.sandwich {
        Some(other) => verify_sandwich(&cert, &load(other)?)?,
        None => verify_certificate(&cert)?,
    };
    print_report(&report);
    match report.reason {
        None => {
            println!("certificate accepted: G={}", cert.objective);
            Ok(EXIT_OK)
        }
        Some(reason) => {
            println!("certificate rejected: {reason}");
            Ok(EXIT_CHECK)
        }
    }
}

pub fn vertex(a: VertexArgs) -> Outcome {
    let beh: Behavior<Rational> = match &a.behavior {
        Some(path) => {
            let file: BehaviorFile = serde_json::from_str(&read(path)?).map_err(Error::from)?;
            Behavior::from_json(&file)?
        }
        None => {
            let Scalar::Exact(v) = parse_v(&a.v, Mode::Exact).map_err(Failure::config)? else {
                unreachable!("exact parse")
            };
            pr_product(a.n, &NoiseParameter::new(v)?)?
        }
    };
    let is_vertex = prguess::certify::vertex_check(&beh, a.scenario)?;
    println!("vertex: {is_vertex}");
    Ok(EXIT_OK)
}

pub fn table1(a: Table1Args) -> Outcome {
    let mut mismatches = Vec::new();
    for &n in &a.n {
        if !(1..=3).contains(&n) {
            return Err(Failure::config(format!("table1 covers n = 1, 2, 3, not {n}")));
        }
        for s in ScenarioKind::ALL {
            let piece = AnalyticPiece::new(n, s)?;
            for v in table1_grid() {
                let expected = piece.exact_value(&v, 1e-3).expect("grid avoids breakpoints");
                let got = guessing_probability(n, s, &Scalar::Exact(v.clone()))?;
                let ok = got.g == Scalar::Exact(expected.clone());
                println!("n={n} {:<6} v={:<5} G={:<16} expected={:<16} {}", s, v, got.g, expected, if ok { "ok" } else { "MISMATCH" });
                if !ok {
                    mismatches.push(format!("({s}, n={n}, v={v}, got {}, expected {expected})", got.g));
                }
            }
        }
    }
    if mismatches.is_empty() {
        Ok(EXIT_OK)
    } else if a.check {
        for m in &mismatches {
            eprintln!("mismatch {m}");
        }
        Ok(EXIT_CHECK)
    } else {
        Ok(EXIT_OK)
    }
}
