use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use proglab::arith::ArithCtx;
use proglab::counting::{enumerate_configs, lambda_diff, max_free_subset, stashing_check, SearchMethod};
use proglab::expsum::{moment_exact, moment_grid, moment_quadrature, weyl_curve, DEFAULT_MOMENT_BUDGET};
use proglab::gowers::{box_norm_pow_exact, range_set, uk_norm_pow, BoxSpec};
use proglab::report::{canonical_json, Report, SCHEMA_VERSION};
use proglab::rng::split;
use proglab::signal::{e, ZFunc};
use proglab::verify::{nil_constraint_run, random_subset, transfer_experiment, TransferConfig, SUITES};
use proglab::{Error, VERSION};

const CSV_HELP: &str = "\
CSV columns (--format csv):
  verify-all, norms, nil   report,check,passed,lhs,rhs
  count                    quantity,re,im
  expsum                   theta,re,im,abs
  search                   member
  transfer                 w,median,trivial_term_median,median_without_trivial_term

Exit codes: 0 all checks pass, 1 a check failed, 2 invalid configuration.";

#[derive(Parser)]
#[command(name = "proglab", version, about = "Experiments on the progression x, x + y^2 - 1, x + 2(y^2 - 1)", after_help = CSV_HELP)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Threads used for independent batches. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Wall-clock budget; exceeding it fails the run.
    #[arg(long, global = true, env = "PROGLAB_BUDGET_MS")]
    budget_ms: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    /// Indicator of a random subset of density 1/2.
    Indicator,
    /// Random signs.
    Sign,
    /// Constant 1 times e(beta x).
    Modulated,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    Exhaustive,
    BranchAndBound,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Cmd {
    /// Run every property suite and summarize.
    VerifyAll,
    /// Counting operators on a random subset of [1, N].
    Count {
        #[arg(long, visible_alias = "N", default_value_t = 1024)]
        n: u64,
        #[arg(long, default_value_t = 2)]
        w: u64,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
    },
    /// U^k power of a test function on [0, N) over shifts [L].
    Norms {
        #[arg(long, visible_alias = "N", default_value_t = 32)]
        n: u64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, visible_alias = "L", default_value_t = 8)]
        l: i64,
        #[arg(long, value_enum, default_value_t = Kind::Indicator)]
        kind: Kind,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
    },
    /// Weyl sum curve and the exact versus quadrature moment.
    Expsum {
        #[arg(long = "W", default_value_t = 1)]
        #[serde(rename = "W")]
        big_w: i64,
        #[arg(long, default_value_t = 1)]
        r: i64,
        #[arg(long, visible_alias = "T", default_value_t = 20)]
        t: i64,
        #[arg(long, default_value_t = 4)]
        order: u32,
        #[arg(long, default_value_t = 256)]
        points: usize,
    },
    /// Configuration constraint on random Heisenberg sequences.
    Nil {
        #[arg(long, default_value_t = 1)]
        x: i64,
        #[arg(long, default_value_t = 2)]
        y: i64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 1000)]
        height: i64,
    },
    /// Largest configuration-free subset of [1, N].
    Search {
        #[arg(long, visible_alias = "N")]
        n: u64,
        /// Defaults to exhaustive for N <= 24, branch and bound above.
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long, default_value_t = 1_000_000_000)]
        max_nodes: u64,
    },
    /// Medians of |scaled difference| / N^2 across w on random sets.
    Transfer {
        #[arg(long, visible_alias = "N", default_value_t = 1 << 14)]
        n: u64,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [2u64, 3, 5, 7])]
        ws: Vec<u64>,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::VerifyAll => "verify-all",
            Cmd::Count { .. } => "count",
            Cmd::Norms { .. } => "norms",
            Cmd::Expsum { .. } => "expsum",
            Cmd::Nil { .. } => "nil",
            Cmd::Search { .. } => "search",
            Cmd::Transfer { .. } => "transfer",
        }
    }
}

/// The subcommand's flags as a flat map.
fn params(cmd: &Cmd) -> Value {
    match serde_json::to_value(cmd).expect("config serializes") {
        Value::Object(m) => m.into_iter().next().map_or_else(|| json!({}), |(_, v)| v),
        _ => json!({}),
    }
}

struct Outcome {
    reports: Vec<Report>,
    result: Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Outcome {
    fn from_reports(reports: Vec<Report>) -> Self {
        let rows = check_rows(&reports);
        Self { reports, result: Value::Null, header: vec!["report", "check", "passed", "lhs", "rhs"], rows }
    }
}

fn check_rows(reports: &[Report]) -> Vec<Vec<String>> {
    reports
        .iter()
        .flat_map(|r| {
            r.checks
                .iter()
                .map(|c| vec![r.name.clone(), c.name.clone(), c.passed.to_string(), c.lhs.to_string(), c.rhs.to_string()])
        })
        .collect()
}

fn run_suites(seed: u64, workers: usize) -> proglab::Result<Vec<Report>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<proglab::Result<Report>>>> = SUITES.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, SUITES.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= SUITES.len() {
                    break;
                }
                let out = (SUITES[i].1)(seed);
                *slots[i].lock().expect("slot lock") = Some(out);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every suite ran")).collect()
}

fn test_function(kind: Kind, n: u64, beta: f64, seed: u64) -> ZFunc {
    use rand::Rng as _;
    let mut rng = split(seed, 100);
    match kind {
        Kind::Indicator => ZFunc::from_real(0, &(0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect::<Vec<_>>()),
        Kind::Sign => ZFunc::from_real(0, &(0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect::<Vec<_>>()),
        Kind::Modulated => ZFunc::from_fn(0, n as i64 - 1, |x| e(beta * x as f64)),
    }
}

fn execute(cmd: &Cmd, seed: u64, workers: usize) -> proglab::Result<Outcome> {
    match *cmd {
        Cmd::VerifyAll => {
            let reports = run_suites(seed, workers)?;
            let summary: Vec<Value> = reports
                .iter()
                .map(|r| json!({"suite": r.name, "passed": r.passed(), "checks": r.checks.len(), "failures": r.failures().len()}))
                .collect();
            let mut o = Outcome::from_reports(reports);
            o.result = json!({ "summary": summary });
            Ok(o)
        }
        Cmd::Count { n, w, density } => {
            let ctx = ArithCtx::new(n, w)?;
            let mut rng = split(seed, 0);
            let set = random_subset(&mut rng, n, density)?;
            let f = set.indicator();
            let cr = lambda_diff(&f, &f, &f, &ctx);
            let mut r = stashing_check(&f, &f, &f, &ctx, 1)?;
            r.param("density", density);
            let result = json!({
                "counting": serde_json::to_value(cr).expect("report serializes"),
                "set_size": set.len(),
                "configurations": enumerate_configs(&set),
                "W": ctx.big_w,
                "M": ctx.m,
            });
            let rows = [("lambda_w", cr.lambda_w), ("lambda_model", cr.lambda_model), ("lambda_diff", cr.lambda_diff)]
                .iter()
                .map(|(q, v)| vec![q.to_string(), v[0].to_string(), v[1].to_string()])
                .collect();
            Ok(Outcome { reports: vec![r], result, header: vec!["quantity", "re", "im"], rows })
        }
        Cmd::Norms { n, k, l, kind, beta } => {
            if n == 0 || l < 1 || k < 1 {
                return Err(Error::InvalidParam("N, k and L must be positive".into()));
            }
            let f = test_function(kind, n, beta, seed);
            let q = range_set(l);
            let pow = uk_norm_pow(&f, &q, k)?;
            let mut r = Report::new("norms");
            r.param("N", n).param("k", k as u64).param("L", l).param("kind", serde_json::to_value(kind).expect("enum serializes"));
            r.value("norm_pow", pow).value("norm", pow.max(0.0).powf(1.0 / (1u64 << k) as f64));
            r.check("norm power nonnegative", pow >= -1e-9, pow, 0.0);
            if let Some((num, den)) = box_norm_pow_exact(&f, &BoxSpec::uniform(&q, k)?) {
                let exact = num as f64 / den as f64;
                r.value("exact_numerator", num.to_string()).value("exact_denominator", den.to_string());
                r.check("float matches exact", (exact - pow).abs() <= 1e-9 * exact.abs().max(1.0), pow, exact);
            }
            Ok(Outcome::from_reports(vec![r]))
        }
        Cmd::Expsum { big_w, r, t, order, points } => {
            if big_w < 1 || t < 0 || points == 0 {
                return Err(Error::InvalidParam("W >= 1, T >= 0 and points >= 1 required".into()));
            }
            let exact = moment_exact(big_w, r, t, order, DEFAULT_MOMENT_BUDGET)?;
            let quad = moment_quadrature(big_w, r, t, order, moment_grid(big_w, r, t, order))?;
            let ex = exact as f64;
            let mut rep = Report::new("expsum");
            rep.param("W", big_w).param("r", r).param("T", t).param("order", order);
            rep.check("quadrature matches exact count", (quad - ex).abs() <= 1e-6 * ex, quad, ex);
            let curve = weyl_curve(big_w, r, t, points);
            let rows = curve
                .iter()
                .map(|(th, z)| vec![th.to_string(), z.re.to_string(), z.im.to_string(), z.norm().to_string()])
                .collect();
            let result = json!({
                "moment": {"W": big_w, "r": r, "T": t, "order": order, "exact": exact.to_string(), "quadrature": quad, "ratio": quad / ex},
                "curve": curve.iter().map(|(th, z)| json!([th, z.re, z.im, z.norm()])).collect::<Vec<_>>(),
            });
            Ok(Outcome { reports: vec![rep], result, header: vec!["theta", "re", "im", "abs"], rows })
        }
        Cmd::Nil { x, y, count, height } => Ok(Outcome::from_reports(vec![nil_constraint_run(seed, x, y, count, height)?])),
        Cmd::Search { n, method, max_nodes } => {
            let method = match method {
                Some(Method::Exhaustive) => SearchMethod::Exhaustive,
                Some(Method::BranchAndBound) => SearchMethod::BranchAndBound,
                None if n <= 24 => SearchMethod::Exhaustive,
                None => SearchMethod::BranchAndBound,
            };
            let (size, witness) = max_free_subset(n, method, max_nodes)?;
            let members = witness.members();
            let mut r = Report::new("search");
            r.param("N", n).param("method", serde_json::to_value(method).expect("enum serializes"));
            r.check("witness is configuration-free", enumerate_configs(&witness) == 0, enumerate_configs(&witness) as f64, 0.0);
            r.check("witness size matches", members.len() == size, members.len() as f64, size as f64);
            let rows = members.iter().map(|m| vec![m.to_string()]).collect();
            Ok(Outcome { reports: vec![r], result: json!({"size": size, "witness": members}), header: vec!["member"], rows })
        }
        Cmd::Transfer { n, density, seeds, ref ws } => {
            let r = transfer_experiment(&TransferConfig { n, density, seeds, ws: ws.clone(), seed })?;
            let col = |key: &str| -> Vec<f64> {
                r.values.get(key).and_then(Value::as_array).map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
            };
            let (m, t, rest) = (col("medians"), col("trivial_term_medians"), col("medians_without_trivial_term"));
            let rows = ws
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let at = |v: &[f64]| v.get(i).map_or(String::new(), f64::to_string);
                    vec![w.to_string(), at(&m), at(&t), at(&rest)]
                })
                .collect();
            Ok(Outcome {
                reports: vec![r],
                result: Value::Null,
                header: vec!["w", "median", "trivial_term_median", "median_without_trivial_term"],
                rows,
            })
        }
    }
}

fn write_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String, Box<dyn std::error::Error>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn emit(text: &str, out: Option<&PathBuf>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = json!({
        "subcommand": cli.cmd.name(),
        "params": params(&cli.cmd),
        "seed": cli.seed,
        "format": cli.format,
        "workers": cli.workers,
        "budget_ms": cli.budget_ms,
    });
    let start = Instant::now();
    let mut outcome = match execute(&cli.cmd, cli.seed, cli.workers) {
        Ok(o) => o,
        Err(err) => {
            eprintln!("proglab: {err}");
            return ExitCode::from(2);
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    if let Some(budget) = cli.budget_ms {
        let mut r = Report::new("budget");
        r.param("budget_ms", budget);
        r.check("wall time within budget", wall_ms <= budget as f64, wall_ms, budget as f64);
        if outcome.header[0] == "report" {
            outcome.rows.extend(check_rows(std::slice::from_ref(&r)));
        }
        outcome.reports.push(r);
    }
    let passed = outcome.reports.iter().all(Report::passed);
    for r in outcome.reports.iter().filter(|r| !r.passed()) {
        for c in r.failures() {
            eprintln!("FAIL {}: {} (lhs {}, rhs {})", r.name, c.name, c.lhs, c.rhs);
        }
    }

    let text = match cli.format {
        Format::Json => {
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "library": "proglab-core",
                "version": VERSION,
                "config": config,
                "seed": cli.seed,
                "wall_time_ms": wall_ms,
                "passed": passed,
                "result": outcome.result,
                "reports": outcome.reports.iter().map(Report::to_value).collect::<Vec<_>>(),
            });
            canonical_json(&doc)
        }
        Format::Csv => match write_csv(&outcome.header, &outcome.rows) {
            Ok(t) => t,
            Err(err) => {
                eprintln!("proglab: {err}");
                return ExitCode::from(2);
            }
        },
    };
    if let Err(err) = emit(&text, cli.out.as_ref()) {
        eprintln!("proglab: cannot write output: {err}");
        return ExitCode::from(2);
    }
    if cli.format == Format::Csv {
        eprintln!("proglab {VERSION} seed {} wall {:.0} ms", cli.seed, wall_ms);
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
