//! `tcontact`: command-line front end.
//!
//! Every subcommand writes one table, CSV by default or JSON (an array of
//! objects with the CSV columns as keys). Exit code 0 on success, 2 when an
//! invariant check fails, 1 on usage or input errors.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{Map, Value};

use threshold_contact::clocks::build_schedule;
use threshold_contact::experiments::{
    bounds_report, critical_estimate, describe_observed, duality_check, lambda_scan,
    CriticalParams, Family, DEFAULT_SATURATION_CAP, OBSERVED_VERTEX,
};
use threshold_contact::graphs::{FiniteGraph, GraphSpec, Vertex};
use threshold_contact::moments::{
    build_h, build_q, qcheck, second_moment_bound, second_moment_on, QCHECK_MAX_COLUMNS,
};
use threshold_contact::processes::{
    run, CountConfig, Eta, RealConfig, SpinConfig, Xi, ZetaDynamics,
};
use threshold_contact::rng::replica_seed;
use threshold_contact::walk::{default_terms, green_function, hitting_table, TailMode};
use threshold_contact::Error;

#[derive(Parser)]
#[command(
    name = "tcontact",
    version,
    about = "Threshold-one contact processes on tori and regular trees"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Trajectories of η, ξ and ζ from all ones, checked against each other.
    Simulate {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 10)]
        replicas: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Observation times are t/k, 2t/k, ..., t.
        #[arg(long, default_value_t = 5)]
        points: usize,
    },
    /// Lists the rings of one clock schedule, optionally dumping it in binary.
    Schedule {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Versioned little-endian binary dump.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// P(η_t(x) = 1) against P(A_t ≠ ∅) on independent replicas.
    Duality {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        replicas: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// z-score above which the check fails.
        #[arg(long, default_value_t = 4.0)]
        max_z: f64,
    },
    /// Survival at the observed vertex over a λ grid under the thinning coupling.
    Scan {
        #[arg(long)]
        graph: GraphSpec,
        /// a:b:step
        #[arg(long)]
        lambda_grid: String,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1_000)]
        replicas: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Bisection for the rate where dual survival crosses a threshold.
    Critical {
        #[arg(long)]
        graph: GraphSpec,
        /// lo,hi
        #[arg(long)]
        bracket: String,
        #[arg(long, default_value_t = 0.02)]
        threshold: f64,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
        #[arg(long, default_value_t = 20.0)]
        t: f64,
        #[arg(long, default_value_t = 2_000)]
        replicas: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SATURATION_CAP)]
        cap: usize,
    },
    /// Green function G_d(0,0) and F_d(e_1).
    Green {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        terms: Option<u64>,
        #[arg(long, value_enum, default_value_t = Tail::Clt)]
        tail: Tail,
    },
    /// Truncated second moment G_t(0) with the harmonic-function bound.
    Moments {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        radius: u32,
        /// Comma-separated, ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
    },
    /// Analytic bounds on λ_c.
    #[command(group(ArgGroup::new("family").required(true).args(["lattice", "tree"])))]
    Bounds {
        #[arg(long, value_delimiter = ',')]
        lattice: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        tree: Option<Vec<usize>>,
    },
    /// Structural invariants of the truncated generator Q.
    Qcheck {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        radius: u32,
        /// Skip the exp(tQ) positivity scan above this many states.
        #[arg(long, default_value_t = QCHECK_MAX_COLUMNS)]
        max_columns: usize,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum Tail {
    Clt,
    Paper,
}

/// Usage or input error; exit code 1.
struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(format!("i/o: {e}"))
    }
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write(&self, format: Format, w: impl Write) -> io::Result<()> {
        match format {
            Format::Csv => {
                let mut out = csv::Writer::from_writer(w);
                out.write_record(&self.columns)?;
                for row in &self.rows {
                    out.write_record(row.iter().map(csv_cell))?;
                }
                out.flush()
            }
            Format::Json => {
                let objects: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let map: Map<String, Value> = self
                            .columns
                            .iter()
                            .map(|c| c.to_string())
                            .zip(row.iter().cloned())
                            .collect();
                        Value::Object(map)
                    })
                    .collect();
                let mut w = w;
                serde_json::to_writer_pretty(&mut w, &objects)?;
                writeln!(w)
            }
        }
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = execute(&cli.command).and_then(|(table, verdict)| {
        match &cli.out {
            Some(path) => table.write(cli.format, BufWriter::new(File::create(path)?))?,
            None => table.write(cli.format, io::stdout().lock())?,
        }
        Ok(verdict)
    });
    match outcome {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(msg)) => {
            eprintln!("invariant check failed: {msg}");
            ExitCode::from(2)
        }
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// The table plus, when an invariant check failed, what failed.
type Outcome = (Table, Option<String>);

fn execute(command: &Command) -> Result<Outcome, Failure> {
    match command {
        Command::Simulate {
            graph,
            lambda,
            t,
            replicas,
            seed,
            points,
        } => simulate(&graph.build()?, *lambda, *t, *replicas, *seed, *points),
        Command::Schedule {
            graph,
            lambda,
            horizon,
            seed,
            dump,
        } => {
            let g = graph.build()?;
            let s = build_schedule(&g, *lambda, *horizon, *seed)?;
            if let Some(path) = dump {
                let mut w = BufWriter::new(File::create(path)?);
                s.write_binary(&mut w)?;
                w.flush()?;
            }
            let mut table = Table::new(&["time", "vertex", "kind"]);
            for e in s.events() {
                table.push(vec![
                    num(e.time),
                    e.vertex.0.into(),
                    format!("{:?}", e.kind).to_lowercase().into(),
                ]);
            }
            Ok((table, None))
        }
        Command::Duality {
            graph,
            lambda,
            t,
            replicas,
            seed,
            max_z,
        } => {
            let g = graph.build()?;
            let c = duality_check(&g, OBSERVED_VERTEX, *lambda, *t, *replicas, *seed)?;
            let mut table = Table::new(&[
                "graph", "observed", "lambda", "t", "replicas", "p_eta", "se_eta", "p_dual",
                "se_dual", "z",
            ]);
            table.push(vec![
                graph.to_string().into(),
                describe_observed(&g).into(),
                num(*lambda),
                num(*t),
                (*replicas).into(),
                num(c.p_eta.value),
                num(c.p_eta.std_error),
                num(c.p_dual.value),
                num(c.p_dual.std_error),
                num(c.z_score),
            ]);
            let verdict = (c.z_score >= *max_z)
                .then(|| format!("duality z-score {:.3} ≥ {max_z}", c.z_score));
            Ok((table, verdict))
        }
        Command::Scan {
            graph,
            lambda_grid,
            t,
            replicas,
            seed,
        } => {
            let g = graph.build()?;
            let grid = parse_grid(lambda_grid)?;
            let scan = lambda_scan(&g, &grid, *t, OBSERVED_VERTEX, *replicas, *seed)?;
            let mut table = Table::new(&["lambda", "survival", "std_error", "replicas"]);
            for r in &scan.rows {
                table.push(vec![
                    num(r.lambda),
                    num(r.estimate.value),
                    num(r.estimate.std_error),
                    r.estimate.replicas.into(),
                ]);
            }
            let v = scan.monotonicity_violations;
            Ok((
                table,
                (v > 0).then(|| format!("{v} replicas lost monotonicity in λ")),
            ))
        }
        Command::Critical {
            graph,
            bracket,
            threshold,
            tol,
            t,
            replicas,
            seed,
            cap,
        } => {
            let g = graph.build()?;
            let (lo, hi) = bracket
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| Failure(format!("bracket must be lo,hi, got {bracket:?}")))?;
            let params = CriticalParams {
                t: *t,
                replicas: *replicas,
                threshold: *threshold,
                tol: *tol,
                seed: *seed,
                cap: *cap,
            };
            let c = critical_estimate(&g, (lo, hi), OBSERVED_VERTEX, params)?;
            let mut table = Table::new(&["lo", "hi", "estimate", "evaluations", "disclaimer"]);
            table.push(vec![
                num(c.lo),
                num(c.hi),
                num(c.estimate),
                c.evaluations.len().into(),
                c.disclaimer.into(),
            ]);
            Ok((table, None))
        }
        Command::Green { d, terms, tail } => {
            let n = terms.unwrap_or_else(|| default_terms(*d));
            let mode = match tail {
                Tail::Clt => TailMode::LocalClt,
                Tail::Paper => TailMode::PaperBounds,
            };
            let g = green_function(*d, n, mode)?;
            let f = (g.value - 1.0) / g.value;
            let mut table = Table::new(&["d", "N", "G", "tail", "F_e1", "2d_F_e1", "uncertainty"]);
            table.push(vec![
                (*d).into(),
                n.into(),
                num(g.value),
                num(g.tail),
                num(f),
                num(2.0 * *d as f64 * f),
                num(g.uncertainty),
            ]);
            Ok((table, None))
        }
        Command::Moments {
            d,
            lambda,
            radius,
            times,
        } => {
            let q = build_q(*d, *lambda, *radius)?;
            let bound = match hitting_table(*d, *radius)
                .and_then(|tab| build_h(*d, *lambda, &tab, *radius))
            {
                Ok(h) => Some(second_moment_bound(&h)),
                Err(e) => {
                    eprintln!("no bound: {e}");
                    None
                }
            };
            let mut table = Table::new(&["t", "G_t(0)", "bound", "leakage"]);
            let mut violations = 0;
            for p in second_moment_on(&q, times)? {
                if bound.is_some_and(|b| p.g0 > b + p.leakage) {
                    violations += 1;
                }
                table.push(vec![num(p.t), num(p.g0), opt(bound), num(p.leakage)]);
            }
            let verdict = (violations > 0)
                .then(|| format!("G_t(0) exceeds bound + leakage at {violations} times"));
            Ok((table, verdict))
        }
        Command::Bounds { lattice, tree } => {
            let rows = match (lattice, tree) {
                (Some(ds), _) => bounds_report(Family::Lattice(ds))?,
                (None, Some(ns)) => bounds_report(Family::Tree(ns))?,
                (None, None) => unreachable!("clap enforces the group"),
            };
            let mut table = Table::new(&[
                "family",
                "parameter",
                "degree",
                "lower",
                "upper",
                "product_lower",
                "product_upper",
                "f_e1",
                "note",
            ]);
            let mut inverted = 0;
            for r in rows {
                if r.upper.is_some_and(|u| r.lower > u) {
                    inverted += 1;
                }
                table.push(vec![
                    r.family.into(),
                    r.parameter.into(),
                    r.degree.into(),
                    num(r.lower),
                    opt(r.upper),
                    num(r.product_lower),
                    opt(r.product_upper),
                    opt(r.f_e1),
                    r.upper_note.map_or(Value::Null, Value::String),
                ]);
            }
            Ok((
                table,
                (inverted > 0).then(|| format!("{inverted} rows with lower > upper")),
            ))
        }
        Command::Qcheck {
            d,
            lambda,
            radius,
            max_columns,
        } => {
            let q = build_q(*d, *lambda, *radius)?;
            let c = qcheck(&q, *max_columns)?;
            let mut table = Table::new(&[
                "d",
                "lambda",
                "radius",
                "row_sums",
                "max_row_sum_error",
                "norm_growth",
                "shifted_nonnegative",
                "exp_positive",
                "min_exp_entry",
            ]);
            table.push(vec![
                c.d.into(),
                num(c.lambda),
                c.radius.into(),
                c.row_sums.into(),
                num(c.max_row_sum_error),
                c.norm_growth.into(),
                c.shifted_nonnegative.into(),
                c.exp_positive.into(),
                num(c.min_exp_entry),
            ]);
            Ok((table, (!c.all_pass()).then(|| "Q invariants".to_string())))
        }
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = || {
        Failure(format!(
            "lambda grid must be a:b:step with step > 0, got {spec:?}"
        ))
    };
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [a, b, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !(a <= b) {
        return Err(bad());
    }
    // tolerate rounding in the last point
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn simulate(
    graph: &FiniteGraph,
    lambda: f64,
    t: f64,
    replicas: u64,
    seed: u64,
    points: usize,
) -> Result<Outcome, Failure> {
    if points == 0 {
        return Err(Failure("points must be ≥ 1".into()));
    }
    let times: Vec<f64> = (1..=points).map(|k| t * k as f64 / points as f64).collect();
    let n = graph.vertex_count();
    let zeta = ZetaDynamics::new(graph, lambda).ok();
    let x = OBSERVED_VERTEX;
    let per_replica: Vec<Vec<Vec<Value>>> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<_, Error> {
            let s = replica_seed(seed, r);
            let schedule = build_schedule(graph, lambda, t, s)?;
            let etas = run(&Eta, graph, &schedule, SpinConfig::all_ones(n), &times)?;
            let xis = run(&Xi, graph, &schedule, CountConfig::all_ones(n), &times)?;
            let zetas = match &zeta {
                Some(z) => Some(run(z, graph, &schedule, RealConfig::all_ones(n), &times)?),
                None => None,
            };
            Ok(times
                .iter()
                .enumerate()
                .map(|(i, &time)| {
                    let (eta, xi) = (&etas[i], &xis[i]);
                    let zeta_i = zetas.as_ref().map(|z| &z[i]);
                    let mismatches = (0..n)
                        .map(Vertex::from)
                        .filter(|&v| {
                            eta.get(v) != xi.is_positive(v)
                                || zeta_i.is_some_and(|z| eta.get(v) != (z.raw(v).0 > 0.0))
                        })
                        .count();
                    vec![
                        r.into(),
                        s.to_string().into(),
                        num(time),
                        eta.count_ones().into(),
                        eta.get(x).into(),
                        xi.get(x).to_string().into(),
                        opt(zeta_i.map(|z| z.raw(x).0)),
                        mismatches.into(),
                    ]
                })
                .collect())
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(&[
        "replica",
        "seed",
        "time",
        "infected",
        "eta_x",
        "xi_x",
        "zeta_x",
        "mismatches",
    ]);
    let mut bad = 0;
    for row in per_replica.into_iter().flatten() {
        if row[7].as_u64() != Some(0) {
            bad += 1;
        }
        table.push(row);
    }
    Ok((
        table,
        (bad > 0)
            .then(|| format!("{bad} observations where η, ξ and ζ disagree on the infected set")),
    ))
}
