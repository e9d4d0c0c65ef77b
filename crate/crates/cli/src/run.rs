//! Argument parsing and subcommand dispatch.
//!
//! Every report is a JSON object carrying `schema` and `command` fields next
//! to its payload. Series-shaped outputs can be requested as CSV instead.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use tangleforge::aqc::{
    build_twosat_problem, default_lambdas, entanglement_sweep, eval_schedule, gap_profile,
    parse_schedule, projector_x, projector_z, FrameClock, GapProfile, HermitianOperator, ScheduleExpr, TwoSatProblem,
    DEFAULT_DEGENERACY_TOL, DEFAULT_GRID, TWOSAT_SOLUTIONS,
};
use tangleforge::causal::{detect_interaction, synth_panel, DetectOptions, FitOptions, SynthSpec, TimeSeriesPanel, DEFAULT_AMBIGUITY_THRESHOLD};
use tangleforge::fusion::{
    ci_fuse, fault_schedule_sim, parse_estimator_csv, parse_fault_csv, parse_stream_csv, random_estimator, verify_geodesic,
    write_estimator_csv, ConfigurationCatalog, EstimatorRow,
};
use tangleforge::invariants::{capacity, complexity, MAX_K};
use tangleforge::machine::{enumerate_colorings, propagate, Coloring, EnumLimits, MachineError, TangleMachine};
use tangleforge::quandle::{Quandle, QuandleKind};
use tangleforge::rewrite::{apply_move, applicable_sites, canonical_key, equivalent, insert_weights_for, RewriteSite, SearchLimits, Verdict};

use crate::schema::{schema_for, schema_id};
use crate::tm::{parse_tm, serialize_tm, TmDocument};

/// Environment variable overriding enumeration caps, as `N` or `N,M`.
pub const MAX_ENUM_VAR: &str = "TANGLEFORGE_MAX_ENUM";

/// Outcome of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub stdout: String,
    pub stderr: String,
    /// 0 on success, 1 on domain errors, 2 on usage errors.
    pub exit_code: u8,
}

#[derive(Parser)]
#[command(name = "tangleforge", version, about = "Tangle machines, covariance-intersection fusion, adiabatic schedules and interaction detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MachineFormat {
    Json,
    Tm,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a machine and classify its declared colouring.
    Check { tm: PathBuf },
    /// Propagate a partial colouring to every arc.
    Color {
        tm: PathBuf,
        /// Extra colours as `arc=literal`.
        #[arg(long, num_args = 1.., value_name = "ARC=LITERAL")]
        given: Vec<String>,
    },
    /// Count (and optionally list) all valid colourings.
    Enumerate {
        tm: PathBuf,
        /// Colour by this finite quandle instead of the declared one.
        #[arg(long)]
        quandle: Option<String>,
        #[arg(long)]
        confusable_only: bool,
        #[arg(long)]
        list: bool,
    },
    /// Dihedral colouring counts Cap_k for k = 2..=kmax.
    Cap {
        tm: PathBuf,
        #[arg(long, default_value_t = 6)]
        kmax: usize,
        #[arg(long)]
        confusable_only: bool,
    },
    /// Connect-sum complexity of a fully determined colouring.
    Complexity {
        tm: PathBuf,
        #[arg(long, num_args = 1.., value_name = "ARC=LITERAL")]
        given: Vec<String>,
    },
    /// Apply one move, or list the applicable sites when no move is given.
    Rewrite {
        tm: PathBuf,
        /// Site as JSON, e.g. `{"move":"R1-insert","arcs":["a"]}`.
        #[arg(long = "move", value_name = "SITE_JSON")]
        site: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: MachineFormat,
    },
    /// Decide equivalence by invariants, then bounded move search.
    Equiv {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = tangleforge::rewrite::DEFAULT_NODE_CAP)]
        node_cap: usize,
    },
    /// Fuse all estimates sharing a time index, in row order.
    Fuse {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        omega: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Verify the fused curve of a random pair against the J functional.
    GeodesicCheck {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Run the R3 fault-tolerance schedule over three streams.
    Faultsim {
        #[arg(long)]
        streams: PathBuf,
        #[arg(long)]
        faults: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
    },
    /// Adiabatic schedules.
    Aqc {
        #[command(subcommand)]
        command: AqcCommand,
    },
    /// Detect an interaction from a three-series panel.
    Detect {
        #[arg(long)]
        panel: PathBuf,
        #[arg(long)]
        lags: usize,
        #[arg(long)]
        own_lags: bool,
        #[arg(long, default_value_t = DEFAULT_AMBIGUITY_THRESHOLD)]
        threshold: f64,
    },
    /// Simulate a panel from a JSON coefficient spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Print the published JSON Schema of a report.
    Schema { name: String },
}

#[derive(Subcommand)]
enum AqcCommand {
    /// Gap profile of a schedule (default `(fuse@0 Px0 Pz)` on one qubit).
    Gap {
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long, default_value_t = 1)]
        qubits: usize,
        #[arg(long, default_value_t = 2)]
        frames: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1001)]
        grid: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Computation times of the two-qubit entangling schedules over lambda.
    Entangle {
        #[arg(long, default_value_t = 0.95)]
        a: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Explicit lambda values; defaults to an even grid in [0.05, 0.95].
        #[arg(long, num_args = 1..)]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 25)]
        lambdas: usize,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Spectra and computation times of the 2-SAT schedules.
    Twosat {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Domain(e.to_string())
    }
}

enum Output {
    Json(&'static str, Value),
    Text(String),
}

/// Runs one invocation; `argv[0]` is the program name.
pub fn run<I, S>(argv: I) -> RunReport
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                RunReport {
                    stdout: String::new(),
                    stderr: text,
                    exit_code: 2,
                }
            } else {
                RunReport {
                    stdout: text,
                    stderr: String::new(),
                    exit_code: 0,
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(Output::Json(schema, payload)) => {
            let mut object = match payload {
                Value::Object(m) => m,
                other => Map::from_iter([("result".to_string(), other)]),
            };
            object.insert("schema".into(), Value::String(schema_id(schema)));
            object.insert("command".into(), json!(argv.iter().skip(1).collect::<Vec<_>>()));
            let mut stdout = serde_json::to_string_pretty(&Value::Object(object)).expect("json values serialize");
            stdout.push('\n');
            RunReport {
                stdout,
                stderr: String::new(),
                exit_code: 0,
            }
        }
        Ok(Output::Text(stdout)) => RunReport {
            stdout,
            stderr: String::new(),
            exit_code: 0,
        },
        Err(Failure::Usage(msg)) => RunReport {
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
            exit_code: 2,
        },
        Err(Failure::Domain(msg)) => RunReport {
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
            exit_code: 1,
        },
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Domain(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<TmDocument, Failure> {
    let text = read(path)?;
    parse_tm(&text).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn enum_limits() -> Result<EnumLimits, Failure> {
    match std::env::var(MAX_ENUM_VAR) {
        Ok(v) => EnumLimits::parse_override(&v).ok_or_else(|| Failure::Domain(format!("{MAX_ENUM_VAR}={v:?}: expected N or N,M"))),
        Err(_) => Ok(EnumLimits::default()),
    }
}

fn colouring_json(c: &Coloring) -> Value {
    Value::Object(c.iter().map(|(a, e)| (a.clone(), Value::String(e.to_string()))).collect())
}

/// Declared colours plus `--given` ones; a conflicting repeat is an error.
fn merged_colouring(doc: &TmDocument, given: &[String]) -> Result<Coloring, Failure> {
    let mut c = doc.coloring.clone();
    for g in given {
        let (arc, literal) = g
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--given expects arc=literal, got {g:?}")))?;
        let arc = arc.trim();
        if !doc.machine.has_arc(arc) {
            return Err(MachineError::UnknownArc(arc.to_string()).into());
        }
        let e = doc.machine.quandle.parse_element(literal)?;
        if let Some(old) = c.get(arc) {
            if *old != e {
                return Err(Failure::Domain(format!("arc {arc} is coloured {old} in the document and {e} by --given")));
            }
        }
        c.insert(arc.to_string(), e);
    }
    Ok(c)
}

fn colouring_status(m: &TangleMachine, c: &Coloring) -> (&'static str, Option<String>) {
    if c.is_empty() {
        return ("none", None);
    }
    match propagate(m, c) {
        Ok(_) => ("determined", None),
        Err(e @ MachineError::Underdetermined(_)) => ("underdetermined", Some(e.to_string())),
        Err(e @ MachineError::Cyclic(_)) => ("cyclic", Some(e.to_string())),
        Err(e) => ("inconsistent", Some(e.to_string())),
    }
}

fn dispatch(command: Command) -> Result<Output, Failure> {
    match command {
        Command::Check { tm } => {
            let doc = load(&tm)?;
            let m = &doc.machine;
            let (status, detail) = colouring_status(m, &doc.coloring);
            Ok(Output::Json(
                "check",
                json!({
                    "valid": true,
                    "name": m.name,
                    "quandle": m.quandle.kind().to_string(),
                    "arcs": m.arcs.len(),
                    "interactions": m.interactions.len(),
                    "inputs": m.inputs,
                    "outputs": m.outputs,
                    "canonical_key": canonical_key(m),
                    "coloring": {"given": doc.coloring.len(), "status": status, "detail": detail},
                }),
            ))
        }
        Command::Color { tm, given } => {
            let doc = load(&tm)?;
            let partial = merged_colouring(&doc, &given)?;
            let full = propagate(&doc.machine, &partial)?;
            Ok(Output::Json("color", json!({"given": partial.len(), "coloring": colouring_json(&full)})))
        }
        Command::Enumerate {
            tm,
            quandle,
            confusable_only,
            list,
        } => {
            let doc = load(&tm)?;
            let q = match quandle {
                Some(spec) => Quandle::new(spec.parse::<QuandleKind>().map_err(|e| Failure::Usage(e.to_string()))?)?,
                None => doc.machine.quandle,
            };
            let result = enumerate_colorings(&doc.machine, &q, &enum_limits()?, confusable_only)?;
            let mut payload = json!({
                "count": result.count,
                "quandle": q.kind().to_string(),
                "confusable_only": confusable_only,
            });
            if list {
                payload["colorings"] = match &result.colorings {
                    Some(cs) => Value::Array(cs.iter().map(colouring_json).collect()),
                    None => Value::Null,
                };
            }
            Ok(Output::Json("enumerate", payload))
        }
        Command::Cap { tm, kmax, confusable_only } => {
            if !(2..=MAX_K).contains(&kmax) {
                return Err(Failure::Usage(format!("--kmax must lie in 2..={MAX_K}")));
            }
            let doc = load(&tm)?;
            Ok(Output::Json("cap", to_value(&capacity(&doc.machine, kmax, &enum_limits()?, confusable_only)?)))
        }
        Command::Complexity { tm, given } => {
            let doc = load(&tm)?;
            let partial = merged_colouring(&doc, &given)?;
            let full = propagate(&doc.machine, &partial)?;
            let mut payload = to_value(&complexity(&doc.machine, &full)?);
            payload["coloring"] = colouring_json(&full);
            Ok(Output::Json("complexity", payload))
        }
        Command::Rewrite { tm, site, format } => {
            let doc = load(&tm)?;
            let m = &doc.machine;
            let Some(site) = site else {
                let sites = applicable_sites(m, &insert_weights_for(&[m]));
                return Ok(Output::Json("rewrite", json!({"sites": sites})));
            };
            let site: RewriteSite = serde_json::from_str(&site).map_err(|e| Failure::Usage(format!("--move: {e}")))?;
            let out = apply_move(m, &site)?;
            let text = serialize_tm(&out, &Coloring::new());
            Ok(match format {
                MachineFormat::Tm => Output::Text(text),
                MachineFormat::Json => Output::Json(
                    "rewrite",
                    json!({
                        "site": site,
                        "tm": text,
                        "arcs": out.arcs.len(),
                        "interactions": out.interactions.len(),
                        "canonical_key": canonical_key(&out),
                    }),
                ),
            })
        }
        Command::Equiv {
            first,
            second,
            depth,
            node_cap,
        } => {
            let (a, b) = (load(&first)?, load(&second)?);
            let limits = SearchLimits {
                node_cap,
                enumeration: enum_limits()?,
                ..SearchLimits::default()
            };
            let verdict = equivalent(&a.machine, &b.machine, depth, &limits);
            let mut payload = to_value(&verdict);
            payload["depth"] = json!(depth.min(limits.depth_cap));
            if let Verdict::Equivalent { moves } = &verdict {
                payload["length"] = json!(moves.len());
            }
            Ok(Output::Json("equiv", payload))
        }
        Command::Fuse { csv, omega, format } => fuse(&read(&csv)?, omega, format),
        Command::GeodesicCheck { dim, grid, seed } => {
            if dim == 0 {
                return Err(Failure::Usage("--dim must be at least 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_estimator(dim, &mut rng);
            let q = random_estimator(dim, &mut rng);
            let report = verify_geodesic(&p, &q, grid, seed)?;
            let mut payload = to_value(&report);
            payload["seed"] = json!(seed);
            payload["p"] = to_value(&p);
            payload["q"] = to_value(&q);
            Ok(Output::Json("geodesic-check", payload))
        }
        Command::Faultsim { streams, faults, s, t } => {
            let streams = parse_stream_csv(&read(&streams)?)?;
            let faults = parse_fault_csv(&read(&faults)?)?;
            let catalog = ConfigurationCatalog::r3(s, t)?;
            let mut payload = to_value(&fault_schedule_sim(&streams, &faults, &catalog)?);
            payload["weights"] = json!({"s": s, "t": t});
            Ok(Output::Json("faultsim", payload))
        }
        Command::Aqc { command } => aqc(command),
        Command::Detect {
            panel,
            lags,
            own_lags,
            threshold,
        } => {
            let panel = TimeSeriesPanel::from_csv(&read(&panel)?)?;
            let options = DetectOptions {
                fit: FitOptions { own_lags },
                ambiguity_threshold: threshold,
            };
            let mut payload = to_value(&detect_interaction(&panel, lags, options)?);
            payload["lags"] = json!(lags);
            payload["length"] = json!(panel.len());
            Ok(Output::Json("detect", payload))
        }
        Command::Synth { spec, seed, format } => {
            let spec: SynthSpec = serde_json::from_str(&read(&spec)?).map_err(|e| Failure::Domain(format!("spec: {e}")))?;
            let panel = synth_panel(&spec, seed)?;
            Ok(match format {
                Format::Csv => Output::Text(panel.to_csv()),
                Format::Json => Output::Json("synth", json!({"seed": seed, "names": panel.names, "length": panel.len(), "series": panel.series})),
            })
        }
        Command::Schema { name } => schema_for(&name)
            .map(|s| Output::Text(format!("{}\n", s.trim_end())))
            .ok_or_else(|| Failure::Usage(format!("no published schema named {name:?}"))),
    }
}

fn fuse(text: &str, omega: f64, format: Format) -> Result<Output, Failure> {
    let rows = parse_estimator_csv(text)?;
    if rows.is_empty() {
        return Err(Failure::Domain("no estimator rows".into()));
    }
    let mut groups: BTreeMap<i64, Vec<EstimatorRow>> = BTreeMap::new();
    for row in rows {
        groups.entry(row.t).or_default().push(row);
    }
    let mut fused = Vec::new();
    for (t, group) in groups {
        let mut acc = group[0].estimate.clone();
        for row in &group[1..] {
            acc = ci_fuse(&acc, &row.estimate, omega)?;
        }
        fused.push((t, group.len(), acc));
    }
    Ok(match format {
        Format::Csv => Output::Text(write_estimator_csv(
            &fused
                .into_iter()
                .map(|(t, _, estimate)| EstimatorRow {
                    t,
                    stream: "fused".into(),
                    estimate,
                })
                .collect::<Vec<_>>(),
        )),
        Format::Json => Output::Json(
            "fuse",
            json!({
                "omega": omega,
                "fused": fused
                    .iter()
                    .map(|(t, n, e)| json!({"t": t, "inputs": n, "estimate": to_value(e)}))
                    .collect::<Vec<_>>(),
            }),
        ),
    })
}

fn gap_env(qubits: usize) -> Result<BTreeMap<String, ScheduleExpr>, Failure> {
    let mut env = BTreeMap::new();
    let mut add = |name: String, op: HermitianOperator| {
        env.insert(name.clone(), ScheduleExpr::leaf(name, op));
    };
    add("I".into(), HermitianOperator::identity(qubits));
    for site in 0..qubits {
        let suffix = if qubits == 1 { String::new() } else { format!("_{site}") };
        add(format!("Px0{suffix}"), projector_x(0, qubits, site)?);
        add(format!("Px1{suffix}"), projector_x(1, qubits, site)?);
        add(format!("Pz{suffix}"), projector_z(qubits, site)?);
    }
    Ok(env)
}

fn profile_summary(p: &GapProfile) -> Value {
    json!({"g_min": p.g_min, "t_at_min": p.t_at_min, "computation_time": p.computation_time})
}

fn aqc(command: AqcCommand) -> Result<Output, Failure> {
    match command {
        AqcCommand::Gap {
            schedule,
            qubits,
            frames,
            alpha,
            grid,
            format,
        } => {
            let text = schedule.unwrap_or_else(|| "(fuse@0 Px0 Pz)".into());
            let expr = parse_schedule(&text, &gap_env(qubits)?)?;
            let clock = FrameClock::new(alpha, frames)?;
            let profile = gap_profile(&expr, &clock, grid, DEFAULT_DEGENERACY_TOL)?;
            Ok(match format {
                Format::Csv => {
                    let mut out = String::from("t,ground,gap,degeneracy\n");
                    for p in &profile.points {
                        out.push_str(&format!("{},{},{},{}\n", p.t, p.ground, p.gap, p.degeneracy));
                    }
                    Output::Text(out)
                }
                Format::Json => {
                    let mut payload = to_value(&profile);
                    payload["schedule"] = json!(text);
                    payload["grid"] = json!(grid);
                    payload["alpha"] = json!(alpha);
                    Output::Json("aqc-gap", payload)
                }
            })
        }
        AqcCommand::Entangle {
            a,
            alpha,
            lambda,
            lambdas,
            grid,
            format,
        } => {
            let values = if lambda.is_empty() { default_lambdas(lambdas) } else { lambda };
            let rows = entanglement_sweep(a, alpha, &values, grid, DEFAULT_DEGENERACY_TOL)?;
            Ok(match format {
                Format::Csv => {
                    let mut out = String::from("lambda,entropy,standard,o1,o1_prime,no_deformation\n");
                    for r in &rows {
                        out.push_str(&format!("{},{},{},{},{},{}\n", r.lambda, r.entropy, r.standard, r.o1, r.o1_prime, r.no_deformation));
                    }
                    Output::Text(out)
                }
                Format::Json => Output::Json("aqc-entangle", json!({"a": a, "alpha": alpha, "grid": grid, "rows": rows})),
            })
        }
        AqcCommand::Twosat { alpha, grid } => twosat(alpha, grid),
    }
}

fn twosat(alpha: f64, grid: usize) -> Result<Output, Failure> {
    let problem = build_twosat_problem()?;
    let clock = TwoSatProblem::clock(alpha)?;
    let h1 = problem.h1.matrix();
    let satisfying: Vec<usize> = TWOSAT_SOLUTIONS
        .iter()
        .map(|bits| bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize))
        .collect();
    let mut h1_deviation: f64 = 0.0;
    for i in 0..16 {
        let expected = if satisfying.contains(&i) { 0.75 } else { 1.0 };
        for j in 0..16 {
            let target = if i == j { expected } else { 0.0 };
            h1_deviation = h1_deviation.max((h1[(i, j)] - target).norm());
        }
    }
    let v = TwoSatProblem::oracle_state();
    let annihilation = problem.oracle.apply(&v).iter().map(|z| z.norm()).fold(0.0, f64::max);
    // On v-perp the oracle is the identity: H v_perp = v_perp for the basis
    // projections (1 - v v^T) e_i.
    let mut perp_deviation: f64 = 0.0;
    for i in 0..16 {
        let mut e: Vec<_> = (0..16).map(|j| v[j] * (-v[i])).collect();
        e[i] += Complex64::new(1.0, 0.0);
        let he = problem.oracle.apply(&e);
        perp_deviation = perp_deviation.max(he.iter().zip(&e).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
    }
    let g_end = eval_schedule(&problem.g, 1.0, &clock)?;
    let g_limit = g_end.max_abs_diff(&problem.h1);
    let mut times = Map::new();
    for (name, expr) in problem.schedules() {
        times.insert(name.to_string(), profile_summary(&gap_profile(expr, &clock, grid, DEFAULT_DEGENERACY_TOL)?));
    }
    Ok(Output::Json(
        "aqc-twosat",
        json!({
            "alpha": alpha,
            "grid": grid,
            "h1_basis_deviation": h1_deviation,
            "oracle_annihilation": annihilation,
            "oracle_perp_deviation": perp_deviation,
            "g_limit_deviation": g_limit,
            "schedules": times,
            "satisfying": TWOSAT_SOLUTIONS.iter().map(|b| b.iter().map(|x| x.to_string()).collect::<String>()).collect::<Vec<_>>(),
        }),
    ))
}
