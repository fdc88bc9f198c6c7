//! Command-line front end for `cultdyn`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cultdyn::convergence::{direction_change_log, total_direction_changes, DEFAULT_DIRECTION_EPS};
use cultdyn::equilibrium::equilibrium_check_eps;
use cultdyn::generators::{builtin, path};
use cultdyn::graph::{active_subgraph, is_bipartite, is_locally_balanced, regular_degree, LOCALLY_BALANCED_CAP};
use cultdyn::io::{flows_to_csv, fmt_sig15, read_graph_file, read_masses, write_atomic, TrajectoryTable};
use cultdyn::plot::render_plot;
use cultdyn::{
    classify_stability, classify_universal_stability, empirical_stability_probe, is_independent, min_pairwise_distance,
    simulate, Error, MassVector, ModelParams, ProbeConfig, RunStatus, StopCriterion, TypeGraph, Variant,
};

/// Exit code for bad input or a failed operation.
pub const EXIT_INVALID: i32 = 1;
/// Exit code when `--require-convergence` is set and a run hit `--max-steps`.
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "cultdyn",
    version,
    about = "Simulate and analyze selection-and-influence dynamics on type graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the dynamics from a starting mass vector.
    Simulate(SimulateArgs),
    /// Test whether a mass vector is a fixed point.
    Equilibrium(EquilibriumArgs),
    /// Classify the stability of an equilibrium.
    Stability(StabilityArgs),
    /// Structural report on a graph (and optionally a mass vector).
    AnalyzeGraph(AnalyzeArgs),
    /// Simulate over a range of alpha values, one summary row each.
    Sweep(SweepArgs),
    /// Reproduce the two 3-path runs (global vs local) from x0 = (2/5, 1/5, 2/5), alpha = 2.
    Figure1,
    /// Render a trajectory CSV as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct GraphArg {
    /// Graph JSON file, or a built-in name such as 4path, 6cycle, K3, star4 (suffix :global or :local).
    #[arg(long)]
    graph: String,
}

#[derive(Args, Debug)]
struct StateArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Comma-separated masses (fractions like 2/5 allowed) or a JSON array file.
    #[arg(long, allow_hyphen_values = true)]
    masses: String,
    /// Self-affinity weight, at least 1.
    #[arg(long)]
    alpha: f64,
    /// Switch probability in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    p: f64,
}

#[derive(Args, Debug, Clone, Copy)]
struct StopArgs {
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: usize,
    /// L1 step size counted as stationary.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Consecutive stationary steps needed to declare convergence.
    #[arg(long, default_value_t = 10)]
    window: usize,
    /// Exit with status 2 if a run reaches --max-steps.
    #[arg(long)]
    require_convergence: bool,
}

impl StopArgs {
    fn criterion(&self) -> StopCriterion {
        StopCriterion {
            tol: self.tol,
            window: self.window,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    stop: StopArgs,
    /// Record per-edge flows and report direction changes.
    #[arg(long)]
    record_flows: bool,
    /// Trajectory CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flow CSV output (implies --record-flows).
    #[arg(long)]
    flows_out: Option<PathBuf>,
    /// Keep every n-th state in the trajectory file (the final state is always kept).
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Args, Debug)]
struct EquilibriumArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Tolerance on interaction-mass spread within a component.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Masses at or below this count as inactive.
    #[arg(long, default_value_t = 0.0)]
    activity_eps: f64,
}

#[derive(Args, Debug)]
struct StabilityArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, allow_hyphen_values = true)]
    masses: String,
    /// Required unless --universal is given.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Classify stability for every alpha > 1 (local model).
    #[arg(long)]
    universal: bool,
    /// Also run the perturbation probe.
    #[arg(long)]
    empirical: bool,
    /// L1 size of probe perturbations.
    #[arg(long, default_value_t = 1e-4)]
    delta: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Optional mass vector for active-set statistics.
    #[arg(long)]
    masses: Option<String>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, allow_hyphen_values = true)]
    masses: String,
    /// Range from:to:step, inclusive of `to`.
    #[arg(long)]
    alpha: String,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[command(flatten)]
    stop: StopArgs,
    /// Summary CSV output; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long)]
    traj: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

type CmdResult = Result<i32, Failure>;

/// Runs the CLI with `argv` (including the program name), writing normal
/// output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Equilibrium(a) => cmd_equilibrium(a, out),
        Command::Stability(a) => cmd_stability(a, out),
        Command::AnalyzeGraph(a) => cmd_analyze(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Figure1 => cmd_figure1(out),
        Command::Plot(a) => cmd_plot(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// Graph plus optional type names.
fn load_graph(spec: &str) -> Result<(TypeGraph, Option<Vec<String>>), Failure> {
    let p = Path::new(spec);
    if p.is_file() {
        let doc = read_graph_file(p)?;
        Ok((doc.graph, doc.names))
    } else if spec.ends_with(".json") {
        Err(invalid(format!("graph file '{spec}' not found")))
    } else {
        Ok((builtin(spec)?, None))
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| fmt_sig15(x)).collect();
    format!("({})", parts.join(", "))
}

fn fmt_set(s: &std::collections::BTreeSet<usize>) -> String {
    let parts: Vec<String> = s.iter().map(usize::to_string).collect();
    format!("{{{}}}", parts.join(","))
}

type State = (TypeGraph, Option<Vec<String>>, MassVector, ModelParams);

fn load_state(s: &StateArgs) -> Result<State, Failure> {
    let (g, names) = load_graph(&s.graph.graph)?;
    let x = read_masses(&s.masses, &g)?;
    let params = ModelParams::new(s.alpha, s.p)?;
    Ok((g, names, x, params))
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> CmdResult {
    let (g, names, x0, params) = load_state(&a.state)?;
    let record = a.record_flows || a.flows_out.is_some();
    let traj = simulate(&x0, &params, &g, &a.stop.criterion(), record)?;
    writeln!(out, "status: {}", traj.status)?;
    writeln!(out, "steps: {}", traj.steps_taken)?;
    writeln!(out, "final_residual: {}", fmt_sig15(traj.final_residual))?;
    writeln!(out, "final_state: {}", fmt_vec(traj.final_state().as_slice()))?;
    let limit = traj.final_state().snapped(1e-9);
    writeln!(out, "active_set: {}", fmt_set(&active_subgraph(&limit, &g, 0.0).nodes))?;
    if record {
        let log = direction_change_log(&traj, DEFAULT_DIRECTION_EPS)?;
        writeln!(out, "direction_changes: {}", total_direction_changes(&log))?;
    }
    if let Some(path) = &a.out {
        let table = TrajectoryTable::from_states(&traj.states, names.as_deref(), a.stride);
        write_atomic(path, table.to_csv().as_bytes())?;
    }
    if let (Some(path), Some(flows)) = (&a.flows_out, &traj.flows) {
        write_atomic(path, flows_to_csv(&g, flows).as_bytes())?;
    }
    Ok(exit_for(traj.status, a.stop.require_convergence))
}

fn exit_for(status: RunStatus, require: bool) -> i32 {
    if require && status != RunStatus::Converged {
        EXIT_NOT_CONVERGED
    } else {
        0
    }
}

fn cmd_equilibrium(a: EquilibriumArgs, out: &mut dyn Write) -> CmdResult {
    let (g, _, x, params) = load_state(&a.state)?;
    let r = equilibrium_check_eps(&x, &params, &g, a.tol, a.activity_eps)?;
    writeln!(out, "is_equilibrium: {}", r.is_equilibrium)?;
    writeln!(out, "fixed_point_residual: {}", fmt_sig15(r.fixed_point_residual))?;
    writeln!(out, "max_spread: {}", fmt_sig15(r.max_spread))?;
    for (comp, ns) in &r.per_component_masses {
        let nodes: Vec<String> = comp.iter().map(usize::to_string).collect();
        writeln!(
            out,
            "component {{{}}}: interaction masses {}",
            nodes.join(","),
            fmt_vec(ns)
        )?;
    }
    Ok(0)
}

fn cmd_stability(a: StabilityArgs, out: &mut dyn Write) -> CmdResult {
    let (g, _) = load_graph(&a.graph.graph)?;
    let x = read_masses(&a.masses, &g)?;
    let verdict = if a.universal {
        classify_universal_stability(&x, &g)?
    } else {
        let alpha = a
            .alpha
            .ok_or_else(|| invalid("--alpha is required unless --universal is given"))?;
        let params = ModelParams::new(alpha, a.p)?;
        let v = classify_stability(&x, &params, &g)?;
        if a.empirical {
            let report = empirical_stability_probe(&x, &params, &g, &ProbeConfig::new(a.delta, a.trials, a.seed))?;
            v.with_empirical(report)
        } else {
            v
        }
    };
    writeln!(out, "verdict: {}", verdict.verdict)?;
    writeln!(out, "rule: {}", verdict.rule.map_or("none", |r| r.id()))?;
    writeln!(out, "details: {}", verdict.details)?;
    if a.empirical && a.universal {
        writeln!(
            out,
            "note: --empirical needs a fixed alpha and is ignored with --universal"
        )?;
    }
    if let Some(r) = &verdict.empirical {
        writeln!(out, "probe_runs: {}", r.runs.len())?;
        writeln!(out, "probe_max_excursion: {}", fmt_sig15(r.max_excursion()))?;
        writeln!(out, "probe_threshold: {}", fmt_sig15(r.threshold))?;
        writeln!(out, "probe_escapes: {}", r.escape_count())?;
        writeln!(out, "probe_unconverged: {}", r.unconverged())?;
    }
    Ok(0)
}

fn cmd_analyze(a: AnalyzeArgs, out: &mut dyn Write) -> CmdResult {
    let (g, names) = load_graph(&a.graph.graph)?;
    writeln!(out, "n: {}", g.n())?;
    writeln!(out, "variant: {}", g.variant())?;
    if let Some(names) = &names {
        writeln!(out, "names: {}", names.join(","))?;
    }
    let edges: Vec<String> = g.influence_edges().map(|(u, v)| format!("{u}-{v}")).collect();
    writeln!(out, "influence_edges: {}", edges.join(" "))?;
    let all: std::collections::BTreeSet<usize> = (0..g.n()).collect();
    for comp in cultdyn::graph::induced_components(&all, &g) {
        let nodes: Vec<String> = comp.iter().map(usize::to_string).collect();
        let regular = regular_degree(&comp, &g).map_or("no".to_string(), |d| format!("{d}-regular"));
        let balanced = match is_locally_balanced(&comp, &g, LOCALLY_BALANCED_CAP) {
            Ok(Some(p)) => format!("yes, {} parts of size {}", p.k(), p.part_size()),
            Ok(None) => "no".to_string(),
            Err(e) => format!("not searched ({e})"),
        };
        writeln!(
            out,
            "component {{{}}}: bipartite {}, regular {}, locally balanced {}",
            nodes.join(","),
            is_bipartite(&comp, &g),
            regular,
            balanced
        )?;
    }
    if let Some(spec) = &a.masses {
        let x = read_masses(spec, &g)?;
        let h = active_subgraph(&x, &g, 0.0);
        writeln!(out, "active_set: {}", fmt_set(&h.nodes))?;
        writeln!(out, "active_independent: {}", is_independent(&h.nodes, &g))?;
        let d = min_pairwise_distance(&h.nodes, &g).map_or("inf".to_string(), |d| d.to_string());
        writeln!(out, "min_pairwise_distance: {d}")?;
    }
    Ok(0)
}

fn parse_range(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || invalid(format!("bad alpha range '{spec}', expected from:to:step"));
    let [from, to, step] = parts[..] else {
        return Err(bad());
    };
    let (from, to, step): (f64, f64, f64) = (
        from.parse().map_err(|_| bad())?,
        to.parse().map_err(|_| bad())?,
        step.parse().map_err(|_| bad())?,
    );
    if step.is_nan() || step <= 0.0 || !from.is_finite() || !to.is_finite() || to < from {
        return Err(bad());
    }
    let count = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| from + step * i as f64).collect())
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> CmdResult {
    let (g, _) = load_graph(&a.graph.graph)?;
    let x0 = read_masses(&a.masses, &g)?;
    let alphas = parse_range(&a.alpha)?;
    let mut csv = String::from("alpha,status,steps,limit,active_set,verdict,rule\n");
    let mut worst = 0;
    for alpha in alphas {
        let params = ModelParams::new(alpha, a.p)?;
        let traj = simulate(&x0, &params, &g, &a.stop.criterion(), false)?;
        let limit = traj.final_state().snapped(1e-9);
        let active = active_subgraph(&limit, &g, 0.0).nodes;
        let (verdict, rule) = match classify_stability(&limit, &params, &g) {
            Ok(v) => (v.verdict.to_string(), v.rule.map_or("none", |r| r.id()).to_string()),
            Err(Error::NotAnEquilibrium { .. }) => ("not-equilibrium".into(), "none".into()),
            Err(e) => return Err(e.into()),
        };
        let limit_s: Vec<String> = limit.as_slice().iter().map(|&v| fmt_sig15(v)).collect();
        let active_s: Vec<String> = active.iter().map(usize::to_string).collect();
        csv.push_str(&format!(
            "{},{},{},\"{}\",\"{}\",{},{}\n",
            fmt_sig15(alpha),
            traj.status,
            traj.steps_taken,
            limit_s.join(" "),
            active_s.join(" "),
            verdict,
            rule
        ));
        worst = worst.max(exit_for(traj.status, a.stop.require_convergence));
    }
    match &a.out {
        Some(path) => write_atomic(path, csv.as_bytes())?,
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(worst)
}

fn cmd_figure1(out: &mut dyn Write) -> CmdResult {
    let x0 = MassVector::new(vec![0.4, 0.2, 0.4])?;
    let params = ModelParams::with_alpha(2.0)?;
    for variant in [Variant::Global, Variant::Local] {
        let g = path(3)?.with_variant(variant);
        let traj = simulate(&x0, &params, &g, &StopCriterion::default(), false)?;
        let limit = traj.final_state().snapped(1e-9);
        writeln!(
            out,
            "{variant}: limit {} after {} steps ({})",
            fmt_vec(limit.as_slice()),
            traj.steps_taken,
            traj.status
        )?;
    }
    Ok(0)
}

fn cmd_plot(a: PlotArgs, out: &mut dyn Write) -> CmdResult {
    let table = TrajectoryTable::from_csv(&std::fs::read_to_string(&a.traj)?)?;
    let svg = render_plot(&table)?;
    write_atomic(&a.out, svg.as_bytes())?;
    writeln!(out, "wrote {}", a.out.display())?;
    Ok(0)
}
