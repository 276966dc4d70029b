use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cosma_lab::cdag::{
    brute_force_optimal_io, parse_moves, sequential_lower_bound, validate_pebbling, Cdag, CdagError, IoTally,
    OracleConfig, OracleError, DEFAULT_ORACLE_CAP,
};
use cosma_lab::par::{plan, strategy_cost, CostEstimate, Dims, Machine, ParError, Strategy, DEFAULT_DELTA};
use cosma_lab::seq::{emit_schedule, schedule_to_pebbling, trace_io, SeqError, SeqTile};
use cosma_lab::sim::{measured_vs_predicted, run_cosma, CommStats, ExecMode, Matrix, SimError};
use serde::Serialize;
use thiserror::Error;

mod report;

use report::{Format, Report};

#[derive(Parser, Debug)]
#[command(
    name = "cosma-lab",
    version,
    about = "Plan, cost and simulate communication-optimal matrix multiplication"
)]
struct Cli {
    #[command(flatten)]
    cfg: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// Rows of A and C.
    #[arg(long, global = true, default_value_t = 16)]
    m: usize,
    /// Columns of B and C.
    #[arg(long, global = true, default_value_t = 16)]
    n: usize,
    /// Inner dimension.
    #[arg(long, global = true, default_value_t = 16)]
    k: usize,
    /// Number of ranks.
    #[arg(long, global = true, default_value_t = 1)]
    p: usize,
    /// Words of memory per rank (fast memory for the sequential commands).
    #[arg(long = "S", global = true, default_value_t = 1024)]
    s: usize,
    /// Largest fraction of ranks allowed to stay idle.
    #[arg(long, global = true, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Restrict cost output to one decomposition (2d, 2.5d, recursive, cosma).
    #[arg(long, global = true)]
    strategy: Option<Strategy>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a processor grid and report the modelled costs.
    Plan,
    /// Run the round-based schedule on simulated ranks with random inputs.
    Simulate {
        #[arg(long, value_enum, default_value_t = Mode::Parallel)]
        mode: Mode,
    },
    /// Cost of every decomposition, optionally over a sweep of rank counts.
    Compare {
        /// Number of points; each multiplies p by 8 and sets S to the least
        /// memory that holds the matrices.
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Optimal pebbling I/O next to the tiled schedule's I/O.
    Pebble {
        /// Also validate the moves in this file.
        #[arg(long)]
        moves: Option<PathBuf>,
        /// Largest graph the exhaustive search accepts.
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        cap: usize,
    },
    /// Tiled sequential schedule and its I/O.
    Seq {
        /// Write the tile list as CSV.
        #[arg(long)]
        schedule_csv: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Mode {
    Sequential,
    Parallel,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Invariant(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl From<ParError> for CliError {
    fn from(e: ParError) -> Self {
        match e {
            ParError::InsufficientMemory { .. } | ParError::StepTooWide { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Infeasible(format!("infeasible input: {e}")),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Par(e) => e.into(),
            SimError::Invariant(_) => CliError::Invariant(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<CdagError> for CliError {
    fn from(e: CdagError) -> Self {
        CliError::Infeasible(format!("infeasible input: {e}"))
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Infeasible(format!("infeasible: {e}"))
    }
}

impl From<SeqError> for CliError {
    fn from(e: SeqError) -> Self {
        match e {
            SeqError::Csv(_) => CliError::Other(e.to_string()),
            _ => CliError::Infeasible(format!("infeasible: {e}")),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl RunConfig {
    fn dims(&self) -> Result<Dims, CliError> {
        Ok(Dims::new(self.m, self.n, self.k)?)
    }

    fn machine(&self) -> Result<Machine, CliError> {
        let machine = Machine::new(self.p, self.s).with_delta(self.delta);
        machine.validate()?;
        Ok(machine)
    }

    fn strategies(&self) -> Vec<Strategy> {
        match self.strategy {
            Some(s) => vec![s],
            None => Strategy::ALL.to_vec(),
        }
    }
}

#[derive(Serialize)]
struct PlanReport {
    dims: Dims,
    machine: Machine,
    grid: cosma_lab::par::ProcessorGrid,
    a: usize,
    b: usize,
    s: usize,
    t: usize,
    predicted_q: f64,
    inter_rank_words: f64,
    idle: usize,
    costs: Vec<CostEstimate>,
}

fn cmd_plan(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = plan(&cfg.dims()?, &cfg.machine()?)?;
    let strategies = cfg.strategies();
    let costs = p
        .costs
        .iter()
        .filter(|c| strategies.contains(&c.strategy))
        .copied()
        .collect();
    Ok(Report::Plan(PlanReport {
        dims: p.dims,
        machine: p.machine,
        grid: p.grid,
        a: p.domain.rows,
        b: p.domain.depth,
        s: p.domain.step_size,
        t: p.domain.steps,
        predicted_q: p.predicted_q,
        inter_rank_words: p.inter_rank_words,
        idle: p.grid.idle,
        costs,
    }))
}

#[derive(Serialize)]
struct SimulateReport {
    dims: Dims,
    machine: Machine,
    seed: u64,
    predicted_q: f64,
    measured_over_predicted: f64,
    max_abs_error: f64,
    tolerance: f64,
    correct: bool,
    stats: CommStats,
}

fn cmd_simulate(cfg: &RunConfig, mode: Mode) -> Result<Report, CliError> {
    let dims = cfg.dims()?;
    let machine = cfg.machine()?;
    machine.check_fits(&dims)?;
    let a = Matrix::random(dims.m, dims.k, cfg.seed);
    let b = Matrix::random(dims.k, dims.n, cfg.seed.wrapping_add(1));
    let mode = match mode {
        Mode::Sequential => ExecMode::Sequential,
        Mode::Parallel => ExecMode::Parallel,
    };
    let (c, stats) = run_cosma(&a, &b, &machine, mode)?;
    let reference = a.multiply(&b)?;
    let err = c.max_abs_diff(&reference);
    let tolerance = 1e-9 * dims.k as f64 * a.max_abs() * b.max_abs();
    let predicted_q = cosma_lab::par::predicted_io(&dims, &machine)?;
    let report = SimulateReport {
        dims,
        machine,
        seed: cfg.seed,
        predicted_q,
        measured_over_predicted: measured_vs_predicted(&stats, predicted_q)?,
        max_abs_error: err,
        tolerance,
        correct: err <= tolerance,
        stats,
    };
    Ok(Report::Simulate(report))
}

#[derive(Serialize)]
struct CompareRow {
    m: usize,
    n: usize,
    k: usize,
    p: usize,
    #[serde(rename = "S")]
    s: usize,
    strategy: Strategy,
    q: f64,
    l: f64,
    rounds: Option<usize>,
    /// Words relative to the COSMA row of the same point.
    q_over_cosma: f64,
}

fn compare_point(cfg: &RunConfig, dims: &Dims, machine: &Machine, rows: &mut Vec<CompareRow>) -> Result<(), CliError> {
    let cosma = strategy_cost(Strategy::Cosma, dims, machine)?.q;
    for strategy in cfg.strategies() {
        let c = strategy_cost(strategy, dims, machine)?;
        rows.push(CompareRow {
            m: dims.m,
            n: dims.n,
            k: dims.k,
            p: machine.p,
            s: machine.s,
            strategy,
            q: c.q,
            l: c.l,
            rounds: c.rounds,
            q_over_cosma: c.q / cosma,
        });
    }
    Ok(())
}

fn cmd_compare(cfg: &RunConfig, sweep: Option<usize>) -> Result<Report, CliError> {
    let dims = cfg.dims()?;
    let machine = cfg.machine()?;
    let mut rows = Vec::new();
    match sweep {
        None => compare_point(cfg, &dims, &machine, &mut rows)?,
        Some(points) => {
            let mut p = machine.p;
            for _ in 0..points {
                let s = usize::try_from(dims.footprint().div_ceil(p as u128)).unwrap_or(usize::MAX);
                if s < 4 {
                    break;
                }
                compare_point(cfg, &dims, &Machine::new(p, s).with_delta(machine.delta), &mut rows)?;
                match p.checked_mul(8) {
                    Some(next) => p = next,
                    None => break,
                }
            }
        }
    }
    Ok(Report::Compare(rows))
}

#[derive(Serialize)]
struct PebbleReport {
    dims: Dims,
    #[serde(rename = "S")]
    s: usize,
    optimal: u64,
    tile: SeqTile,
    greedy: IoTally,
    greedy_total: u64,
    moves: Option<IoTally>,
}

fn cmd_pebble(cfg: &RunConfig, moves: Option<&PathBuf>, cap: usize) -> Result<Report, CliError> {
    let dims = cfg.dims()?;
    let g = Cdag::new(dims.m, dims.n, dims.k)?;
    let config = OracleConfig {
        vertex_cap: cap,
        ..OracleConfig::default()
    };
    let optimal = brute_force_optimal_io(&g, cfg.s, &config)?;
    let sched = emit_schedule(dims.m, dims.n, dims.k, cfg.s);
    let greedy = validate_pebbling(&g, cfg.s, &schedule_to_pebbling(&sched)?)
        .map_err(|e| CliError::Invariant(format!("tiled schedule is not a legal pebbling: {e}")))?;
    let moves = match moves {
        None => None,
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let parsed = parse_moves(&text).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
            let tally = validate_pebbling(&g, cfg.s, &parsed)
                .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
            Some(tally)
        }
    };
    Ok(Report::Pebble(PebbleReport {
        dims,
        s: cfg.s,
        optimal,
        tile: sched.tile,
        greedy,
        greedy_total: greedy.total(),
        moves,
    }))
}

#[derive(Serialize)]
struct SeqReport {
    dims: Dims,
    #[serde(rename = "S")]
    s: usize,
    tile: SeqTile,
    tiles: usize,
    io: IoTally,
    total: u64,
    lower_bound: f64,
    ratio: f64,
    ratio_bound: f64,
}

fn cmd_seq(cfg: &RunConfig, schedule_csv: Option<&PathBuf>) -> Result<Report, CliError> {
    let dims = cfg.dims()?;
    let sched = emit_schedule(dims.m, dims.n, dims.k, cfg.s);
    let io = trace_io(&sched, cfg.s)?;
    if let Some(path) = schedule_csv {
        sched.write_csv(BufWriter::new(File::create(path)?))?;
    }
    let lower_bound = sequential_lower_bound(dims.m, dims.n, dims.k, cfg.s);
    Ok(Report::Seq(SeqReport {
        dims,
        s: cfg.s,
        tile: sched.tile,
        tiles: sched.tile_count(),
        io,
        total: io.total(),
        lower_bound,
        ratio: io.total() as f64 / lower_bound,
        ratio_bound: sched.tile.ratio_bound(cfg.s),
    }))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = &cli.cfg;
    let report = match &cli.command {
        Command::Plan => cmd_plan(cfg)?,
        Command::Simulate { mode } => cmd_simulate(cfg, *mode)?,
        Command::Compare { sweep } => cmd_compare(cfg, *sweep)?,
        Command::Pebble { moves, cap } => cmd_pebble(cfg, moves.as_ref(), *cap)?,
        Command::Seq { schedule_csv } => cmd_seq(cfg, schedule_csv.as_ref())?,
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    report.write(cfg.format, &mut out)?;
    out.flush()?;
    if let Report::Simulate(r) = &report {
        if !r.correct {
            return Err(CliError::Invariant(format!(
                "invariant violated: result differs from the reference by {:e} (tolerance {:e})",
                r.max_abs_error, r.tolerance
            )));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
