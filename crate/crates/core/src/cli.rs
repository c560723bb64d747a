//! The `pgclc` front end: argument model, runs and reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::backend::{Backend, ClassicalBackend, QuantumBackend};
use crate::backend::quantum::GateRegistry;
use crate::extension::{Engine, EngineOptions, Limits};
use crate::logic::{parse_formula, refines, semi_decide_with, DepthStat, LogicError, Mode, Verdict};
use crate::oracle::det_outcomes;
use crate::smallstep::Config;
use crate::syntax::{parse_program_with, Header, ParseError, ParseOptions, ProgramFile};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSUPPORTED: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 10;
pub const EXIT_NOT_REFINED: i32 = 11;

/// Deepest level the `--oracle-check` comparison visits.
pub const ORACLE_MAX_DEPTH: usize = 6;
const ORACLE_OUTCOME_LIMIT: usize = 50_000;

#[derive(Parser, Debug)]
#[command(name = "pgclc", version, about = "Check may/must properties of concurrent probabilistic GCL programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Semi-decide a formula on a program.
    Check(CheckArgs),
    /// Compare two programs at a fixed depth.
    Refine(RefineArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    L,
    U,
    B,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::L => Mode::Lower,
            ModeArg::U => Mode::Upper,
            ModeArg::B => Mode::Biconvex,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Classical,
    Quantum,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    #[arg(long, value_enum, default_value = "b")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    /// Defaults to the backend named by the program header.
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Initial values, e.g. `x=0,y=1` (classical) or `x1=1` (quantum bits).
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub no_prune: bool,
    /// JSON file of extra gates: `[{name, size, matrix: [[re, im], ...]}]`.
    #[arg(long)]
    pub gates: Option<PathBuf>,
    #[arg(long, default_value_t = Limits::default().max_genset)]
    pub max_genset: usize,
    #[arg(long, default_value_t = Limits::default().max_states)]
    pub max_states: usize,
}

#[derive(Args, Debug, Clone)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Write each F_n as JSON into this directory.
    #[arg(long)]
    pub dump_gensets: Option<PathBuf>,
    /// Compare generating sets with deterministic-scheduler enumeration.
    #[arg(long)]
    pub oracle_check: bool,
    pub program: PathBuf,
    /// A formula file, or the formula text itself.
    pub formula: String,
}

#[derive(Args, Debug, Clone)]
pub struct RefineArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    pub program_a: PathBuf,
    pub program_b: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Caps {
    pub max_genset: usize,
    pub max_states: usize,
    pub time_ms: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub budget: usize,
    pub backend: Option<BackendKind>,
    pub init: Option<String>,
    pub json: bool,
    pub caps: Caps,
    pub no_prune: bool,
    pub dump_gensets: Option<PathBuf>,
    pub oracle_check: bool,
    pub gates: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let limits = Limits::default();
        RunConfig {
            mode: Mode::Biconvex,
            budget: 10,
            backend: None,
            init: None,
            json: false,
            caps: Caps { max_genset: limits.max_genset, max_states: limits.max_states, time_ms: None },
            no_prune: false,
            dump_gensets: None,
            oracle_check: false,
            gates: None,
        }
    }
}

impl RunConfig {
    pub fn from_common(c: &CommonArgs) -> Self {
        RunConfig {
            mode: c.mode.into(),
            budget: c.budget as usize,
            backend: c.backend,
            init: c.init.clone(),
            json: c.json,
            caps: Caps { max_genset: c.max_genset, max_states: c.max_states, time_ms: None },
            no_prune: c.no_prune,
            gates: c.gates.clone(),
            ..Default::default()
        }
    }

    /// Applies `PGCLC_TIME_MS` when set.
    pub fn with_env(mut self) -> Self {
        if let Some(ms) = std::env::var("PGCLC_TIME_MS").ok().and_then(|v| v.trim().parse().ok()) {
            self.caps.time_ms = Some(ms);
        }
        self
    }

    fn engine_options(&self, started: Instant) -> EngineOptions {
        EngineOptions {
            prune: !self.no_prune,
            limits: Limits {
                max_genset: self.caps.max_genset,
                max_states: self.caps.max_states,
                deadline: self.caps.time_ms.map(|ms| started + Duration::from_millis(ms)),
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {rendered}")]
    Parse { path: String, rendered: String, error: ParseError },
    #[error(transparent)]
    Logic(#[from] LogicError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Logic(LogicError::Unsupported(_) | LogicError::Fragment { .. }) => EXIT_UNSUPPORTED,
            _ => EXIT_ERROR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for Tool {
    fn default() -> Self {
        Tool { name: "pgclc", version: env!("CARGO_PKG_VERSION") }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleRecord {
    /// Depths at which both sides were computed and compared.
    pub depths: Vec<usize>,
    pub agree: bool,
    pub first_disagreement: Option<usize>,
    /// Why the comparison stopped before the budget, if it did.
    pub stopped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RefineResult {
    pub refines: bool,
    pub depth: usize,
    pub depth_bounded: bool,
    pub program_a: String,
    pub program_b: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub tool: Tool,
    pub command: &'static str,
    pub program: String,
    pub formula: Option<String>,
    pub mode: Mode,
    pub backend: BackendKind,
    pub budget: usize,
    pub prune: bool,
    pub caps: Caps,
    pub verdict: Option<Verdict>,
    pub refinement: Option<RefineResult>,
    pub depths: Vec<DepthStat>,
    pub oracle: Option<OracleRecord>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if let Some(r) = &self.refinement {
            return if r.refines { EXIT_HOLDS } else { EXIT_NOT_REFINED };
        }
        match &self.verdict {
            Some(Verdict::Holds { .. }) => EXIT_HOLDS,
            _ => EXIT_UNKNOWN,
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} {} {}\n", self.tool.name, self.tool.version, self.command));
        out.push_str(&format!("program:  {}\n", self.program));
        if let Some(f) = &self.formula {
            out.push_str(&format!("formula:  {f}\n"));
        }
        out.push_str(&format!(
            "mode: {}  backend: {:?}  budget: {}  pruning: {}\n",
            self.mode.letter(),
            self.backend,
            self.budget,
            if self.prune { "on" } else { "off" }
        ));
        if !self.depths.is_empty() {
            out.push_str("depth  |F_n|  pruned  ms\n");
            for d in &self.depths {
                out.push_str(&format!("{:>5}  {:>5}  {:>6}  {}\n", d.depth, d.raw, d.pruned, d.elapsed_ms));
            }
        }
        if let Some(o) = &self.oracle {
            let status = if o.agree { "agree" } else { "DISAGREE" };
            out.push_str(&format!("oracle:   {status} on depths {:?}", o.depths));
            if let Some(s) = &o.stopped {
                out.push_str(&format!(" (stopped: {s})"));
            }
            out.push('\n');
        }
        if let Some(v) = &self.verdict {
            out.push_str(&format!("verdict:  {v}\n"));
        }
        if let Some(r) = &self.refinement {
            let rel = if r.refines { "refines" } else { "does not refine" };
            out.push_str(&format!("verdict:  {} {rel} {} (depth-bounded, n = {})\n", r.program_a, r.program_b, r.depth));
        }
        out
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn gate_registry(cfg: &RunConfig) -> Result<GateRegistry, CliError> {
    let mut reg = GateRegistry::builtin();
    if let Some(path) = &cfg.gates {
        let text = read(path)?;
        reg.load_json(&text, crate::backend::quantum::Tolerances::default().norm)
            .map_err(|m| CliError::Usage(format!("{}: {m}", path.display())))?;
    }
    Ok(reg)
}

fn load_program(path: &Path, reg: &GateRegistry) -> Result<ProgramFile, CliError> {
    let text = read(path)?;
    parse_program_with(&text, &ParseOptions { gates: reg.arities() }).map_err(|error| CliError::Parse {
        path: path.display().to_string(),
        rendered: error.render(&text),
        error,
    })
}

fn backend_kind(header: &Header, requested: Option<BackendKind>) -> Result<BackendKind, CliError> {
    let native = if header.is_quantum() { BackendKind::Quantum } else { BackendKind::Classical };
    match requested {
        Some(k) if k != native => Err(CliError::Usage(format!(
            "--backend {k:?} does not match the program header `{header}`"
        ))),
        _ => Ok(native),
    }
}

fn classical_setup(header: &Header, init: Option<&str>) -> Result<(ClassicalBackend, crate::backend::Store), CliError> {
    let b = ClassicalBackend::from_header(header).expect("classical header");
    let s = match init {
        Some(text) => b.parse_init(text).map_err(CliError::Usage)?,
        None => b.zero_store(),
    };
    Ok((b, s))
}

fn quantum_setup(
    header: &Header,
    init: Option<&str>,
    reg: GateRegistry,
) -> Result<(QuantumBackend, crate::backend::CQState), CliError> {
    let b = QuantumBackend::from_header(header).expect("quantum header").with_gates(reg);
    let mut bits = vec![false; b.num_bits()];
    for part in init.unwrap_or("").split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) =
            part.split_once('=').ok_or_else(|| CliError::Usage(format!("expected `xI=0|1`, got `{part}`")))?;
        let index: usize = name
            .trim()
            .strip_prefix('x')
            .and_then(|i| i.parse().ok())
            .filter(|i| (1..=bits.len()).contains(i))
            .ok_or_else(|| CliError::Usage(format!("unknown bit `{}`", name.trim())))?;
        bits[index - 1] = match value.trim() {
            "0" => false,
            "1" => true,
            v => return Err(CliError::Usage(format!("bit value must be 0 or 1, got `{v}`"))),
        };
    }
    let zero = b.zero_state();
    let s = b.state(bits, zero.amps().to_vec()).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((b, s))
}

/// Formula text: the file contents if `formula` names an existing file.
pub fn formula_text(formula: &str) -> Result<String, CliError> {
    let path = Path::new(formula);
    if path.is_file() {
        read(path)
    } else {
        Ok(formula.to_string())
    }
}

/// `pgclc check`.
pub fn run_check(program_path: &Path, formula: &str, cfg: &RunConfig) -> Result<Report, CliError> {
    let started = Instant::now();
    let reg = gate_registry(cfg)?;
    let file = load_program(program_path, &reg)?;
    let kind = backend_kind(&file.header, cfg.backend)?;
    let text = formula_text(formula)?;
    let phi = parse_formula(text.trim(), &file.header).map_err(|error| CliError::Parse {
        path: "formula".into(),
        rendered: error.render(text.trim()),
        error,
    })?;
    let mut report = Report {
        tool: Tool::default(),
        command: "check",
        program: program_path.display().to_string(),
        formula: Some(phi.to_string()),
        mode: cfg.mode,
        backend: kind,
        budget: cfg.budget,
        prune: !cfg.no_prune,
        caps: cfg.caps.clone(),
        verdict: None,
        refinement: None,
        depths: Vec::new(),
        oracle: None,
    };
    match kind {
        BackendKind::Classical => {
            let (b, s) = classical_setup(&file.header, cfg.init.as_deref())?;
            check_with(&b, Config::new(file.program, s), &phi, cfg, started, &mut report)?;
        }
        BackendKind::Quantum => {
            let (b, s) = quantum_setup(&file.header, cfg.init.as_deref(), reg)?;
            check_with(&b, Config::new(file.program, s), &phi, cfg, started, &mut report)?;
        }
    }
    Ok(report)
}

fn check_with<B: Backend>(
    backend: &B,
    c: Config<B::State>,
    phi: &crate::logic::Formula,
    cfg: &RunConfig,
    started: Instant,
    report: &mut Report,
) -> Result<(), CliError> {
    let mut engine = Engine::new(backend, cfg.engine_options(started));
    let mut dumps: Vec<(usize, Value)> = Vec::new();
    let dumping = cfg.dump_gensets.is_some();
    let decision = semi_decide_with(&mut engine, &c, phi, cfg.mode, cfg.budget, |n, set| {
        if dumping {
            dumps.push((n, set.to_json(|s| backend.state_json(s))));
        }
    })?;
    if let Some(dir) = &cfg.dump_gensets {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
        for ((n, members), stat) in dumps.into_iter().zip(&decision.stats) {
            let doc = json!({ "depth": n, "raw": stat.raw, "pruned": stat.pruned, "members": members });
            let path = dir.join(format!("F_{n}.json"));
            let body = serde_json::to_string_pretty(&doc).expect("json");
            fs::write(&path, body).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        }
    }
    report.verdict = Some(decision.verdict);
    report.depths = decision.stats;
    if cfg.oracle_check {
        report.oracle = Some(oracle_record(backend, &c, cfg, started));
    }
    Ok(())
}

/// Compares unpruned `F_n` with the deterministic-scheduler outcomes for
/// `n = 1..=min(budget, ORACLE_MAX_DEPTH)`.
pub fn oracle_record<B: Backend>(backend: &B, c: &Config<B::State>, cfg: &RunConfig, started: Instant) -> OracleRecord {
    let mut opts = cfg.engine_options(started);
    opts.prune = false;
    let mut engine = Engine::new(backend, opts);
    let mut record = OracleRecord { depths: Vec::new(), agree: true, first_disagreement: None, stopped: None };
    for n in 1..=cfg.budget.min(ORACLE_MAX_DEPTH) {
        let set = match engine.gen_set(c, n) {
            Ok(s) => s,
            Err(e) => {
                record.stopped = Some(e.to_string());
                break;
            }
        };
        let outcomes = match det_outcomes(c, backend, n, ORACLE_OUTCOME_LIMIT) {
            Ok(o) => o,
            Err(e) => {
                record.stopped = Some(e.to_string());
                break;
            }
        };
        record.depths.push(n);
        if *set.members() != outcomes {
            record.agree = false;
            record.first_disagreement = Some(n);
            break;
        }
    }
    record
}

/// `pgclc refine`: does A refine B at depth `budget`?
pub fn run_refine(a: &Path, b: &Path, cfg: &RunConfig) -> Result<Report, CliError> {
    let started = Instant::now();
    let reg = gate_registry(cfg)?;
    let fa = load_program(a, &reg)?;
    let fb = load_program(b, &reg)?;
    let header = merge_headers(&fa.header, &fb.header)?;
    let kind = backend_kind(&header, cfg.backend)?;
    let refines_result = match kind {
        BackendKind::Classical => {
            let (bk, s) = classical_setup(&header, cfg.init.as_deref())?;
            refine_with(&bk, Config::new(fa.program, s.clone()), Config::new(fb.program, s), cfg, started)?
        }
        BackendKind::Quantum => {
            let (bk, s) = quantum_setup(&header, cfg.init.as_deref(), reg)?;
            refine_with(&bk, Config::new(fa.program, s.clone()), Config::new(fb.program, s), cfg, started)?
        }
    };
    Ok(Report {
        tool: Tool::default(),
        command: "refine",
        program: format!("{} <= {}", a.display(), b.display()),
        formula: None,
        mode: cfg.mode,
        backend: kind,
        budget: cfg.budget,
        prune: !cfg.no_prune,
        caps: cfg.caps.clone(),
        verdict: None,
        refinement: Some(RefineResult {
            refines: refines_result,
            depth: cfg.budget,
            depth_bounded: true,
            program_a: a.display().to_string(),
            program_b: b.display().to_string(),
        }),
        depths: Vec::new(),
        oracle: None,
    })
}

/// Both programs must run over the same state space. Undeclared classical
/// headers take the union of the variables.
fn merge_headers(a: &Header, b: &Header) -> Result<Header, CliError> {
    match (a, b) {
        (Header::Classical { vars: va, declared: da }, Header::Classical { vars: vb, declared: db }) => {
            if *da && *db && va != vb {
                return Err(CliError::Usage(format!("programs declare different variables: `{a}` vs `{b}`")));
            }
            let mut vars: Vec<String> = va.iter().chain(vb).cloned().collect();
            vars.sort();
            vars.dedup();
            Ok(Header::Classical { vars, declared: *da || *db })
        }
        (Header::Quantum { .. }, Header::Quantum { .. }) if a == b => Ok(a.clone()),
        _ => Err(CliError::Usage(format!("programs have different headers: `{a}` vs `{b}`"))),
    }
}

fn refine_with<B: Backend>(
    backend: &B,
    a: Config<B::State>,
    b: Config<B::State>,
    cfg: &RunConfig,
    started: Instant,
) -> Result<bool, CliError> {
    let mut engine = Engine::new(backend, cfg.engine_options(started));
    Ok(refines(&mut engine, &a, &b, cfg.mode, cfg.budget)?)
}

/// Parses `args`, runs the command and prints the report. Returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_HOLDS };
            let _ = e.print();
            return code;
        }
    };
    let (result, json) = match &cli.command {
        Command::Check(a) => {
            let mut cfg = RunConfig::from_common(&a.common).with_env();
            cfg.dump_gensets = a.dump_gensets.clone();
            cfg.oracle_check = a.oracle_check;
            (run_check(&a.program, &a.formula, &cfg), cfg.json)
        }
        Command::Refine(a) => {
            let cfg = RunConfig::from_common(&a.common).with_env();
            (run_refine(&a.program_a, &a.program_b, &cfg), cfg.json)
        }
    };
    match result {
        Ok(report) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&report.to_json()).expect("json"));
            } else {
                print!("{}", report.to_text());
            }
            report.exit_code()
        }
        Err(e) => {
            if json {
                let err = json!({ "error": { "message": e.to_string(), "exit_code": e.exit_code() } });
                println!("{}", serde_json::to_string_pretty(&err).expect("json"));
            }
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
