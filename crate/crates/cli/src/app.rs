//! The `noshow` pipeline: enumerate, encode, solve, decode, verify, extract
//! cores and check certificates.
//!
//! Exit codes: 0 positive result (SAT, clean, VALID, core found), 1 negative
//! result (UNSAT, violations, INVALID), 2 configuration error, 3 input
//! format error, 4 tool failure, 5 unknown (timeout).

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use noshow_core::bridge::{
    self, file_digest, BridgeError, Model, RunOptions, SolverStatus, ToolCommand,
};
use noshow_core::encode::{
    self, Directions, EncodeError, EncodingConfig, EncodingOutputs, ProfileSpace, ValueMode,
    VariableMap,
};
use noshow_core::enumerate::EnumerationError;
use noshow_core::proof::{self, InstanceMeta, Participation, ProofDocument, ProofError};
use noshow_core::rules::{self, Report, RuleError, TableMode};
use noshow_core::{enumerate, oracle_enumerate, Profile, Ranking, RuleClass, Seed, VotingError};

pub const EXIT_POSITIVE: u8 = 0;
pub const EXIT_NEGATIVE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_FORMAT: u8 = 3;
pub const EXIT_TOOL: u8 = 4;
pub const EXIT_UNKNOWN: u8 = 5;

pub const SOLVER_ENV: &str = "NOSHOW_SOLVER";
pub const MUS_ENV: &str = "NOSHOW_MUS_TOOL";

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn format(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_FORMAT,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<BridgeError> for CliError {
    fn from(e: BridgeError) -> Self {
        let code = match &e {
            BridgeError::Template(_) => EXIT_CONFIG,
            BridgeError::Unknown(_) => EXIT_UNKNOWN,
            BridgeError::Satisfiable => EXIT_NEGATIVE,
            BridgeError::Format(_) | BridgeError::VariableOutOfRange { .. } => EXIT_FORMAT,
            BridgeError::Io(_) => EXIT_CONFIG,
            _ => EXIT_TOOL,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<EncodeError> for CliError {
    fn from(e: EncodeError) -> Self {
        let code = match &e {
            EncodeError::VarMapParse { .. } | EncodeError::Voting(_) => EXIT_FORMAT,
            _ => EXIT_CONFIG,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<RuleError> for CliError {
    fn from(e: RuleError) -> Self {
        let code = match &e {
            RuleError::ProfileSpace | RuleError::Incomplete { .. } | RuleError::Io(_) => {
                EXIT_CONFIG
            }
            RuleError::ModeViolation { .. } => EXIT_TOOL,
            _ => EXIT_FORMAT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ProofError> for CliError {
    fn from(e: ProofError) -> Self {
        let code = match &e {
            ProofError::Io(_) => EXIT_CONFIG,
            _ => EXIT_FORMAT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<EnumerationError> for CliError {
    fn from(e: EnumerationError) -> Self {
        let code = match &e {
            EnumerationError::Parse { .. } => EXIT_FORMAT,
            _ => EXIT_CONFIG,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<VotingError> for CliError {
    fn from(e: VotingError) -> Self {
        CliError::format(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "noshow",
    version,
    about = "SAT-based analysis of the no-show paradox"
)]
pub struct Cli {
    /// Where to write the run manifest (defaults to `manifest.txt` in the
    /// output directory of commands that have one).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Enumerate weighted tournaments inducible by up to n voters.
    Enumerate {
        #[arg(long)]
        n: u32,
        /// File holding a profile such as `abdc:2,bdca:3` to start from.
        #[arg(long)]
        seed_profile: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the CNF/GCNF encoding and its variable map.
    Encode(EncodeArgs),
    /// Run a SAT solver and check any model it returns.
    Solve {
        #[arg(long)]
        cnf: PathBuf,
        /// Command template with `{input}`; defaults to $NOSHOW_SOLVER or
        /// the bundled `noshow-sat`.
        #[arg(long)]
        solver: Option<String>,
        #[arg(long)]
        timeout: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write a checked model.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Decode a model into a lookup table.
    ExtractRule {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        varmap: PathBuf,
        /// Decode as a set-valued table.
        #[arg(long)]
        set_valued: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a lookup table against axioms on the n-voter index.
    VerifyRule {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        n: u32,
        /// Comma-separated subset of participation, optimistic,
        /// pessimistic, condorcet, top-cycle, pareto.
        #[arg(long, value_delimiter = ',')]
        axioms: Vec<Axiom>,
        #[arg(long)]
        seed_profile: Option<PathBuf>,
        /// Also print agreement statistics.
        #[arg(long)]
        stats: bool,
    },
    /// Extract a group MUS and then a clause MUS, and draft a certificate.
    Mus {
        #[arg(long)]
        gcnf: PathBuf,
        /// MUS command template; defaults to $NOSHOW_MUS_TOOL or the
        /// bundled `noshow-mus`.
        #[arg(long)]
        tool: Option<String>,
        #[arg(long)]
        solver: Option<String>,
        #[arg(long)]
        timeout: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Variable map; defaults to the `.varmap` next to the instance.
        #[arg(long)]
        varmap: Option<PathBuf>,
        /// Instance description; defaults to the `.meta` next to the instance.
        #[arg(long)]
        meta: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a proof certificate.
    CheckProof {
        #[arg(long)]
        cert: PathBuf,
        /// Pad with bad alternatives up to this many alternatives first.
        #[arg(long)]
        lift_m: Option<usize>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Compare enumeration with brute force over all profiles.
    OracleCheck {
        #[arg(long)]
        n: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axiom {
    Participation,
    Optimistic,
    Pessimistic,
    Condorcet,
    TopCycle,
    Pareto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SetMode {
    Opt,
    Pess,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Cnf,
    Gcnf,
    Both,
}

#[derive(Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long, default_value = "condorcet")]
    pub rule: String,
    #[arg(long)]
    pub top_cycle: bool,
    #[arg(long)]
    pub pareto: bool,
    /// Set-valued encoding with the given participation directions.
    #[arg(long, value_enum)]
    pub set_valued: Option<SetMode>,
    /// Search over profiles built from --base and --orders instead of
    /// tournaments.
    #[arg(long)]
    pub profile_space: bool,
    #[arg(long)]
    pub base: Option<PathBuf>,
    #[arg(long)]
    pub orders: Option<PathBuf>,
    /// Start tournament enumeration at this profile.
    #[arg(long)]
    pub seed_profile: Option<PathBuf>,
    /// Drop clauses decided by unit clauses.
    #[arg(long)]
    pub simplify: bool,
    #[arg(long, value_enum, default_value = "cnf")]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
}

/// Record of one run: configuration, digests of what went in and out, and
/// the wall time.
#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Vec<(String, String)>,
    pub inputs: Vec<(PathBuf, String)>,
    pub outputs: Vec<(PathBuf, String)>,
    pub wall: Duration,
}

impl RunManifest {
    fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            ..Default::default()
        }
    }

    fn set(&mut self, key: &str, value: impl fmt::Display) {
        self.config.push((key.to_string(), value.to_string()));
    }

    fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let d =
            file_digest(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        self.inputs.push((path.to_path_buf(), d));
        Ok(())
    }

    fn output(&mut self, path: &Path) -> Result<(), CliError> {
        let d = file_digest(path)?;
        self.outputs.push((path.to_path_buf(), d));
        Ok(())
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "subcommand {}", self.subcommand)?;
        for (k, v) in &self.config {
            writeln!(w, "config {k} {v}")?;
        }
        for (p, d) in &self.inputs {
            writeln!(w, "input {d} {}", p.display())?;
        }
        for (p, d) in &self.outputs {
            writeln!(w, "output {d} {}", p.display())?;
        }
        writeln!(w, "wall {:.3}", self.wall.as_secs_f64())
    }
}

fn sibling_tool(name: &str) -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?;
    [dir.join(name), dir.parent()?.join(name)]
        .into_iter()
        .find(|p| p.exists())
}

fn quote(p: &Path) -> String {
    let s = p.to_string_lossy();
    if s.chars()
        .all(|c| c.is_ascii_alphanumeric() || "/._-+".contains(c))
    {
        s.into_owned()
    } else {
        format!("'{}'", s.replace('\'', "'\\''"))
    }
}

/// Template from the flag, then the environment, then the bundled helper.
pub fn resolve_template(
    flag: Option<&str>,
    env: &str,
    helper: &str,
    args: &str,
) -> Result<ToolCommand, CliError> {
    let template = match flag {
        Some(t) => t.to_string(),
        None => match std::env::var(env) {
            Ok(t) if !t.trim().is_empty() => t,
            _ => {
                let path = sibling_tool(helper).ok_or_else(|| {
                    CliError::config(format!(
                        "no --{} given, ${env} unset and {helper} not found",
                        if helper.ends_with("sat") {
                            "solver"
                        } else {
                            "tool"
                        }
                    ))
                })?;
                format!("{} {args}", quote(&path))
            }
        },
    };
    Ok(ToolCommand::new(&template)?)
}

fn solver_command(flag: Option<&str>) -> Result<ToolCommand, CliError> {
    resolve_template(
        flag,
        SOLVER_ENV,
        "noshow-sat",
        "{input} --timeout {timeout}",
    )
}

fn mus_command(flag: Option<&str>) -> Result<ToolCommand, CliError> {
    resolve_template(
        flag,
        MUS_ENV,
        "noshow-mus",
        "{input} --level {level} --seed {seed} --timeout {timeout}",
    )
}

fn read_profile(path: &Path) -> Result<Profile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let joined: Vec<&str> = text.split_whitespace().collect();
    Profile::parse(&joined.join(",").replace(",,", ","))
        .map_err(|e| CliError::format(format!("{}: {e}", path.display())))
}

/// Rankings separated by whitespace or commas.
fn read_orders(path: &Path) -> Result<Vec<Ranking>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<Ranking>()
                .map_err(|e| CliError::format(format!("{}: {s:?}: {e}", path.display())))
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(|f| BufWriter::with_capacity(1 << 20, f))
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(|f| BufReader::with_capacity(1 << 20, f))
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn make_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn seed_of(path: Option<&PathBuf>, manifest: &mut RunManifest) -> Result<Option<Seed>, CliError> {
    match path {
        None => Ok(None),
        Some(p) => {
            manifest.input(p)?;
            let profile = read_profile(p)?;
            manifest.set("seed_profile", &profile);
            Ok(Some(Seed::from_profile(&profile)?))
        }
    }
}

/// Instance description written next to an encoding.
pub fn write_meta<W: Write>(
    mut w: W,
    meta: &InstanceMeta,
    space: &str,
    cfg: &EncodingConfig,
) -> io::Result<()> {
    writeln!(w, "rule {}", meta.rule)?;
    writeln!(w, "participation {}", meta.participation)?;
    writeln!(w, "n_max {}", meta.n_max)?;
    writeln!(w, "space {space}")?;
    writeln!(
        w,
        "filters top_cycle={} pareto={}",
        cfg.top_cycle, cfg.pareto
    )
}

pub fn read_meta(path: &Path) -> Result<InstanceMeta, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut rule = None;
    let mut participation = None;
    let mut n_max = None;
    for line in text.lines() {
        let bad = || CliError::format(format!("{}: bad line {line:?}", path.display()));
        match line.split_once(' ') {
            Some(("rule", v)) => rule = Some(v.parse::<RuleClass>().map_err(|_| bad())?),
            Some(("participation", v)) => {
                participation = Some(v.parse::<Participation>().map_err(|_| bad())?)
            }
            Some(("n_max", v)) => n_max = Some(v.parse::<u32>().map_err(|_| bad())?),
            _ => {}
        }
    }
    match (rule, participation, n_max) {
        (Some(rule), Some(participation), Some(n_max)) => Ok(InstanceMeta {
            rule,
            participation,
            n_max,
        }),
        _ => Err(CliError::format(format!(
            "{}: incomplete instance description",
            path.display()
        ))),
    }
}

fn run_enumerate(
    n: u32,
    seed_profile: Option<&PathBuf>,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    manifest.set("n", n);
    let seed = seed_of(seed_profile, manifest)?;
    make_dir(out)?;
    let index = enumerate(n, seed);
    let dump = out.join("index.txt");
    let mut w = create(&dump)?;
    index.write_dump(&mut w)?;
    w.flush()?;
    manifest.output(&dump)?;
    let stats = index.stats();
    let path = out.join("stats.txt");
    let mut w = create(&path)?;
    stats.write(&mut w)?;
    w.flush()?;
    manifest.output(&path)?;
    stats.write(io::stdout().lock())?;
    println!("cumulative {}", stats.cumulative());
    Ok(EXIT_POSITIVE)
}

fn run_encode(args: &EncodeArgs, manifest: &mut RunManifest) -> Result<u8, CliError> {
    let rule: RuleClass = args
        .rule
        .parse()
        .map_err(|e: VotingError| CliError::config(e.to_string()))?;
    let (value_mode, directions) = match args.set_valued {
        None => (ValueMode::Single, Directions::OPTIMISTIC),
        Some(SetMode::Opt) => (ValueMode::SetValued, Directions::OPTIMISTIC),
        Some(SetMode::Pess) => (ValueMode::SetValued, Directions::PESSIMISTIC),
        Some(SetMode::Both) => (ValueMode::SetValued, Directions::BOTH),
    };
    let cfg = EncodingConfig {
        rule,
        top_cycle: args.top_cycle,
        pareto: args.pareto,
        value_mode,
        directions,
        simplify: args.simplify,
    };
    cfg.validate()?;
    manifest.set("n", args.n);
    manifest.set("encoding", cfg.describe());
    make_dir(&args.out)?;
    let meta = InstanceMeta {
        rule,
        participation: Participation::from_config(&cfg),
        n_max: args.n,
    };
    let cnf_path = args.out.join("instance.cnf");
    let gcnf_path = args.out.join("instance.gcnf");
    let varmap_path = args.out.join("instance.varmap");
    let meta_path = args.out.join("instance.meta");
    let want_cnf = matches!(args.format, Format::Cnf | Format::Both);
    let want_gcnf = matches!(args.format, Format::Gcnf | Format::Both);
    let mut cnf = if want_cnf {
        Some(create(&cnf_path)?)
    } else {
        None
    };
    let mut gcnf = if want_gcnf {
        Some(create(&gcnf_path)?)
    } else {
        None
    };
    let mut varmap = create(&varmap_path)?;
    let mut comments = vec![format!("n_max {}", args.n)];
    let space_name;
    let summary = if args.profile_space {
        let (Some(base), Some(orders)) = (&args.base, &args.orders) else {
            return Err(CliError::config(
                "--profile-space needs --base and --orders",
            ));
        };
        manifest.input(base)?;
        manifest.input(orders)?;
        let base = read_profile(base)?;
        let orders = read_orders(orders)?;
        manifest.set("base", &base);
        manifest.set(
            "orders",
            orders
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        comments.push(format!("profile space base {base}"));
        let space = ProfileSpace::new(base, &orders, args.n)?;
        space_name = "profile";
        encode::encode(
            &space,
            &cfg,
            EncodingOutputs {
                cnf: cnf.as_mut().map(|w| w as &mut dyn Write),
                gcnf: gcnf.as_mut().map(|w| w as &mut dyn Write),
                varmap: Some(&mut varmap),
                comments,
            },
        )?
    } else {
        let seed = seed_of(args.seed_profile.as_ref(), manifest)?;
        let index = enumerate(args.n, seed);
        space_name = "tournament";
        encode::encode(
            &index,
            &cfg,
            EncodingOutputs {
                cnf: cnf.as_mut().map(|w| w as &mut dyn Write),
                gcnf: gcnf.as_mut().map(|w| w as &mut dyn Write),
                varmap: Some(&mut varmap),
                comments,
            },
        )?
    };
    drop(cnf);
    drop(gcnf);
    varmap.flush()?;
    drop(varmap);
    let mut w = create(&meta_path)?;
    write_meta(&mut w, &meta, space_name, &cfg)?;
    w.flush()?;
    drop(w);
    for (want, p) in [
        (want_cnf, &cnf_path),
        (want_gcnf, &gcnf_path),
        (true, &varmap_path),
        (true, &meta_path),
    ] {
        if want {
            manifest.output(p)?;
        }
    }
    println!(
        "variables {} clauses {} groups {}",
        summary.variables, summary.clauses, summary.groups
    );
    Ok(EXIT_POSITIVE)
}

fn run_solve(
    cnf: &Path,
    solver: Option<&str>,
    timeout: Option<u64>,
    seed: u64,
    model_out: Option<&PathBuf>,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    let tool = solver_command(solver)?;
    manifest.set("solver", tool.template());
    manifest.set("seed", seed);
    manifest.input(cnf)?;
    let opts = RunOptions {
        timeout: timeout.map(Duration::from_secs),
        seed,
    };
    let verdict = bridge::solve(cnf, &tool, &opts)?;
    println!("{}", verdict.record());
    match verdict.status {
        SolverStatus::Sat => {
            let model = verdict.model.as_ref().ok_or_else(|| CliError {
                code: EXIT_TOOL,
                message: "SAT without a model".into(),
            })?;
            if !bridge::check_model(cnf, model)? {
                return Err(CliError {
                    code: EXIT_TOOL,
                    message: "model does not satisfy the formula".into(),
                });
            }
            println!("model checked");
            if let Some(p) = model_out {
                let mut w = create(p)?;
                model.write(&mut w)?;
                w.flush()?;
                manifest.output(p)?;
            }
            Ok(EXIT_POSITIVE)
        }
        SolverStatus::Unsat => Ok(EXIT_NEGATIVE),
        SolverStatus::Unknown => Ok(EXIT_UNKNOWN),
    }
}

fn run_extract(
    model: &Path,
    varmap: &Path,
    set_valued: bool,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    manifest.input(model)?;
    manifest.input(varmap)?;
    let m = Model::read(open(model)?)?;
    let vm = VariableMap::read(open(varmap)?)?;
    let mode = if set_valued {
        TableMode::Set
    } else {
        TableMode::Single
    };
    manifest.set("mode", if set_valued { "set" } else { "single" });
    let table = rules::decode_model(&m, &vm, mode)?;
    let mut w = create(out)?;
    table.write(&mut w)?;
    w.flush()?;
    drop(w);
    manifest.output(out)?;
    println!("entries {}", table.len());
    Ok(EXIT_POSITIVE)
}

fn run_verify(
    table: &Path,
    n: u32,
    axioms: &[Axiom],
    seed_profile: Option<&PathBuf>,
    stats: bool,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    manifest.input(table)?;
    manifest.set("n", n);
    let seed = seed_of(seed_profile, manifest)?;
    let t = rules::RuleTable::read(open(table)?)?;
    let index = enumerate(n, seed);
    let axioms: Vec<Axiom> = if axioms.is_empty() {
        match t.mode() {
            TableMode::Single => vec![Axiom::Participation, Axiom::Condorcet],
            TableMode::Set => vec![Axiom::Optimistic, Axiom::Condorcet],
        }
    } else {
        axioms.to_vec()
    };
    manifest.set("axioms", format!("{axioms:?}"));
    let mut clean = true;
    for a in &axioms {
        let report: Report = match a {
            Axiom::Participation => rules::verify_participation(&t, &index)?,
            Axiom::Optimistic => rules::verify_optimistic(&t, &index)?,
            Axiom::Pessimistic => rules::verify_pessimistic(&t, &index)?,
            Axiom::Condorcet => rules::verify_condorcet(&t, &index)?,
            Axiom::TopCycle => rules::verify_topcycle(&t, &index)?,
            Axiom::Pareto => rules::verify_pareto(&t, &index)?,
        };
        report.write(io::stdout().lock())?;
        println!(
            "axiom {:?} checked {} violations {}",
            a,
            report.checked,
            report.violations.len()
        );
        clean &= report.is_clean();
    }
    if stats {
        println!("{}", rules::compute_stats(&t, &index)?);
    }
    Ok(if clean { EXIT_POSITIVE } else { EXIT_NEGATIVE })
}

#[allow(clippy::too_many_arguments)]
fn run_mus(
    gcnf: &Path,
    tool: Option<&str>,
    solver: Option<&str>,
    timeout: Option<u64>,
    seed: u64,
    varmap: Option<&PathBuf>,
    meta: Option<&PathBuf>,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    let tool = mus_command(tool)?;
    let solver = solver_command(solver)?;
    manifest.set("tool", tool.template());
    manifest.set("solver", solver.template());
    manifest.set("seed", seed);
    manifest.input(gcnf)?;
    make_dir(out)?;
    let opts = RunOptions {
        timeout: timeout.map(Duration::from_secs),
        seed,
    };
    let pipeline = bridge::mus_pipeline(gcnf, &tool, &solver, &opts, out)?;
    let groups_path = out.join("core-groups.txt");
    let mut w = create(&groups_path)?;
    pipeline.groups.write(&mut w)?;
    w.flush()?;
    drop(w);
    manifest.output(&groups_path)?;
    let header = bridge::read_header(gcnf)?;
    let clauses_path = out.join("core-clauses.gcnf");
    let mut w = create(&clauses_path)?;
    bridge::write_formula(&mut w, header.vars, header.groups, &pipeline.clauses)?;
    w.flush()?;
    drop(w);
    manifest.output(&clauses_path)?;
    println!(
        "core groups {} clauses {}",
        pipeline.groups.members.len(),
        pipeline.clauses.len()
    );

    let varmap = varmap
        .cloned()
        .unwrap_or_else(|| gcnf.with_extension("varmap"));
    let meta = meta.cloned().unwrap_or_else(|| gcnf.with_extension("meta"));
    if varmap.exists() && meta.exists() {
        manifest.input(&varmap)?;
        manifest.input(&meta)?;
        let vm = VariableMap::read(open(&varmap)?)?;
        let meta = read_meta(&meta)?;
        let draft = proof::mus_to_document(&pipeline.clauses, &vm, meta)?;
        let dot_path = out.join("draft.dot");
        fs::write(&dot_path, &draft.dot)?;
        manifest.output(&dot_path)?;
        println!(
            "draft nodes {} links {}",
            draft.nodes.len(),
            draft.links.len()
        );
        if let Some(doc) = &draft.document {
            let cert = out.join("draft.cert");
            let mut w = create(&cert)?;
            doc.write(&mut w)?;
            w.flush()?;
            drop(w);
            manifest.output(&cert)?;
            let report = proof::check_document(doc);
            println!(
                "draft certificate {}",
                if report.is_valid() {
                    "VALID"
                } else {
                    "INVALID"
                }
            );
        } else {
            println!("draft certificate not found");
        }
    }
    Ok(EXIT_POSITIVE)
}

fn run_check(
    cert: &Path,
    lift_m: Option<usize>,
    dot: Option<&PathBuf>,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    manifest.input(cert)?;
    let mut doc = ProofDocument::read(open(cert)?)?;
    if let Some(m) = lift_m {
        manifest.set("lift_m", m);
        doc = proof::lift_to_m(&doc, m).map_err(|e| CliError::config(e.to_string()))?;
    }
    let report = proof::check_document(&doc);
    print!("{report}");
    if let Some(p) = dot {
        fs::write(p, proof::to_dot(&doc, Some(&report)))?;
        manifest.output(p)?;
    }
    Ok(if report.is_valid() {
        EXIT_POSITIVE
    } else {
        EXIT_NEGATIVE
    })
}

fn run_oracle(n: u32, manifest: &mut RunManifest) -> Result<u8, CliError> {
    manifest.set("n", n);
    let oracle = oracle_enumerate(n)?;
    let index = enumerate(n, None);
    let ours: std::collections::BTreeSet<_> = index.vectors().iter().copied().collect();
    let missing = oracle.difference(&ours).count();
    let extra = ours.difference(&oracle).count();
    println!(
        "enumerated {} oracle {} missing {missing} extra {extra}",
        ours.len(),
        oracle.len()
    );
    Ok(if missing == 0 && extra == 0 && ours.len() == index.len() {
        EXIT_POSITIVE
    } else {
        EXIT_NEGATIVE
    })
}

/// Runs one invocation and returns its exit code.
pub fn run(cli: Cli) -> u8 {
    let start = Instant::now();
    let (name, out_dir) = match &cli.command {
        Command::Enumerate { out, .. } => ("enumerate", Some(out.clone())),
        Command::Encode(a) => ("encode", Some(a.out.clone())),
        Command::Solve { .. } => ("solve", None),
        Command::ExtractRule { .. } => ("extract-rule", None),
        Command::VerifyRule { .. } => ("verify-rule", None),
        Command::Mus { out, .. } => ("mus", Some(out.clone())),
        Command::CheckProof { .. } => ("check-proof", None),
        Command::OracleCheck { .. } => ("oracle-check", None),
    };
    let mut manifest = RunManifest::new(name);
    let result = match &cli.command {
        Command::Enumerate {
            n,
            seed_profile,
            out,
        } => run_enumerate(*n, seed_profile.as_ref(), out, &mut manifest),
        Command::Encode(args) => run_encode(args, &mut manifest),
        Command::Solve {
            cnf,
            solver,
            timeout,
            seed,
            model_out,
        } => run_solve(
            cnf,
            solver.as_deref(),
            *timeout,
            *seed,
            model_out.as_ref(),
            &mut manifest,
        ),
        Command::ExtractRule {
            model,
            varmap,
            set_valued,
            out,
        } => run_extract(model, varmap, *set_valued, out, &mut manifest),
        Command::VerifyRule {
            table,
            n,
            axioms,
            seed_profile,
            stats,
        } => run_verify(
            table,
            *n,
            axioms,
            seed_profile.as_ref(),
            *stats,
            &mut manifest,
        ),
        Command::Mus {
            gcnf,
            tool,
            solver,
            timeout,
            seed,
            varmap,
            meta,
            out,
        } => run_mus(
            gcnf,
            tool.as_deref(),
            solver.as_deref(),
            *timeout,
            *seed,
            varmap.as_ref(),
            meta.as_ref(),
            out,
            &mut manifest,
        ),
        Command::CheckProof { cert, lift_m, dot } => {
            run_check(cert, *lift_m, dot.as_ref(), &mut manifest)
        }
        Command::OracleCheck { n } => run_oracle(*n, &mut manifest),
    };
    manifest.wall = start.elapsed();
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("noshow {name}: {e}");
            e.code
        }
    };
    manifest.set("exit", code);
    let target = cli.manifest.clone().or_else(|| {
        out_dir
            .filter(|d| d.is_dir())
            .map(|d| d.join("manifest.txt"))
    });
    if let Some(path) = target {
        if let Err(e) = File::create(&path).and_then(|f| manifest.write(BufWriter::new(f))) {
            eprintln!("noshow {name}: manifest {}: {e}", path.display());
        }
    }
    code
}
