//! Running external SAT and MUS tools over DIMACS/GCNF files and checking
//! what they return.
//!
//! Tools are shell command templates. `{input}` is required; `{output}`,
//! `{timeout}`, `{seed}` and `{level}` are optional. When `{output}` appears
//! the tool's answer is read from that file, otherwise from stdout.

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::dimacs::{read_clauses, FormatError, Header};

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("command template has no {{input}} placeholder: {0}")]
    Template(String),
    #[error("executable missing or not runnable: {command} ({stderr})")]
    MissingExecutable { command: String, stderr: String },
    #[error("malformed tool output: {0}")]
    MalformedOutput(String),
    #[error("unexpected exit code {code} from {command} (status {status})")]
    ExitCode {
        command: String,
        code: i32,
        status: String,
    },
    #[error("tool gave no answer: {0}")]
    Unknown(String),
    #[error("instance is satisfiable; no core exists")]
    Satisfiable,
    #[error("unsound core: {0}")]
    UnsoundCore(String),
    #[error("variable {var} out of range (model covers {len})")]
    VariableOutOfRange { var: u32, len: usize },
    #[error("input format: {0}")]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolCommand {
    template: String,
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

impl ToolCommand {
    pub fn new(template: &str) -> Result<Self, BridgeError> {
        if !template.contains("{input}") {
            return Err(BridgeError::Template(template.to_string()));
        }
        Ok(ToolCommand {
            template: template.to_string(),
        })
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    /// First word of the template, used as the tool's name in records.
    pub fn name(&self) -> String {
        self.template
            .split_whitespace()
            .next()
            .map(|w| {
                Path::new(w)
                    .file_name()
                    .map(|f| f.to_string_lossy().into_owned())
                    .unwrap_or_default()
            })
            .unwrap_or_default()
    }

    fn writes_file(&self) -> bool {
        self.template.contains("{output}")
    }

    pub fn render(
        &self,
        input: &Path,
        output: &Path,
        timeout: Option<Duration>,
        seed: u64,
        level: MusLevel,
    ) -> String {
        let timeout = timeout.map(|t| t.as_secs().max(1)).unwrap_or(0);
        self.template
            .replace("{input}", &shell_quote(&input.to_string_lossy()))
            .replace("{output}", &shell_quote(&output.to_string_lossy()))
            .replace("{timeout}", &timeout.to_string())
            .replace("{seed}", &seed.to_string())
            .replace("{level}", level.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Sat,
    Unsat,
    Unknown,
}

impl SolverStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolverStatus::Sat => "SAT",
            SolverStatus::Unsat => "UNSAT",
            SolverStatus::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MusLevel {
    Group,
    Clause,
}

impl MusLevel {
    pub fn name(self) -> &'static str {
        match self {
            MusLevel::Group => "group",
            MusLevel::Clause => "clause",
        }
    }
}

/// Options shared by solver and MUS runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub timeout: Option<Duration>,
    pub seed: u64,
}

/// A truth assignment, indexed by variable (slot 0 unused).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    pub fn from_literals(num_vars: u32, lits: &[i32]) -> Self {
        let mut values = vec![false; num_vars as usize + 1];
        for &l in lits {
            if l > 0 {
                values[l as usize] = true;
            }
        }
        Model { values }
    }

    pub fn num_vars(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    pub fn value(&self, var: u32) -> bool {
        self.values[var as usize]
    }

    pub fn set(&mut self, var: u32, value: bool) {
        self.values[var as usize] = value;
    }

    pub fn true_vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.values
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &v)| v)
            .map(|(i, _)| i as u32)
    }

    /// `v` lines as a solver would print them.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        let lits: Vec<String> = (1..self.values.len())
            .map(|v| {
                if self.values[v] {
                    v.to_string()
                } else {
                    format!("-{v}")
                }
            })
            .collect();
        for chunk in lits.chunks(16) {
            writeln!(w, "v {}", chunk.join(" "))?;
        }
        writeln!(w, "v 0")
    }

    pub fn read<R: io::BufRead>(input: R) -> Result<Self, BridgeError> {
        let mut text = String::new();
        let mut input = input;
        input.read_to_string(&mut text)?;
        let (status, lits) = parse_output(&text)?;
        if status == Some(SolverStatus::Unsat) {
            return Err(BridgeError::MalformedOutput(
                "model file says UNSATISFIABLE".into(),
            ));
        }
        let num_vars = lits.iter().map(|l| l.unsigned_abs()).max().unwrap_or(0);
        model_from_lits(num_vars, &lits)
    }
}

#[derive(Debug, Clone)]
pub struct SolverVerdict {
    pub status: SolverStatus,
    pub model: Option<Model>,
    pub solver: String,
    pub wall: Duration,
    /// sha256 of the instance file.
    pub digest: String,
}

impl SolverVerdict {
    pub fn record(&self) -> String {
        format!(
            "instance {} status {} time {:.3}",
            self.digest,
            self.status,
            self.wall.as_secs_f64()
        )
    }
}

pub fn file_digest(path: &Path) -> io::Result<String> {
    let mut f = File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        h.update(&buf[..k]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn read_header(path: &Path) -> Result<Header, BridgeError> {
    Ok(read_clauses(BufReader::new(File::open(path)?), |_, _| {})?)
}

struct RunOutput {
    text: String,
    code: Option<i32>,
    timed_out: bool,
    wall: Duration,
    stderr: String,
}

fn run_tool(
    tool: &ToolCommand,
    input: &Path,
    opts: &RunOptions,
    level: MusLevel,
) -> Result<RunOutput, BridgeError> {
    let dir = tempfile::tempdir()?;
    let out_path = dir.path().join("answer");
    let stdout_path = dir.path().join("stdout");
    let stderr_path = dir.path().join("stderr");
    let line = tool.render(input, &out_path, opts.timeout, opts.seed, level);
    let start = Instant::now();
    let mut cmd = Command::new("sh");
    cmd.arg("-c")
        .arg(&line)
        .stdin(Stdio::null())
        .stdout(File::create(&stdout_path)?)
        .stderr(File::create(&stderr_path)?);
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = cmd.spawn()?;
    // A little grace beyond the tool's own limit before killing it.
    let status = match opts.timeout {
        Some(t) => child.wait_timeout(t + Duration::from_secs(5))?,
        None => Some(child.wait()?),
    };
    let (code, timed_out) = match status {
        Some(s) => (s.code(), false),
        None => {
            kill_group(child.id());
            let _ = child.kill();
            let _ = child.wait();
            (None, true)
        }
    };
    let wall = start.elapsed();
    let text = if tool.writes_file() && out_path.exists() {
        std::fs::read_to_string(&out_path)?
    } else {
        std::fs::read_to_string(&stdout_path)?
    };
    let mut stderr = std::fs::read_to_string(&stderr_path).unwrap_or_default();
    if stderr.len() > 400 {
        let cut = stderr.len() - 400;
        let cut = (cut..stderr.len())
            .find(|&i| stderr.is_char_boundary(i))
            .unwrap_or(cut);
        stderr = stderr[cut..].to_string();
    }
    if matches!(code, Some(126) | Some(127)) {
        return Err(BridgeError::MissingExecutable {
            command: line,
            stderr: stderr.trim().to_string(),
        });
    }
    Ok(RunOutput {
        text,
        code,
        timed_out,
        wall,
        stderr,
    })
}

/// Kills the process group led by `pid` (the tool and anything it spawned).
#[cfg(unix)]
fn kill_group(pid: u32) {
    if let Ok(pid) = libc::pid_t::try_from(pid) {
        if pid > 1 {
            // SAFETY: plain syscall on a process group we created.
            unsafe {
                libc::kill(-pid, libc::SIGKILL);
            }
        }
    }
}

#[cfg(not(unix))]
fn kill_group(_pid: u32) {}

/// Status line and `v` literals of a competition-format answer.
fn parse_output(text: &str) -> Result<(Option<SolverStatus>, Vec<i32>), BridgeError> {
    let mut status = None;
    let mut lits = Vec::new();
    let mut terminated = false;
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            if status.is_some() {
                return Err(BridgeError::MalformedOutput("two status lines".into()));
            }
            status = Some(match rest.trim() {
                "SATISFIABLE" => SolverStatus::Sat,
                "UNSATISFIABLE" => SolverStatus::Unsat,
                "UNKNOWN" | "INDETERMINATE" | "TIMEOUT" => SolverStatus::Unknown,
                other => return Err(BridgeError::MalformedOutput(format!("status {other:?}"))),
            });
        } else if let Some(rest) = line.strip_prefix('v') {
            if !(rest.is_empty() || rest.starts_with(' ')) {
                continue;
            }
            for tok in rest.split_whitespace() {
                let l: i32 = tok
                    .parse()
                    .map_err(|_| BridgeError::MalformedOutput(format!("value token {tok:?}")))?;
                if terminated {
                    return Err(BridgeError::MalformedOutput(
                        "values after the terminating 0".into(),
                    ));
                }
                if l == 0 {
                    terminated = true;
                } else {
                    lits.push(l);
                }
            }
        }
    }
    Ok((status, lits))
}

fn model_from_lits(num_vars: u32, lits: &[i32]) -> Result<Model, BridgeError> {
    let mut seen = vec![false; num_vars as usize + 1];
    let mut model = Model::from_literals(num_vars, &[]);
    for &l in lits {
        let v = l.unsigned_abs();
        if v > num_vars {
            return Err(BridgeError::MalformedOutput(format!(
                "literal {l} beyond {num_vars} variables"
            )));
        }
        if seen[v as usize] && model.value(v) != (l > 0) {
            return Err(BridgeError::MalformedOutput(format!(
                "variable {v} assigned both ways"
            )));
        }
        seen[v as usize] = true;
        model.set(v, l > 0);
    }
    if let Some(v) = (1..=num_vars).find(|&v| !seen[v as usize]) {
        return Err(BridgeError::MalformedOutput(format!(
            "model does not assign variable {v}"
        )));
    }
    Ok(model)
}

/// Runs a SAT solver on a CNF file. A SAT verdict always carries a model
/// covering every declared variable.
pub fn solve(
    cnf: &Path,
    solver: &ToolCommand,
    opts: &RunOptions,
) -> Result<SolverVerdict, BridgeError> {
    let header = read_header(cnf)?;
    let digest = file_digest(cnf)?;
    let run = run_tool(solver, cnf, opts, MusLevel::Clause)?;
    let unknown = |run: &RunOutput| SolverVerdict {
        status: SolverStatus::Unknown,
        model: None,
        solver: solver.name(),
        wall: run.wall,
        digest: digest.clone(),
    };
    if run.timed_out {
        return Ok(unknown(&run));
    }
    let (status, lits) = parse_output(&run.text)?;
    let status = status.ok_or_else(|| {
        BridgeError::MalformedOutput(format!(
            "no status line (exit {:?}; {})",
            run.code,
            run.stderr.trim()
        ))
    })?;
    let code = run.code.unwrap_or(-1);
    let consistent = matches!(
        (status, code),
        (SolverStatus::Sat, 10) | (SolverStatus::Unsat, 20) | (_, 0) | (SolverStatus::Unknown, _)
    );
    if !consistent {
        return Err(BridgeError::ExitCode {
            command: solver.template().to_string(),
            code,
            status: status.name().into(),
        });
    }
    let model = match status {
        SolverStatus::Sat => Some(model_from_lits(header.vars, &lits)?),
        _ => None,
    };
    Ok(SolverVerdict {
        status,
        model,
        solver: solver.name(),
        wall: run.wall,
        digest,
    })
}

/// True iff every clause of the file has a true literal under `model`.
/// Streams the file.
pub fn check_model(cnf: &Path, model: &Model) -> Result<bool, BridgeError> {
    let mut ok = true;
    let mut out_of_range = None;
    let header = read_clauses(
        BufReader::with_capacity(1 << 20, File::open(cnf)?),
        |_, lits| {
            if !ok || out_of_range.is_some() {
                return;
            }
            let mut sat = false;
            for &l in lits {
                let v = l.unsigned_abs();
                if v > model.num_vars() {
                    out_of_range = Some(v);
                    return;
                }
                if model.value(v) == (l > 0) {
                    sat = true;
                }
            }
            ok &= sat;
        },
    )?;
    if let Some(var) = out_of_range {
        return Err(BridgeError::VariableOutOfRange {
            var,
            len: model.num_vars() as usize,
        });
    }
    if header.vars > model.num_vars() {
        return Err(BridgeError::VariableOutOfRange {
            var: header.vars,
            len: model.num_vars() as usize,
        });
    }
    Ok(ok)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MusCore {
    pub level: MusLevel,
    /// Group ids (group level) or 1-based clause positions (clause level).
    pub members: Vec<u32>,
    /// sha256 of the instance the ids refer to.
    pub digest: String,
}

impl MusCore {
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "level {}", self.level.name())?;
        writeln!(w, "digest {}", self.digest)?;
        for m in &self.members {
            writeln!(w, "{m}")?;
        }
        Ok(())
    }

    pub fn read<R: io::BufRead>(input: R) -> Result<Self, BridgeError> {
        let mut level = None;
        let mut digest = None;
        let mut members = Vec::new();
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(l) = line.strip_prefix("level ") {
                level = Some(match l.trim() {
                    "group" => MusLevel::Group,
                    "clause" => MusLevel::Clause,
                    other => {
                        return Err(BridgeError::MalformedOutput(format!(
                            "core level {other:?}"
                        )))
                    }
                });
            } else if let Some(d) = line.strip_prefix("digest ") {
                digest = Some(d.trim().to_string());
            } else {
                members.push(
                    line.parse().map_err(|_| {
                        BridgeError::MalformedOutput(format!("core member {line:?}"))
                    })?,
                );
            }
        }
        Ok(MusCore {
            level: level
                .ok_or_else(|| BridgeError::MalformedOutput("core file without level".into()))?,
            digest: digest.unwrap_or_default(),
            members,
        })
    }
}

/// Clauses `(group, literals)` of `path` selected by `keep(group, position)`.
pub fn select_clauses(
    path: &Path,
    mut keep: impl FnMut(u32, u32) -> bool,
) -> Result<(Header, Vec<(u32, Vec<i32>)>), BridgeError> {
    let mut out = Vec::new();
    let mut pos = 0u32;
    let header = read_clauses(
        BufReader::with_capacity(1 << 20, File::open(path)?),
        |g, lits| {
            pos += 1;
            if keep(g, pos) {
                out.push((g, lits.to_vec()));
            }
        },
    )?;
    Ok((header, out))
}

/// Clauses of `path` belonging to a core.
pub fn core_clauses(path: &Path, core: &MusCore) -> Result<Vec<(u32, Vec<i32>)>, BridgeError> {
    let members: std::collections::HashSet<u32> = core.members.iter().copied().collect();
    let (_, clauses) = select_clauses(path, |g, pos| match core.level {
        MusLevel::Group => g == 0 || members.contains(&g),
        MusLevel::Clause => members.contains(&pos),
    })?;
    Ok(clauses)
}

/// Writes clauses as GCNF (when `groups` is given) or plain CNF.
pub fn write_formula<W: Write>(
    mut w: W,
    vars: u32,
    groups: Option<u32>,
    clauses: &[(u32, Vec<i32>)],
) -> io::Result<()> {
    match groups {
        Some(g) => writeln!(w, "p gcnf {vars} {} {g}", clauses.len())?,
        None => writeln!(w, "p cnf {vars} {}", clauses.len())?,
    }
    for (g, lits) in clauses {
        if groups.is_some() {
            write!(w, "{{{g}}} ")?;
        }
        for l in lits {
            write!(w, "{l} ")?;
        }
        writeln!(w, "0")?;
    }
    w.flush()
}

fn parse_core_ids(text: &str) -> Result<(Option<SolverStatus>, Vec<u32>), BridgeError> {
    let (status, lits) = parse_output(text)?;
    let mut ids = Vec::with_capacity(lits.len());
    for l in lits {
        if l < 0 {
            return Err(BridgeError::MalformedOutput(format!(
                "negative core id {l}"
            )));
        }
        ids.push(l as u32);
    }
    ids.sort_unstable();
    ids.dedup();
    Ok((status, ids))
}

/// Runs a MUS tool and checks the answer: the ids must exist, the core
/// alone must be unsatisfiable, and dropping one seeded-random member must
/// make it satisfiable.
pub fn extract_mus(
    input: &Path,
    tool: &ToolCommand,
    solver: &ToolCommand,
    level: MusLevel,
    opts: &RunOptions,
) -> Result<MusCore, BridgeError> {
    let header = read_header(input)?;
    if level == MusLevel::Group && header.groups.is_none() {
        return Err(BridgeError::MalformedOutput(
            "group level needs a GCNF instance".into(),
        ));
    }
    let digest = file_digest(input)?;
    let run = run_tool(tool, input, opts, level)?;
    if run.timed_out {
        return Err(BridgeError::Unknown(format!("{} timed out", tool.name())));
    }
    let (status, ids) = parse_core_ids(&run.text)?;
    match status {
        Some(SolverStatus::Sat) => return Err(BridgeError::Satisfiable),
        Some(SolverStatus::Unknown) => {
            return Err(BridgeError::Unknown(format!("{} gave up", tool.name())))
        }
        _ => {}
    }
    if let Some(code) = run.code.filter(|c| ![0, 20].contains(c)) {
        return Err(BridgeError::ExitCode {
            command: tool.template().to_string(),
            code,
            status: "core".into(),
        });
    }
    let limit = match level {
        MusLevel::Group => header.groups.unwrap_or(0) as u64,
        MusLevel::Clause => header.clauses,
    };
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i as u64 > limit) {
        return Err(BridgeError::UnsoundCore(format!(
            "id {bad} not in the instance"
        )));
    }
    let core = MusCore {
        level,
        members: ids,
        digest,
    };
    validate_core(input, &core, solver, opts)?;
    Ok(core)
}

/// Re-solves the core alone (must be UNSAT) and the core minus one
/// seeded-random member (must be SAT).
pub fn validate_core(
    input: &Path,
    core: &MusCore,
    solver: &ToolCommand,
    opts: &RunOptions,
) -> Result<(), BridgeError> {
    let header = read_header(input)?;
    let clauses = core_clauses(input, core)?;
    let dir = tempfile::tempdir()?;
    let whole = dir.path().join("core.cnf");
    write_formula(
        BufWriter::new(File::create(&whole)?),
        header.vars,
        None,
        &clauses,
    )?;
    let solve_opts = RunOptions {
        timeout: opts.timeout,
        seed: opts.seed,
    };
    match solve(&whole, solver, &solve_opts)?.status {
        SolverStatus::Unsat => {}
        SolverStatus::Sat => return Err(BridgeError::UnsoundCore("core is satisfiable".into())),
        SolverStatus::Unknown => return Err(BridgeError::Unknown("core revalidation".into())),
    }
    if core.members.is_empty() {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let dropped = core.members[rng.gen_range(0..core.members.len())];
    let reduced = MusCore {
        members: core
            .members
            .iter()
            .copied()
            .filter(|&m| m != dropped)
            .collect(),
        ..core.clone()
    };
    let fewer = core_clauses(input, &reduced)?;
    let part = dir.path().join("minus-one.cnf");
    write_formula(
        BufWriter::new(File::create(&part)?),
        header.vars,
        None,
        &fewer,
    )?;
    match solve(&part, solver, &solve_opts)?.status {
        SolverStatus::Sat => Ok(()),
        SolverStatus::Unsat => Err(BridgeError::UnsoundCore(format!(
            "not minimal: still unsatisfiable without member {dropped}"
        ))),
        SolverStatus::Unknown => Err(BridgeError::Unknown("minimality spot check".into())),
    }
}

/// Result of the group-then-clause pipeline.
#[derive(Debug, Clone)]
pub struct CorePipeline {
    pub groups: MusCore,
    /// Clause-level core as `(group, literals)`.
    pub clauses: Vec<(u32, Vec<i32>)>,
}

/// Group MUS first, then a clause MUS inside the clauses of that group core.
pub fn mus_pipeline(
    gcnf: &Path,
    tool: &ToolCommand,
    solver: &ToolCommand,
    opts: &RunOptions,
    work_dir: &Path,
) -> Result<CorePipeline, BridgeError> {
    let groups = extract_mus(gcnf, tool, solver, MusLevel::Group, opts)?;
    let header = read_header(gcnf)?;
    let clauses = core_clauses(gcnf, &groups)?;
    let sub: PathBuf = work_dir.join("group-core.gcnf");
    write_formula(
        BufWriter::new(File::create(&sub)?),
        header.vars,
        header.groups,
        &clauses,
    )?;
    let clause_core = extract_mus(&sub, tool, solver, MusLevel::Clause, opts)?;
    let kept = clause_core
        .members
        .iter()
        .map(|&p| clauses[p as usize - 1].clone())
        .collect();
    Ok(CorePipeline {
        groups,
        clauses: kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::os::unix::fs::PermissionsExt;

    fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, format!("#!/bin/sh\n{body}\n")).unwrap();
        std::fs::set_permissions(&p, std::fs::Permissions::from_mode(0o755)).unwrap();
        p
    }

    fn cnf(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("in.cnf");
        std::fs::write(&p, text).unwrap();
        p
    }

    fn tool(path: &Path, rest: &str) -> ToolCommand {
        ToolCommand::new(&format!("{} {rest}", path.display())).unwrap()
    }

    #[test]
    fn template_needs_input() {
        assert!(matches!(
            ToolCommand::new("solver --foo"),
            Err(BridgeError::Template(_))
        ));
        let t = ToolCommand::new("/opt/bin/kissat {input} --time={timeout}").unwrap();
        assert_eq!(t.name(), "kissat");
        let line = t.render(
            Path::new("/tmp/a b.cnf"),
            Path::new("/o"),
            Some(Duration::from_secs(9)),
            0,
            MusLevel::Group,
        );
        assert_eq!(line, "/opt/bin/kissat '/tmp/a b.cnf' --time=9");
    }

    #[test]
    fn parses_sat_answer() {
        let d = tempfile::tempdir().unwrap();
        let s = script(
            d.path(),
            "sat",
            "echo 'c hello'; echo 's SATISFIABLE'; echo 'v 1 -2'; echo 'v 0'; exit 10",
        );
        let input = cnf(d.path(), "p cnf 2 2\n1 0\n-2 0\n");
        let v = solve(&input, &tool(&s, "{input}"), &RunOptions::default()).unwrap();
        assert_eq!(v.status, SolverStatus::Sat);
        let m = v.model.clone().unwrap();
        assert_eq!(m.true_vars().collect::<Vec<_>>(), vec![1]);
        assert!(check_model(&input, &m).unwrap());
        assert_eq!(v.digest.len(), 64);
        assert!(v
            .record()
            .starts_with(&format!("instance {} status SAT time ", v.digest)));
    }

    #[test]
    fn distinct_failures() {
        let d = tempfile::tempdir().unwrap();
        let input = cnf(d.path(), "p cnf 2 1\n1 2 0\n");
        let missing = ToolCommand::new("/nonexistent/solver {input}").unwrap();
        assert!(matches!(
            solve(&input, &missing, &RunOptions::default()),
            Err(BridgeError::MissingExecutable { .. })
        ));
        let garbage = script(d.path(), "g", "echo 's MAYBE'; exit 0");
        assert!(matches!(
            solve(&input, &tool(&garbage, "{input}"), &RunOptions::default()),
            Err(BridgeError::MalformedOutput(_))
        ));
        let silent = script(d.path(), "q", "exit 0");
        assert!(matches!(
            solve(&input, &tool(&silent, "{input}"), &RunOptions::default()),
            Err(BridgeError::MalformedOutput(_))
        ));
        let liar = script(d.path(), "l", "echo 's UNSATISFIABLE'; exit 10");
        assert!(matches!(
            solve(&input, &tool(&liar, "{input}"), &RunOptions::default()),
            Err(BridgeError::ExitCode { code: 10, .. })
        ));
        let partial = script(d.path(), "p", "echo 's SATISFIABLE'; echo 'v 1 0'; exit 10");
        assert!(matches!(
            solve(&input, &tool(&partial, "{input}"), &RunOptions::default()),
            Err(BridgeError::MalformedOutput(_))
        ));
        let crash = script(d.path(), "c", "echo 's UNKNOWN'; exit 3");
        assert_eq!(
            solve(&input, &tool(&crash, "{input}"), &RunOptions::default())
                .unwrap()
                .status,
            SolverStatus::Unknown
        );
        let bad_code = script(
            d.path(),
            "b",
            "echo 's SATISFIABLE'; echo 'v 1 2 0'; exit 7",
        );
        assert!(matches!(
            solve(&input, &tool(&bad_code, "{input}"), &RunOptions::default()),
            Err(BridgeError::ExitCode { code: 7, .. })
        ));
    }

    #[test]
    fn timeout_yields_unknown() {
        let d = tempfile::tempdir().unwrap();
        let input = cnf(d.path(), "p cnf 1 1\n1 0\n");
        let slow = script(d.path(), "slow", "sleep 30; echo 's SATISFIABLE'");
        let opts = RunOptions {
            timeout: Some(Duration::from_millis(10)),
            seed: 0,
        };
        let start = Instant::now();
        let v = solve(&input, &tool(&slow, "{input}"), &opts).unwrap();
        assert_eq!(v.status, SolverStatus::Unknown);
        assert!(start.elapsed() < Duration::from_secs(20));
    }

    #[test]
    fn output_placeholder_reads_file() {
        let d = tempfile::tempdir().unwrap();
        let input = cnf(d.path(), "p cnf 1 2\n1 0\n-1 0\n");
        let s = script(d.path(), "f", "echo 's UNSATISFIABLE' > \"$2\"; exit 20");
        let v = solve(
            &input,
            &tool(&s, "{input} {output}"),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(v.status, SolverStatus::Unsat);
        assert!(v.model.is_none());
    }

    #[test]
    fn check_model_rejects() {
        let d = tempfile::tempdir().unwrap();
        let input = cnf(d.path(), "p cnf 3 2\n-1 -2 0\n3 0\n");
        assert!(check_model(&input, &Model::from_literals(3, &[-1, 2, 3])).unwrap());
        assert!(!check_model(&input, &Model::from_literals(3, &[1, 2, 3])).unwrap());
        assert!(matches!(
            check_model(&input, &Model::from_literals(2, &[1])),
            Err(BridgeError::VariableOutOfRange { .. })
        ));
    }

    #[test]
    fn model_text_round_trip() {
        let m = Model::from_literals(20, &[1, 5, 17, 20]);
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        assert_eq!(Model::read(&buf[..]).unwrap(), m);
    }

    #[test]
    fn core_validation() {
        let d = tempfile::tempdir().unwrap();
        // groups 1 and 2 conflict; group 3 is irrelevant
        let input = d.path().join("in.gcnf");
        std::fs::write(&input, "p gcnf 2 3 3\n{1} 1 0\n{2} -1 0\n{3} 2 0\n").unwrap();
        // solver: UNSAT iff the formula contains both unit clauses "1" and "-1"
        let solver = script(
            d.path(),
            "solver",
            "if grep -qx '1 0' \"$1\" && grep -qx -- '-1 0' \"$1\"; then echo 's UNSATISFIABLE'; exit 20; fi\n\
             n=$(head -1 \"$1\" | cut -d' ' -f3); echo 's SATISFIABLE'; i=1; while [ $i -le $n ]; do printf 'v %s\\n' $i; i=$((i+1)); done; echo 'v 0'; exit 10",
        );
        let solver = tool(&solver, "{input}");
        let good = script(d.path(), "good", "echo 's UNSATISFIABLE'; echo 'v 1 2 0'");
        let core = extract_mus(
            &input,
            &tool(&good, "{input}"),
            &solver,
            MusLevel::Group,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(core.members, vec![1, 2]);
        let mut text = Vec::new();
        core.write(&mut text).unwrap();
        assert_eq!(MusCore::read(&text[..]).unwrap(), core);

        let unsound = script(d.path(), "bad", "echo 'v 1 3 0'");
        assert!(matches!(
            extract_mus(
                &input,
                &tool(&unsound, "{input}"),
                &solver,
                MusLevel::Group,
                &RunOptions::default()
            ),
            Err(BridgeError::UnsoundCore(_))
        ));
        let bloated = script(d.path(), "bloat", "echo 'v 1 2 3 0'");
        let err = (0..8)
            .map(|seed| {
                extract_mus(
                    &input,
                    &tool(&bloated, "{input}"),
                    &solver,
                    MusLevel::Group,
                    &RunOptions {
                        timeout: None,
                        seed,
                    },
                )
            })
            .find(|r| r.is_err());
        assert!(matches!(err, Some(Err(BridgeError::UnsoundCore(_)))));
        let out_of_range = script(d.path(), "oor", "echo 'v 1 9 0'");
        assert!(matches!(
            extract_mus(
                &input,
                &tool(&out_of_range, "{input}"),
                &solver,
                MusLevel::Group,
                &RunOptions::default()
            ),
            Err(BridgeError::UnsoundCore(_))
        ));
    }

    #[test]
    fn empty_instance_is_sat_with_empty_model() {
        let d = tempfile::tempdir().unwrap();
        let input = cnf(d.path(), "p cnf 0 0\n");
        let s = script(d.path(), "e", "echo 's SATISFIABLE'; echo 'v 0'; exit 10");
        let v = solve(&input, &tool(&s, "{input}"), &RunOptions::default()).unwrap();
        assert_eq!(v.status, SolverStatus::Sat);
        assert_eq!(v.model.unwrap().num_vars(), 0);
    }
}
