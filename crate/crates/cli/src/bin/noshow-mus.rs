//! Extracts a minimal unsatisfiable subset from a GCNF (group level) or a
//! CNF (clause level) and prints it as `v <ids> 0`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use noshow_cli::satkit::{extract_mus, Formula, MusLevel, MusOutcome};

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Group,
    Clause,
}

#[derive(Parser)]
#[command(version, about = "Deletion-based MUS extraction on top of CaDiCaL")]
struct Args {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "group")]
    level: Level,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    timeout: Option<f64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let formula = match File::open(&args.input)
        .map_err(|e| e.to_string())
        .and_then(|f| {
            Formula::read(BufReader::with_capacity(1 << 20, f)).map_err(|e| e.to_string())
        }) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("noshow-mus: {}: {e}", args.input.display());
            return ExitCode::from(1);
        }
    };
    let level = match args.level {
        Level::Group => MusLevel::Group,
        Level::Clause => MusLevel::Clause,
    };
    if level == MusLevel::Group && formula.header.groups.is_none() {
        eprintln!("noshow-mus: group level needs GCNF input");
        return ExitCode::from(1);
    }
    let mut out = BufWriter::new(std::io::stdout().lock());
    let code = match extract_mus(&formula, level, args.seed, args.timeout) {
        MusOutcome::Core(ids) => {
            writeln!(out, "s UNSATISFIABLE").ok();
            for chunk in ids.chunks(16) {
                let line: Vec<String> = chunk.iter().map(|l| l.to_string()).collect();
                writeln!(out, "v {}", line.join(" ")).ok();
            }
            writeln!(out, "v 0").ok();
            20
        }
        MusOutcome::Sat => {
            writeln!(out, "s SATISFIABLE").ok();
            10
        }
        MusOutcome::Unknown => {
            writeln!(out, "s UNKNOWN").ok();
            0
        }
    };
    if out.flush().is_err() {
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
