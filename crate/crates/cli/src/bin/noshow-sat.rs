//! Solves a DIMACS CNF with CaDiCaL and prints the verdict in the usual
//! competition format (exit 10 for SAT, 20 for UNSAT, 0 for UNKNOWN).

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use noshow_cli::satkit::{solve, Outcome};

#[derive(Parser)]
#[command(version, about = "CaDiCaL-backed SAT solver front end")]
struct Args {
    /// DIMACS CNF or GCNF input ("-" for stdin).
    input: PathBuf,
    /// Wall-clock limit in seconds; on expiry the verdict is UNKNOWN.
    #[arg(long)]
    timeout: Option<f64>,
    /// Accepted for interface compatibility; CaDiCaL runs deterministically.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = if args.input.as_os_str() == "-" {
        solve(io::stdin().lock(), args.timeout)
    } else {
        match File::open(&args.input) {
            Ok(f) => solve(BufReader::with_capacity(1 << 20, f), args.timeout),
            Err(e) => {
                eprintln!("noshow-sat: {}: {e}", args.input.display());
                return ExitCode::from(1);
            }
        }
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("noshow-sat: {e}");
            return ExitCode::from(1);
        }
    };
    let mut out = BufWriter::new(io::stdout().lock());
    let code = match &outcome {
        Outcome::Sat(model) => {
            writeln!(out, "s SATISFIABLE").ok();
            for chunk in model.chunks(16) {
                let line: Vec<String> = chunk.iter().map(|l| l.to_string()).collect();
                writeln!(out, "v {}", line.join(" ")).ok();
            }
            writeln!(out, "v 0").ok();
            10
        }
        Outcome::Unsat => {
            writeln!(out, "s UNSATISFIABLE").ok();
            20
        }
        Outcome::Unknown => {
            writeln!(out, "s UNKNOWN").ok();
            0
        }
    };
    if out.flush().is_err() {
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
