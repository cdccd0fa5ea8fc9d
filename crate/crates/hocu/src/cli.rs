//! Command-line driver.
//!
//! `hocu <file.hocu>` solves the file's equations and prints each solution,
//! one binding per line. With an `expect` block in the file the run becomes
//! a golden test: solutions are compared as sets and the exit code reports
//! the outcome. Passing a directory runs every `.hocu` file in it.
//!
//! Exit codes: 0 expectations met or solutions printed; 1 expectation
//! mismatch; 2 parse or type error; 3 bound reached without meeting
//! expectations.

use crate::corpus::{compare_expectations, run_corpus};
use crate::dsl::parse;
use crate::unify::{solve, SearchConfig, Strategy};
use std::io::Write;
use std::path::Path;

const USAGE: &str = "\
usage: hocu <file.hocu | directory> [options]
options:
  --max-bindings N      general-binding bound per branch (default 10)
  --max-solutions N     stop after N solutions (default 50)
  --trace               print the rule trace on stderr
  --erase               solve the colour-erased problem
  --strategy S          iterative (default) or dfs
";

struct Options {
    path: String,
    cfg: SearchConfig,
    trace: bool,
    erase: bool,
}

fn parse_args(args: &[String]) -> Result<Options, String> {
    let mut path: Option<String> = None;
    let mut cfg = SearchConfig::default();
    let mut trace = false;
    let mut erase = false;
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--max-bindings" => {
                let v = it.next().ok_or("--max-bindings needs a number")?;
                cfg.max_bindings =
                    v.parse().map_err(|_| format!("bad --max-bindings value `{v}`"))?;
            }
            "--max-solutions" => {
                let v = it.next().ok_or("--max-solutions needs a number")?;
                cfg.max_solutions =
                    v.parse().map_err(|_| format!("bad --max-solutions value `{v}`"))?;
            }
            "--trace" => trace = true,
            "--erase" => erase = true,
            "--strategy" => {
                let v = it.next().ok_or("--strategy needs iterative or dfs")?;
                cfg.strategy = match v.as_str() {
                    "iterative" => Strategy::IterativeDeepening,
                    "dfs" => Strategy::DepthFirst,
                    other => return Err(format!("unknown strategy `{other}`")),
                };
            }
            "--help" | "-h" => return Err(USAGE.to_string()),
            other if other.starts_with('-') => return Err(format!("unknown option `{other}`")),
            other => {
                if path.is_some() {
                    return Err("more than one input path".to_string());
                }
                path = Some(other.to_string());
            }
        }
    }
    let path = path.ok_or(USAGE.to_string())?;
    Ok(Options { path, cfg, trace, erase })
}

/// Run the CLI against the given arguments, writing reports to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let opts = match parse_args(args) {
        Ok(o) => o,
        Err(msg) => {
            let _ = writeln!(err, "{msg}");
            return 2;
        }
    };
    let path = Path::new(&opts.path);

    if path.is_dir() {
        match run_corpus(path, &opts.cfg) {
            Ok(summary) => {
                let _ = writeln!(out, "{summary}");
                return if summary.all_passed() { 0 } else { 1 };
            }
            Err(e) => {
                let _ = writeln!(err, "cannot read {}: {e}", path.display());
                return 2;
            }
        }
    }

    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "cannot read {}: {e}", path.display());
            return 2;
        }
    };
    let mut file = match parse(&text) {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", path.display());
            return 2;
        }
    };
    if opts.erase {
        file = file.erased();
    }
    let result = match solve(&file.equations, &file.sig, &opts.cfg) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", path.display());
            return 2;
        }
    };
    if opts.trace {
        for line in &result.trace {
            let _ = writeln!(err, "{line}");
        }
    }

    if file.expected.is_some() {
        let report = compare_expectations(&file, &result);
        let _ = writeln!(out, "{report}");
        if report.is_ok() {
            0
        } else if result.bound_reached {
            3
        } else {
            1
        }
    } else {
        if result.solutions.is_empty() {
            if result.bound_reached {
                let _ = writeln!(out, "no solutions (bound reached)");
            } else {
                let _ = writeln!(out, "no solutions (search space exhausted)");
            }
        } else {
            for (i, sol) in result.solutions.iter().enumerate() {
                if i > 0 {
                    let _ = writeln!(out);
                }
                let _ = writeln!(out, "solution {}:", i + 1);
                for line in sol.to_lines() {
                    let _ = writeln!(out, "{line}");
                }
            }
            if result.bound_reached {
                let _ = writeln!(out, "bound reached: enumeration may be incomplete");
            }
        }
        0
    }
}
