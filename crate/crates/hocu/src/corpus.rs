//! The bundled regression corpus: each entry is a `.hocu` file with an
//! `expect` block, run in golden-test mode. Also home to the occurrence
//! marker used to build coloured entries from neutral logical forms.

use crate::colour::ColourTerm;
use crate::dsl::{parse, ProblemFile};
use crate::term::Term;
use crate::unify::{solution_fingerprint, solve, SearchConfig, SolveResult};
use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

/// Set comparison of emitted solutions against an `expect` block, up to
/// α-equivalence, ground-colour equivalence and fresh-name renaming.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectationReport {
    pub matched: usize,
    /// Expected but not emitted.
    pub missing: Vec<String>,
    /// Emitted but not expected.
    pub unexpected: Vec<String>,
}

impl ExpectationReport {
    pub fn is_ok(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty()
    }
}

impl fmt::Display for ExpectationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "expectations met ({} solutions)", self.matched);
        }
        writeln!(f, "expectation mismatch:")?;
        for m in &self.missing {
            writeln!(f, "  missing:    {m}")?;
        }
        for u in &self.unexpected {
            writeln!(f, "  unexpected: {u}")?;
        }
        write!(f, "  matched: {}", self.matched)
    }
}

/// Compare a solve result against the file's expected solutions.
/// The file must have an `expect` block.
pub fn compare_expectations(file: &ProblemFile, result: &SolveResult) -> ExpectationReport {
    let alphabet = &file.sig.alphabet;
    let expected = file.expected_substitutions().unwrap_or_default();
    let expected_fps: Vec<(String, String)> = expected
        .iter()
        .map(|sub| (solution_fingerprint(sub, &[], alphabet), sub.to_lines().join("; ")))
        .collect();
    let emitted_fps: Vec<(String, String)> = result
        .solutions
        .iter()
        .map(|sol| {
            (
                solution_fingerprint(&sol.substitution, &sol.flex_flex, alphabet),
                sol.to_lines().join("; "),
            )
        })
        .collect();
    let expected_set: BTreeSet<&String> = expected_fps.iter().map(|(fp, _)| fp).collect();
    let emitted_set: BTreeSet<&String> = emitted_fps.iter().map(|(fp, _)| fp).collect();
    let missing = expected_fps
        .iter()
        .filter(|(fp, _)| !emitted_set.contains(fp))
        .map(|(_, show)| show.clone())
        .collect();
    let unexpected = emitted_fps
        .iter()
        .filter(|(fp, _)| !expected_set.contains(fp))
        .map(|(_, show)| show.clone())
        .collect();
    let matched = expected_fps.iter().filter(|(fp, _)| emitted_set.contains(fp)).count();
    ExpectationReport { matched, missing, unexpected }
}

#[derive(Debug, Clone)]
pub struct CorpusEntryResult {
    pub id: String,
    pub path: PathBuf,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct CorpusSummary {
    pub entries: Vec<CorpusEntryResult>,
}

impl CorpusSummary {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

impl fmt::Display for CorpusSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            if e.passed {
                writeln!(f, "PASS {}", e.id)?;
            } else {
                writeln!(f, "FAIL {}: {}", e.id, e.detail)?;
            }
        }
        let failed = self.entries.iter().filter(|e| !e.passed).count();
        write!(f, "{} entries, {} failed", self.entries.len(), failed)
    }
}

/// Run one problem file in golden-test mode.
pub fn run_entry(path: &Path, cfg: &SearchConfig) -> CorpusEntryResult {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            return CorpusEntryResult {
                id,
                path: path.to_path_buf(),
                passed: false,
                detail: format!("cannot read: {e}"),
            };
        }
    };
    let file = match parse(&text) {
        Ok(f) => f,
        Err(e) => {
            return CorpusEntryResult {
                id,
                path: path.to_path_buf(),
                passed: false,
                detail: format!("parse error: {e}"),
            };
        }
    };
    if file.expected.is_none() {
        return CorpusEntryResult {
            id,
            path: path.to_path_buf(),
            passed: false,
            detail: "no expect block".to_string(),
        };
    }
    let result = match solve(&file.equations, &file.sig, cfg) {
        Ok(r) => r,
        Err(e) => {
            return CorpusEntryResult {
                id,
                path: path.to_path_buf(),
                passed: false,
                detail: format!("type error: {e}"),
            };
        }
    };
    let report = compare_expectations(&file, &result);
    CorpusEntryResult {
        id,
        path: path.to_path_buf(),
        passed: report.is_ok(),
        detail: report.to_string().replace('\n', " "),
    }
}

/// Run every `.hocu` file in a directory, in filename order.
pub fn run_corpus(dir: &Path, cfg: &SearchConfig) -> std::io::Result<CorpusSummary> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "hocu").unwrap_or(false))
        .collect();
    paths.sort();
    let entries = paths.iter().map(|p| run_entry(p, cfg)).collect();
    Ok(CorpusSummary { entries })
}

/// Errors from occurrence marking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathError {
    OutOfTree(Vec<usize>),
    NotAConstant(Vec<usize>),
}

impl fmt::Display for PathError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathError::OutOfTree(p) => write!(f, "path {p:?} leaves the term"),
            PathError::NotAConstant(p) => write!(f, "path {p:?} does not address a constant"),
        }
    }
}

/// Annotate the constant occurrences addressed by `markers` with `colour`.
/// A path is a child-index sequence: 0/1 through an application's function
/// and argument, 0 through a lambda body.
pub fn encode_por(
    term: &Term,
    markers: &BTreeSet<Vec<usize>>,
    colour: &ColourTerm,
) -> Result<Term, PathError> {
    fn go(
        t: &Term,
        here: &mut Vec<usize>,
        markers: &BTreeSet<Vec<usize>>,
        colour: &ColourTerm,
    ) -> Result<Term, PathError> {
        if markers.contains(here) {
            return match t {
                Term::Const { name, ty, .. } => Ok(Term::Const {
                    name: name.clone(),
                    ty: ty.clone(),
                    colour: Some(colour.clone()),
                }),
                _ => Err(PathError::NotAConstant(here.clone())),
            };
        }
        match t {
            Term::Const { .. } | Term::Free { .. } | Term::Bound { .. } => Ok(t.clone()),
            Term::App { func, arg } => {
                here.push(0);
                let f = go(func, here, markers, colour)?;
                here.pop();
                here.push(1);
                let a = go(arg, here, markers, colour)?;
                here.pop();
                Ok(Term::app(f, a))
            }
            Term::Lam { hint, param, body } => {
                here.push(0);
                let b = go(body, here, markers, colour)?;
                here.pop();
                Ok(Term::lam(hint.clone(), param.clone(), b))
            }
        }
    }

    fn depth_ok(t: &Term, path: &[usize]) -> bool {
        match path.split_first() {
            None => true,
            Some((step, rest)) => match (t, step) {
                (Term::App { func, .. }, 0) => depth_ok(func, rest),
                (Term::App { arg, .. }, 1) => depth_ok(arg, rest),
                (Term::Lam { body, .. }, 0) => depth_ok(body, rest),
                _ => false,
            },
        }
    }

    for p in markers {
        if !depth_ok(term, p) {
            return Err(PathError::OutOfTree(p.clone()));
        }
    }
    let mut here = Vec::new();
    go(term, &mut here, markers, colour)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::SimpleType;

    fn e() -> SimpleType {
        SimpleType::base("e")
    }

    fn t() -> SimpleType {
        SimpleType::base("t")
    }

    fn like_dan_golf() -> Term {
        Term::apps(
            Term::cnst("like", SimpleType::fun([e(), e()], t())),
            [Term::cnst("dan", e()), Term::cnst("golf", e())],
        )
    }

    #[test]
    fn marks_the_primary_occurrence() {
        // like(dan, golf) is like(dan)(golf); dan sits at path [0, 1]
        let markers: BTreeSet<Vec<usize>> = [vec![0, 1]].into();
        let got = encode_por(&like_dan_golf(), &markers, &ColourTerm::constant("pe")).unwrap();
        let want = Term::apps(
            Term::cnst("like", SimpleType::fun([e(), e()], t())),
            [
                Term::cnst_col("dan", e(), ColourTerm::constant("pe")),
                Term::cnst("golf", e()),
            ],
        );
        assert_eq!(got, want);
    }

    #[test]
    fn empty_marker_set_is_identity() {
        let markers = BTreeSet::new();
        let got = encode_por(&like_dan_golf(), &markers, &ColourTerm::constant("pe")).unwrap();
        assert_eq!(got, like_dan_golf());
    }

    #[test]
    fn non_constant_target_is_an_error() {
        // path [0] addresses the application node like(dan)
        let markers: BTreeSet<Vec<usize>> = [vec![0]].into();
        let err = encode_por(&like_dan_golf(), &markers, &ColourTerm::constant("pe")).unwrap_err();
        assert_eq!(err, PathError::NotAConstant(vec![0]));
    }

    #[test]
    fn out_of_tree_path_is_an_error() {
        let markers: BTreeSet<Vec<usize>> = [vec![1, 1, 1]].into();
        let err = encode_por(&like_dan_golf(), &markers, &ColourTerm::constant("pe")).unwrap_err();
        assert_eq!(err, PathError::OutOfTree(vec![1, 1, 1]));
    }

    #[test]
    fn marking_both_parallel_positions() {
        // f(j, j) with both occurrences marked ps
        let f = Term::apps(
            Term::cnst("f", SimpleType::fun([e(), e()], t())),
            [Term::cnst("j", e()), Term::cnst("j", e())],
        );
        let markers: BTreeSet<Vec<usize>> = [vec![0, 1], vec![1]].into();
        let got = encode_por(&f, &markers, &ColourTerm::constant("ps")).unwrap();
        let mut count = 0;
        got.visit_symbols(&mut |s| {
            if s.name == "j" {
                assert_eq!(s.colour, Some(&ColourTerm::constant("ps")));
                count += 1;
            }
        });
        assert_eq!(count, 2);
    }
}
