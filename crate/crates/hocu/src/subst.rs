//! Coloured substitutions: a term part mapping coloured variables (a
//! variable name paired with its annotation) to terms, and a colour part
//! mapping colour variables to colours.
//!
//! Legality has two conditions. Erasure equality: entries for the same
//! variable name under different colours must have equal colour erasures.
//! Monochromicity: the image of a variable with a ground colour `c` may only
//! contain symbols whose annotations entail `c`.

use crate::colour::{ColourAlphabet, ColourStore, ColourTerm, Unsat};
use crate::term::{
    erase, monochrome_constraints, normalize, print_term, typecheck, Signature, Term, TypeError,
};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Canonical form of an annotation used for keying: ground formulae are
/// identified up to logical equivalence via their satisfier sets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ColourKey {
    Missing,
    Var(String),
    Ground(BTreeSet<String>),
}

impl ColourKey {
    pub fn of(
        colour: Option<&ColourTerm>,
        alphabet: &ColourAlphabet,
    ) -> Result<ColourKey, TypeError> {
        match colour {
            None => Ok(ColourKey::Missing),
            Some(ColourTerm::Variable(v)) => Ok(ColourKey::Var(v.clone())),
            Some(c) if c.is_ground() => Ok(ColourKey::Ground(c.satisfiers(alphabet)?)),
            Some(c) => Err(TypeError::MixedColour(c.clone())),
        }
    }
}

/// One entry of the term part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermBinding {
    pub var: String,
    pub annotation: Option<ColourTerm>,
    pub image: Term,
}

/// A coloured substitution. Values are immutable; operations return new
/// substitutions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CSubstitution {
    term_part: BTreeMap<(String, ColourKey), TermBinding>,
    colour_part: BTreeMap<String, ColourTerm>,
}

impl CSubstitution {
    pub fn empty() -> Self {
        CSubstitution::default()
    }

    pub fn is_empty(&self) -> bool {
        self.term_part.is_empty() && self.colour_part.is_empty()
    }

    pub fn term_bindings(&self) -> impl Iterator<Item = &TermBinding> {
        self.term_part.values()
    }

    pub fn colour_bindings(&self) -> &BTreeMap<String, ColourTerm> {
        &self.colour_part
    }

    pub fn lookup(&self, var: &str, key: &ColourKey) -> Option<&TermBinding> {
        self.term_part.get(&(var.to_string(), key.clone()))
    }

    /// Add a term binding; the image is normalized and the key is the
    /// canonical form of the annotation.
    pub fn with_term_binding(
        &self,
        var: impl Into<String>,
        annotation: Option<ColourTerm>,
        image: Term,
        alphabet: &ColourAlphabet,
    ) -> Result<CSubstitution, TypeError> {
        let var = var.into();
        let key = ColourKey::of(annotation.as_ref(), alphabet)?;
        let mut s = self.clone();
        s.term_part.insert(
            (var.clone(), key),
            TermBinding { var, annotation, image: normalize(&image) },
        );
        Ok(s)
    }

    pub fn with_colour_binding(
        &self,
        var: impl Into<String>,
        value: ColourTerm,
    ) -> CSubstitution {
        let mut s = self.clone();
        s.colour_part.insert(var.into(), value);
        s
    }

    fn apply_colours(&self, c: &ColourTerm) -> ColourTerm {
        c.substitute(&self.colour_part)
    }

    /// Apply to a term: first rewrite annotations through the colour part,
    /// then splice images for matching coloured-variable occurrences, then
    /// normalize. Images are closed, so no capture can occur.
    pub fn apply(&self, term: &Term, alphabet: &ColourAlphabet) -> Term {
        let recoloured = term.map_annotations(&|c| self.apply_colours(c));
        let replaced = recoloured.replace_free(&|name, colour, _ty| {
            let key = ColourKey::of(colour, alphabet).ok()?;
            self.lookup(name, &key)
                .map(|b| b.image.map_annotations(&|c| self.apply_colours(c)))
        });
        normalize(&replaced)
    }

    /// Rewrite every annotation (keys included) under a single new colour
    /// binding and record it in the colour part. Two entries whose keys are
    /// identified by the binding must agree; otherwise no substitution can
    /// serve both coloured variables and the result is unsatisfiable.
    pub fn bind_colour_everywhere(
        &self,
        var: &str,
        value: &ColourTerm,
        alphabet: &ColourAlphabet,
    ) -> Result<CSubstitution, Unsat> {
        let mut single = BTreeMap::new();
        single.insert(var.to_string(), value.clone());
        let mut out = CSubstitution::empty();
        for b in self.term_part.values() {
            let annotation = b.annotation.as_ref().map(|c| c.substitute(&single));
            let image = b.image.map_annotations(&|c| c.substitute(&single));
            let key = ColourKey::of(annotation.as_ref(), alphabet)
                .map_err(|e| Unsat::new(e.to_string()))?;
            if let Some(existing) = out.lookup(&b.var, &key) {
                if !crate::term::alpha_beta_eta_equal(&existing.image, &image, alphabet) {
                    return Err(Unsat::new(format!(
                        "binding {var} := {value} identifies two entries for `{}` with \
                         different images",
                        b.var
                    )));
                }
                continue;
            }
            out = out
                .with_term_binding(b.var.clone(), annotation, image, alphabet)
                .map_err(|e| Unsat::new(e.to_string()))?;
        }
        for (v, c) in &self.colour_part {
            out.colour_part.insert(v.clone(), c.substitute(&single));
        }
        out.colour_part.insert(var.to_string(), value.clone());
        Ok(out)
    }

    /// Composition: `apply(compose(outer, inner), m) = apply(outer, apply(inner, m))`.
    pub fn compose(
        outer: &CSubstitution,
        inner: &CSubstitution,
        alphabet: &ColourAlphabet,
    ) -> Result<CSubstitution, TypeError> {
        let mut out = CSubstitution::empty();
        for b in inner.term_part.values() {
            let annotation = b.annotation.as_ref().map(|c| outer.apply_colours(c));
            let image = outer.apply(&b.image, alphabet);
            out = out.with_term_binding(b.var.clone(), annotation, image, alphabet)?;
        }
        for ((var, _), b) in &outer.term_part {
            let annotation = b.annotation.clone();
            let key = ColourKey::of(annotation.as_ref(), alphabet)?;
            if !out.term_part.contains_key(&(var.clone(), key)) {
                out = out.with_term_binding(var.clone(), annotation, b.image.clone(), alphabet)?;
            }
        }
        for (v, c) in &inner.colour_part {
            out.colour_part.insert(v.clone(), outer.apply_colours(c));
        }
        for (v, c) in &outer.colour_part {
            out.colour_part.entry(v.clone()).or_insert_with(|| c.clone());
        }
        Ok(out)
    }

    /// Keep only bindings for the given variable names (term part) and
    /// colour variables (colour part).
    pub fn restrict(
        &self,
        term_vars: &BTreeSet<String>,
        colour_vars: &BTreeSet<String>,
    ) -> CSubstitution {
        CSubstitution {
            term_part: self
                .term_part
                .iter()
                .filter(|((v, _), _)| term_vars.contains(v))
                .map(|(k, b)| (k.clone(), b.clone()))
                .collect(),
            colour_part: self
                .colour_part
                .iter()
                .filter(|(v, _)| colour_vars.contains(*v))
                .map(|(v, c)| (v.clone(), c.clone()))
                .collect(),
        }
    }

    /// Serialize, one binding per line, in deterministic key order:
    /// `x_colour = term` for the term part, then `A := colour`.
    pub fn to_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for b in self.term_part.values() {
            let suffix = match &b.annotation {
                None => String::new(),
                Some(c) => match c {
                    ColourTerm::Constant(_) | ColourTerm::Variable(_) | ColourTerm::Not(_) => {
                        format!("_{c}")
                    }
                    _ => format!("_({c})"),
                },
            };
            lines.push(format!("{}{} = {}", b.var, suffix, print_term(&b.image)));
        }
        for (v, c) in &self.colour_part {
            lines.push(format!("{v} := {c}"));
        }
        lines
    }
}

impl fmt::Display for CSubstitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, line) in self.to_lines().iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Outcome of a legality check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LegalityReport {
    Ok,
    Violations(Vec<LegalityViolation>),
}

impl LegalityReport {
    pub fn is_ok(&self) -> bool {
        matches!(self, LegalityReport::Ok)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LegalityViolation {
    /// Two entries for one variable name whose erasures differ.
    ErasureMismatch { var: String, first: String, second: String },
    /// A ground-coloured entry whose image is not monochrome.
    NotMonochrome { var: String, colour: ColourTerm, detail: String },
    /// An entry whose image does not have the variable's declared type.
    IllTyped { var: String, detail: String },
}

impl fmt::Display for LegalityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LegalityViolation::ErasureMismatch { var, first, second } => write!(
                f,
                "erasure equality violated for `{var}`: `{first}` vs `{second}`"
            ),
            LegalityViolation::NotMonochrome { var, colour, detail } => write!(
                f,
                "monochromicity violated: image of `{var}` is not {colour}-monochrome ({detail})"
            ),
            LegalityViolation::IllTyped { var, detail } => {
                write!(f, "entry for `{var}` is ill-typed: {detail}")
            }
        }
    }
}

impl fmt::Display for LegalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LegalityReport::Ok => write!(f, "ok"),
            LegalityReport::Violations(vs) => {
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
        }
    }
}

/// Check the two legality conditions against a signature, using `base` for
/// already-known colour constraints (deferred entailments from a search).
pub fn check_legal_with_store(
    s: &CSubstitution,
    sig: &Signature,
    base: &ColourStore,
) -> LegalityReport {
    let mut violations = Vec::new();

    // typing of each entry against the declared variable type
    for b in s.term_bindings() {
        match sig.variables.get(&b.var) {
            None => {}
            Some(decl) => match typecheck(&b.image, sig) {
                Ok(ty) => {
                    if ty != decl.ty {
                        violations.push(LegalityViolation::IllTyped {
                            var: b.var.clone(),
                            detail: format!("declared `{}`, image has `{}`", decl.ty, ty),
                        });
                    }
                }
                Err(e) => violations.push(LegalityViolation::IllTyped {
                    var: b.var.clone(),
                    detail: e.to_string(),
                }),
            },
        }
    }

    // condition 1: same-name entries have equal colour erasures
    let mut by_name: BTreeMap<&str, Vec<&TermBinding>> = BTreeMap::new();
    for b in s.term_bindings() {
        by_name.entry(b.var.as_str()).or_default().push(b);
    }
    for (var, entries) in &by_name {
        for pair in entries.windows(2) {
            let ea = erase(&normalize(&pair[0].image));
            let eb = erase(&normalize(&pair[1].image));
            if ea != eb {
                violations.push(LegalityViolation::ErasureMismatch {
                    var: (*var).to_string(),
                    first: print_term(&ea),
                    second: print_term(&eb),
                });
            }
        }
    }

    // condition 2: ground-coloured entries are monochrome; colour-variable
    // annotations inside images defer into the store and must stay
    // satisfiable
    let mut store = base.clone();
    for (v, c) in s.colour_bindings() {
        match store.bind(v, c) {
            Ok(next) => store = next,
            Err(Unsat { reason }) => {
                violations.push(LegalityViolation::NotMonochrome {
                    var: v.clone(),
                    colour: c.clone(),
                    detail: reason,
                });
            }
        }
    }
    for b in s.term_bindings() {
        let colour = match &b.annotation {
            Some(c) if c.is_ground() => c.clone(),
            _ => continue,
        };
        match monochrome_constraints(&b.image, &colour, &store) {
            Ok(next) => store = next,
            Err(Unsat { reason }) => {
                violations.push(LegalityViolation::NotMonochrome {
                    var: b.var.clone(),
                    colour,
                    detail: reason,
                });
            }
        }
    }
    if violations.is_empty() && !store.satisfiable() {
        violations.push(LegalityViolation::NotMonochrome {
            var: "<store>".to_string(),
            colour: ColourTerm::constant("?"),
            detail: "deferred colour constraints are unsatisfiable".to_string(),
        });
    }

    if violations.is_empty() {
        LegalityReport::Ok
    } else {
        LegalityReport::Violations(violations)
    }
}

/// Check the two legality conditions of a coloured substitution.
pub fn check_legal(s: &CSubstitution, sig: &Signature) -> LegalityReport {
    check_legal_with_store(s, sig, &ColourStore::new(sig.alphabet.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colour::ColourAlphabet;
    use crate::term::SimpleType;

    fn alpha() -> ColourAlphabet {
        ColourAlphabet::new(["pe", "pf", "ps"]).unwrap()
    }

    fn e() -> SimpleType {
        SimpleType::base("e")
    }

    fn t() -> SimpleType {
        SimpleType::base("t")
    }

    fn not_pe() -> ColourTerm {
        ColourTerm::not(ColourTerm::constant("pe"))
    }

    fn sig() -> Signature {
        let mut s = Signature::new(alpha());
        s.add_base_type("e");
        s.add_base_type("t");
        s.add_constant("like", SimpleType::fun([e(), e()], t()));
        s.add_constant("dan", e());
        s.add_constant("golf", e());
        s.add_constant("f", SimpleType::arrow(e(), e()));
        s.add_constant("g", SimpleType::arrow(e(), e()));
        s.add_constant("i", e());
        s.add_constant("ex", SimpleType::fun([e(), e(), e()], t()));
        s.add_variable_col("R", SimpleType::arrow(e(), t()), not_pe());
        s.add_variable_col("x", SimpleType::arrow(e(), e()), ColourTerm::constant("pe"));
        s
    }

    fn like_abs() -> Term {
        // \x. like(x, golf)
        Term::lam(
            "x",
            e(),
            Term::apps(
                Term::cnst("like", SimpleType::fun([e(), e()], t())),
                [Term::bound(0, e()), Term::cnst("golf", e())],
            ),
        )
    }

    fn like_dan_abs() -> Term {
        // \x. like(dan_pe, golf)
        Term::lam(
            "x",
            e(),
            Term::apps(
                Term::cnst("like", SimpleType::fun([e(), e()], t())),
                [
                    Term::cnst_col("dan", e(), ColourTerm::constant("pe")),
                    Term::cnst("golf", e()),
                ],
            ),
        )
    }

    #[test]
    fn legal_ellipsis_solution() {
        let s = CSubstitution::empty()
            .with_term_binding("R", Some(not_pe()), like_abs(), &alpha())
            .unwrap();
        assert!(check_legal(&s, &sig()).is_ok());
    }

    #[test]
    fn monochromicity_violation_reported() {
        let s = CSubstitution::empty()
            .with_term_binding("R", Some(not_pe()), like_dan_abs(), &alpha())
            .unwrap();
        match check_legal(&s, &sig()) {
            LegalityReport::Violations(vs) => {
                assert!(vs
                    .iter()
                    .any(|v| matches!(v, LegalityViolation::NotMonochrome { var, .. } if var == "R")));
            }
            LegalityReport::Ok => panic!("expected a monochromicity violation"),
        }
    }

    #[test]
    fn erasure_mismatch_reported() {
        // { x_pe -> \z. f(z), x_pf -> \z. g(z) } has differing erasures
        let fx = Term::lam(
            "z",
            e(),
            Term::app(Term::cnst("f", SimpleType::arrow(e(), e())), Term::bound(0, e())),
        );
        let gx = Term::lam(
            "z",
            e(),
            Term::app(Term::cnst("g", SimpleType::arrow(e(), e())), Term::bound(0, e())),
        );
        let s = CSubstitution::empty()
            .with_term_binding("x", Some(ColourTerm::constant("pe")), fx, &alpha())
            .unwrap()
            .with_term_binding("x", Some(ColourTerm::constant("pf")), gx, &alpha())
            .unwrap();
        match check_legal(&s, &sig()) {
            LegalityReport::Violations(vs) => {
                assert!(vs.iter().any(|v| matches!(v, LegalityViolation::ErasureMismatch { .. })));
            }
            LegalityReport::Ok => panic!("expected an erasure violation"),
        }
    }

    #[test]
    fn apply_splices_and_normalizes() {
        // { R_~pe -> \x. like(x, golf) } applied to R_~pe(dan_pe)
        let s = CSubstitution::empty()
            .with_term_binding("R", Some(not_pe()), like_abs(), &alpha())
            .unwrap();
        let term = Term::app(
            Term::free_col("R", SimpleType::arrow(e(), t()), not_pe()),
            Term::cnst_col("dan", e(), ColourTerm::constant("pe")),
        );
        let got = s.apply(&term, &alpha());
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
    fn apply_matches_equivalent_ground_annotation() {
        // occurrence annotated pf|ps matches a binding keyed ~pe
        let s = CSubstitution::empty()
            .with_term_binding("R", Some(not_pe()), like_abs(), &alpha())
            .unwrap();
        let occ = Term::app(
            Term::free_col(
                "R",
                SimpleType::arrow(e(), t()),
                ColourTerm::or(ColourTerm::constant("pf"), ColourTerm::constant("ps")),
            ),
            Term::cnst("dan", e()),
        );
        let got = s.apply(&occ, &alpha());
        assert!(!got.contains_free("R"));
    }

    #[test]
    fn empty_substitution_normalizes() {
        let s = CSubstitution::empty();
        let redex = Term::app(Term::lam("z", e(), Term::bound(0, e())), Term::cnst("dan", e()));
        assert_eq!(s.apply(&redex, &alpha()), Term::cnst("dan", e()));
    }

    #[test]
    fn colour_binding_rewrites_annotations() {
        // { A := pf } applied to i_A gives i_pf
        let s = CSubstitution::empty().with_colour_binding("A", ColourTerm::constant("pf"));
        let i_a = Term::cnst_col("i", e(), ColourTerm::variable("A"));
        assert_eq!(
            s.apply(&i_a, &alpha()),
            Term::cnst_col("i", e(), ColourTerm::constant("pf"))
        );
    }

    #[test]
    fn compose_with_empty_is_identity() {
        let s = CSubstitution::empty()
            .with_term_binding("R", Some(not_pe()), like_abs(), &alpha())
            .unwrap();
        let c1 = CSubstitution::compose(&s, &CSubstitution::empty(), &alpha()).unwrap();
        let c2 = CSubstitution::compose(&CSubstitution::empty(), &s, &alpha()).unwrap();
        assert_eq!(c1, s);
        assert_eq!(c2, s);
    }

    #[test]
    fn compose_threads_imitation_then_projection() {
        // outer { H1 -> \z. \w. w } over inner
        // { R -> \y. \x. ex(H1(y,x), H2(y,x), H3(y,x)) }
        // maps R to \y. \x. ex(x, H2(y,x), H3(y,x))
        let ee = SimpleType::fun([e(), e()], e());
        let h = |n: &str| Term::free(n, ee.clone());
        let app2 = |f: Term| Term::apps(f, [Term::bound(1, e()), Term::bound(0, e())]);
        let inner_image = Term::lam(
            "y",
            e(),
            Term::lam(
                "x",
                e(),
                Term::apps(
                    Term::cnst("ex", SimpleType::fun([e(), e(), e()], t())),
                    [app2(h("H1")), app2(h("H2")), app2(h("H3"))],
                ),
            ),
        );
        let inner = CSubstitution::empty()
            .with_term_binding("R", None, inner_image, &alpha())
            .unwrap();
        let outer = CSubstitution::empty()
            .with_term_binding(
                "H1",
                None,
                Term::lam("z", e(), Term::lam("w", e(), Term::bound(0, e()))),
                &alpha(),
            )
            .unwrap();
        let composed = CSubstitution::compose(&outer, &inner, &alpha()).unwrap();
        let got = composed.lookup("R", &ColourKey::Missing).unwrap().image.clone();
        let want = Term::lam(
            "y",
            e(),
            Term::lam(
                "x",
                e(),
                Term::apps(
                    Term::cnst("ex", SimpleType::fun([e(), e(), e()], t())),
                    [Term::bound(0, e()), app2(h("H2")), app2(h("H3"))],
                ),
            ),
        );
        assert_eq!(got, want);
    }

    #[test]
    fn compose_is_application_composition() {
        // apply(compose(o, i), m) == apply(o, apply(i, m)) on samples
        let o = CSubstitution::empty()
            .with_term_binding("R", Some(not_pe()), like_abs(), &alpha())
            .unwrap()
            .with_colour_binding("A", ColourTerm::constant("pf"));
        let i = CSubstitution::empty()
            .with_term_binding(
                "x",
                Some(ColourTerm::constant("pe")),
                Term::lam("z", e(), Term::cnst_col("i", e(), ColourTerm::variable("A"))),
                &alpha(),
            )
            .unwrap();
        let samples = [
            Term::app(
                Term::free_col("R", SimpleType::arrow(e(), t()), not_pe()),
                Term::app(
                    Term::free_col("x", SimpleType::arrow(e(), e()), ColourTerm::constant("pe")),
                    Term::cnst("dan", e()),
                ),
            ),
            Term::cnst_col("i", e(), ColourTerm::variable("A")),
        ];
        let composed = CSubstitution::compose(&o, &i, &alpha()).unwrap();
        for m in &samples {
            assert_eq!(composed.apply(m, &alpha()), o.apply(&i.apply(m, &alpha()), &alpha()));
        }
    }

    #[test]
    fn erasure_of_composition_is_classical_composition() {
        let o = CSubstitution::empty()
            .with_term_binding("R", Some(not_pe()), like_abs(), &alpha())
            .unwrap();
        let i = CSubstitution::empty()
            .with_term_binding(
                "x",
                Some(ColourTerm::constant("pe")),
                Term::lam("z", e(), Term::cnst_col("dan", e(), ColourTerm::constant("pe"))),
                &alpha(),
            )
            .unwrap();
        let m = Term::app(
            Term::free_col("x", SimpleType::arrow(e(), e()), ColourTerm::constant("pe")),
            Term::cnst("golf", e()),
        );
        let composed = CSubstitution::compose(&o, &i, &alpha()).unwrap();
        assert_eq!(
            erase(&composed.apply(&m, &alpha())),
            erase(&o.apply(&i.apply(&m, &alpha()), &alpha()))
        );
    }

    #[test]
    fn serialization_order_is_deterministic() {
        let s = CSubstitution::empty()
            .with_term_binding("R", Some(not_pe()), like_abs(), &alpha())
            .unwrap()
            .with_colour_binding("A", ColourTerm::constant("pf"));
        assert_eq!(
            s.to_lines(),
            vec!["R_~pe = \\x. like(x, golf)".to_string(), "A := pf".to_string()]
        );
    }

    #[test]
    fn colour_binding_merges_agreeing_entries() {
        // [pf/A] identifies x_A with x_pf; equal images merge into one entry
        let img = Term::lam("z", e(), Term::cnst_col("i", e(), ColourTerm::variable("A")));
        let img_pf = Term::lam("z", e(), Term::cnst_col("i", e(), ColourTerm::constant("pf")));
        let s = CSubstitution::empty()
            .with_term_binding("x", Some(ColourTerm::variable("A")), img, &alpha())
            .unwrap()
            .with_term_binding("x", Some(ColourTerm::constant("pf")), img_pf.clone(), &alpha())
            .unwrap();
        let bound = s
            .bind_colour_everywhere("A", &ColourTerm::constant("pf"), &alpha())
            .unwrap();
        assert_eq!(bound.term_bindings().count(), 1);
        let kept = bound
            .lookup("x", &ColourKey::Ground(["pf".to_string()].into()))
            .unwrap();
        assert_eq!(kept.image, normalize(&img_pf));
    }

    #[test]
    fn colour_binding_rejects_conflicting_entries() {
        let img_a = Term::lam("z", e(), Term::cnst_col("dan", e(), ColourTerm::variable("A")));
        let img_pf = Term::lam("z", e(), Term::cnst_col("golf", e(), ColourTerm::constant("pf")));
        let s = CSubstitution::empty()
            .with_term_binding("x", Some(ColourTerm::variable("A")), img_a, &alpha())
            .unwrap()
            .with_term_binding("x", Some(ColourTerm::constant("pf")), img_pf, &alpha())
            .unwrap();
        assert!(s.bind_colour_everywhere("A", &ColourTerm::constant("pf"), &alpha()).is_err());
    }

    #[test]
    fn restrict_filters_names() {
        let s = CSubstitution::empty()
            .with_term_binding("R", Some(not_pe()), like_abs(), &alpha())
            .unwrap()
            .with_term_binding("H1", None, Term::cnst("dan", e()), &alpha())
            .unwrap()
            .with_colour_binding("A", ColourTerm::constant("pf"))
            .with_colour_binding("B", ColourTerm::constant("pe"));
        let keep_terms: BTreeSet<String> = ["R".to_string()].into();
        let keep_cols: BTreeSet<String> = ["A".to_string()].into();
        let r = s.restrict(&keep_terms, &keep_cols);
        assert_eq!(r.term_bindings().count(), 1);
        assert_eq!(r.colour_bindings().len(), 1);
    }
}
