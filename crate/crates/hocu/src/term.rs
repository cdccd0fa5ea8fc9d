//! Coloured simply typed λ-terms: typing, βη-normalization to η-long form,
//! α-equivalence, colour erasure and monochromicity.
//!
//! Bound variables are nameless de Bruijn indices and never carry colours, so
//! α-equivalence is syntactic equality. Binders keep a display hint that is
//! ignored by comparison. Constants and free variables carry an optional
//! colour annotation; an unannotated occurrence is an unconstrained wildcard.

use crate::colour::{entails_ground, ColourAlphabet, ColourError, ColourStore, ColourTerm, Unsat};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SimpleType {
    Base(String),
    Arrow(Box<SimpleType>, Box<SimpleType>),
}

impl SimpleType {
    pub fn base(name: impl Into<String>) -> Self {
        SimpleType::Base(name.into())
    }

    pub fn arrow(from: SimpleType, to: SimpleType) -> Self {
        SimpleType::Arrow(Box::new(from), Box::new(to))
    }

    /// Build `a1 -> a2 -> ... -> result`.
    pub fn fun(args: impl IntoIterator<Item = SimpleType>, result: SimpleType) -> Self {
        let args: Vec<_> = args.into_iter().collect();
        args.into_iter().rev().fold(result, |acc, a| SimpleType::arrow(a, acc))
    }

    pub fn arity(&self) -> usize {
        let mut n = 0;
        let mut t = self;
        while let SimpleType::Arrow(_, to) = t {
            n += 1;
            t = to;
        }
        n
    }

    /// Argument types, outermost first.
    pub fn args(&self) -> Vec<&SimpleType> {
        let mut out = Vec::new();
        let mut t = self;
        while let SimpleType::Arrow(from, to) = t {
            out.push(&**from);
            t = to;
        }
        out
    }

    pub fn result(&self) -> &SimpleType {
        let mut t = self;
        while let SimpleType::Arrow(_, to) = t {
            t = to;
        }
        t
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::Base(n) => write!(f, "{n}"),
            SimpleType::Arrow(a, b) => {
                if matches!(**a, SimpleType::Arrow(_, _)) {
                    write!(f, "({a}) -> {b}")
                } else {
                    write!(f, "{a} -> {b}")
                }
            }
        }
    }
}

/// A coloured λ-term.
#[derive(Debug, Clone)]
pub enum Term {
    Const {
        name: String,
        ty: SimpleType,
        colour: Option<ColourTerm>,
    },
    Free {
        name: String,
        ty: SimpleType,
        colour: Option<ColourTerm>,
    },
    Bound {
        index: usize,
        ty: SimpleType,
    },
    App {
        func: Box<Term>,
        arg: Box<Term>,
    },
    Lam {
        hint: String,
        param: SimpleType,
        body: Box<Term>,
    },
}

// Structural equality ignores binder hints; annotations compare
// syntactically here. Semantic annotation equality lives in
// `alpha_beta_eta_equal`.
impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (
                Term::Const { name: a, ty: ta, colour: ca },
                Term::Const { name: b, ty: tb, colour: cb },
            ) => a == b && ta == tb && ca == cb,
            (
                Term::Free { name: a, ty: ta, colour: ca },
                Term::Free { name: b, ty: tb, colour: cb },
            ) => a == b && ta == tb && ca == cb,
            (Term::Bound { index: a, ty: ta }, Term::Bound { index: b, ty: tb }) => {
                a == b && ta == tb
            }
            (Term::App { func: f, arg: a }, Term::App { func: g, arg: b }) => f == g && a == b,
            (
                Term::Lam { param: pa, body: ba, .. },
                Term::Lam { param: pb, body: bb, .. },
            ) => pa == pb && ba == bb,
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Term {
    pub fn cnst(name: impl Into<String>, ty: SimpleType) -> Term {
        Term::Const { name: name.into(), ty, colour: None }
    }

    pub fn cnst_col(name: impl Into<String>, ty: SimpleType, colour: ColourTerm) -> Term {
        Term::Const { name: name.into(), ty, colour: Some(colour) }
    }

    pub fn free(name: impl Into<String>, ty: SimpleType) -> Term {
        Term::Free { name: name.into(), ty, colour: None }
    }

    pub fn free_col(name: impl Into<String>, ty: SimpleType, colour: ColourTerm) -> Term {
        Term::Free { name: name.into(), ty, colour: Some(colour) }
    }

    pub fn bound(index: usize, ty: SimpleType) -> Term {
        Term::Bound { index, ty }
    }

    pub fn app(func: Term, arg: Term) -> Term {
        Term::App { func: Box::new(func), arg: Box::new(arg) }
    }

    pub fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    pub fn lam(hint: impl Into<String>, param: SimpleType, body: Term) -> Term {
        Term::Lam { hint: hint.into(), param, body: Box::new(body) }
    }

    /// The type of a term, read off the leaves. Panics on ill-formed trees;
    /// `typecheck` is the validating entry point.
    pub fn ty(&self) -> SimpleType {
        match self {
            Term::Const { ty, .. } | Term::Free { ty, .. } | Term::Bound { ty, .. } => ty.clone(),
            Term::App { func, .. } => match func.ty() {
                SimpleType::Arrow(_, to) => *to,
                t => panic!("application of non-function type {t}"),
            },
            Term::Lam { param, body, .. } => SimpleType::arrow(param.clone(), body.ty()),
        }
    }

    /// Strip the leading λ-binders: `(hints & types, body)`.
    pub fn strip_lams(&self) -> (Vec<(String, SimpleType)>, &Term) {
        let mut binders = Vec::new();
        let mut t = self;
        while let Term::Lam { hint, param, body } = t {
            binders.push((hint.clone(), param.clone()));
            t = body;
        }
        (binders, t)
    }

    /// Split an application spine into head and arguments.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let Term::App { func, arg } = t {
            args.push(&**arg);
            t = func;
        }
        args.reverse();
        (t, args)
    }

    pub fn map_annotations(&self, f: &impl Fn(&ColourTerm) -> ColourTerm) -> Term {
        match self {
            Term::Const { name, ty, colour } => Term::Const {
                name: name.clone(),
                ty: ty.clone(),
                colour: colour.as_ref().map(f),
            },
            Term::Free { name, ty, colour } => Term::Free {
                name: name.clone(),
                ty: ty.clone(),
                colour: colour.as_ref().map(f),
            },
            Term::Bound { .. } => self.clone(),
            Term::App { func, arg } => Term::app(func.map_annotations(f), arg.map_annotations(f)),
            Term::Lam { hint, param, body } => {
                Term::lam(hint.clone(), param.clone(), body.map_annotations(f))
            }
        }
    }

    /// Visit every annotated symbol occurrence (constants and free
    /// variables), skipping bound variables.
    pub fn visit_symbols(&self, f: &mut impl FnMut(SymbolRef<'_>)) {
        match self {
            Term::Const { name, ty, colour } => {
                f(SymbolRef { name, ty, colour: colour.as_ref(), is_var: false })
            }
            Term::Free { name, ty, colour } => {
                f(SymbolRef { name, ty, colour: colour.as_ref(), is_var: true })
            }
            Term::Bound { .. } => {}
            Term::App { func, arg } => {
                func.visit_symbols(f);
                arg.visit_symbols(f);
            }
            Term::Lam { body, .. } => body.visit_symbols(f),
        }
    }

    pub fn contains_free(&self, name: &str) -> bool {
        let mut found = false;
        self.visit_symbols(&mut |s| {
            if s.is_var && s.name == name {
                found = true;
            }
        });
        found
    }

    pub fn contains_const_in(&self, names: &BTreeSet<String>) -> bool {
        let mut found = false;
        self.visit_symbols(&mut |s| {
            if !s.is_var && names.contains(s.name) {
                found = true;
            }
        });
        found
    }

    /// Free-variable occurrence keys `(name, annotation)` in first-order of
    /// appearance.
    pub fn free_var_occurrences(&self) -> Vec<(String, Option<ColourTerm>)> {
        let mut out: Vec<(String, Option<ColourTerm>)> = Vec::new();
        self.visit_symbols(&mut |s| {
            if s.is_var {
                let key = (s.name.to_string(), s.colour.cloned());
                if !out.contains(&key) {
                    out.push(key);
                }
            }
        });
        out
    }

    /// Shift free de Bruijn indices >= cutoff by `d`.
    pub(crate) fn shift_above(&self, cutoff: usize, d: usize) -> Term {
        match self {
            Term::Bound { index, ty } => {
                if *index >= cutoff {
                    Term::bound(index + d, ty.clone())
                } else {
                    self.clone()
                }
            }
            Term::Const { .. } | Term::Free { .. } => self.clone(),
            Term::App { func, arg } => {
                Term::app(func.shift_above(cutoff, d), arg.shift_above(cutoff, d))
            }
            Term::Lam { hint, param, body } => {
                Term::lam(hint.clone(), param.clone(), body.shift_above(cutoff + 1, d))
            }
        }
    }

    pub(crate) fn shift(&self, d: usize) -> Term {
        self.shift_above(0, d)
    }

    /// Replace `Bound(depth)` by `arg` (shifted), decrementing indices above.
    /// This is the body instantiation used by β-reduction.
    pub(crate) fn open(&self, depth: usize, arg: &Term) -> Term {
        match self {
            Term::Bound { index, ty } => {
                if *index == depth {
                    arg.shift(depth)
                } else if *index > depth {
                    Term::bound(index - 1, ty.clone())
                } else {
                    self.clone()
                }
            }
            Term::Const { .. } | Term::Free { .. } => self.clone(),
            Term::App { func, arg: a } => Term::app(func.open(depth, arg), a.open(depth, arg)),
            Term::Lam { hint, param, body } => {
                Term::lam(hint.clone(), param.clone(), body.open(depth + 1, arg))
            }
        }
    }

    /// Replace free-variable occurrences for which `f` yields an image. The
    /// images must be closed terms; the annotation is passed to the lookup.
    pub fn replace_free(
        &self,
        f: &impl Fn(&str, Option<&ColourTerm>, &SimpleType) -> Option<Term>,
    ) -> Term {
        match self {
            Term::Free { name, ty, colour } => match f(name, colour.as_ref(), ty) {
                Some(img) => img,
                None => self.clone(),
            },
            Term::Const { .. } | Term::Bound { .. } => self.clone(),
            Term::App { func, arg } => Term::app(func.replace_free(f), arg.replace_free(f)),
            Term::Lam { hint, param, body } => {
                Term::lam(hint.clone(), param.clone(), body.replace_free(f))
            }
        }
    }

}

/// A symbol occurrence handed to `visit_symbols`.
pub struct SymbolRef<'a> {
    pub name: &'a str,
    pub ty: &'a SimpleType,
    pub colour: Option<&'a ColourTerm>,
    pub is_var: bool,
}

/// Declarations a problem is checked against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub base_types: BTreeSet<String>,
    pub constants: BTreeMap<String, ConstDecl>,
    pub variables: BTreeMap<String, VarDecl>,
    pub alphabet: ColourAlphabet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstDecl {
    pub ty: SimpleType,
    pub colour: Option<ColourTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub ty: SimpleType,
    pub colour: Option<ColourTerm>,
}

impl Signature {
    pub fn new(alphabet: ColourAlphabet) -> Self {
        Signature {
            base_types: BTreeSet::new(),
            constants: BTreeMap::new(),
            variables: BTreeMap::new(),
            alphabet,
        }
    }

    pub fn add_base_type(&mut self, name: impl Into<String>) {
        self.base_types.insert(name.into());
    }

    pub fn add_constant(&mut self, name: impl Into<String>, ty: SimpleType) {
        self.constants.insert(name.into(), ConstDecl { ty, colour: None });
    }

    pub fn add_constant_col(
        &mut self,
        name: impl Into<String>,
        ty: SimpleType,
        colour: ColourTerm,
    ) {
        self.constants.insert(name.into(), ConstDecl { ty, colour: Some(colour) });
    }

    pub fn add_variable(&mut self, name: impl Into<String>, ty: SimpleType) {
        self.variables.insert(name.into(), VarDecl { ty, colour: None });
    }

    pub fn add_variable_col(
        &mut self,
        name: impl Into<String>,
        ty: SimpleType,
        colour: ColourTerm,
    ) {
        self.variables.insert(name.into(), VarDecl { ty, colour: Some(colour) });
    }

    /// Drop every colour: alphabet, declaration defaults, all of it.
    pub fn erased(&self) -> Signature {
        Signature {
            base_types: self.base_types.clone(),
            constants: self
                .constants
                .iter()
                .map(|(k, d)| (k.clone(), ConstDecl { ty: d.ty.clone(), colour: None }))
                .collect(),
            variables: self
                .variables
                .iter()
                .map(|(k, d)| (k.clone(), VarDecl { ty: d.ty.clone(), colour: None }))
                .collect(),
            alphabet: ColourAlphabet::empty(),
        }
    }
}

/// Typing and well-formedness errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeError {
    UndeclaredConstant(String),
    UndeclaredVariable(String),
    ConstantTypeMismatch { name: String, declared: SimpleType, used: SimpleType },
    VariableTypeMismatch { name: String, declared: SimpleType, used: SimpleType },
    NotAFunction { term: String, ty: SimpleType },
    ArgumentMismatch { term: String, expected: SimpleType, found: SimpleType },
    UnboundIndex(usize),
    BoundTypeMismatch { index: usize, expected: SimpleType, found: SimpleType },
    Colour(ColourError),
    MixedColour(ColourTerm),
    UndeclaredBaseType(String),
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeError::UndeclaredConstant(n) => write!(f, "undeclared constant `{n}`"),
            TypeError::UndeclaredVariable(n) => write!(f, "undeclared variable `{n}`"),
            TypeError::ConstantTypeMismatch { name, declared, used } => {
                write!(f, "constant `{name}` declared `{declared}` but used at `{used}`")
            }
            TypeError::VariableTypeMismatch { name, declared, used } => {
                write!(f, "variable `{name}` declared `{declared}` but used at `{used}`")
            }
            TypeError::NotAFunction { term, ty } => {
                write!(f, "`{term}` of type `{ty}` applied to an argument")
            }
            TypeError::ArgumentMismatch { term, expected, found } => {
                write!(f, "argument `{term}`: expected `{expected}`, found `{found}`")
            }
            TypeError::UnboundIndex(i) => write!(f, "unbound de Bruijn index {i}"),
            TypeError::BoundTypeMismatch { index, expected, found } => write!(
                f,
                "bound variable {index} annotated `{found}` but binder has `{expected}`"
            ),
            TypeError::Colour(e) => write!(f, "{e}"),
            TypeError::MixedColour(t) => write!(
                f,
                "colour annotation `{t}` mixes variables into a formula; \
                 variables are only supported as whole annotations"
            ),
            TypeError::UndeclaredBaseType(n) => write!(f, "undeclared base type `{n}`"),
        }
    }
}

impl std::error::Error for TypeError {}

impl From<ColourError> for TypeError {
    fn from(e: ColourError) -> Self {
        TypeError::Colour(e)
    }
}

fn check_annotation(colour: &ColourTerm, alphabet: &ColourAlphabet) -> Result<(), TypeError> {
    // an annotation is a whole variable or a ground formula; no mixing
    if let ColourTerm::Variable(_) = colour {
        return Ok(());
    }
    if !colour.is_ground() {
        return Err(TypeError::MixedColour(colour.clone()));
    }
    colour.check_alphabet(alphabet)?;
    Ok(())
}

/// Compute and validate the type of `term` against `sig`.
pub fn typecheck(term: &Term, sig: &Signature) -> Result<SimpleType, TypeError> {
    fn check_base(ty: &SimpleType, sig: &Signature) -> Result<(), TypeError> {
        match ty {
            SimpleType::Base(n) => {
                if sig.base_types.contains(n) {
                    Ok(())
                } else {
                    Err(TypeError::UndeclaredBaseType(n.clone()))
                }
            }
            SimpleType::Arrow(a, b) => {
                check_base(a, sig)?;
                check_base(b, sig)
            }
        }
    }

    fn go(term: &Term, sig: &Signature, env: &mut Vec<SimpleType>) -> Result<SimpleType, TypeError> {
        match term {
            Term::Const { name, ty, colour } => {
                let decl = sig
                    .constants
                    .get(name)
                    .ok_or_else(|| TypeError::UndeclaredConstant(name.clone()))?;
                if decl.ty != *ty {
                    return Err(TypeError::ConstantTypeMismatch {
                        name: name.clone(),
                        declared: decl.ty.clone(),
                        used: ty.clone(),
                    });
                }
                if let Some(c) = colour {
                    check_annotation(c, &sig.alphabet)?;
                }
                Ok(ty.clone())
            }
            Term::Free { name, ty, colour } => {
                let decl = sig
                    .variables
                    .get(name)
                    .ok_or_else(|| TypeError::UndeclaredVariable(name.clone()))?;
                if decl.ty != *ty {
                    return Err(TypeError::VariableTypeMismatch {
                        name: name.clone(),
                        declared: decl.ty.clone(),
                        used: ty.clone(),
                    });
                }
                if let Some(c) = colour {
                    check_annotation(c, &sig.alphabet)?;
                }
                Ok(ty.clone())
            }
            Term::Bound { index, ty } => {
                if *index >= env.len() {
                    return Err(TypeError::UnboundIndex(*index));
                }
                let expected = env[env.len() - 1 - index].clone();
                if expected != *ty {
                    return Err(TypeError::BoundTypeMismatch {
                        index: *index,
                        expected,
                        found: ty.clone(),
                    });
                }
                Ok(ty.clone())
            }
            Term::App { func, arg } => {
                let fty = go(func, sig, env)?;
                let aty = go(arg, sig, env)?;
                match fty {
                    SimpleType::Arrow(from, to) => {
                        if *from == aty {
                            Ok(*to)
                        } else {
                            Err(TypeError::ArgumentMismatch {
                                term: print_term(arg),
                                expected: *from,
                                found: aty,
                            })
                        }
                    }
                    other => Err(TypeError::NotAFunction { term: print_term(func), ty: other }),
                }
            }
            Term::Lam { param, body, .. } => {
                check_base(param, sig)?;
                env.push(param.clone());
                let bty = go(body, sig, env)?;
                env.pop();
                Ok(SimpleType::arrow(param.clone(), bty))
            }
        }
    }

    let mut env = Vec::new();
    go(term, sig, &mut env)
}

/// β-normal form. Annotations ride along untouched; bound variables carry no
/// colour, so this is the classical notion.
fn beta_normal(term: &Term) -> Term {
    match term {
        Term::Const { .. } | Term::Free { .. } | Term::Bound { .. } => term.clone(),
        Term::Lam { hint, param, body } => Term::lam(hint.clone(), param.clone(), beta_normal(body)),
        Term::App { func, arg } => {
            let f = beta_normal(func);
            if let Term::Lam { body, .. } = f {
                beta_normal(&body.open(0, arg))
            } else {
                Term::app(f, beta_normal(arg))
            }
        }
    }
}

static HINTS: [&str; 4] = ["z", "w", "u", "v"];

fn nth_hint(i: usize) -> String {
    if i < HINTS.len() {
        HINTS[i].to_string()
    } else {
        format!("z{}", i)
    }
}

/// η-expand a β-normal term so every head is fully applied and every λ-body
/// has base type.
fn eta_long(term: &Term) -> Term {
    match term {
        Term::Lam { hint, param, body } => Term::lam(hint.clone(), param.clone(), eta_long(body)),
        _ => {
            let ty = term.ty();
            let missing: Vec<SimpleType> = ty.args().into_iter().cloned().collect();
            let n = missing.len();
            let (head, args) = term.spine();
            let head = head.clone();
            let args: Vec<Term> = args
                .into_iter()
                .map(|a| eta_long(&a.shift(n)))
                .collect();
            let mut body = Term::apps(head.shift(n), args);
            for (i, mty) in missing.iter().enumerate() {
                let idx = n - 1 - i;
                body = Term::app(body, eta_long(&Term::bound(idx, mty.clone())));
            }
            let mut out = body;
            for (i, mty) in missing.iter().enumerate().rev() {
                out = Term::lam(nth_hint(i), mty.clone(), out);
            }
            out
        }
    }
}

/// The η-long β-normal form, the canonical representative used everywhere.
pub fn normalize(term: &Term) -> Term {
    eta_long(&beta_normal(term))
}

/// True when a term is already in η-long β-normal form.
pub fn is_eta_long_normal(term: &Term) -> bool {
    fn neutral(t: &Term) -> bool {
        // head not a λ, all args η-long
        let (head, args) = t.spine();
        if matches!(head, Term::Lam { .. }) {
            return false;
        }
        let remaining = t.ty().arity();
        remaining == 0 && args.iter().all(|a| go(a))
    }
    fn go(t: &Term) -> bool {
        match t {
            Term::Lam { body, .. } => go(body),
            _ => neutral(t),
        }
    }
    go(term)
}

/// Delete every colour annotation.
pub fn erase(term: &Term) -> Term {
    match term {
        Term::Const { name, ty, .. } => Term::cnst(name.clone(), ty.clone()),
        Term::Free { name, ty, .. } => Term::free(name.clone(), ty.clone()),
        Term::Bound { .. } => term.clone(),
        Term::App { func, arg } => Term::app(erase(func), erase(arg)),
        Term::Lam { hint, param, body } => Term::lam(hint.clone(), param.clone(), erase(body)),
    }
}

/// Annotation compatibility for normalized comparison: ground formulae are
/// equal when they have the same satisfiers, a colour variable equals only
/// itself, and an absent annotation is an unconstrained wildcard (a fresh
/// variable with no other occurrence) that matches anything.
pub fn annotations_equal(
    a: Option<&ColourTerm>,
    b: Option<&ColourTerm>,
    alphabet: &ColourAlphabet,
) -> bool {
    match (a, b) {
        (None, _) | (_, None) => true,
        (Some(ColourTerm::Variable(x)), Some(ColourTerm::Variable(y))) => x == y,
        (Some(x), Some(y)) if x.is_ground() && y.is_ground() => {
            crate::colour::ground_equal(x, y, alphabet).unwrap_or(false)
        }
        _ => false,
    }
}

fn equal_normalized(a: &Term, b: &Term, alphabet: &ColourAlphabet) -> bool {
    match (a, b) {
        (
            Term::Const { name: na, ty: ta, colour: ca },
            Term::Const { name: nb, ty: tb, colour: cb },
        ) => na == nb && ta == tb && annotations_equal(ca.as_ref(), cb.as_ref(), alphabet),
        (
            Term::Free { name: na, ty: ta, colour: ca },
            Term::Free { name: nb, ty: tb, colour: cb },
        ) => na == nb && ta == tb && annotations_equal(ca.as_ref(), cb.as_ref(), alphabet),
        (Term::Bound { index: ia, .. }, Term::Bound { index: ib, .. }) => ia == ib,
        (Term::App { func: fa, arg: aa }, Term::App { func: fb, arg: ab }) => {
            equal_normalized(fa, fb, alphabet) && equal_normalized(aa, ab, alphabet)
        }
        (Term::Lam { param: pa, body: ba, .. }, Term::Lam { param: pb, body: bb, .. }) => {
            pa == pb && equal_normalized(ba, bb, alphabet)
        }
        _ => false,
    }
}

/// βη-equality: reduce both sides to η-long normal form and compare up to
/// α-renaming, requiring equal annotations on corresponding symbols.
pub fn alpha_beta_eta_equal(a: &Term, b: &Term, alphabet: &ColourAlphabet) -> bool {
    equal_normalized(&normalize(a), &normalize(b), alphabet)
}

/// Assert that every annotated symbol of `term` entails `colour`; bound
/// variables are exempt, unannotated symbols are unconstrained wildcards.
/// Constraints on colour-variable annotations are deferred in the store.
pub fn monochrome_constraints(
    term: &Term,
    colour: &ColourTerm,
    store: &ColourStore,
) -> Result<ColourStore, Unsat> {
    let mut s = store.clone();
    let mut pending: Vec<ColourTerm> = Vec::new();
    term.visit_symbols(&mut |sym| {
        if let Some(c) = sym.colour {
            pending.push(c.clone());
        }
    });
    for d in pending {
        s = s.assert_entailment(&d, colour)?;
    }
    Ok(s)
}

/// Quick ground check used by reports: does annotation `d` violate `c`?
pub fn ground_violates(
    d: &ColourTerm,
    c: &ColourTerm,
    alphabet: &ColourAlphabet,
) -> bool {
    if d.is_ground() && c.is_ground() {
        !entails_ground(d, c, alphabet).unwrap_or(true)
    } else {
        false
    }
}

// ---------------------------------------------------------------------------
// Pretty-printing. Application is printed in the parenthesized comma form
// `like(dan_pe, golf)`, annotations as a `_colour` suffix, lambdas as
// `\x. body`. Round-trips through the DSL parser.
// ---------------------------------------------------------------------------

fn annotation_suffix(colour: Option<&ColourTerm>) -> String {
    match colour {
        None => String::new(),
        Some(c) => match c {
            ColourTerm::Constant(_) | ColourTerm::Variable(_) | ColourTerm::Not(_) => {
                format!("_{c}")
            }
            _ => format!("_({c})"),
        },
    }
}

fn pick_name(hint: &str, taken: &BTreeSet<String>) -> String {
    let mut name = if hint.is_empty() { "x".to_string() } else { hint.to_string() };
    while taken.contains(&name) {
        name.push('\'');
    }
    name
}

fn collect_symbol_names(t: &Term, out: &mut BTreeSet<String>) {
    t.visit_symbols(&mut |s| {
        out.insert(s.name.to_string());
    });
}

fn print_inner(t: &Term, names: &mut Vec<String>, taken: &BTreeSet<String>, out: &mut String) {
    match t {
        Term::Const { name, colour, .. } | Term::Free { name, colour, .. } => {
            out.push_str(name);
            out.push_str(&annotation_suffix(colour.as_ref()));
        }
        Term::Bound { index, .. } => {
            if *index < names.len() {
                out.push_str(&names[names.len() - 1 - index]);
            } else {
                out.push_str(&format!("#{index}"));
            }
        }
        Term::App { .. } => {
            let (head, args) = t.spine();
            match head {
                Term::Lam { .. } => {
                    out.push('(');
                    print_inner(head, names, taken, out);
                    out.push(')');
                }
                _ => print_inner(head, names, taken, out),
            }
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_inner(a, names, taken, out);
            }
            out.push(')');
        }
        Term::Lam { hint, body, .. } => {
            let mut scope_taken = taken.clone();
            for n in names.iter() {
                scope_taken.insert(n.clone());
            }
            let name = pick_name(hint, &scope_taken);
            out.push('\\');
            out.push_str(&name);
            out.push_str(". ");
            names.push(name);
            print_inner(body, names, taken, out);
            names.pop();
        }
    }
}

/// Render a term in the concrete syntax.
pub fn print_term(t: &Term) -> String {
    let mut taken = BTreeSet::new();
    collect_symbol_names(t, &mut taken);
    let mut names = Vec::new();
    let mut out = String::new();
    print_inner(t, &mut names, &taken, &mut out);
    out
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print_term(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colour::ColourAlphabet;

    fn alpha() -> ColourAlphabet {
        ColourAlphabet::new(["pe", "pf", "ps"]).unwrap()
    }

    fn sig() -> Signature {
        let mut s = Signature::new(alpha());
        s.add_base_type("e");
        s.add_base_type("t");
        let e = SimpleType::base("e");
        let t = SimpleType::base("t");
        s.add_constant("like", SimpleType::fun([e.clone(), e.clone()], t.clone()));
        s.add_constant("dan", e.clone());
        s.add_constant("golf", e.clone());
        s.add_constant("a", e.clone());
        s.add_constant("i", e.clone());
        s.add_constant("f", SimpleType::arrow(e.clone(), t.clone()));
        s.add_variable_col("R", SimpleType::arrow(e.clone(), t.clone()), not_pe());
        s
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

    fn like_dan_golf(dan_colour: Option<ColourTerm>) -> Term {
        let like = Term::cnst("like", SimpleType::fun([e(), e()], t()));
        let dan = match dan_colour {
            Some(c) => Term::cnst_col("dan", e(), c),
            None => Term::cnst("dan", e()),
        };
        Term::apps(like, [dan, Term::cnst("golf", e())])
    }

    #[test]
    fn typecheck_application() {
        assert_eq!(typecheck(&like_dan_golf(None), &sig()).unwrap(), t());
    }

    #[test]
    fn typecheck_identity_lambda() {
        let id = Term::lam("x", e(), Term::bound(0, e()));
        assert_eq!(typecheck(&id, &sig()).unwrap(), SimpleType::arrow(e(), e()));
    }

    #[test]
    fn typecheck_non_function_head() {
        let bad = Term::app(Term::cnst("dan", e()), Term::cnst("golf", e()));
        let err = typecheck(&bad, &sig()).unwrap_err();
        assert!(matches!(err, TypeError::NotAFunction { .. }), "{err}");
    }

    #[test]
    fn typecheck_undeclared_name() {
        let bad = Term::cnst("zebra", e());
        assert!(matches!(typecheck(&bad, &sig()).unwrap_err(), TypeError::UndeclaredConstant(_)));
    }

    #[test]
    fn beta_reduces_identity_application() {
        // (\z. z) a_c beta-reduces to a_c
        let a_c = Term::cnst_col("a", e(), ColourTerm::constant("pe"));
        let tm = Term::app(Term::lam("z", e(), Term::bound(0, e())), a_c.clone());
        assert_eq!(normalize(&tm), a_c);
    }

    #[test]
    fn beta_reduces_two_argument_projection() {
        // (\z. \w. w)(i_pf, c) beta-reduces to c
        let i_pf = Term::cnst_col("i", e(), ColourTerm::constant("pf"));
        let c = Term::cnst("a", e());
        let proj = Term::lam("z", e(), Term::lam("w", e(), Term::bound(0, e())));
        let tm = Term::apps(proj, [i_pf, c.clone()]);
        assert_eq!(normalize(&tm), c);
    }

    #[test]
    fn eta_long_is_fixed_point_on_expanded_form() {
        let f = Term::cnst("f", SimpleType::arrow(e(), t()));
        let expanded = Term::lam("x", e(), Term::app(f.clone(), Term::bound(0, e())));
        assert_eq!(normalize(&expanded), expanded);
        // a bare function constant expands
        assert_eq!(normalize(&f), Term::lam("z", e(), Term::app(f, Term::bound(0, e()))));
    }

    #[test]
    fn normalize_is_idempotent() {
        let f = Term::cnst("f", SimpleType::arrow(e(), t()));
        let sample = Term::app(
            Term::lam("x", e(), Term::app(f.clone(), Term::bound(0, e()))),
            Term::cnst("dan", e()),
        );
        let once = normalize(&sample);
        assert_eq!(normalize(&once), once);
        assert!(is_eta_long_normal(&once));
    }

    #[test]
    fn subject_reduction() {
        let s = sig();
        let f = Term::cnst("f", SimpleType::arrow(e(), t()));
        let sample = Term::app(
            Term::lam("x", e(), Term::app(f, Term::bound(0, e()))),
            Term::cnst("dan", e()),
        );
        let before = typecheck(&sample, &s).unwrap();
        let after = typecheck(&normalize(&sample), &s).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn alpha_equivalence_is_structural() {
        // \x. like(x, golf) and \y. like(y, golf) are the same tree
        let body = Term::apps(
            Term::cnst("like", SimpleType::fun([e(), e()], t())),
            [Term::bound(0, e()), Term::cnst("golf", e())],
        );
        let lx = Term::lam("x", e(), body.clone());
        let ly = Term::lam("y", e(), body);
        assert!(alpha_beta_eta_equal(&lx, &ly, &alpha()));
    }

    #[test]
    fn annotation_mismatch_breaks_equality() {
        let a_pe = Term::cnst_col("a", e(), ColourTerm::constant("pe"));
        let a_pf = Term::cnst_col("a", e(), ColourTerm::constant("pf"));
        assert!(!alpha_beta_eta_equal(&a_pe, &a_pf, &alpha()));
    }

    #[test]
    fn absent_annotation_is_a_wildcard_in_equality() {
        let a_plain = Term::cnst("a", e());
        let a_pe = Term::cnst_col("a", e(), ColourTerm::constant("pe"));
        assert!(alpha_beta_eta_equal(&a_plain, &a_pe, &alpha()));
        assert!(alpha_beta_eta_equal(&a_pe, &a_plain, &alpha()));
    }

    #[test]
    fn beta_eta_equality_through_redex() {
        // (\x. like(x, golf))(dan) == like(dan, golf)
        let redex = Term::app(
            Term::lam(
                "x",
                e(),
                Term::apps(
                    Term::cnst("like", SimpleType::fun([e(), e()], t())),
                    [Term::bound(0, e()), Term::cnst("golf", e())],
                ),
            ),
            Term::cnst("dan", e()),
        );
        assert!(alpha_beta_eta_equal(&redex, &like_dan_golf(None), &alpha()));
    }

    #[test]
    fn ground_equivalent_annotations_compare_equal() {
        let not_pe = Term::cnst_col("a", e(), ColourTerm::not(ColourTerm::constant("pe")));
        let disj = Term::cnst_col(
            "a",
            e(),
            ColourTerm::or(ColourTerm::constant("pf"), ColourTerm::constant("ps")),
        );
        assert!(alpha_beta_eta_equal(&not_pe, &disj, &alpha()));
    }

    #[test]
    fn erase_removes_all_annotations() {
        let coloured = like_dan_golf(Some(ColourTerm::constant("pe")));
        assert_eq!(erase(&coloured), like_dan_golf(None));
        assert_eq!(erase(&erase(&coloured)), erase(&coloured));
        // variable annotations erase too
        let f_a = Term::lam(
            "x",
            e(),
            Term::app(
                Term::free_col("R", SimpleType::arrow(e(), t()), ColourTerm::variable("A")),
                Term::bound(0, e()),
            ),
        );
        let f_plain = Term::lam(
            "x",
            e(),
            Term::app(Term::free("R", SimpleType::arrow(e(), t())), Term::bound(0, e())),
        );
        assert_eq!(erase(&f_a), f_plain);
    }

    #[test]
    fn erase_commutes_with_normalize() {
        let f = Term::cnst("f", SimpleType::arrow(e(), t()));
        let sample = Term::app(
            Term::lam(
                "x",
                e(),
                Term::app(f, Term::cnst_col("dan", e(), ColourTerm::constant("pe"))),
            ),
            Term::cnst("golf", e()),
        );
        assert_eq!(erase(&normalize(&sample)), normalize(&erase(&sample)));
    }

    #[test]
    fn monochrome_accepts_wildcards_and_bound() {
        // \x. like(x, golf) with everything unannotated is fine at ~pe
        let body = Term::apps(
            Term::cnst("like", SimpleType::fun([e(), e()], t())),
            [Term::bound(0, e()), Term::cnst("golf", e())],
        );
        let lx = Term::lam("x", e(), body);
        let store = ColourStore::new(alpha());
        assert!(monochrome_constraints(&lx, &not_pe(), &store).is_ok());
        // identity: only a bound symbol
        let id = Term::lam("x", e(), Term::bound(0, e()));
        assert!(monochrome_constraints(&id, &ColourTerm::constant("pe"), &store).is_ok());
    }

    #[test]
    fn monochrome_rejects_primary_occurrence() {
        // \x. like(dan_pe, golf) is not ~pe-monochrome
        let body = Term::apps(
            Term::cnst("like", SimpleType::fun([e(), e()], t())),
            [
                Term::cnst_col("dan", e(), ColourTerm::constant("pe")),
                Term::cnst("golf", e()),
            ],
        );
        let lx = Term::lam("x", e(), body);
        let store = ColourStore::new(alpha());
        assert!(monochrome_constraints(&lx, &not_pe(), &store).is_err());
    }

    #[test]
    fn normalize_keeps_annotations_intact() {
        let i_pf = Term::cnst_col("i", e(), ColourTerm::constant("pf"));
        let tm = Term::app(Term::lam("z", e(), Term::bound(0, e())), i_pf.clone());
        let mut seen = Vec::new();
        normalize(&tm).visit_symbols(&mut |s| seen.push(s.colour.cloned()));
        assert_eq!(seen, vec![Some(ColourTerm::constant("pf"))]);
    }

    #[test]
    fn printing_uses_comma_form_and_suffixes() {
        let tm = like_dan_golf(Some(ColourTerm::constant("pe")));
        assert_eq!(print_term(&tm), "like(dan_pe, golf)");
        let r = Term::free_col("R", SimpleType::arrow(e(), t()), not_pe());
        assert_eq!(print_term(&r), "R_~pe");
    }

    #[test]
    fn printing_renames_shadowed_binders() {
        // \x. \x. x(...) style shadowing gets ticks
        let inner = Term::lam("x", e(), Term::bound(0, e()));
        let outer = Term::lam("x", e(), Term::lam("x", e(), Term::bound(1, e())));
        assert_eq!(print_term(&inner), "\\x. x");
        assert_eq!(print_term(&outer), "\\x. \\x'. x");
    }
}
