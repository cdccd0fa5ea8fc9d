//! Colours, boolean colour formulae, and colour constraint stores.
//!
//! A colour is an annotation on a symbol occurrence, not a sort. Ground
//! colours are boolean formulae over a finite alphabet of colour constants;
//! a single constant `d` denotes the valuation that makes `d` true and every
//! other constant false, so `d` entails `~e` exactly when `d != e`. Colour
//! variables range over the alphabet constants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// The finite, ordered set of colour constants a problem works over.
///
/// Empty means the problem mentions no colours at all. A singleton alphabet
/// is rejected: negation would be unsatisfiable and every constraint trivial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColourAlphabet {
    constants: Vec<String>,
}

impl ColourAlphabet {
    pub fn empty() -> Self {
        ColourAlphabet { constants: Vec::new() }
    }

    pub fn new<I, S>(names: I) -> Result<Self, ColourError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut constants: Vec<String> = Vec::new();
        for n in names {
            let n = n.into();
            if n.is_empty() {
                return Err(ColourError::EmptyName);
            }
            if constants.contains(&n) {
                return Err(ColourError::DuplicateConstant(n));
            }
            constants.push(n);
        }
        if constants.len() == 1 {
            return Err(ColourError::AlphabetTooSmall);
        }
        Ok(ColourAlphabet { constants })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.constants.iter().any(|c| c == name)
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.constants.iter().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.constants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constants.is_empty()
    }
}

/// A colour annotation: a constant of the alphabet, a colour variable, or a
/// boolean formula over them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ColourTerm {
    Constant(String),
    Variable(String),
    Not(Box<ColourTerm>),
    And(Box<ColourTerm>, Box<ColourTerm>),
    Or(Box<ColourTerm>, Box<ColourTerm>),
}

impl ColourTerm {
    pub fn constant(name: impl Into<String>) -> Self {
        ColourTerm::Constant(name.into())
    }

    pub fn variable(name: impl Into<String>) -> Self {
        ColourTerm::Variable(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: ColourTerm) -> Self {
        ColourTerm::Not(Box::new(inner))
    }

    pub fn and(a: ColourTerm, b: ColourTerm) -> Self {
        ColourTerm::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: ColourTerm, b: ColourTerm) -> Self {
        ColourTerm::Or(Box::new(a), Box::new(b))
    }

    /// True when the formula mentions no colour variable.
    pub fn is_ground(&self) -> bool {
        match self {
            ColourTerm::Constant(_) => true,
            ColourTerm::Variable(_) => false,
            ColourTerm::Not(a) => a.is_ground(),
            ColourTerm::And(a, b) | ColourTerm::Or(a, b) => a.is_ground() && b.is_ground(),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            ColourTerm::Constant(_) => {}
            ColourTerm::Variable(v) => {
                if !out.iter().any(|x| x == v) {
                    out.push(v.clone());
                }
            }
            ColourTerm::Not(a) => a.collect_vars(out),
            ColourTerm::And(a, b) | ColourTerm::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn mentions_var(&self, name: &str) -> bool {
        match self {
            ColourTerm::Constant(_) => false,
            ColourTerm::Variable(v) => v == name,
            ColourTerm::Not(a) => a.mentions_var(name),
            ColourTerm::And(a, b) | ColourTerm::Or(a, b) => {
                a.mentions_var(name) || b.mentions_var(name)
            }
        }
    }

    /// Substitute bound colour variables.
    pub fn substitute(&self, bindings: &BTreeMap<String, ColourTerm>) -> ColourTerm {
        match self {
            ColourTerm::Constant(_) => self.clone(),
            ColourTerm::Variable(v) => match bindings.get(v) {
                Some(t) => t.clone(),
                None => self.clone(),
            },
            ColourTerm::Not(a) => ColourTerm::not(a.substitute(bindings)),
            ColourTerm::And(a, b) => {
                ColourTerm::and(a.substitute(bindings), b.substitute(bindings))
            }
            ColourTerm::Or(a, b) => ColourTerm::or(a.substitute(bindings), b.substitute(bindings)),
        }
    }

    /// Evaluate a ground formula in the world where exactly `world` holds.
    fn eval(&self, world: &str) -> bool {
        match self {
            ColourTerm::Constant(c) => c == world,
            ColourTerm::Variable(v) => {
                unreachable!("eval on non-ground colour term (variable {v})")
            }
            ColourTerm::Not(a) => !a.eval(world),
            ColourTerm::And(a, b) => a.eval(world) && b.eval(world),
            ColourTerm::Or(a, b) => a.eval(world) || b.eval(world),
        }
    }

    /// The set of alphabet constants satisfying a ground formula.
    pub fn satisfiers(&self, alphabet: &ColourAlphabet) -> Result<BTreeSet<String>, ColourError> {
        if !self.is_ground() {
            return Err(ColourError::NotGround(self.clone()));
        }
        self.check_alphabet(alphabet)?;
        let mut out = BTreeSet::new();
        for k in alphabet.constants() {
            if self.eval(k) {
                out.insert(k.to_string());
            }
        }
        Ok(out)
    }

    /// Every constant mentioned must belong to the alphabet.
    pub fn check_alphabet(&self, alphabet: &ColourAlphabet) -> Result<(), ColourError> {
        match self {
            ColourTerm::Constant(c) => {
                if alphabet.contains(c) {
                    Ok(())
                } else {
                    Err(ColourError::UnknownConstant(c.clone()))
                }
            }
            ColourTerm::Variable(_) => Ok(()),
            ColourTerm::Not(a) => a.check_alphabet(alphabet),
            ColourTerm::And(a, b) | ColourTerm::Or(a, b) => {
                a.check_alphabet(alphabet)?;
                b.check_alphabet(alphabet)
            }
        }
    }
}

impl fmt::Display for ColourTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // precedence: ~ binds tighter than &, which binds tighter than |
        fn go(t: &ColourTerm, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
            match t {
                ColourTerm::Constant(c) => write!(f, "{c}"),
                ColourTerm::Variable(v) => write!(f, "{v}"),
                ColourTerm::Not(a) => {
                    write!(f, "~")?;
                    go(a, f, 2)
                }
                ColourTerm::And(a, b) => {
                    if prec > 1 {
                        write!(f, "(")?;
                    }
                    go(a, f, 2)?;
                    write!(f, " & ")?;
                    go(b, f, 2)?;
                    if prec > 1 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                ColourTerm::Or(a, b) => {
                    if prec > 0 {
                        write!(f, "(")?;
                    }
                    go(a, f, 1)?;
                    write!(f, " | ")?;
                    go(b, f, 1)?;
                    if prec > 0 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
            }
        }
        go(self, f, 0)
    }
}

/// Errors from misuse of the colour algebra (not unsatisfiability).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColourError {
    UnknownConstant(String),
    DuplicateConstant(String),
    AlphabetTooSmall,
    EmptyName,
    NotGround(ColourTerm),
    NotAConstant(ColourTerm),
}

impl fmt::Display for ColourError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColourError::UnknownConstant(c) => {
                write!(f, "colour constant `{c}` is not in the alphabet")
            }
            ColourError::DuplicateConstant(c) => {
                write!(f, "duplicate colour constant `{c}` in alphabet")
            }
            ColourError::AlphabetTooSmall => {
                write!(f, "a colour alphabet needs at least two constants")
            }
            ColourError::EmptyName => write!(f, "empty colour constant name"),
            ColourError::NotGround(t) => write!(f, "colour term `{t}` is not ground"),
            ColourError::NotAConstant(t) => write!(f, "colour term `{t}` is not a constant"),
        }
    }
}

impl std::error::Error for ColourError {}

/// Unsatisfiability of colour constraints. A value, not a failure of the
/// machinery: branches of the search are pruned by it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unsat {
    pub reason: String,
}

impl Unsat {
    pub fn new(reason: impl Into<String>) -> Self {
        Unsat { reason: reason.into() }
    }
}

impl fmt::Display for Unsat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unsatisfiable: {}", self.reason)
    }
}

/// `ground |= formula` where `ground` is a single colour constant.
pub fn entails(
    ground: &ColourTerm,
    formula: &ColourTerm,
    alphabet: &ColourAlphabet,
) -> Result<bool, ColourError> {
    let name = match ground {
        ColourTerm::Constant(c) => c,
        other => return Err(ColourError::NotAConstant(other.clone())),
    };
    if !alphabet.contains(name) {
        return Err(ColourError::UnknownConstant(name.clone()));
    }
    if !formula.is_ground() {
        return Err(ColourError::NotGround(formula.clone()));
    }
    formula.check_alphabet(alphabet)?;
    Ok(formula.eval(name))
}

/// Generalized entailment between ground formulae: every constant satisfying
/// `d` also satisfies `c`.
pub fn entails_ground(
    d: &ColourTerm,
    c: &ColourTerm,
    alphabet: &ColourAlphabet,
) -> Result<bool, ColourError> {
    let sd = d.satisfiers(alphabet)?;
    let sc = c.satisfiers(alphabet)?;
    Ok(sd.is_subset(&sc))
}

/// Two ground formulae are equal when they are satisfied by exactly the same
/// constants, so `~pe` equals the explicit disjunction of the other colours.
pub fn ground_equal(
    a: &ColourTerm,
    b: &ColourTerm,
    alphabet: &ColourAlphabet,
) -> Result<bool, ColourError> {
    Ok(a.satisfiers(alphabet)? == b.satisfiers(alphabet)?)
}

/// A set of colour equations and entailment constraints together with the
/// bindings accumulated for colour variables. Immutable: operations return
/// new stores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColourStore {
    alphabet: ColourAlphabet,
    bindings: BTreeMap<String, ColourTerm>,
    /// Deferred `annotation |= bound` constraints, kept in assertion order.
    entailments: Vec<(ColourTerm, ColourTerm)>,
    /// Deferred equations that could not be oriented into a binding.
    equations: Vec<(ColourTerm, ColourTerm)>,
    /// Colour variables in first-mention order; drives enumeration.
    var_order: Vec<String>,
}

impl ColourStore {
    pub fn new(alphabet: ColourAlphabet) -> Self {
        ColourStore {
            alphabet,
            bindings: BTreeMap::new(),
            entailments: Vec::new(),
            equations: Vec::new(),
            var_order: Vec::new(),
        }
    }

    pub fn alphabet(&self) -> &ColourAlphabet {
        &self.alphabet
    }

    pub fn bindings(&self) -> &BTreeMap<String, ColourTerm> {
        &self.bindings
    }

    pub fn resolve(&self, t: &ColourTerm) -> ColourTerm {
        t.substitute(&self.bindings)
    }

    fn note_vars(&mut self, t: &ColourTerm) {
        let mut vars = Vec::new();
        t.collect_vars(&mut vars);
        for v in vars {
            if !self.var_order.contains(&v) {
                self.var_order.push(v);
            }
        }
    }

    /// Bind a colour variable, keeping bindings idempotent and re-checking
    /// every constraint that becomes ground.
    pub fn bind(&self, var: &str, value: &ColourTerm) -> Result<ColourStore, Unsat> {
        let mut s = self.clone();
        s.note_vars(&ColourTerm::variable(var));
        s.note_vars(value);
        let value = s.resolve(value);
        if let Some(existing) = s.bindings.get(var) {
            let existing = existing.clone();
            return s.unify(&existing, &value);
        }
        if value == ColourTerm::Variable(var.to_string()) {
            return Ok(s);
        }
        if value.mentions_var(var) {
            // e.g. A = ~A; leave it for enumeration to decide
            s.equations.push((ColourTerm::variable(var), value));
            return s.recheck();
        }
        let single = {
            let mut m = BTreeMap::new();
            m.insert(var.to_string(), value.clone());
            m
        };
        for rhs in s.bindings.values_mut() {
            *rhs = rhs.substitute(&single);
        }
        for (a, b) in s.entailments.iter_mut() {
            *a = a.substitute(&single);
            *b = b.substitute(&single);
        }
        for (a, b) in s.equations.iter_mut() {
            *a = a.substitute(&single);
            *b = b.substitute(&single);
        }
        s.bindings.insert(var.to_string(), value);
        s.recheck()
    }

    /// Unify two colour terms: bind a variable side, or require ground
    /// equality (same satisfying constants) when both sides are ground.
    pub fn unify(&self, a: &ColourTerm, b: &ColourTerm) -> Result<ColourStore, Unsat> {
        let mut s = self.clone();
        s.note_vars(a);
        s.note_vars(b);
        let a = s.resolve(a);
        let b = s.resolve(b);
        if a == b {
            return Ok(s);
        }
        if a.is_ground() && b.is_ground() {
            match ground_equal(&a, &b, &s.alphabet) {
                Ok(true) => Ok(s),
                Ok(false) => Err(Unsat::new(format!("colour clash: {a} vs {b}"))),
                Err(e) => Err(Unsat::new(e.to_string())),
            }
        } else if let ColourTerm::Variable(v) = &a {
            s.bind(&v.clone(), &b)
        } else if let ColourTerm::Variable(v) = &b {
            s.bind(&v.clone(), &a)
        } else {
            // variable buried inside a formula: defer to enumeration
            s.equations.push((a, b));
            s.recheck()
        }
    }

    /// Record `annotation |= bound`; ground instances are checked at once,
    /// the rest is re-checked whenever a binding lands.
    pub fn assert_entailment(
        &self,
        annotation: &ColourTerm,
        bound: &ColourTerm,
    ) -> Result<ColourStore, Unsat> {
        let mut s = self.clone();
        s.note_vars(annotation);
        s.note_vars(bound);
        let a = s.resolve(annotation);
        let b = s.resolve(bound);
        s.entailments.push((a, b));
        s.recheck()
    }

    /// Re-check every constraint whose sides are ground.
    fn recheck(self) -> Result<ColourStore, Unsat> {
        for (a, b) in &self.entailments {
            if a.is_ground() && b.is_ground() {
                match entails_ground(a, b, &self.alphabet) {
                    Ok(true) => {}
                    Ok(false) => {
                        return Err(Unsat::new(format!("{a} does not entail {b}")));
                    }
                    Err(e) => return Err(Unsat::new(e.to_string())),
                }
            }
        }
        for (a, b) in &self.equations {
            if a.is_ground() && b.is_ground() {
                match ground_equal(a, b, &self.alphabet) {
                    Ok(true) => {}
                    Ok(false) => {
                        return Err(Unsat::new(format!("colour clash: {a} vs {b}")));
                    }
                    Err(e) => return Err(Unsat::new(e.to_string())),
                }
            }
        }
        Ok(self)
    }

    fn unbound_vars(&self) -> Vec<String> {
        self.var_order
            .iter()
            .filter(|v| !self.bindings.contains_key(*v))
            .cloned()
            .collect()
    }

    /// Enumerate every assignment of alphabet constants to the unbound colour
    /// variables that satisfies all constraints. Deterministic: variables in
    /// first-mention order, each ranging over the alphabet in declaration
    /// order, last variable varying fastest. An empty result means unsat;
    /// with no unbound variables the result is the single resolved binding
    /// map (or nothing, if some ground constraint fails).
    pub fn solve(&self) -> Vec<BTreeMap<String, ColourTerm>> {
        let vars = self.unbound_vars();
        let consts: Vec<&str> = self.alphabet.constants().collect();
        let mut results = Vec::new();
        if vars.is_empty() {
            if self.check_assignment(&BTreeMap::new()) {
                results.push(self.complete(&BTreeMap::new()));
            }
            return results;
        }
        if consts.is_empty() {
            return results;
        }
        let mut idx = vec![0usize; vars.len()];
        loop {
            let assignment: BTreeMap<String, ColourTerm> = vars
                .iter()
                .zip(idx.iter())
                .map(|(v, i)| (v.clone(), ColourTerm::constant(consts[*i])))
                .collect();
            if self.check_assignment(&assignment) {
                results.push(self.complete(&assignment));
            }
            // advance odometer, last variable fastest
            let mut pos = idx.len();
            loop {
                if pos == 0 {
                    return results;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < consts.len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    /// True when the constraints admit at least one ground completion.
    pub fn satisfiable(&self) -> bool {
        !self.solve().is_empty()
    }

    fn check_assignment(&self, assignment: &BTreeMap<String, ColourTerm>) -> bool {
        let ground = |t: &ColourTerm| t.substitute(&self.bindings).substitute(assignment);
        for (a, b) in &self.entailments {
            match entails_ground(&ground(a), &ground(b), &self.alphabet) {
                Ok(true) => {}
                _ => return false,
            }
        }
        for (a, b) in &self.equations {
            match ground_equal(&ground(a), &ground(b), &self.alphabet) {
                Ok(true) => {}
                _ => return false,
            }
        }
        true
    }

    fn complete(&self, assignment: &BTreeMap<String, ColourTerm>) -> BTreeMap<String, ColourTerm> {
        let mut full: BTreeMap<String, ColourTerm> = BTreeMap::new();
        for (v, t) in &self.bindings {
            full.insert(v.clone(), t.substitute(assignment));
        }
        for (v, t) in assignment {
            full.insert(v.clone(), t.clone());
        }
        full
    }
}
