//! The coloured unification engine: a transformation system on equation
//! sets with decomposition rules, colour- and term-variable elimination, and
//! flex/rigid general bindings, searched under a depth bound.
//!
//! Deterministic rules are applied eagerly in a fixed order; flex/rigid
//! equations branch over the general bindings (imitation first, then
//! projections left to right). Flex/flex equations are left as residual
//! constraints of a pre-solution. Every emitted solution passes `validate`,
//! which shares no code path with the search.

use crate::colour::{ColourAlphabet, ColourStore, ColourTerm, Unsat};
use crate::subst::{
    check_legal_with_store, CSubstitution, ColourKey, LegalityReport, LegalityViolation,
};
use crate::term::{
    alpha_beta_eta_equal, annotations_equal, monochrome_constraints, normalize, print_term,
    typecheck, Signature, SimpleType, Term, TypeError,
};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquationBody {
    Term { lhs: Term, rhs: Term },
    Colour { lhs: ColourTerm, rhs: ColourTerm },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqStatus {
    Unsolved,
    /// A binding `x = M` kept for the record; mirrored in the accumulated
    /// substitution.
    Solved,
    /// Discharged: trivial, or replaced by its decomposition.
    Deleted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub body: EquationBody,
    pub status: EqStatus,
    /// How many general bindings this equation's chain has consumed: the
    /// residual subproblems of a binding sit one level below the equation
    /// the binding was chosen for. The search bound caps this nesting.
    pub depth: usize,
}

impl Equation {
    fn display(&self) -> String {
        match &self.body {
            EquationBody::Term { lhs, rhs } => {
                format!("{} = {}", print_term(lhs), print_term(rhs))
            }
            EquationBody::Colour { lhs, rhs } => format!("{lhs} =c {rhs}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    IterativeDeepening,
    DepthFirst,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// General-binding applications allowed per branch, measured along one
    /// equation's chain of residual subproblems (sibling argument equations
    /// each get the full allowance).
    pub max_bindings: usize,
    pub max_solutions: usize,
    pub strategy: Strategy,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_bindings: 10,
            max_solutions: 50,
            strategy: Strategy::IterativeDeepening,
        }
    }
}

/// A validated unifier: the accumulated substitution restricted to the
/// problem's original variables, the residual colour store, any residual
/// flex/flex constraints (making it a pre-solution), and the rule trace of
/// its derivation.
#[derive(Debug, Clone)]
pub struct Solution {
    pub substitution: CSubstitution,
    pub store: ColourStore,
    pub flex_flex: Vec<(Term, Term)>,
    pub trace: Vec<String>,
    /// Signature extended with the fresh variables the derivation invented;
    /// images may mention them in pre-solutions.
    pub sig: Signature,
    pub forbidden: BTreeSet<String>,
}

impl Solution {
    pub fn is_pre_solution(&self) -> bool {
        !self.flex_flex.is_empty()
    }

    pub fn to_lines(&self) -> Vec<String> {
        let mut lines = self.substitution.to_lines();
        for (l, r) in &self.flex_flex {
            lines.push(format!("constraint {} = {}", print_term(l), print_term(r)));
        }
        lines
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solutions: Vec<Solution>,
    /// True when some branch of the final round was cut off by the binding
    /// bound: the enumeration may be incomplete. False means the search
    /// space below the bound was exhausted.
    pub bound_reached: bool,
    pub trace: Vec<String>,
}

/// Counters for fresh names. Generated names start with `$`, which the
/// surface syntax never produces for declarations.
#[derive(Debug, Clone, Default)]
struct Fresh {
    skolem: usize,
    var: usize,
    colour: usize,
}

impl Fresh {
    fn skolem(&mut self) -> String {
        let n = format!("$c{}", self.skolem);
        self.skolem += 1;
        n
    }

    fn var(&mut self) -> String {
        let n = format!("$H{}", self.var);
        self.var += 1;
        n
    }

    fn colour(&mut self) -> String {
        let n = format!("$A{}", self.colour);
        self.colour += 1;
        n
    }
}

/// Why a branch died.
#[derive(Debug, Clone)]
pub struct Prune(pub String);

/// A snapshot of the equation set under transformation.
#[derive(Debug, Clone)]
pub struct ProblemState {
    pub sig: Signature,
    pub equations: Vec<Equation>,
    pub store: ColourStore,
    pub forbidden: BTreeSet<String>,
    pub accumulated: CSubstitution,
    fresh: Fresh,
    trace: Vec<String>,
}

enum Shape {
    Lambda,
    Rigid,
    Flex,
}

fn side_shape(t: &Term) -> Shape {
    match t {
        Term::Lam { .. } => Shape::Lambda,
        _ => {
            let (head, _) = t.spine();
            match head {
                Term::Free { .. } => Shape::Flex,
                Term::Const { .. } => Shape::Rigid,
                Term::Bound { .. } => unreachable!("loose bound variable at equation top level"),
                Term::Lam { .. } | Term::App { .. } => unreachable!("non-normal equation side"),
            }
        }
    }
}

/// Detect a solved-form side: a bare free variable, possibly η-expanded to
/// `\z1...zn. x(z1, ..., zn)`.
fn as_solved_form(t: &Term) -> Option<(String, Option<ColourTerm>, SimpleType)> {
    if let Term::Free { name, ty, colour } = t {
        return Some((name.clone(), colour.clone(), ty.clone()));
    }
    let (binders, body) = t.strip_lams();
    if binders.is_empty() {
        return None;
    }
    let (head, args) = body.spine();
    let (name, ty, colour) = match head {
        Term::Free { name, ty, colour } => (name, ty, colour),
        _ => return None,
    };
    if args.len() != binders.len() {
        return None;
    }
    for (i, (_, bty)) in binders.iter().enumerate() {
        let expected = normalize(&Term::bound(binders.len() - 1 - i, bty.clone()));
        if *args[i] != expected {
            return None;
        }
    }
    Some((name.clone(), colour.clone(), ty.clone()))
}

/// Does a symbol matching `pred` occur where substitution cannot remove it?
/// Constants qualify anywhere along rigid spines; a free variable only as a
/// bare occurrence strictly inside a rigid context, since occurrences at a
/// flex head (and the whole side being that variable) can still be
/// collapsed or matched by an instantiation.
fn occurs_rigidly(t: &Term, pred: &impl Fn(&Term) -> bool) -> bool {
    fn go(t: &Term, pred: &impl Fn(&Term) -> bool, root: bool) -> bool {
        let (_, body) = t.strip_lams();
        let (head, args) = body.spine();
        match head {
            Term::Free { .. } => !root && args.is_empty() && pred(head),
            _ => pred(head) || args.iter().any(|a| go(a, pred, false)),
        }
    }
    go(t, pred, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingKind {
    Imitation,
    Projection(usize),
}

impl ProblemState {
    /// Typecheck and normalize a problem into an initial state.
    pub fn new(equations: Vec<EquationBody>, sig: &Signature) -> Result<ProblemState, TypeError> {
        let mut eqs = Vec::new();
        for body in equations {
            match body {
                EquationBody::Term { lhs, rhs } => {
                    let lt = typecheck(&lhs, sig)?;
                    let rt = typecheck(&rhs, sig)?;
                    if lt != rt {
                        return Err(TypeError::ArgumentMismatch {
                            term: print_term(&rhs),
                            expected: lt,
                            found: rt,
                        });
                    }
                    eqs.push(Equation {
                        body: EquationBody::Term { lhs: normalize(&lhs), rhs: normalize(&rhs) },
                        status: EqStatus::Unsolved,
                        depth: 0,
                    });
                }
                EquationBody::Colour { lhs, rhs } => {
                    lhs.check_alphabet(&sig.alphabet)
                        .map_err(TypeError::Colour)?;
                    rhs.check_alphabet(&sig.alphabet)
                        .map_err(TypeError::Colour)?;
                    eqs.push(Equation {
                        body: EquationBody::Colour { lhs, rhs },
                        status: EqStatus::Unsolved,
                        depth: 0,
                    });
                }
            }
        }
        Ok(ProblemState {
            sig: sig.clone(),
            equations: eqs,
            store: ColourStore::new(sig.alphabet.clone()),
            forbidden: BTreeSet::new(),
            accumulated: CSubstitution::empty(),
            fresh: Fresh::default(),
            trace: Vec::new(),
        })
    }

    pub fn trace(&self) -> &[String] {
        &self.trace
    }

    fn log(&mut self, line: String) {
        self.trace.push(line);
    }

    fn log_eq(&mut self, idx: usize) {
        self.log(format!("  EQ {}: {}", idx, self.equations[idx].display()));
    }

    fn alphabet(&self) -> ColourAlphabet {
        self.sig.alphabet.clone()
    }

    /// Apply every deterministic rule until none applies or the branch dies.
    pub fn saturate(&mut self) -> Result<(), Prune> {
        loop {
            let mut progressed = false;
            for i in 0..self.equations.len() {
                if self.equations[i].status != EqStatus::Unsolved {
                    continue;
                }
                if self.step(i)? {
                    progressed = true;
                    break;
                }
            }
            if !progressed {
                return Ok(());
            }
        }
    }

    /// Try the deterministic rules on equation `i`, in priority order:
    /// trivial deletion, colour handling, term-variable elimination,
    /// abstraction decomposition, rigid/rigid decomposition.
    fn step(&mut self, i: usize) -> Result<bool, Prune> {
        match self.equations[i].body.clone() {
            EquationBody::Colour { lhs, rhs } => {
                self.eliminate_colour_variable(i, lhs, rhs)?;
                Ok(true)
            }
            EquationBody::Term { lhs, rhs } => {
                let alphabet = self.alphabet();
                if alpha_beta_eta_equal(&lhs, &rhs, &alphabet) {
                    self.equations[i].status = EqStatus::Deleted;
                    self.log(format!("RULE delete ON {i}"));
                    return Ok(true);
                }
                if self.try_eliminate(i, &lhs, &rhs)? {
                    return Ok(true);
                }
                if matches!(lhs, Term::Lam { .. }) || matches!(rhs, Term::Lam { .. }) {
                    self.decompose_abstraction(i)?;
                    return Ok(true);
                }
                if matches!(side_shape(&lhs), Shape::Rigid)
                    && matches!(side_shape(&rhs), Shape::Rigid)
                {
                    self.decompose_application(i)?;
                    return Ok(true);
                }
                Ok(false)
            }
        }
    }

    /// Abstraction decomposition: `\x.A = \y.B` becomes `[c/x]A = [c/y]B`
    /// and `\x.A = B` becomes `[c/x]A = B c`, for a fresh constant `c` that
    /// may not appear in any solution. Transforms the equation in place.
    pub fn decompose_abstraction(&mut self, i: usize) -> Result<(), Prune> {
        let (lhs, rhs) = match &self.equations[i].body {
            EquationBody::Term { lhs, rhs } => (lhs.clone(), rhs.clone()),
            _ => return Err(Prune("decompose-abs on a colour equation".into())),
        };
        let param = match (&lhs, &rhs) {
            (Term::Lam { param, .. }, _) | (_, Term::Lam { param, .. }) => param.clone(),
            _ => return Err(Prune("decompose-abs without an abstraction".into())),
        };
        let name = self.fresh.skolem();
        self.sig.add_constant(name.clone(), param.clone());
        self.forbidden.insert(name.clone());
        let skolem = Term::cnst(name, param);
        let open = |t: &Term| match t {
            Term::Lam { body, .. } => normalize(&body.open(0, &skolem)),
            other => normalize(&Term::app(other.clone(), skolem.clone())),
        };
        self.equations[i].body = EquationBody::Term { lhs: open(&lhs), rhs: open(&rhs) };
        self.log(format!("RULE decompose-abs ON {i}"));
        self.log_eq(i);
        Ok(())
    }

    /// Rigid/rigid decomposition: equal heads yield the head colour equation
    /// (when both heads are annotated) plus pairwise argument equations;
    /// distinct heads clash.
    pub fn decompose_application(&mut self, i: usize) -> Result<(), Prune> {
        let (lhs, rhs) = match &self.equations[i].body {
            EquationBody::Term { lhs, rhs } => (lhs.clone(), rhs.clone()),
            _ => return Err(Prune("decompose-app on a colour equation".into())),
        };
        let (lh, largs) = lhs.spine();
        let (rh, rargs) = rhs.spine();
        let (ln, lc) = match lh {
            Term::Const { name, colour, .. } => (name.clone(), colour.clone()),
            _ => return Err(Prune("decompose-app on a non-rigid side".into())),
        };
        let (rn, rc) = match rh {
            Term::Const { name, colour, .. } => (name.clone(), colour.clone()),
            _ => return Err(Prune("decompose-app on a non-rigid side".into())),
        };
        if ln != rn {
            let msg = format!("PRUNE ON {i}: head constants {ln} and {rn} clash");
            self.log(msg.clone());
            return Err(Prune(msg));
        }
        debug_assert_eq!(largs.len(), rargs.len());
        let depth = self.equations[i].depth;
        self.equations[i].status = EqStatus::Deleted;
        self.log(format!("RULE decompose-app ON {i}"));
        let mut new_indices = Vec::new();
        if let (Some(a), Some(b)) = (lc, rc) {
            self.equations.push(Equation {
                body: EquationBody::Colour { lhs: a, rhs: b },
                status: EqStatus::Unsolved,
                depth,
            });
            new_indices.push(self.equations.len() - 1);
        }
        let pairs: Vec<(Term, Term)> =
            largs.into_iter().cloned().zip(rargs.into_iter().cloned()).collect();
        for (l, r) in pairs {
            self.equations.push(Equation {
                body: EquationBody::Term { lhs: l, rhs: r },
                status: EqStatus::Unsolved,
                depth,
            });
            new_indices.push(self.equations.len() - 1);
        }
        for idx in new_indices {
            self.log_eq(idx);
        }
        Ok(())
    }

    /// Colour variable elimination: bind the variable and substitute it
    /// through the equations, the store, and the accumulated substitution.
    pub fn eliminate_colour_variable(
        &mut self,
        i: usize,
        lhs: ColourTerm,
        rhs: ColourTerm,
    ) -> Result<(), Prune> {
        let alphabet = self.alphabet();
        let lhs = self.store.resolve(&lhs);
        let rhs = self.store.resolve(&rhs);
        let equal = lhs == rhs
            || (lhs.is_ground()
                && rhs.is_ground()
                && crate::colour::ground_equal(&lhs, &rhs, &alphabet).unwrap_or(false));
        if equal {
            self.equations[i].status = EqStatus::Deleted;
            self.log(format!("RULE delete ON {i}"));
            return Ok(());
        }
        let (var, value) = match (&lhs, &rhs) {
            (ColourTerm::Variable(v), _) if !rhs.mentions_var(v) => (v.clone(), rhs.clone()),
            (_, ColourTerm::Variable(v)) if !lhs.mentions_var(v) => (v.clone(), lhs.clone()),
            _ if lhs.is_ground() && rhs.is_ground() => {
                let msg = format!("PRUNE ON {i}: colour clash {lhs} vs {rhs}");
                self.log(msg.clone());
                return Err(Prune(msg));
            }
            _ => {
                // variable buried in a formula: hand the equation to the store
                match self.store.unify(&lhs, &rhs) {
                    Ok(next) => {
                        self.store = next;
                        self.equations[i].status = EqStatus::Solved;
                        self.log(format!("RULE elim-colour ON {i}"));
                        return Ok(());
                    }
                    Err(Unsat { reason }) => {
                        let msg = format!("PRUNE ON {i}: {reason}");
                        self.log(msg.clone());
                        return Err(Prune(msg));
                    }
                }
            }
        };
        match self.store.bind(&var, &value) {
            Ok(next) => self.store = next,
            Err(Unsat { reason }) => {
                let msg = format!("PRUNE ON {i}: {reason}");
                self.log(msg.clone());
                return Err(Prune(msg));
            }
        }
        let mut single = std::collections::BTreeMap::new();
        single.insert(var.clone(), value.clone());
        for eq in self.equations.iter_mut() {
            match &mut eq.body {
                EquationBody::Term { lhs, rhs } => {
                    *lhs = lhs.map_annotations(&|c| c.substitute(&single));
                    *rhs = rhs.map_annotations(&|c| c.substitute(&single));
                }
                EquationBody::Colour { lhs, rhs } => {
                    *lhs = lhs.substitute(&single);
                    *rhs = rhs.substitute(&single);
                }
            }
        }
        self.accumulated = self
            .accumulated
            .bind_colour_everywhere(&var, &value, &alphabet)
            .map_err(|e| Prune(e.to_string()))?;
        self.equations[i].status = EqStatus::Solved;
        self.log(format!("RULE elim-colour ON {i} BINDING {var} := {value}"));
        Ok(())
    }

    /// Try term-variable elimination on either orientation. `Ok(false)`
    /// means the rule does not apply; pruning conditions are terminal.
    fn try_eliminate(&mut self, i: usize, lhs: &Term, rhs: &Term) -> Result<bool, Prune> {
        for (side, other) in [(lhs, rhs), (rhs, lhs)] {
            let (name, colour, ty) = match as_solved_form(side) {
                Some(x) => x,
                None => continue,
            };
            if other.contains_free(&name) {
                let occ = |t: &Term| matches!(t, Term::Free { name: n, .. } if *n == name);
                if occurs_rigidly(other, &occ) {
                    let msg = format!("PRUNE ON {i}: occurs check, {name} is rigid in its image");
                    self.log(msg.clone());
                    return Err(Prune(msg));
                }
                continue; // flexible occurrence: not eliminable, maybe solvable
            }
            let forbidden = self.forbidden.clone();
            if other.contains_const_in(&forbidden) {
                let occ = |t: &Term| {
                    matches!(t, Term::Const { name: n, .. } if forbidden.contains(n.as_str()))
                };
                if occurs_rigidly(other, &occ) {
                    let msg =
                        format!("PRUNE ON {i}: image of {name} contains a forbidden constant");
                    self.log(msg.clone());
                    return Err(Prune(msg));
                }
                continue;
            }
            self.eliminate_term_variable(i, &name, colour.as_ref(), &ty, other)?;
            return Ok(true);
        }
        Ok(false)
    }

    /// Term-variable elimination with variants: bind `x_d = M`, and for
    /// every other annotation `c` under which `x` occurs, bind `x_c` to a
    /// variant of `M` (same colour erasure) whose annotations are fresh
    /// colour variables, constrained to entail `c` when `c` is ground.
    pub fn eliminate_term_variable(
        &mut self,
        i: usize,
        name: &str,
        colour: Option<&ColourTerm>,
        ty: &SimpleType,
        image: &Term,
    ) -> Result<(), Prune> {
        let alphabet = self.alphabet();
        if let Some(c) = colour {
            if c.is_ground() {
                match monochrome_constraints(image, c, &self.store) {
                    Ok(next) => self.store = next,
                    Err(Unsat { reason }) => {
                        let msg =
                            format!("PRUNE ON {i}: image of {name}_{c} not monochrome: {reason}");
                        self.log(msg.clone());
                        return Err(Prune(msg));
                    }
                }
            }
        }

        let key_of = |c: Option<&ColourTerm>| ColourKey::of(c, &alphabet);
        let main_key = key_of(colour).map_err(|e| Prune(e.to_string()))?;

        // all other occurrence colours of x across the unsolved equations,
        // the image, and the accumulated images
        let mut variants: Vec<Option<ColourTerm>> = Vec::new();
        {
            let mut seen: BTreeSet<String> = BTreeSet::new();
            let mut note = |c: Option<&ColourTerm>| {
                if let Ok(k) = key_of(c) {
                    if k != main_key {
                        let tag = format!("{k:?}");
                        if seen.insert(tag) {
                            variants.push(c.cloned());
                        }
                    }
                }
            };
            let scan = |t: &Term, note: &mut dyn FnMut(Option<&ColourTerm>)| {
                t.visit_symbols(&mut |s| {
                    if s.is_var && s.name == name {
                        note(s.colour);
                    }
                });
            };
            for eq in &self.equations {
                if eq.status != EqStatus::Unsolved {
                    continue;
                }
                if let EquationBody::Term { lhs, rhs } = &eq.body {
                    scan(lhs, &mut note);
                    scan(rhs, &mut note);
                }
            }
            scan(image, &mut note);
            for b in self.accumulated.term_bindings() {
                scan(&b.image, &mut note);
            }
        }

        // a variant keeps the erasure and replaces every annotation by a
        // fresh colour variable
        fn variant_of(t: &Term, fresh: &mut Fresh, vars: &mut Vec<String>) -> Term {
            match t {
                Term::Const { name, ty, colour: Some(_) } => {
                    let v = fresh.colour();
                    vars.push(v.clone());
                    Term::cnst_col(name.clone(), ty.clone(), ColourTerm::variable(v))
                }
                Term::Free { name, ty, colour: Some(_) } => {
                    let v = fresh.colour();
                    vars.push(v.clone());
                    Term::free_col(name.clone(), ty.clone(), ColourTerm::variable(v))
                }
                Term::Const { .. } | Term::Free { .. } | Term::Bound { .. } => t.clone(),
                Term::App { func, arg } => {
                    Term::app(variant_of(func, fresh, vars), variant_of(arg, fresh, vars))
                }
                Term::Lam { hint, param, body } => {
                    Term::lam(hint.clone(), param.clone(), variant_of(body, fresh, vars))
                }
            }
        }

        let mut binding = CSubstitution::empty()
            .with_term_binding(name, colour.cloned(), image.clone(), &alphabet)
            .map_err(|e| Prune(e.to_string()))?;
        let mut solved_variants = Vec::new();
        for vcol in variants {
            let mut fresh_vars = Vec::new();
            let variant_image = variant_of(image, &mut self.fresh, &mut fresh_vars);
            if let Some(c) = &vcol {
                if c.is_ground() {
                    for fv in &fresh_vars {
                        match self.store.assert_entailment(&ColourTerm::variable(fv), c) {
                            Ok(next) => self.store = next,
                            Err(Unsat { reason }) => {
                                let msg =
                                    format!("PRUNE ON {i}: variant for {name} at {c}: {reason}");
                                self.log(msg.clone());
                                return Err(Prune(msg));
                            }
                        }
                    }
                }
            }
            binding = binding
                .with_term_binding(name, vcol.clone(), variant_image.clone(), &alphabet)
                .map_err(|e| Prune(e.to_string()))?;
            solved_variants.push((vcol, variant_image));
        }

        for eq in self.equations.iter_mut() {
            if eq.status != EqStatus::Unsolved {
                continue;
            }
            if let EquationBody::Term { lhs, rhs } = &mut eq.body {
                *lhs = binding.apply(lhs, &alphabet);
                *rhs = binding.apply(rhs, &alphabet);
            }
        }
        self.accumulated = CSubstitution::compose(&binding, &self.accumulated, &alphabet)
            .map_err(|e| Prune(e.to_string()))?;
        self.equations[i].status = EqStatus::Solved;
        self.log(format!("RULE elim-term ON {i}"));
        // keep the variant bindings visible as solved equations
        let var_term = |c: &Option<ColourTerm>| match c {
            Some(c) => Term::free_col(name, ty.clone(), c.clone()),
            None => Term::free(name, ty.clone()),
        };
        let depth = self.equations[i].depth;
        for (vcol, vimg) in solved_variants {
            self.equations.push(Equation {
                body: EquationBody::Term { lhs: normalize(&var_term(&vcol)), rhs: vimg },
                status: EqStatus::Solved,
                depth,
            });
            let idx = self.equations.len() - 1;
            self.log_eq(idx);
        }
        Ok(())
    }

    /// Index of the first unsolved flex/rigid equation.
    pub fn first_flex_rigid(&self) -> Option<usize> {
        self.equations.iter().position(|eq| {
            eq.status == EqStatus::Unsolved
                && match &eq.body {
                    EquationBody::Term { lhs, rhs } => matches!(
                        (side_shape(lhs), side_shape(rhs)),
                        (Shape::Flex, Shape::Rigid) | (Shape::Rigid, Shape::Flex)
                    ),
                    _ => false,
                }
        })
    }

    fn flex_rigid_parts(&self, i: usize) -> (Term, Term) {
        match &self.equations[i].body {
            EquationBody::Term { lhs, rhs } => match (side_shape(lhs), side_shape(rhs)) {
                (Shape::Flex, Shape::Rigid) => (lhs.clone(), rhs.clone()),
                (Shape::Rigid, Shape::Flex) => (rhs.clone(), lhs.clone()),
                _ => panic!("not a flex/rigid equation"),
            },
            _ => panic!("not a term equation"),
        }
    }

    /// The applicable general-binding kinds for the flex/rigid equation `i`:
    /// the imitation binding unless the rigid head is a forbidden constant
    /// or its colour cannot satisfy the flex variable's monochromicity, then
    /// one projection per argument position of matching result type.
    pub fn binding_kinds(&self, i: usize) -> Vec<BindingKind> {
        let (flex, rigid) = self.flex_rigid_parts(i);
        let (fhead, _) = flex.spine();
        let (rhead, _) = rigid.spine();
        let (fcolour, fty) = match fhead {
            Term::Free { colour, ty, .. } => (colour.clone(), ty.clone()),
            _ => unreachable!(),
        };
        let (rname, rcolour) = match rhead {
            Term::Const { name, colour, .. } => (name.clone(), colour.clone()),
            _ => unreachable!(),
        };
        let mut kinds = Vec::new();
        let imitation_ok = !self.forbidden.contains(&rname)
            && match (&fcolour, &rcolour) {
                (Some(c), Some(d)) if c.is_ground() && d.is_ground() => {
                    crate::colour::entails_ground(d, c, &self.sig.alphabet).unwrap_or(false)
                }
                _ => true,
            };
        if imitation_ok {
            kinds.push(BindingKind::Imitation);
        }
        let result = fty.result().clone();
        for (pos, arg_ty) in fty.args().iter().enumerate() {
            if *arg_ty.result() == result {
                kinds.push(BindingKind::Projection(pos));
            }
        }
        kinds
    }

    /// Construct the general binding of the given kind for the flex/rigid
    /// equation `i` and add it as a new equation `x_c = G`, which the
    /// elimination rule then processes.
    ///
    /// Colour discipline: when the flex variable's colour `c` is a colour
    /// variable, the fresh argument variables get distinct fresh colour
    /// variables; when `c` is ground they carry `c` itself. The imitation
    /// head keeps the rigid head's annotation when that is ground (already
    /// checked against `c`), and gets `c` itself when the rigid head carries
    /// a colour variable, so that decomposition emits the colour equation
    /// that binds it.
    pub fn apply_general_binding(&mut self, i: usize, kind: BindingKind) -> Result<(), Prune> {
        let (flex, rigid) = self.flex_rigid_parts(i);
        let (fhead, _) = flex.spine();
        let (rhead, _) = rigid.spine();
        let (fname, fcolour, fty) = match fhead {
            Term::Free { name, colour, ty } => (name.clone(), colour.clone(), ty.clone()),
            _ => unreachable!(),
        };
        let binder_tys: Vec<SimpleType> = fty.args().into_iter().cloned().collect();
        let n = binder_tys.len();

        // fresh variables H^i of type (binder types) -> gamma_i, applied to
        // all the binders
        let fcolour_for_args = fcolour.clone();
        let make_args = |state: &mut ProblemState, gammas: &[SimpleType]| -> Vec<Term> {
            gammas
                .iter()
                .map(|g| {
                    let hname = state.fresh.var();
                    let hty = SimpleType::fun(binder_tys.iter().cloned(), g.clone());
                    let hcol = match &fcolour_for_args {
                        None => None,
                        Some(ColourTerm::Variable(_)) => {
                            Some(ColourTerm::variable(state.fresh.colour()))
                        }
                        Some(c) => Some(c.clone()),
                    };
                    match &hcol {
                        Some(c) => {
                            state.sig.add_variable_col(hname.clone(), hty.clone(), c.clone())
                        }
                        None => state.sig.add_variable(hname.clone(), hty.clone()),
                    }
                    let head = match hcol {
                        Some(c) => Term::free_col(hname, hty, c),
                        None => Term::free(hname, hty),
                    };
                    Term::apps(
                        head,
                        binder_tys
                            .iter()
                            .enumerate()
                            .map(|(j, bt)| Term::bound(n - 1 - j, bt.clone())),
                    )
                })
                .collect()
        };

        let body = match kind {
            BindingKind::Imitation => {
                let (rname, rcolour, rty) = match rhead {
                    Term::Const { name, colour, ty } => (name.clone(), colour.clone(), ty.clone()),
                    _ => unreachable!(),
                };
                let head_colour = match (&fcolour, &rcolour) {
                    (_, None) => None,
                    (None, Some(d)) => Some(d.clone()),
                    (Some(c), Some(ColourTerm::Variable(_))) if c.is_ground() => Some(c.clone()),
                    (Some(_), Some(d)) => Some(d.clone()),
                };
                let head = match head_colour {
                    Some(c) => Term::cnst_col(rname, rty.clone(), c),
                    None => Term::cnst(rname, rty.clone()),
                };
                let gammas: Vec<SimpleType> = rty.args().into_iter().cloned().collect();
                let args = make_args(self, &gammas);
                Term::apps(head, args)
            }
            BindingKind::Projection(pos) => {
                let pty = binder_tys[pos].clone();
                let head = Term::bound(n - 1 - pos, pty.clone());
                let gammas: Vec<SimpleType> = pty.args().into_iter().cloned().collect();
                let args = make_args(self, &gammas);
                Term::apps(head, args)
            }
        };
        let mut binding = body;
        for (j, bt) in binder_tys.iter().enumerate().rev() {
            let hint = match j {
                0 => "z",
                1 => "w",
                2 => "u",
                3 => "v",
                _ => "z",
            };
            binding = Term::lam(hint, bt.clone(), binding);
        }

        let var = match &fcolour {
            Some(c) => Term::free_col(fname, fty, c.clone()),
            None => Term::free(fname, fty),
        };
        self.log(format!("RULE flex-rigid ON {i} BINDING {}", print_term(&binding)));
        // the equation's residual subproblems now sit one binding deeper
        let depth = self.equations[i].depth + 1;
        self.equations[i].depth = depth;
        self.equations.push(Equation {
            body: EquationBody::Term { lhs: normalize(&var), rhs: normalize(&binding) },
            status: EqStatus::Unsolved,
            depth,
        });
        let idx = self.equations.len() - 1;
        self.log_eq(idx);
        Ok(())
    }

    fn residual_flex_flex(&self) -> Vec<(Term, Term)> {
        self.equations
            .iter()
            .filter(|eq| eq.status == EqStatus::Unsolved)
            .filter_map(|eq| match &eq.body {
                EquationBody::Term { lhs, rhs } => Some((lhs.clone(), rhs.clone())),
                _ => None,
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

struct Search<'a> {
    cfg: &'a SearchConfig,
    original_term_vars: BTreeSet<String>,
    original_colour_vars: BTreeSet<String>,
    solutions: Vec<Solution>,
    seen: BTreeSet<String>,
    global_trace: Vec<String>,
    round_bound_hit: bool,
    stopped: bool,
}

/// Safety valve against pathological non-matching inputs: total general
/// bindings along one derivation, independent of the nesting bound.
const MAX_TOTAL_BINDINGS: usize = 256;

impl<'a> Search<'a> {
    fn explore(&mut self, mut state: ProblemState, budget: usize, used: usize) {
        if self.stopped {
            return;
        }
        let mark = state.trace.len();
        let saturated = state.saturate();
        self.global_trace.extend_from_slice(&state.trace[mark..]);
        if saturated.is_err() {
            return;
        }
        if let Some(idx) = state.first_flex_rigid() {
            if state.equations[idx].depth >= budget || used >= MAX_TOTAL_BINDINGS {
                self.round_bound_hit = true;
                let line = format!("BOUND ON {idx}");
                state.log(line.clone());
                self.global_trace.push(line);
                return;
            }
            let kinds = state.binding_kinds(idx);
            if kinds.is_empty() {
                let line = format!("PRUNE ON {idx}: no applicable general binding");
                state.log(line.clone());
                self.global_trace.push(line);
                return;
            }
            for kind in kinds {
                if self.stopped {
                    return;
                }
                let mut child = state.clone();
                let m2 = child.trace.len();
                if child.apply_general_binding(idx, kind).is_err() {
                    continue;
                }
                self.global_trace.extend_from_slice(&child.trace[m2..]);
                self.explore(child, budget, used + 1);
            }
            return;
        }
        self.emit(state);
    }

    fn emit(&mut self, mut state: ProblemState) {
        if !state.store.satisfiable() {
            self.global_trace.push("PRUNE: colour store unsatisfiable".to_string());
            return;
        }
        let alphabet = state.sig.alphabet.clone();
        let mut restricted =
            state.accumulated.restrict(&self.original_term_vars, &self.original_colour_vars);
        for (v, c) in state.store.bindings() {
            if self.original_colour_vars.contains(v)
                && !restricted.colour_bindings().contains_key(v)
            {
                restricted = restricted.with_colour_binding(v.clone(), c.clone());
            }
        }
        for b in restricted.term_bindings() {
            if b.image.contains_const_in(&state.forbidden) {
                let line = format!("PRUNE: forbidden constant escaped into {}", b.var);
                self.global_trace.push(line);
                return;
            }
        }
        let flex_flex = state.residual_flex_flex();
        let fp = solution_fingerprint(&restricted, &flex_flex, &alphabet);
        if !self.seen.insert(fp) {
            return;
        }
        let n = self.solutions.len();
        let line = format!("SOLUTION {}: {}", n, restricted.to_lines().join("; "));
        state.log(line.clone());
        self.global_trace.push(line);
        self.solutions.push(Solution {
            substitution: restricted,
            store: state.store.clone(),
            flex_flex,
            trace: state.trace.clone(),
            sig: state.sig.clone(),
            forbidden: state.forbidden.clone(),
        });
        if self.solutions.len() >= self.cfg.max_solutions {
            self.stopped = true;
        }
    }
}

/// Enumerate the coloured unifiers of an equation set.
pub fn solve(
    equations: &[EquationBody],
    sig: &Signature,
    cfg: &SearchConfig,
) -> Result<SolveResult, TypeError> {
    let initial = ProblemState::new(equations.to_vec(), sig)?;
    let original_term_vars: BTreeSet<String> = sig.variables.keys().cloned().collect();
    let mut original_colour_vars: BTreeSet<String> = BTreeSet::new();
    {
        let mut note_colour = |c: &ColourTerm| {
            let mut vars = Vec::new();
            c.collect_vars(&mut vars);
            original_colour_vars.extend(vars);
        };
        for eq in equations {
            match eq {
                EquationBody::Term { lhs, rhs } => {
                    for t in [lhs, rhs] {
                        t.visit_symbols(&mut |s| {
                            if let Some(c) = s.colour {
                                note_colour(c);
                            }
                        });
                    }
                }
                EquationBody::Colour { lhs, rhs } => {
                    note_colour(lhs);
                    note_colour(rhs);
                }
            }
        }
        for decl in sig.variables.values() {
            if let Some(c) = &decl.colour {
                note_colour(c);
            }
        }
    }

    let mut search = Search {
        cfg,
        original_term_vars,
        original_colour_vars,
        solutions: Vec::new(),
        seen: BTreeSet::new(),
        global_trace: Vec::new(),
        round_bound_hit: false,
        stopped: false,
    };
    match cfg.strategy {
        Strategy::DepthFirst => {
            search.explore(initial, cfg.max_bindings, 0);
        }
        Strategy::IterativeDeepening => {
            for budget in 0..=cfg.max_bindings {
                search.round_bound_hit = false;
                search.explore(initial.clone(), budget, 0);
                if search.stopped || !search.round_bound_hit {
                    break;
                }
            }
        }
    }
    Ok(SolveResult {
        solutions: search.solutions,
        bound_reached: search.round_bound_hit,
        trace: search.global_trace,
    })
}

// ---------------------------------------------------------------------------
// Canonical fingerprints for duplicate suppression and set comparison
// ---------------------------------------------------------------------------

fn canon_colour(c: Option<&ColourTerm>, alphabet: &ColourAlphabet) -> String {
    match c {
        None => String::new(),
        Some(ColourTerm::Variable(v)) => format!("_{v}"),
        Some(g) if g.is_ground() => match g.satisfiers(alphabet) {
            Ok(set) => {
                let xs: Vec<&str> = set.iter().map(|s| s.as_str()).collect();
                format!("_{{{}}}", xs.join(","))
            }
            Err(_) => format!("_{g}"),
        },
        Some(other) => format!("_{other}"),
    }
}

fn canon_term(t: &Term, alphabet: &ColourAlphabet, out: &mut String) {
    match t {
        Term::Const { name, colour, .. } => {
            out.push('!');
            out.push_str(name);
            out.push_str(&canon_colour(colour.as_ref(), alphabet));
        }
        Term::Free { name, colour, .. } => {
            out.push('?');
            out.push_str(name);
            out.push_str(&canon_colour(colour.as_ref(), alphabet));
        }
        Term::Bound { index, .. } => {
            out.push('#');
            out.push_str(&index.to_string());
        }
        Term::App { func, arg } => {
            canon_term(func, alphabet, out);
            out.push('(');
            canon_term(arg, alphabet, out);
            out.push(')');
        }
        Term::Lam { body, .. } => {
            out.push('\\');
            canon_term(body, alphabet, out);
        }
    }
}

/// Rename generated `$`-names by first occurrence so that fingerprints and
/// traces are stable across different derivation orders.
pub fn canonicalize_fresh_names(s: &str) -> String {
    let mut map: Vec<(String, String)> = Vec::new();
    let mut out = String::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '$' {
            let start = i;
            i += 1;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '\'') {
                i += 1;
            }
            let token: String = chars[start..i].iter().collect();
            let replacement = match map.iter().find(|(t, _)| *t == token) {
                Some((_, r)) => r.clone(),
                None => {
                    let r = format!("$g{}", map.len());
                    map.push((token.clone(), r.clone()));
                    r
                }
            };
            out.push_str(&replacement);
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

/// A canonical one-line rendering of a solution, invariant under
/// α-renaming, ground-colour equivalence and fresh-name choice.
pub fn solution_fingerprint(
    sub: &CSubstitution,
    flex_flex: &[(Term, Term)],
    alphabet: &ColourAlphabet,
) -> String {
    let mut parts: Vec<String> = Vec::new();
    for b in sub.term_bindings() {
        let mut s = String::new();
        s.push_str(&b.var);
        s.push_str(&canon_colour(b.annotation.as_ref(), alphabet));
        s.push('=');
        canon_term(&normalize(&b.image), alphabet, &mut s);
        parts.push(s);
    }
    for (v, c) in sub.colour_bindings() {
        parts.push(format!("{v}:={}", canon_colour(Some(c), alphabet)));
    }
    let mut constraints: Vec<String> = flex_flex
        .iter()
        .map(|(l, r)| {
            let mut s = String::new();
            canon_term(l, alphabet, &mut s);
            s.push('=');
            canon_term(r, alphabet, &mut s);
            s
        })
        .collect();
    constraints.sort();
    parts.extend(constraints);
    canonicalize_fresh_names(&parts.join(" | "))
}

// ---------------------------------------------------------------------------
// Validation: the independent oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum ValidationIssue {
    Legality(LegalityViolation),
    BetaEtaMismatch { index: usize, lhs: String, rhs: String },
    ColourMismatch { index: usize, lhs: ColourTerm, rhs: ColourTerm },
    ForbiddenConstant { var: String },
    UnsatisfiableStore,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::Legality(v) => write!(f, "{v}"),
            ValidationIssue::BetaEtaMismatch { index, lhs, rhs } => {
                write!(f, "equation {index}: βη-inequality: `{lhs}` vs `{rhs}`")
            }
            ValidationIssue::ColourMismatch { index, lhs, rhs } => {
                write!(f, "equation {index}: colour mismatch: `{lhs}` vs `{rhs}`")
            }
            ValidationIssue::ForbiddenConstant { var } => {
                write!(f, "image of `{var}` contains a forbidden constant")
            }
            ValidationIssue::UnsatisfiableStore => {
                write!(f, "residual colour constraints are unsatisfiable")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum ValidationReport {
    Ok { pre_solution: bool },
    Failed(Vec<ValidationIssue>),
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        matches!(self, ValidationReport::Ok { .. })
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationReport::Ok { pre_solution: false } => write!(f, "ok"),
            ValidationReport::Ok { pre_solution: true } => {
                write!(f, "ok (pre-solution with residual flex/flex constraints)")
            }
            ValidationReport::Failed(issues) => {
                for (i, issue) in issues.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{issue}")?;
                }
                Ok(())
            }
        }
    }
}

/// Independently re-check a solution against the original equations: the
/// substitution must be legal, applying it must make every term equation
/// βη-equal (annotations included), no forbidden constant may appear in any
/// image, and the residual store must be satisfiable.
pub fn validate(sol: &Solution, equations: &[EquationBody], sig: &Signature) -> ValidationReport {
    let mut issues = Vec::new();
    let alphabet = &sig.alphabet;
    let pre = sol.is_pre_solution();

    // legality, typed against the solution's extended signature so that
    // residual fresh variables are known
    match check_legal_with_store(&sol.substitution, &sol.sig, &sol.store) {
        LegalityReport::Ok => {}
        LegalityReport::Violations(vs) => {
            issues.extend(vs.into_iter().map(ValidationIssue::Legality));
        }
    }

    for b in sol.substitution.term_bindings() {
        if b.image.contains_const_in(&sol.forbidden) {
            issues.push(ValidationIssue::ForbiddenConstant { var: b.var.clone() });
        }
    }

    for (index, eq) in equations.iter().enumerate() {
        match eq {
            EquationBody::Term { lhs, rhs } => {
                let l = sol.substitution.apply(lhs, alphabet);
                let r = sol.substitution.apply(rhs, alphabet);
                if !alpha_beta_eta_equal(&l, &r, alphabet) {
                    let residual = |t: &Term| {
                        let mut any = false;
                        t.visit_symbols(&mut |s| {
                            if s.is_var {
                                any = true;
                            }
                        });
                        any
                    };
                    if pre && (residual(&l) || residual(&r)) {
                        continue;
                    }
                    issues.push(ValidationIssue::BetaEtaMismatch {
                        index,
                        lhs: print_term(&l),
                        rhs: print_term(&r),
                    });
                }
            }
            EquationBody::Colour { lhs, rhs } => {
                let l = lhs.substitute(sol.substitution.colour_bindings());
                let r = rhs.substitute(sol.substitution.colour_bindings());
                let ok = if l.is_ground() && r.is_ground() {
                    crate::colour::ground_equal(&l, &r, alphabet).unwrap_or(false)
                } else {
                    annotations_equal(Some(&l), Some(&r), alphabet)
                        || sol.store.unify(&l, &r).is_ok()
                };
                if !ok {
                    issues.push(ValidationIssue::ColourMismatch { index, lhs: l, rhs: r });
                }
            }
        }
    }

    if !sol.store.satisfiable() {
        issues.push(ValidationIssue::UnsatisfiableStore);
    }

    if issues.is_empty() {
        ValidationReport::Ok { pre_solution: pre }
    } else {
        ValidationReport::Failed(issues)
    }
}

/// Build a `Solution` by hand, for validating externally supplied
/// candidates against a problem.
pub fn candidate_solution(substitution: CSubstitution, sig: &Signature) -> Solution {
    Solution {
        substitution,
        store: ColourStore::new(sig.alphabet.clone()),
        flex_flex: Vec::new(),
        trace: Vec::new(),
        sig: sig.clone(),
        forbidden: BTreeSet::new(),
    }
}
