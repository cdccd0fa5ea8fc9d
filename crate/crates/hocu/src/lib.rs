//! Higher-order coloured unification (HOCU) over the coloured simply typed
//! λ-calculus.
//!
//! Symbol occurrences in terms carry *colour* annotations: constants such as
//! `pe`, variables such as `A`, or boolean formulae such as `~pe`. A coloured
//! substitution is a pair of a term part and a colour part and is only legal
//! when same-named variables get images with equal colour erasures and every
//! ground-coloured variable gets a monochrome image. The unifier enumerates
//! the legal unifiers of equation sets by recursive decomposition, variable
//! elimination and flex/rigid general bindings under a depth bound.

pub mod cli;
pub mod colour;
pub mod corpus;
pub mod dsl;
pub mod subst;
pub mod term;
pub mod unify;
