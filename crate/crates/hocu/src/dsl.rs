//! The `.hocu` problem format: declarations, equations and an optional
//! expected-solutions block, with a parser and a printer that round-trip.
//!
//! ```text
//! # ellipsis with the primary occurrence coloured
//! colours pe, pf, ps;
//! types e, t;
//! const like : e -> e -> t;
//! const dan : e;
//! const golf : e;
//! var R : e -> t @ ~pe;
//! eq like(dan_pe, golf) = R(dan_pe);
//! expect { R_~pe = \x. like(x, golf); }
//! ```
//!
//! Identifiers never contain `_`; a `_` after a symbol starts its colour
//! annotation. In colour position a single uppercase letter is a colour
//! variable, anything else must be a declared colour constant. Occurrences
//! without a suffix default to the symbol's declared colour, if any.
//! Lambdas may ascribe their binder (`\x:e. body`); unascribed binders are
//! inferred from context. An `expect` block holds either one inline
//! solution or any number of `solution { ... }` groups; `expect { }` means
//! the problem must have no solutions.

use crate::colour::{ColourAlphabet, ColourTerm};
use crate::term::{normalize, print_term, Signature, SimpleType, Term};
use crate::unify::EquationBody;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedSolution {
    pub term_bindings: Vec<(String, Option<ColourTerm>, Term)>,
    pub colour_bindings: Vec<(String, ColourTerm)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub sig: Signature,
    pub equations: Vec<EquationBody>,
    pub expected: Option<Vec<ExpectedSolution>>,
    colour_order: Vec<String>,
    type_order: Vec<String>,
    const_order: Vec<String>,
    var_order: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Lambda,
    Dot,
    Colon,
    ColonEq,
    Semi,
    Comma,
    At,
    Underscore,
    Tilde,
    Amp,
    Pipe,
    Arrow,
    Eq,
    LParen,
    RParen,
    LBrace,
    RBrace,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Lambda => write!(f, "`\\`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::ColonEq => write!(f, "`:=`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::At => write!(f, "`@`"),
            Tok::Underscore => write!(f, "`_`"),
            Tok::Tilde => write!(f, "`~`"),
            Tok::Amp => write!(f, "`&`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
        }
    }
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
}

fn lex(text: &str) -> Result<Lexer, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, col);
        let bump = |ch: char, line: &mut usize, col: &mut usize| {
            if ch == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                chars.next();
                bump(c, &mut line, &mut col);
            }
            '#' => {
                while let Some(&ch) = chars.peek() {
                    if ch == '\n' {
                        break;
                    }
                    chars.next();
                    bump(ch, &mut line, &mut col);
                }
            }
            'a'..='z' | 'A'..='Z' | '$' => {
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_ascii_alphanumeric() || ch == '\'' || (s.is_empty() && ch == '$') {
                        s.push(ch);
                        chars.next();
                        bump(ch, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(s), l0, c0));
            }
            '\\' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::Lambda, l0, c0));
            }
            '.' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::Dot, l0, c0));
            }
            ':' => {
                chars.next();
                bump(c, &mut line, &mut col);
                if chars.peek() == Some(&'=') {
                    chars.next();
                    bump('=', &mut line, &mut col);
                    toks.push((Tok::ColonEq, l0, c0));
                } else {
                    toks.push((Tok::Colon, l0, c0));
                }
            }
            ';' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::Semi, l0, c0));
            }
            ',' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::Comma, l0, c0));
            }
            '@' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::At, l0, c0));
            }
            '_' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::Underscore, l0, c0));
            }
            '~' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::Tilde, l0, c0));
            }
            '&' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::Amp, l0, c0));
            }
            '|' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::Pipe, l0, c0));
            }
            '-' => {
                chars.next();
                bump(c, &mut line, &mut col);
                if chars.peek() == Some(&'>') {
                    chars.next();
                    bump('>', &mut line, &mut col);
                    toks.push((Tok::Arrow, l0, c0));
                } else {
                    return Err(ParseError { line: l0, col: c0, msg: "expected `->`".into() });
                }
            }
            '=' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::Eq, l0, c0));
            }
            '(' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::LParen, l0, c0));
            }
            ')' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::RParen, l0, c0));
            }
            '{' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::LBrace, l0, c0));
            }
            '}' => {
                chars.next();
                bump(c, &mut line, &mut col);
                toks.push((Tok::RBrace, l0, c0));
            }
            other => {
                return Err(ParseError {
                    line: l0,
                    col: c0,
                    msg: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    Ok(Lexer { toks })
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum RawTerm {
    Name { name: String, colour: Option<ColourTerm>, line: usize, col: usize },
    App { func: Box<RawTerm>, arg: Box<RawTerm> },
    Lam { binder: String, ty: Option<SimpleType>, body: Box<RawTerm>, line: usize, col: usize },
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    file: ProblemFile,
}

impl Parser {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|(_, l, c)| (*l, *c))
            .or_else(|| self.toks.last().map(|(_, l, c)| (*l, *c)))
            .unwrap_or((1, 1));
        Err(ParseError { line, col, msg: msg.into() })
    }

    fn err_at<T>(&self, line: usize, col: usize, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { line, col, msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn expect_tok(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => {
                let t = t.clone();
                self.err(format!("expected {want}, found {t}"))
            }
            None => self.err(format!("expected {want}, found end of input")),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(t) => {
                let t = t.clone();
                self.err(format!("expected an identifier, found {t}"))
            }
            None => self.err("expected an identifier, found end of input"),
        }
    }

    // ---- colours ----

    fn is_colour_variable_name(name: &str) -> bool {
        (name.len() == 1 && name.chars().next().unwrap().is_ascii_uppercase())
            || name.starts_with("$A")
    }

    fn colour_atom_name(&mut self, name: String) -> Result<ColourTerm, ParseError> {
        if self.file.sig.alphabet.contains(&name) {
            Ok(ColourTerm::constant(name))
        } else if Self::is_colour_variable_name(&name) {
            Ok(ColourTerm::variable(name))
        } else {
            self.err(format!("`{name}` is not a declared colour constant or a colour variable"))
        }
    }

    /// Full colour expressions: `~` binds tightest, then `&`, then `|`.
    fn colour_expr(&mut self) -> Result<ColourTerm, ParseError> {
        let mut acc = self.colour_and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            acc = ColourTerm::or(acc, self.colour_and()?);
        }
        Ok(acc)
    }

    fn colour_and(&mut self) -> Result<ColourTerm, ParseError> {
        let mut acc = self.colour_not()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            acc = ColourTerm::and(acc, self.colour_not()?);
        }
        Ok(acc)
    }

    fn colour_not(&mut self) -> Result<ColourTerm, ParseError> {
        match self.peek() {
            Some(Tok::Tilde) => {
                self.pos += 1;
                Ok(ColourTerm::not(self.colour_not()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let c = self.colour_expr()?;
                self.expect_tok(Tok::RParen)?;
                Ok(c)
            }
            _ => {
                let name = self.ident()?;
                self.colour_atom_name(name)
            }
        }
    }

    /// Annotation suffix after `_`: an atom, a `~`-chain, or a
    /// parenthesized full expression.
    fn colour_suffix(&mut self) -> Result<ColourTerm, ParseError> {
        self.colour_not()
    }

    // ---- types ----

    fn simple_type(&mut self) -> Result<SimpleType, ParseError> {
        let lhs = self.atomic_type()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.simple_type()?;
            Ok(SimpleType::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn atomic_type(&mut self) -> Result<SimpleType, ParseError> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.simple_type()?;
                self.expect_tok(Tok::RParen)?;
                Ok(t)
            }
            _ => {
                let name = self.ident()?;
                if !self.file.sig.base_types.contains(&name) {
                    return self.err(format!("`{name}` is not a declared base type"));
                }
                Ok(SimpleType::base(name))
            }
        }
    }

    // ---- terms ----

    fn raw_term(&mut self) -> Result<RawTerm, ParseError> {
        if self.peek() == Some(&Tok::Lambda) {
            let (line, col) = {
                let (_, l, c) = self.toks[self.pos];
                (l, c)
            };
            self.pos += 1;
            let binder = self.ident()?;
            let ty = if self.peek() == Some(&Tok::Colon) {
                self.pos += 1;
                Some(self.simple_type()?)
            } else {
                None
            };
            self.expect_tok(Tok::Dot)?;
            let body = self.raw_term()?;
            return Ok(RawTerm::Lam { binder, ty, body: Box::new(body), line, col });
        }
        let mut acc = self.raw_atom()?;
        loop {
            match self.peek() {
                Some(Tok::Ident(_)) | Some(Tok::Lambda) => {
                    let arg = if self.peek() == Some(&Tok::Lambda) {
                        self.raw_term()?
                    } else {
                        self.raw_atom()?
                    };
                    acc = RawTerm::App { func: Box::new(acc), arg: Box::new(arg) };
                }
                Some(Tok::LParen) => {
                    // parenthesized argument or comma-form argument list
                    self.pos += 1;
                    let first = self.raw_term()?;
                    let mut args = vec![first];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.raw_term()?);
                    }
                    self.expect_tok(Tok::RParen)?;
                    for a in args {
                        acc = RawTerm::App { func: Box::new(acc), arg: Box::new(a) };
                    }
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn raw_atom(&mut self) -> Result<RawTerm, ParseError> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.raw_term()?;
                self.expect_tok(Tok::RParen)?;
                Ok(t)
            }
            _ => {
                let (line, col) = {
                    let (_, l, c) = self.toks[self.pos.min(self.toks.len().saturating_sub(1))];
                    (l, c)
                };
                let name = self.ident()?;
                let colour = if self.peek() == Some(&Tok::Underscore) {
                    self.pos += 1;
                    Some(self.colour_suffix()?)
                } else {
                    None
                };
                Ok(RawTerm::Name { name, colour, line, col })
            }
        }
    }

    // ---- elaboration: raw named terms into de Bruijn terms ----

    fn elaborate(
        &self,
        raw: &RawTerm,
        expected: Option<&SimpleType>,
        env: &mut Vec<(String, SimpleType)>,
    ) -> Result<Term, ParseError> {
        match raw {
            RawTerm::Lam { binder, ty, body, line, col } => {
                let (param, body_expected) = match (ty, expected) {
                    (Some(t), Some(SimpleType::Arrow(a, b))) => {
                        if **a != *t {
                            return self.err_at(
                                *line,
                                *col,
                                format!("binder `{binder}` ascribed `{t}` but `{a}` expected"),
                            );
                        }
                        (t.clone(), Some((**b).clone()))
                    }
                    (Some(t), None) => (t.clone(), None),
                    (None, Some(SimpleType::Arrow(a, b))) => ((**a).clone(), Some((**b).clone())),
                    (Some(_), Some(other)) | (None, Some(other)) => {
                        return self.err_at(
                            *line,
                            *col,
                            format!("lambda found where `{other}` expected"),
                        );
                    }
                    (None, None) => {
                        return self.err_at(
                            *line,
                            *col,
                            format!("cannot infer the type of binder `{binder}`; ascribe it"),
                        );
                    }
                };
                env.push((binder.clone(), param.clone()));
                let body = self.elaborate(body, body_expected.as_ref(), env)?;
                env.pop();
                Ok(Term::lam(binder.clone(), param, body))
            }
            RawTerm::App { func, arg } => {
                let f = self.elaborate(func, None, env)?;
                let fty = f.ty();
                let (from, to) = match fty {
                    SimpleType::Arrow(a, b) => (*a, *b),
                    other => {
                        let (line, col) = raw_pos(func);
                        return self.err_at(
                            line,
                            col,
                            format!("term of type `{other}` applied to an argument"),
                        );
                    }
                };
                let a = self.elaborate(arg, Some(&from), env)?;
                if let Some(want) = expected {
                    if *want != to {
                        let (line, col) = raw_pos(raw);
                        return self.err_at(
                            line,
                            col,
                            format!("expected `{want}`, found `{to}`"),
                        );
                    }
                }
                Ok(Term::app(f, a))
            }
            RawTerm::Name { name, colour, line, col } => {
                // innermost binder first, then variables, then constants
                let found = env.iter().rev().enumerate().find(|(_, (n, _))| n == name);
                let term = if let Some((depth, (_, ty))) = found {
                    if colour.is_some() {
                        return self.err_at(
                            *line,
                            *col,
                            format!("bound variable `{name}` cannot carry a colour"),
                        );
                    }
                    Term::bound(depth, ty.clone())
                } else if let Some(decl) = self.file.sig.variables.get(name) {
                    let ann = colour.clone().or_else(|| decl.colour.clone());
                    match ann {
                        Some(c) => Term::free_col(name.clone(), decl.ty.clone(), c),
                        None => Term::free(name.clone(), decl.ty.clone()),
                    }
                } else if let Some(decl) = self.file.sig.constants.get(name) {
                    let ann = colour.clone().or_else(|| decl.colour.clone());
                    match ann {
                        Some(c) => Term::cnst_col(name.clone(), decl.ty.clone(), c),
                        None => Term::cnst(name.clone(), decl.ty.clone()),
                    }
                } else {
                    return self.err_at(*line, *col, format!("undeclared name `{name}`"));
                };
                if let Some(want) = expected {
                    let got = term.ty();
                    if *want != got {
                        return self.err_at(
                            *line,
                            *col,
                            format!("`{name}`: expected `{want}`, found `{got}`"),
                        );
                    }
                }
                Ok(term)
            }
        }
    }

    fn term(&mut self, expected: Option<&SimpleType>) -> Result<Term, ParseError> {
        let raw = self.raw_term()?;
        let mut env = Vec::new();
        self.elaborate(&raw, expected, &mut env)
    }

    // ---- statements ----

    fn name_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut names = vec![self.ident()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            names.push(self.ident()?);
        }
        self.expect_tok(Tok::Semi)?;
        Ok(names)
    }

    fn statement(&mut self) -> Result<(), ParseError> {
        let kw = self.ident()?;
        match kw.as_str() {
            "colours" => {
                let names = self.name_list()?;
                let alphabet = ColourAlphabet::new(names.clone())
                    .map_err(|e| ParseError { line: 1, col: 1, msg: e.to_string() })?;
                self.file.colour_order = names;
                self.file.sig.alphabet = alphabet;
                Ok(())
            }
            "types" => {
                let names = self.name_list()?;
                for n in &names {
                    self.file.sig.add_base_type(n.clone());
                }
                self.file.type_order.extend(names);
                Ok(())
            }
            "const" | "var" => {
                let name = self.ident()?;
                if self.file.sig.constants.contains_key(&name)
                    || self.file.sig.variables.contains_key(&name)
                {
                    return self.err(format!("`{name}` is declared twice"));
                }
                self.expect_tok(Tok::Colon)?;
                let ty = self.simple_type()?;
                let colour = if self.peek() == Some(&Tok::At) {
                    self.pos += 1;
                    Some(self.colour_expr()?)
                } else {
                    None
                };
                self.expect_tok(Tok::Semi)?;
                if kw == "const" {
                    match colour {
                        Some(c) => self.file.sig.add_constant_col(name.clone(), ty, c),
                        None => self.file.sig.add_constant(name.clone(), ty),
                    }
                    self.file.const_order.push(name);
                } else {
                    match colour {
                        Some(c) => self.file.sig.add_variable_col(name.clone(), ty, c),
                        None => self.file.sig.add_variable(name.clone(), ty),
                    }
                    self.file.var_order.push(name);
                }
                Ok(())
            }
            "eq" => {
                let lhs_raw = self.raw_term()?;
                self.expect_tok(Tok::Eq)?;
                let rhs_raw = self.raw_term()?;
                self.expect_tok(Tok::Semi)?;
                let mut env = Vec::new();
                let (lhs, rhs) = match self.elaborate(&lhs_raw, None, &mut env) {
                    Ok(lhs) => {
                        let lty = lhs.ty();
                        let rhs = self.elaborate(&rhs_raw, Some(&lty), &mut env)?;
                        (lhs, rhs)
                    }
                    Err(first) => {
                        // the left side may need its binder types from the right
                        let rhs = self.elaborate(&rhs_raw, None, &mut env).map_err(|_| first)?;
                        let rty = rhs.ty();
                        let lhs = self.elaborate(&lhs_raw, Some(&rty), &mut env)?;
                        (lhs, rhs)
                    }
                };
                self.file.equations.push(EquationBody::Term { lhs, rhs });
                Ok(())
            }
            "expect" => {
                if self.file.expected.is_some() {
                    return self.err("duplicate expect block");
                }
                self.expect_tok(Tok::LBrace)?;
                let mut solutions = Vec::new();
                if self.peek() == Some(&Tok::RBrace) {
                    self.pos += 1;
                    self.file.expected = Some(solutions);
                    return Ok(());
                }
                if let Some(Tok::Ident(word)) = self.peek() {
                    if word == "solution" {
                        while let Some(Tok::Ident(word)) = self.peek() {
                            if word != "solution" {
                                return self.err("expected `solution { ... }`");
                            }
                            self.pos += 1;
                            self.expect_tok(Tok::LBrace)?;
                            solutions.push(self.bindings_until_brace()?);
                        }
                        self.expect_tok(Tok::RBrace)?;
                        self.file.expected = Some(solutions);
                        return Ok(());
                    }
                }
                // inline sugar: the block itself is a single solution
                solutions.push(self.bindings_until_brace()?);
                self.file.expected = Some(solutions);
                Ok(())
            }
            other => self.err(format!("unknown statement `{other}`")),
        }
    }

    fn bindings_until_brace(&mut self) -> Result<ExpectedSolution, ParseError> {
        let mut sol =
            ExpectedSolution { term_bindings: Vec::new(), colour_bindings: Vec::new() };
        loop {
            if self.peek() == Some(&Tok::RBrace) {
                self.pos += 1;
                return Ok(sol);
            }
            let name = self.ident()?;
            match self.peek() {
                Some(Tok::ColonEq) => {
                    self.pos += 1;
                    let value = self.colour_expr()?;
                    self.expect_tok(Tok::Semi)?;
                    if !Self::is_colour_variable_name(&name) {
                        return self.err(format!("`{name}` is not a colour variable"));
                    }
                    sol.colour_bindings.push((name, value));
                }
                _ => {
                    let colour = if self.peek() == Some(&Tok::Underscore) {
                        self.pos += 1;
                        Some(self.colour_suffix()?)
                    } else {
                        None
                    };
                    self.expect_tok(Tok::Eq)?;
                    let decl = match self.file.sig.variables.get(&name) {
                        Some(d) => d.clone(),
                        None => {
                            return self.err(format!("`{name}` is not a declared variable"));
                        }
                    };
                    let image = self.term(Some(&decl.ty.clone()))?;
                    self.expect_tok(Tok::Semi)?;
                    let annotation = colour.or_else(|| decl.colour.clone());
                    sol.term_bindings.push((name, annotation, image));
                }
            }
        }
    }

    fn parse_file(mut self) -> Result<ProblemFile, ParseError> {
        while self.peek().is_some() {
            self.statement()?;
        }
        Ok(self.file)
    }
}

fn raw_pos(raw: &RawTerm) -> (usize, usize) {
    match raw {
        RawTerm::Name { line, col, .. } | RawTerm::Lam { line, col, .. } => (*line, *col),
        RawTerm::App { func, .. } => raw_pos(func),
    }
}

/// Parse a single term against an existing signature, checking it at the
/// given type. Useful for transcribing candidate solutions in tests and
/// tools.
pub fn parse_term_with(
    sig: &Signature,
    text: &str,
    expected: &SimpleType,
) -> Result<Term, ParseError> {
    let lexer = lex(text)?;
    let mut parser = Parser {
        toks: lexer.toks,
        pos: 0,
        file: ProblemFile {
            sig: sig.clone(),
            equations: Vec::new(),
            expected: None,
            colour_order: Vec::new(),
            type_order: Vec::new(),
            const_order: Vec::new(),
            var_order: Vec::new(),
        },
    };
    let term = parser.term(Some(expected))?;
    if parser.peek().is_some() {
        return parser.err("trailing input after the term");
    }
    Ok(term)
}

/// Parse a `.hocu` problem file.
pub fn parse(text: &str) -> Result<ProblemFile, ParseError> {
    let lexer = lex(text)?;
    let parser = Parser {
        toks: lexer.toks,
        pos: 0,
        file: ProblemFile {
            sig: Signature::new(ColourAlphabet::empty()),
            equations: Vec::new(),
            expected: None,
            colour_order: Vec::new(),
            type_order: Vec::new(),
            const_order: Vec::new(),
            var_order: Vec::new(),
        },
    };
    parser.parse_file()
}

fn print_colour_annotation(c: &ColourTerm) -> String {
    match c {
        ColourTerm::Constant(_) | ColourTerm::Variable(_) | ColourTerm::Not(_) => format!("_{c}"),
        _ => format!("_({c})"),
    }
}

/// Render a problem file in the concrete syntax; parsing the result gives
/// back an equal abstract file.
pub fn print_problem(file: &ProblemFile) -> String {
    let mut out = String::new();
    if !file.colour_order.is_empty() {
        out.push_str(&format!("colours {};\n", file.colour_order.join(", ")));
    }
    if !file.type_order.is_empty() {
        out.push_str(&format!("types {};\n", file.type_order.join(", ")));
    }
    for name in &file.const_order {
        let decl = &file.sig.constants[name];
        match &decl.colour {
            Some(c) => out.push_str(&format!("const {name} : {} @ {c};\n", decl.ty)),
            None => out.push_str(&format!("const {name} : {};\n", decl.ty)),
        }
    }
    for name in &file.var_order {
        let decl = &file.sig.variables[name];
        match &decl.colour {
            Some(c) => out.push_str(&format!("var {name} : {} @ {c};\n", decl.ty)),
            None => out.push_str(&format!("var {name} : {};\n", decl.ty)),
        }
    }
    for eq in &file.equations {
        if let EquationBody::Term { lhs, rhs } = eq {
            out.push_str(&format!("eq {} = {};\n", print_term(lhs), print_term(rhs)));
        }
    }
    if let Some(expected) = &file.expected {
        out.push_str("expect {\n");
        for sol in expected {
            out.push_str("  solution {\n");
            for (name, colour, image) in &sol.term_bindings {
                let suffix = colour.as_ref().map(print_colour_annotation).unwrap_or_default();
                out.push_str(&format!("    {name}{suffix} = {};\n", print_term(image)));
            }
            for (var, value) in &sol.colour_bindings {
                out.push_str(&format!("    {var} := {value};\n"));
            }
            out.push_str("  }\n");
        }
        out.push_str("}\n");
    }
    out
}

impl ProblemFile {
    /// The file with every colour removed: annotations, declaration
    /// defaults, expectation colours, the alphabet.
    pub fn erased(&self) -> ProblemFile {
        ProblemFile {
            sig: self.sig.erased(),
            equations: self
                .equations
                .iter()
                .map(|eq| match eq {
                    EquationBody::Term { lhs, rhs } => EquationBody::Term {
                        lhs: crate::term::erase(lhs),
                        rhs: crate::term::erase(rhs),
                    },
                    EquationBody::Colour { .. } => unreachable!("files hold term equations"),
                })
                .collect(),
            expected: self.expected.as_ref().map(|sols| {
                sols.iter()
                    .map(|s| ExpectedSolution {
                        term_bindings: s
                            .term_bindings
                            .iter()
                            .map(|(n, _, img)| (n.clone(), None, crate::term::erase(img)))
                            .collect(),
                        colour_bindings: Vec::new(),
                    })
                    .collect()
            }),
            colour_order: Vec::new(),
            type_order: self.type_order.clone(),
            const_order: self.const_order.clone(),
            var_order: self.var_order.clone(),
        }
    }

    /// Expected solutions as normalized coloured substitutions.
    pub fn expected_substitutions(
        &self,
    ) -> Option<Vec<crate::subst::CSubstitution>> {
        let expected = self.expected.as_ref()?;
        let mut out = Vec::new();
        for sol in expected {
            let mut sub = crate::subst::CSubstitution::empty();
            for (name, colour, image) in &sol.term_bindings {
                sub = sub
                    .with_term_binding(
                        name.clone(),
                        colour.clone(),
                        normalize(image),
                        &self.sig.alphabet,
                    )
                    .expect("expected solutions parse against the alphabet");
            }
            for (var, value) in &sol.colour_bindings {
                sub = sub.with_colour_binding(var.clone(), value.clone());
            }
            out.push(sub);
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ELLIPSIS: &str = "\
# ellipsis with the primary occurrence coloured
colours pe, pf, ps;
types e, t;
const like : e -> e -> t;
const dan : e;
const golf : e;
var R : e -> t @ ~pe;
eq like(dan_pe, golf) = R(dan_pe);
expect { R_~pe = \\x. like(x, golf); }
";

    #[test]
    fn parses_the_ellipsis_file() {
        let file = parse(ELLIPSIS).unwrap();
        assert_eq!(file.equations.len(), 1);
        assert_eq!(file.sig.constants.len(), 3);
        assert_eq!(file.sig.variables.len(), 1);
        let expected = file.expected.as_ref().unwrap();
        assert_eq!(expected.len(), 1);
        assert_eq!(expected[0].term_bindings.len(), 1);
        // declared colour is the default for the bare occurrence of R
        match &file.equations[0] {
            EquationBody::Term { rhs, .. } => {
                let (head, _) = rhs.spine();
                match head {
                    Term::Free { colour, .. } => {
                        assert_eq!(
                            colour,
                            &Some(ColourTerm::not(ColourTerm::constant("pe")))
                        );
                    }
                    _ => panic!(),
                }
            }
            _ => panic!(),
        }
    }

    #[test]
    fn empty_equation_list_is_valid() {
        let file = parse("types e;\nconst a : e;\n").unwrap();
        assert!(file.equations.is_empty());
        assert!(file.expected.is_none());
    }

    #[test]
    fn undeclared_colour_is_a_resolution_error() {
        let err = parse("types e;\nvar R : e -> e @ ~pe;\n").unwrap_err();
        assert!(err.msg.contains("pe"), "{err}");
    }

    #[test]
    fn undeclared_base_type_is_an_error() {
        let err = parse("types e;\nconst f : e -> t;\n").unwrap_err();
        assert!(err.msg.contains("t"), "{err}");
    }

    #[test]
    fn type_mismatch_in_equation_is_reported() {
        let err = parse(
            "types e, t;\nconst a : e;\nconst p : t;\neq a = p;\n",
        )
        .unwrap_err();
        assert!(err.msg.contains("expected"), "{err}");
    }

    #[test]
    fn juxtaposition_and_comma_form_agree() {
        let base = "types e, t;\nconst like : e -> e -> t;\nconst dan : e;\nconst golf : e;\n";
        let a = parse(&format!("{base}eq like dan golf = like(dan, golf);\n")).unwrap();
        match &a.equations[0] {
            EquationBody::Term { lhs, rhs } => assert_eq!(lhs, rhs),
            _ => panic!(),
        }
    }

    #[test]
    fn lambda_binders_infer_from_expectation() {
        let file = parse(
            "types e, t;\nconst like : e -> e -> t;\nconst golf : e;\n\
             var R : e -> t;\neq R = \\x. like(x, golf);\n",
        )
        .unwrap();
        match &file.equations[0] {
            EquationBody::Term { rhs, .. } => {
                assert_eq!(rhs.ty(), SimpleType::arrow(SimpleType::base("e"), SimpleType::base("t")));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn uninferable_binder_is_an_error() {
        let err = parse("types e;\nconst a : e;\neq \\x. x = \\y. y;\n").unwrap_err();
        assert!(err.msg.contains("binder"), "{err}");
    }

    #[test]
    fn bound_variables_reject_colours() {
        let err = parse(
            "colours pe, pf;\ntypes e;\nconst f : e -> e;\neq \\x:e. f(x_pe) = \\x:e. f(x);\n",
        )
        .unwrap_err();
        assert!(err.msg.contains("bound"), "{err}");
    }

    #[test]
    fn round_trip_is_identity_on_the_abstract_syntax() {
        let f1 = parse(ELLIPSIS).unwrap();
        let printed = print_problem(&f1);
        let f2 = parse(&printed).unwrap();
        assert_eq!(f1, f2);
    }

    #[test]
    fn expect_block_variants() {
        let none = parse("types e;\nconst a : e;\nexpect { }\n").unwrap();
        assert_eq!(none.expected, Some(vec![]));
        let two = parse(
            "types e;\nconst a : e;\nvar x : e -> e;\n\
             expect { solution { x = \\z:e. a; } solution { x = \\z:e. z; } }\n",
        )
        .unwrap();
        assert_eq!(two.expected.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn compound_annotations_parse_with_parens() {
        let file = parse(
            "colours pe, pf, ps;\ntypes e;\nconst i : e;\n\
             eq i_(pe | pf) = i_(pe | pf);\n",
        )
        .unwrap();
        match &file.equations[0] {
            EquationBody::Term { lhs, .. } => match lhs {
                Term::Const { colour: Some(c), .. } => {
                    assert_eq!(
                        *c,
                        ColourTerm::or(ColourTerm::constant("pe"), ColourTerm::constant("pf"))
                    );
                }
                _ => panic!(),
            },
            _ => panic!(),
        }
    }

    #[test]
    fn printed_terms_reparse_to_the_same_tree() {
        let file = parse(ELLIPSIS).unwrap();
        let e_t = SimpleType::arrow(SimpleType::base("e"), SimpleType::base("t"));
        let samples = [
            ("like(dan_pe, golf)", SimpleType::base("t")),
            ("\\x. like(x, golf)", e_t.clone()),
            ("R_~pe(dan_pe)", SimpleType::base("t")),
            ("R_(pf | ps)(golf)", SimpleType::base("t")),
        ];
        for (text, ty) in samples {
            let term = parse_term_with(&file.sig, text, &ty).unwrap();
            let printed = crate::term::print_term(&term);
            let again = parse_term_with(&file.sig, &printed, &ty)
                .unwrap_or_else(|e| panic!("`{printed}` fails to reparse: {e}"));
            assert_eq!(term, again, "`{text}` vs `{printed}`");
        }
    }

    #[test]
    fn erased_file_drops_every_colour() {
        let file = parse(ELLIPSIS).unwrap().erased();
        assert!(file.sig.alphabet.is_empty());
        for eq in &file.equations {
            if let EquationBody::Term { lhs, rhs } = eq {
                for t in [lhs, rhs] {
                    t.visit_symbols(&mut |s| assert!(s.colour.is_none()));
                }
            }
        }
    }
}
