//! Signatures, terms, substitutions and one-sided matching.
//!
//! Terms are written as prefix S-expressions: a variable is a bare
//! identifier, an application is `(sym arg ...)`, and a constant may be
//! written either `(sym)` or bare `sym`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// An algebraic type: operation symbols with their arities.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub name: String,
    ops: Vec<(String, usize)>,
}

impl Signature {
    pub fn new(name: impl Into<String>) -> Self {
        Signature {
            name: name.into(),
            ops: Vec::new(),
        }
    }

    pub fn add(&mut self, symbol: impl Into<String>, arity: usize) -> Result<()> {
        let symbol = symbol.into();
        if symbol.is_empty() || symbol.chars().any(|c| is_delimiter(c) || c.is_whitespace()) {
            return Err(Error::invalid(format!("bad operation symbol `{symbol}`")));
        }
        if self.arity(&symbol).is_some() {
            return Err(Error::DuplicateSymbol(symbol));
        }
        self.ops.push((symbol, arity));
        Ok(())
    }

    /// Builder form of [`Signature::add`] for symbols known to be fresh.
    pub fn with(mut self, symbol: &str, arity: usize) -> Self {
        self.add(symbol, arity)
            .unwrap_or_else(|e| panic!("Signature::with: {e}"));
        self
    }

    pub fn arity(&self, symbol: &str) -> Option<usize> {
        self.ops
            .iter()
            .find(|(s, _)| s == symbol)
            .map(|&(_, a)| a)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.arity(symbol).is_some()
    }

    /// Symbols in declaration order.
    pub fn ops(&self) -> impl Iterator<Item = (&str, usize)> {
        self.ops.iter().map(|(s, a)| (s.as_str(), *a))
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Union with `other`; shared symbols must agree on arity.
    pub fn merged(&self, other: &Signature) -> Result<Signature> {
        let mut out = self.clone();
        for (s, a) in other.ops() {
            match out.arity(s) {
                Some(b) if a == b => {}
                Some(b) => {
                    return Err(Error::Arity {
                        symbol: s.to_string(),
                        expected: b,
                        found: a,
                    })
                }
                None => out.add(s, a)?,
            }
        }
        Ok(out)
    }

    /// Commutative rings: `+`, `*`, `-`, `0`, `1`.
    pub fn ring() -> Self {
        Signature::new("ring")
            .with("+", 2)
            .with("*", 2)
            .with("-", 1)
            .with("0", 0)
            .with("1", 0)
    }

    /// Checks that every application in `t` uses a declared symbol at its arity.
    pub fn check(&self, t: &Term) -> Result<()> {
        match t {
            Term::Var(v) => {
                if self.contains(v) {
                    Err(Error::invalid(format!(
                        "variable `{v}` collides with an operation symbol"
                    )))
                } else {
                    Ok(())
                }
            }
            Term::App(f, args) => {
                let expected = self.arity(f).ok_or_else(|| Error::UnknownSymbol {
                    pos: 0,
                    symbol: f.clone(),
                })?;
                if expected != args.len() {
                    return Err(Error::Arity {
                        symbol: f.clone(),
                        expected,
                        found: args.len(),
                    });
                }
                args.iter().try_for_each(|a| self.check(a))
            }
        }
    }

    /// Parses the `symbol arity` per line format. `#` starts a comment.
    pub fn parse(name: &str, text: &str) -> Result<Signature> {
        let mut sig = Signature::new(name);
        for (lineno, line) in text.lines().enumerate() {
            let line = strip_comment(line);
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(sym), Some(ar), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::invalid(format!(
                    "signature line {}: expected `symbol arity`",
                    lineno + 1
                )));
            };
            let arity = ar.parse::<usize>().map_err(|_| {
                Error::invalid(format!("signature line {}: bad arity `{ar}`", lineno + 1))
            })?;
            sig.add(sym, arity)?;
        }
        Ok(sig)
    }

    pub fn to_file_string(&self) -> String {
        self.ops
            .iter()
            .map(|(s, a)| format!("{s} {a}\n"))
            .collect()
    }
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn app(symbol: &str, args: Vec<Term>) -> Term {
        Term::App(symbol.to_string(), args)
    }

    pub fn constant(symbol: &str) -> Term {
        Term::App(symbol.to_string(), Vec::new())
    }

    pub fn unary(symbol: &str, a: Term) -> Term {
        Term::App(symbol.to_string(), vec![a])
    }

    pub fn binary(symbol: &str, a: Term, b: Term) -> Term {
        Term::App(symbol.to_string(), vec![a, b])
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Var(_) => &[],
            Term::App(_, args) => args,
        }
    }

    pub fn head(&self) -> Option<&str> {
        match self {
            Term::Var(_) => None,
            Term::App(f, _) => Some(f),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Variables in order of first occurrence.
    pub fn vars_ordered(&self) -> Vec<String> {
        fn go(t: &Term, out: &mut Vec<String>) {
            match t {
                Term::Var(v) => {
                    if !out.contains(v) {
                        out.push(v.clone())
                    }
                }
                Term::App(_, args) => args.iter().for_each(|a| go(a, out)),
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Number of symbol and variable occurrences.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn var_occurrences(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => args.iter().map(Term::var_occurrences).sum(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    pub fn subterm(&self, path: &[usize]) -> Option<&Term> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.args().get(i)?.subterm(rest),
        }
    }

    /// Replaces the subterm at `path`; `None` if the path leaves the term.
    pub fn replace_at(&self, path: &[usize], new: Term) -> Option<Term> {
        match path.split_first() {
            None => Some(new),
            Some((&i, rest)) => match self {
                Term::Var(_) => None,
                Term::App(f, args) => {
                    let child = args.get(i)?.replace_at(rest, new)?;
                    let mut args = args.clone();
                    args[i] = child;
                    Some(Term::App(f.clone(), args))
                }
            },
        }
    }

    /// All subterms, outermost first.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            let t = out[i];
            out.extend(t.args().iter());
            i += 1;
        }
        out
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::App(s, args) if args.is_empty() => f.write_str(s),
            Term::App(s, args) => {
                write!(f, "({s}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        Equation { lhs, rhs }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut v = self.lhs.vars();
        self.rhs.collect_vars(&mut v);
        v
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// Finite map from variables to terms; unmapped variables are fixed.
#[derive(Debug, Clone, PartialEq, Eq, Default, PartialOrd, Ord, Hash)]
pub struct Substitution(BTreeMap<String, Term>);

impl Substitution {
    pub fn new() -> Self {
        Substitution(BTreeMap::new())
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Term)>) -> Self {
        Substitution(pairs.into_iter().map(|(v, t)| (v.to_string(), t)).collect())
    }

    pub fn insert(&mut self, var: impl Into<String>, t: Term) -> Option<Term> {
        self.0.insert(var.into(), t)
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn remove(&mut self, var: &str) -> Option<Term> {
        self.0.remove(var)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.0.contains_key(var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.0.iter()
    }

    /// Simultaneous replacement.
    pub fn apply(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.0.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| self.apply(a)).collect()),
        }
    }

    /// Applies `outer` to every codomain term of `self`.
    pub fn then(&self, outer: &Substitution) -> Substitution {
        Substitution(
            self.0
                .iter()
                .map(|(v, t)| (v.clone(), outer.apply(t)))
                .collect(),
        )
    }

    /// Adds the bindings of `other` for variables not bound here. Returns
    /// `false` on a conflicting binding.
    pub fn merge(&mut self, other: &Substitution) -> bool {
        for (v, t) in other.iter() {
            match self.0.get(v) {
                Some(u) if u != t => return false,
                Some(_) => {}
                None => {
                    self.0.insert(v.clone(), t.clone());
                }
            }
        }
        true
    }

    /// Restriction to the given variables.
    pub fn restrict(&self, vars: &BTreeSet<String>) -> Substitution {
        Substitution(
            self.0
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        )
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}:={t}")?;
        }
        f.write_str("}")
    }
}

/// One-sided matching: the unique `s` with `s(pattern) = target`, if any.
pub fn match_term(pattern: &Term, target: &Term) -> Option<Substitution> {
    let mut s = Substitution::new();
    match_into(pattern, target, &mut s).then_some(s)
}

/// Extends `s` so that `s(pattern) = target`. On failure `s` may hold
/// partial bindings.
pub fn match_into(pattern: &Term, target: &Term, s: &mut Substitution) -> bool {
    match (pattern, target) {
        (Term::Var(v), _) => match s.0.get(v) {
            Some(bound) => bound == target,
            None => {
                s.0.insert(v.clone(), target.clone());
                true
            }
        },
        (Term::App(f, fa), Term::App(g, ga)) => {
            f == g
                && fa.len() == ga.len()
                && fa.iter().zip(ga).all(|(p, t)| match_into(p, t, s))
        }
        (Term::App(..), Term::Var(_)) => false,
    }
}

fn is_delimiter(c: char) -> bool {
    matches!(c, '(' | ')' | '{' | '}' | '[' | ']' | ',' | ';')
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

/// Parses exactly one term spanning all of `text` (surrounding whitespace allowed).
pub fn parse_term(text: &str, sig: &Signature) -> Result<Term> {
    let (t, end) = parse_term_at(text, 0, sig)?;
    let rest = skip_ws(text, end);
    if rest < text.len() {
        return Err(Error::Syntax {
            pos: rest,
            msg: "trailing input after term".into(),
        });
    }
    Ok(t)
}

pub(crate) fn skip_ws(text: &str, mut pos: usize) -> usize {
    let bytes = text.as_bytes();
    while pos < bytes.len() && (bytes[pos] as char).is_ascii_whitespace() {
        pos += 1;
    }
    // non-ASCII whitespace
    while let Some(c) = text[pos..].chars().next() {
        if c.is_whitespace() {
            pos += c.len_utf8();
        } else {
            break;
        }
    }
    pos
}

fn read_atom(text: &str, start: usize) -> (&str, usize) {
    let mut end = start;
    for c in text[start..].chars() {
        if c.is_whitespace() || is_delimiter(c) {
            break;
        }
        end += c.len_utf8();
    }
    (&text[start..end], end)
}

/// Parses a term starting at byte `pos`, returning it with the byte offset
/// just past it.
pub fn parse_term_at(text: &str, pos: usize, sig: &Signature) -> Result<(Term, usize)> {
    let pos = skip_ws(text, pos);
    match text[pos..].chars().next() {
        None => Err(Error::Syntax {
            pos,
            msg: "unexpected end of input".into(),
        }),
        Some('(') => {
            let sym_pos = skip_ws(text, pos + 1);
            let (sym, mut cur) = read_atom(text, sym_pos);
            if sym.is_empty() {
                return Err(Error::Syntax {
                    pos: sym_pos,
                    msg: "expected operation symbol after `(`".into(),
                });
            }
            let arity = sig.arity(sym).ok_or_else(|| Error::UnknownSymbol {
                pos: sym_pos,
                symbol: sym.to_string(),
            })?;
            let mut args = Vec::new();
            loop {
                cur = skip_ws(text, cur);
                match text[cur..].chars().next() {
                    Some(')') => {
                        cur += 1;
                        break;
                    }
                    None => {
                        return Err(Error::Syntax {
                            pos: cur,
                            msg: "unclosed `(`".into(),
                        })
                    }
                    Some(_) => {
                        let (a, next) = parse_term_at(text, cur, sig)?;
                        args.push(a);
                        cur = next;
                    }
                }
            }
            if args.len() != arity {
                return Err(Error::Arity {
                    symbol: sym.to_string(),
                    expected: arity,
                    found: args.len(),
                });
            }
            Ok((Term::App(sym.to_string(), args), cur))
        }
        Some(c) if is_delimiter(c) => Err(Error::Syntax {
            pos,
            msg: format!("unexpected `{c}`"),
        }),
        Some(_) => {
            let (atom, end) = read_atom(text, pos);
            match sig.arity(atom) {
                Some(0) => Ok((Term::constant(atom), end)),
                Some(n) => Err(Error::Arity {
                    symbol: atom.to_string(),
                    expected: n,
                    found: 0,
                }),
                None if is_identifier(atom) => Ok((Term::var(atom), end)),
                None => Err(Error::UnknownSymbol {
                    pos,
                    symbol: atom.to_string(),
                }),
            }
        }
    }
}

/// Parses `lhs = rhs`.
pub fn parse_equation(text: &str, sig: &Signature) -> Result<Equation> {
    let (lhs, end) = parse_term_at(text, 0, sig)?;
    let eq = skip_ws(text, end);
    if !text[eq..].starts_with('=') {
        return Err(Error::Syntax {
            pos: eq,
            msg: "expected `=`".into(),
        });
    }
    let rhs = parse_term(&text[eq + 1..], sig).map_err(|e| shift(e, eq + 1))?;
    Ok(Equation { lhs, rhs })
}

pub(crate) fn shift(e: Error, by: usize) -> Error {
    match e {
        Error::Syntax { pos, msg } => Error::Syntax { pos: pos + by, msg },
        Error::UnknownSymbol { pos, symbol } => Error::UnknownSymbol {
            pos: pos + by,
            symbol,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> Signature {
        Signature::ring()
    }

    #[test]
    fn parses_grammar_cases() {
        let t = parse_term("(+ x 0)", &ring()).unwrap();
        assert_eq!(t, Term::binary("+", Term::var("x"), Term::constant("0")));
        assert_eq!(parse_term("x", &ring()).unwrap(), Term::var("x"));
        assert_eq!(parse_term("(0)", &ring()).unwrap(), Term::constant("0"));
        assert_eq!(
            parse_term("(+ x)", &ring()),
            Err(Error::Arity {
                symbol: "+".into(),
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_term("(f x)", &ring()),
            Err(Error::UnknownSymbol { pos: 1, .. })
        ));
        assert!(matches!(parse_term("+", &ring()), Err(Error::Arity { .. })));
        assert!(matches!(
            parse_term("(+ x 0", &ring()),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_term("x y", &ring()),
            Err(Error::Syntax { pos: 2, .. })
        ));
        assert!(matches!(parse_term("", &ring()), Err(Error::Syntax { .. })));
        assert!(matches!(
            parse_term("2", &ring()),
            Err(Error::UnknownSymbol { .. })
        ));
    }

    #[test]
    fn substitution_is_simultaneous() {
        let t = parse_term("(* x y)", &ring()).unwrap();
        let s = Substitution::from_pairs([("x", Term::var("y")), ("y", Term::var("x"))]);
        assert_eq!(s.apply(&t).to_string(), "(* y x)");
        let s = Substitution::from_pairs([("x", Term::constant("0"))]);
        assert_eq!(
            s.apply(&parse_term("(+ x y)", &ring()).unwrap()).to_string(),
            "(+ 0 y)"
        );
        assert_eq!(Substitution::new().apply(&t), t);
    }

    #[test]
    fn matching() {
        let r = ring();
        let p = parse_term("(+ x x)", &r).unwrap();
        let s = match_term(&p, &parse_term("(+ 0 0)", &r).unwrap()).unwrap();
        assert_eq!(s.get("x"), Some(&Term::constant("0")));
        assert!(match_term(&p, &parse_term("(+ 0 1)", &r).unwrap()).is_none());
        let target = parse_term("(+ 0 1)", &r).unwrap();
        let s = match_term(&Term::var("x"), &target).unwrap();
        assert_eq!(s.get("x"), Some(&target));
    }

    #[test]
    fn signature_file_round_trip() {
        let sig = Signature::parse("r", "+ 2\n* 2 # times\n\n- 1\n0 0\n1 0\n").unwrap();
        assert_eq!(sig, Signature::ring().clone_named("r"));
        assert_eq!(Signature::parse("r", &sig.to_file_string()).unwrap(), sig);
        assert!(Signature::parse("r", "+ 2\n+ 1\n").is_err());
    }

    #[test]
    fn paths() {
        let t = parse_term("(+ (- x) (* y 1))", &ring()).unwrap();
        assert_eq!(t.subterm(&[1, 0]), Some(&Term::var("y")));
        let u = t.replace_at(&[0, 0], Term::constant("0")).unwrap();
        assert_eq!(u.to_string(), "(+ (- 0) (* y 1))");
        assert!(t.replace_at(&[0, 0, 0], Term::var("z")).is_none());
    }

    impl Signature {
        fn clone_named(&self, name: &str) -> Signature {
            let mut s = self.clone();
            s.name = name.to_string();
            s
        }
    }
}
