//! Hilbert calculi as data, proof objects and their checkers, single-premise
//! chain proofs, derived-rule macros and a bounded forward-chaining prover.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::terms::{
    match_into, parse_term_at, skip_ws, strip_comment, Signature, Substitution, Term,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Lr,
    Rl,
}

impl Direction {
    pub fn flip(self) -> Direction {
        match self {
            Direction::Lr => Direction::Rl,
            Direction::Rl => Direction::Lr,
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        match s {
            "lr" => Some(Direction::Lr),
            "rl" => Some(Direction::Rl),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Lr => "lr",
            Direction::Rl => "rl",
        })
    }
}

/// Links a directed rule back to the bidirectional scheme it was expanded from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeOrigin {
    pub base: String,
    pub dir: Direction,
    /// 0-based position of this rule's conclusion within its side.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub premises: Vec<Term>,
    pub conclusion: Term,
    pub origin: Option<SchemeOrigin>,
}

impl Rule {
    pub fn new(name: impl Into<String>, premises: Vec<Term>, conclusion: Term) -> Rule {
        Rule {
            name: name.into(),
            premises,
            conclusion,
            origin: None,
        }
    }

    pub fn axiom(name: impl Into<String>, conclusion: Term) -> Rule {
        Rule::new(name, Vec::new(), conclusion)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut v = self.conclusion.vars();
        for p in &self.premises {
            p.collect_vars(&mut v);
        }
        v
    }

    /// The premise/conclusion pair for `σ`.
    pub fn instantiate(&self, s: &Substitution) -> (Vec<Term>, Term) {
        (
            self.premises.iter().map(|p| s.apply(p)).collect(),
            s.apply(&self.conclusion),
        )
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : ", self.name)?;
        for (i, p) in self.premises.iter().enumerate() {
            if i > 0 {
                f.write_str(" ; ")?;
            }
            write!(f, "{p}")?;
        }
        if !self.premises.is_empty() {
            f.write_str(" ")?;
        }
        write!(f, "|- {}", self.conclusion)
    }
}

fn valid_rule_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || "(){}[],;:#".contains(c))
}

fn directed_name(base: &str, dir: Direction, index: usize, count: usize) -> String {
    if count == 1 {
        format!("{base}/{dir}")
    } else {
        format!("{base}/{dir}{}", index + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertCalculus {
    pub signature: Signature,
    rules: Vec<Rule>,
}

impl HilbertCalculus {
    pub fn new(signature: Signature) -> Self {
        HilbertCalculus {
            signature,
            rules: Vec::new(),
        }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn push(&mut self, rule: Rule) -> Result<()> {
        if !valid_rule_name(&rule.name) {
            return Err(Error::invalid(format!("bad rule name `{}`", rule.name)));
        }
        if self.rule(&rule.name).is_some() {
            return Err(Error::DuplicateRule(rule.name));
        }
        for t in rule.premises.iter().chain(std::iter::once(&rule.conclusion)) {
            self.signature.check(t)?;
        }
        self.rules.push(rule);
        Ok(())
    }

    /// Adds `left ⫤⊢ right`, expanded into one directed rule per conclusion
    /// per direction.
    pub fn push_scheme(&mut self, base: &str, left: Vec<Term>, right: Vec<Term>) -> Result<()> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::invalid(format!(
                "scheme `{base}` needs formulas on both sides"
            )));
        }
        for (dir, prem, concl) in [
            (Direction::Lr, &left, &right),
            (Direction::Rl, &right, &left),
        ] {
            for (i, c) in concl.iter().enumerate() {
                let mut r = Rule::new(
                    directed_name(base, dir, i, concl.len()),
                    prem.clone(),
                    c.clone(),
                );
                r.origin = Some(SchemeOrigin {
                    base: base.to_string(),
                    dir,
                    index: i,
                });
                self.push(r)?;
            }
        }
        Ok(())
    }

    /// The directed rule `base` in direction `dir`, for single-conclusion schemes.
    pub fn directed(&self, base: &str, dir: Direction) -> Option<&Rule> {
        let mut it = self.rules.iter().filter(|r| {
            r.origin
                .as_ref()
                .is_some_and(|o| o.base == base && o.dir == dir)
        });
        let first = it.next()?;
        it.next().is_none().then_some(first)
    }

    /// Scheme bases in order of first appearance.
    pub fn scheme_bases(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rules {
            if let Some(o) = &r.origin {
                if !out.contains(&o.base.as_str()) {
                    out.push(&o.base);
                }
            }
        }
        out
    }

    /// Whether every rule is one direction of a single-premise,
    /// single-conclusion bidirectional scheme whose partner is present.
    pub fn single_premise_bidirectional(&self) -> std::result::Result<(), String> {
        for r in &self.rules {
            let Some(o) = &r.origin else {
                return Err(format!("rule `{}` is not part of a bidirectional scheme", r.name));
            };
            if r.premises.len() != 1 {
                return Err(format!("rule `{}` has {} premises", r.name, r.premises.len()));
            }
            let partner = self
                .directed(&o.base, o.dir.flip())
                .ok_or_else(|| format!("scheme `{}` lacks a single {} rule", o.base, o.dir.flip()))?;
            if partner.premises != [r.conclusion.clone()] || partner.conclusion != r.premises[0] {
                return Err(format!("rule `{}` is not the converse of `{}`", partner.name, r.name));
            }
        }
        Ok(())
    }

    /// Parses the calculus file format: `name : p ; p |- c` for directed rules
    /// and `name : l ; l <-> r ; r` for bidirectional schemes.
    pub fn parse(text: &str, signature: Signature) -> Result<HilbertCalculus> {
        let mut calc = HilbertCalculus::new(signature);
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let ctx = |e: Error| Error::invalid(format!("calculus line {}: {e}", lineno + 1));
            let (name, body) = line
                .split_once(':')
                .ok_or_else(|| ctx(Error::invalid("expected `name : ...`")))?;
            let name = name.trim();
            let mut sides: Vec<Vec<Term>> = vec![Vec::new()];
            let mut sep: Option<&str> = None;
            let mut pos = 0;
            loop {
                pos = skip_ws(body, pos);
                let rest = &body[pos..];
                if rest.is_empty() {
                    break;
                } else if let Some(tok) = ["|-", "<->"].into_iter().find(|t| rest.starts_with(*t)) {
                    if sep.is_some() {
                        return Err(ctx(Error::invalid("more than one `|-`/`<->`")));
                    }
                    sep = Some(tok);
                    sides.push(Vec::new());
                    pos += tok.len();
                } else if rest.starts_with(';') {
                    pos += 1;
                } else {
                    let (t, end) = parse_term_at(body, pos, &calc.signature).map_err(ctx)?;
                    sides.last_mut().unwrap().push(t);
                    pos = end;
                }
            }
            match (sep, sides.as_slice()) {
                (Some("|-"), [prem, concl]) => {
                    let [c] = concl.as_slice() else {
                        return Err(ctx(Error::invalid("a directed rule has exactly one conclusion")));
                    };
                    calc.push(Rule::new(name, prem.clone(), c.clone())).map_err(ctx)?;
                }
                (Some("<->"), [l, r]) => {
                    calc.push_scheme(name, l.clone(), r.clone()).map_err(ctx)?
                }
                _ => return Err(ctx(Error::invalid("missing `|-` or `<->`"))),
            }
        }
        Ok(calc)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let mut done: BTreeSet<&str> = BTreeSet::new();
        for r in &self.rules {
            match &r.origin {
                None => out.push_str(&format!("{r}\n")),
                Some(o) => {
                    if !done.insert(o.base.as_str()) {
                        continue;
                    }
                    let lr: Vec<&Rule> = self
                        .rules
                        .iter()
                        .filter(|q| {
                            q.origin
                                .as_ref()
                                .is_some_and(|p| p.base == o.base && p.dir == Direction::Lr)
                        })
                        .collect();
                    let join = |ts: &mut dyn Iterator<Item = &Term>| {
                        ts.map(|t| t.to_string()).collect::<Vec<_>>().join(" ; ")
                    };
                    out.push_str(&format!(
                        "{} : {} <-> {}\n",
                        o.base,
                        join(&mut lr[0].premises.iter()),
                        join(&mut lr.iter().map(|q| &q.conclusion)),
                    ));
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Derivations

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Premise,
    Rule {
        name: String,
        subst: Substitution,
        /// 0-based indices of earlier steps, one per rule premise.
        refs: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub formula: Term,
    pub justification: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Derivation {
    pub premises: Vec<Term>,
    pub steps: Vec<Step>,
}

/// First failure found by a checker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckFailure {
    /// 0-based step (derivations) or transition (chains).
    pub step: usize,
    pub message: String,
    pub expected: Option<Term>,
    pub found: Option<Term>,
}

impl fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {}", self.step + 1, self.message)?;
        if let Some(e) = &self.expected {
            write!(f, "; expected {e}")?;
        }
        if let Some(g) = &self.found {
            write!(f, "; found {g}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub steps_checked: usize,
    pub failure: Option<CheckFailure>,
}

impl CheckReport {
    pub fn is_valid(&self) -> bool {
        self.failure.is_none()
    }
}

impl Derivation {
    pub fn new(premises: Vec<Term>) -> Self {
        Derivation {
            premises,
            steps: Vec::new(),
        }
    }

    pub fn conclusion(&self) -> Option<&Term> {
        self.steps.last().map(|s| &s.formula)
    }

    pub fn find(&self, t: &Term) -> Option<usize> {
        self.steps.iter().position(|s| &s.formula == t)
    }

    /// Adds a premise step (reusing an existing step for the same formula).
    pub fn premise(&mut self, t: Term) -> usize {
        if let Some(i) = self.steps.iter().position(|s| {
            s.formula == t && s.justification == Justification::Premise
        }) {
            return i;
        }
        if !self.premises.contains(&t) {
            self.premises.push(t.clone());
        }
        self.steps.push(Step {
            formula: t,
            justification: Justification::Premise,
        });
        self.steps.len() - 1
    }

    /// Appends an application of `rule_name`; the formula is computed from the
    /// calculus and the referenced premises are verified.
    pub fn apply(
        &mut self,
        calc: &HilbertCalculus,
        rule_name: &str,
        subst: Substitution,
        refs: Vec<usize>,
    ) -> Result<usize> {
        let rule = calc
            .rule(rule_name)
            .ok_or_else(|| Error::UnknownRule(rule_name.to_string()))?;
        let (prems, concl) = rule.instantiate(&subst);
        if prems.len() != refs.len() {
            return Err(Error::invalid(format!(
                "rule `{rule_name}` has {} premises, {} references given",
                prems.len(),
                refs.len()
            )));
        }
        for (p, &r) in prems.iter().zip(&refs) {
            match self.steps.get(r) {
                Some(s) if &s.formula == p => {}
                Some(s) => {
                    return Err(Error::invalid(format!(
                        "rule `{rule_name}`: step {} is {}, premise needs {p}",
                        r + 1,
                        s.formula
                    )))
                }
                None => return Err(Error::invalid(format!("no step {}", r + 1))),
            }
        }
        self.steps.push(Step {
            formula: concl,
            justification: Justification::Rule {
                name: rule_name.to_string(),
                subst,
                refs,
            },
        });
        Ok(self.steps.len() - 1)
    }

    /// Appends all steps of `other`, returning the index offset. Premises of
    /// `other` become premises here.
    pub fn splice(&mut self, other: &Derivation) -> usize {
        let offset = self.steps.len();
        for p in &other.premises {
            if !self.premises.contains(p) {
                self.premises.push(p.clone());
            }
        }
        for s in &other.steps {
            let justification = match &s.justification {
                Justification::Premise => Justification::Premise,
                Justification::Rule { name, subst, refs } => Justification::Rule {
                    name: name.clone(),
                    subst: subst.clone(),
                    refs: refs.iter().map(|r| r + offset).collect(),
                },
            };
            self.steps.push(Step {
                formula: s.formula.clone(),
                justification,
            });
        }
        offset
    }

    /// Whether this derivation establishes `premises ⊢ g` for every `g` in
    /// `goals`: it checks, uses only the given premises, and derives every goal.
    pub fn establishes(&self, calc: &HilbertCalculus, premises: &[Term], goals: &[Term]) -> std::result::Result<(), String> {
        let report = check_derivation(calc, self);
        if let Some(f) = report.failure {
            return Err(f.to_string());
        }
        for s in &self.steps {
            if s.justification == Justification::Premise && !premises.contains(&s.formula) {
                return Err(format!("uses premise {} outside the allowed set", s.formula));
            }
        }
        for g in goals {
            if self.find(g).is_none() {
                return Err(format!("never derives {g}"));
            }
        }
        Ok(())
    }

    /// `k. term BY premise` / `k. term BY rule(name, {x:=t, ...}, [i, ...])`,
    /// numbered from 1.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            match &s.justification {
                Justification::Premise => {
                    out.push_str(&format!("{}. {} BY premise\n", i + 1, s.formula))
                }
                Justification::Rule { name, subst, refs } => {
                    let refs: Vec<String> = refs.iter().map(|r| (r + 1).to_string()).collect();
                    out.push_str(&format!(
                        "{}. {} BY rule({}, {}, [{}])\n",
                        i + 1,
                        s.formula,
                        name,
                        subst,
                        refs.join(", ")
                    ));
                }
            }
        }
        out
    }

    pub fn parse(text: &str, sig: &Signature) -> Result<Derivation> {
        let mut d = Derivation::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let ctx = |e: Error| Error::invalid(format!("derivation line {}: {e}", lineno + 1));
            let mut cur = Cursor::new(line);
            let k = cur.number().map_err(ctx)?;
            cur.expect(".").map_err(ctx)?;
            if k != d.steps.len() + 1 {
                return Err(ctx(Error::invalid(format!("expected step number {}", d.steps.len() + 1))));
            }
            let formula = cur.term(sig).map_err(ctx)?;
            cur.expect("BY").map_err(ctx)?;
            let justification = if cur.eat("premise") {
                if !d.premises.contains(&formula) {
                    d.premises.push(formula.clone());
                }
                Justification::Premise
            } else {
                cur.expect("rule").map_err(ctx)?;
                cur.expect("(").map_err(ctx)?;
                let name = cur.name().map_err(ctx)?;
                cur.expect(",").map_err(ctx)?;
                let subst = cur.substitution(sig).map_err(ctx)?;
                cur.expect(",").map_err(ctx)?;
                cur.expect("[").map_err(ctx)?;
                let mut refs = Vec::new();
                while !cur.eat("]") {
                    if !refs.is_empty() {
                        cur.expect(",").map_err(ctx)?;
                    }
                    let r = cur.number().map_err(ctx)?;
                    if r == 0 || r >= k {
                        return Err(ctx(Error::invalid(format!(
                            "reference {r} does not point to an earlier step"
                        ))));
                    }
                    refs.push(r - 1);
                }
                cur.expect(")").map_err(ctx)?;
                Justification::Rule { name, subst, refs }
            };
            cur.end().map_err(ctx)?;
            d.steps.push(Step {
                formula,
                justification,
            });
        }
        Ok(d)
    }
}

/// Small hand-rolled scanner for the derivation and chain line formats.
struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0 }
    }

    fn rest(&mut self) -> &'a str {
        self.pos = skip_ws(self.text, self.pos);
        &self.text[self.pos..]
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(Error::Syntax {
                pos: self.pos,
                msg: format!("expected `{tok}`"),
            })
        }
    }

    fn number(&mut self) -> Result<usize> {
        let rest = self.rest();
        let len = rest.bytes().take_while(u8::is_ascii_digit).count();
        let n = rest[..len].parse().map_err(|_| Error::Syntax {
            pos: self.pos,
            msg: "expected a number".into(),
        })?;
        self.pos += len;
        Ok(n)
    }

    fn name(&mut self) -> Result<String> {
        let rest = self.rest();
        let len: usize = rest
            .chars()
            .take_while(|c| !c.is_whitespace() && !"(){}[],;".contains(*c))
            .map(char::len_utf8)
            .sum();
        if len == 0 {
            return Err(Error::Syntax {
                pos: self.pos,
                msg: "expected a name".into(),
            });
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }

    fn term(&mut self, sig: &Signature) -> Result<Term> {
        let (t, end) = parse_term_at(self.text, self.pos, sig)?;
        self.pos = end;
        Ok(t)
    }

    fn substitution(&mut self, sig: &Signature) -> Result<Substitution> {
        self.expect("{")?;
        let mut s = Substitution::new();
        while !self.eat("}") {
            if !s.is_empty() {
                self.expect(",")?;
            }
            let rest = self.rest();
            let (var, _) = rest.split_once(":=").ok_or_else(|| Error::Syntax {
                pos: self.pos,
                msg: "expected `var:=term`".into(),
            })?;
            let var = var.trim().to_string();
            self.pos += rest.find(":=").unwrap() + 2;
            let t = self.term(sig)?;
            s.insert(var, t);
        }
        Ok(s)
    }

    fn end(&mut self) -> Result<()> {
        if self.rest().is_empty() {
            Ok(())
        } else {
            Err(Error::Syntax {
                pos: self.pos,
                msg: "trailing input".into(),
            })
        }
    }
}

/// Replays a derivation step by step. Never searches.
pub fn check_derivation(calc: &HilbertCalculus, d: &Derivation) -> CheckReport {
    let fail = |step: usize, message: String, expected: Option<Term>, found: Option<Term>| CheckReport {
        steps_checked: step,
        failure: Some(CheckFailure {
            step,
            message,
            expected,
            found,
        }),
    };
    if d.steps.is_empty() {
        return fail(0, "empty derivation".into(), None, None);
    }
    for (i, s) in d.steps.iter().enumerate() {
        match &s.justification {
            Justification::Premise => {
                if !d.premises.contains(&s.formula) {
                    return fail(i, "not among the premises".into(), None, Some(s.formula.clone()));
                }
            }
            Justification::Rule { name, subst, refs } => {
                let Some(rule) = calc.rule(name) else {
                    return fail(i, format!("unknown rule `{name}`"), None, None);
                };
                if refs.len() != rule.premises.len() {
                    return fail(
                        i,
                        format!(
                            "rule `{name}` has {} premise(s) but {} reference(s) were given",
                            rule.premises.len(),
                            refs.len()
                        ),
                        None,
                        None,
                    );
                }
                let (prems, concl) = rule.instantiate(subst);
                for (j, (p, &r)) in prems.iter().zip(refs).enumerate() {
                    if r >= i {
                        return fail(i, format!("premise {} refers to a later step {}", j + 1, r + 1), None, None);
                    }
                    if &d.steps[r].formula != p {
                        return fail(
                            i,
                            format!("premise {} of `{name}` (step {})", j + 1, r + 1),
                            Some(p.clone()),
                            Some(d.steps[r].formula.clone()),
                        );
                    }
                }
                if concl != s.formula {
                    return fail(
                        i,
                        format!("conclusion of `{name}`"),
                        Some(concl),
                        Some(s.formula.clone()),
                    );
                }
            }
        }
    }
    CheckReport {
        steps_checked: d.steps.len(),
        failure: None,
    }
}

// ---------------------------------------------------------------------------
// Chain proofs

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStep {
    /// Scheme base name, e.g. `N`.
    pub rule: String,
    pub dir: Direction,
    pub subst: Substitution,
}

/// `α₁ … αₙ` where each adjacent pair is an instance of a bidirectional rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainProof {
    formulas: Vec<Term>,
    steps: Vec<ChainStep>,
}

impl ChainProof {
    pub fn trivial(start: Term) -> Self {
        ChainProof {
            formulas: vec![start],
            steps: Vec::new(),
        }
    }

    /// Builds from raw parts; `formulas.len()` must be `steps.len() + 1`.
    pub fn from_parts(formulas: Vec<Term>, steps: Vec<ChainStep>) -> Result<Self> {
        if formulas.len() != steps.len() + 1 {
            return Err(Error::invalid("a chain needs one more formula than steps"));
        }
        Ok(ChainProof { formulas, steps })
    }

    pub fn formulas(&self) -> &[Term] {
        &self.formulas
    }

    pub fn steps(&self) -> &[ChainStep] {
        &self.steps
    }

    pub fn start(&self) -> &Term {
        &self.formulas[0]
    }

    pub fn end(&self) -> &Term {
        self.formulas.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: ChainStep, next: Term) {
        self.steps.push(step);
        self.formulas.push(next);
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn append(&mut self, other: ChainProof) -> Result<()> {
        if other.start() != self.end() {
            return Err(Error::invalid(format!(
                "cannot join chains: {} then {}",
                self.end(),
                other.start()
            )));
        }
        let mut formulas = other.formulas.into_iter();
        formulas.next();
        self.formulas.extend(formulas);
        self.steps.extend(other.steps);
        Ok(())
    }

    pub fn then(mut self, other: ChainProof) -> Result<ChainProof> {
        self.append(other)?;
        Ok(self)
    }

    pub fn reversed(&self) -> ChainProof {
        ChainProof {
            formulas: self.formulas.iter().rev().cloned().collect(),
            steps: self
                .steps
                .iter()
                .rev()
                .map(|s| ChainStep {
                    rule: s.rule.clone(),
                    dir: s.dir.flip(),
                    subst: s.subst.clone(),
                })
                .collect(),
        }
    }

    /// Instance of the whole chain under `s` (structurality).
    pub fn substituted(&self, s: &Substitution) -> ChainProof {
        ChainProof {
            formulas: self.formulas.iter().map(|f| s.apply(f)).collect(),
            steps: self
                .steps
                .iter()
                .map(|st| ChainStep {
                    rule: st.rule.clone(),
                    dir: st.dir,
                    subst: st.subst.then(s),
                })
                .collect(),
        }
    }

    /// Rule base names in order.
    pub fn rule_names(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.rule.as_str()).collect()
    }

    /// `1. term BY start` followed by `k. term BY NAME dir {x:=t, ...}`.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("1. {} BY start\n", self.formulas[0]);
        for (i, (s, f)) in self.steps.iter().zip(&self.formulas[1..]).enumerate() {
            out.push_str(&format!("{}. {} BY {} {} {}\n", i + 2, f, s.rule, s.dir, s.subst));
        }
        out
    }

    pub fn parse(text: &str, sig: &Signature) -> Result<ChainProof> {
        let mut formulas = Vec::new();
        let mut steps = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let ctx = |e: Error| Error::invalid(format!("chain line {}: {e}", lineno + 1));
            let mut cur = Cursor::new(line);
            let k = cur.number().map_err(ctx)?;
            cur.expect(".").map_err(ctx)?;
            if k != formulas.len() + 1 {
                return Err(ctx(Error::invalid(format!("expected line number {}", formulas.len() + 1))));
            }
            let f = cur.term(sig).map_err(ctx)?;
            cur.expect("BY").map_err(ctx)?;
            if formulas.is_empty() {
                cur.expect("start").map_err(ctx)?;
            } else {
                let rule = cur.name().map_err(ctx)?;
                let dir = cur.name().map_err(ctx)?;
                let dir = Direction::parse(&dir)
                    .ok_or_else(|| ctx(Error::invalid(format!("bad direction `{dir}`"))))?;
                let subst = cur.substitution(sig).map_err(ctx)?;
                steps.push(ChainStep { rule, dir, subst });
            }
            cur.end().map_err(ctx)?;
            formulas.push(f);
        }
        if formulas.is_empty() {
            return Err(Error::invalid("empty chain"));
        }
        ChainProof::from_parts(formulas, steps)
    }
}

/// Checks a chain against a calculus made of single-premise bidirectional
/// rules. A valid chain from `γ` to `φ` proves both `γ ⊢ φ` and `φ ⊢ γ`.
pub fn check_chain(calc: &HilbertCalculus, ch: &ChainProof) -> Result<CheckReport> {
    calc.single_premise_bidirectional().map_err(Error::Invalid)?;
    for (i, (step, pair)) in ch.steps.iter().zip(ch.formulas.windows(2)).enumerate() {
        let fail = |message: String, expected: Option<Term>, found: Option<Term>| {
            Ok(CheckReport {
                steps_checked: i,
                failure: Some(CheckFailure {
                    step: i,
                    message,
                    expected,
                    found,
                }),
            })
        };
        let Some(rule) = calc.directed(&step.rule, step.dir) else {
            return fail(format!("no rule `{}` in direction {}", step.rule, step.dir), None, None);
        };
        let (prems, concl) = rule.instantiate(&step.subst);
        if prems[0] != pair[0] {
            return fail(
                format!("`{}` {} does not apply", step.rule, step.dir),
                Some(prems[0].clone()),
                Some(pair[0].clone()),
            );
        }
        if concl != pair[1] {
            return fail(
                format!("`{}` {} yields a different formula", step.rule, step.dir),
                Some(concl),
                Some(pair[1].clone()),
            );
        }
    }
    Ok(CheckReport {
        steps_checked: ch.steps.len(),
        failure: None,
    })
}

/// One rewrite of `current` by the directed rule `rule/dir`. The rule premise
/// is matched against `current`; `extra` supplies variables that occur only in
/// the conclusion.
pub fn chain_step(
    calc: &HilbertCalculus,
    current: &Term,
    rule: &str,
    dir: Direction,
    extra: &Substitution,
) -> Result<ChainProof> {
    let r = calc
        .directed(rule, dir)
        .ok_or_else(|| Error::UnknownRule(format!("{rule}/{dir}")))?;
    let mut s = Substitution::new();
    if !match_into(&r.premises[0], current, &mut s) {
        return Err(Error::invalid(format!(
            "`{rule}` {dir} does not apply to {current}"
        )));
    }
    let needed = r.conclusion.vars();
    let missing: Vec<&String> = needed.iter().filter(|v| !s.contains(v)).collect();
    for v in missing {
        let t = extra
            .get(v)
            .ok_or_else(|| Error::UnboundVariable(format!("{v} (in `{rule}` {dir})")))?;
        s.insert(v.clone(), t.clone());
    }
    let next = s.apply(&r.conclusion);
    let mut ch = ChainProof::trivial(current.clone());
    ch.push(
        ChainStep {
            rule: rule.to_string(),
            dir,
            subst: s,
        },
        next,
    );
    Ok(ch)
}

/// A derived bidirectional rule given by a parametric chain over the base
/// calculus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedRuleMacro {
    pub name: String,
    pub params: Vec<String>,
    pub template: ChainProof,
}

impl DerivedRuleMacro {
    pub fn new(name: &str, template: ChainProof) -> Self {
        let mut params = BTreeSet::new();
        for f in template.formulas() {
            f.collect_vars(&mut params);
        }
        for s in template.steps() {
            for (_, t) in s.subst.iter() {
                t.collect_vars(&mut params);
            }
        }
        DerivedRuleMacro {
            name: name.to_string(),
            params: params.into_iter().collect(),
            template,
        }
    }

    pub fn lhs(&self) -> &Term {
        self.template.start()
    }

    pub fn rhs(&self) -> &Term {
        self.template.end()
    }

    /// The primitive chain for the instance under `s`; every parameter must be bound.
    pub fn expand(&self, s: &Substitution) -> Result<ChainProof> {
        if let Some(p) = self.params.iter().find(|p| !s.contains(p)) {
            return Err(Error::UnboundVariable(format!("{p} (macro `{}`)", self.name)));
        }
        Ok(self.template.substituted(s))
    }

    /// Applies the macro to `current` in direction `dir` by matching its
    /// start (or end) formula; `extra` binds parameters the match leaves free.
    pub fn apply(&self, current: &Term, dir: Direction, extra: &Substitution) -> Result<ChainProof> {
        let pattern = match dir {
            Direction::Lr => self.lhs(),
            Direction::Rl => self.rhs(),
        };
        let mut s = Substitution::new();
        if !match_into(pattern, current, &mut s) {
            return Err(Error::invalid(format!(
                "derived rule `{}` {dir} does not apply to {current}",
                self.name
            )));
        }
        for p in &self.params {
            if !s.contains(p) {
                if let Some(t) = extra.get(p) {
                    s.insert(p.clone(), t.clone());
                }
            }
        }
        let ch = self.expand(&s)?;
        Ok(match dir {
            Direction::Lr => ch,
            Direction::Rl => ch.reversed(),
        })
    }
}

// ---------------------------------------------------------------------------
// Bounded proof search

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProveOptions {
    /// Forward-chaining rounds.
    pub depth: usize,
    /// Largest derived formula kept (by [`Term::size`]).
    pub size_cap: usize,
    /// Total formulas before giving up with a resource-limit outcome.
    pub max_formulas: usize,
    /// Fresh variables added to the instantiation pool.
    pub fresh_vars: usize,
}

impl Default for ProveOptions {
    fn default() -> Self {
        ProveOptions {
            depth: 4,
            size_cap: 12,
            max_formulas: 20_000,
            fresh_vars: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProveOutcome {
    Found(Derivation),
    /// Not derivable within the bounds. This says nothing about derivability.
    NotFound { rounds: usize, formulas: usize },
    /// The formula budget ran out before the depth bound was reached.
    ResourceLimit { rounds: usize, formulas: usize },
}

#[derive(Clone)]
enum Origin {
    Premise,
    Rule {
        rule: usize,
        subst: Substitution,
        parents: Vec<usize>,
    },
}

/// Known formulas by head symbol and by (head, argument position, argument).
/// Id lists stay sorted because ids are handed out in increasing order.
#[derive(Default)]
struct FormulaIndex {
    all: Vec<usize>,
    exact: HashMap<Term, usize>,
    by_head: HashMap<String, Vec<usize>>,
    by_arg: HashMap<(String, usize, Term), Vec<usize>>,
}

impl FormulaIndex {
    fn insert(&mut self, t: &Term, id: usize) {
        self.all.push(id);
        self.exact.insert(t.clone(), id);
        if let Term::App(h, args) = t {
            self.by_head.entry(h.clone()).or_default().push(id);
            for (i, a) in args.iter().enumerate() {
                self.by_arg.entry((h.clone(), i, a.clone())).or_default().push(id);
            }
        }
    }

    /// Ids in `range` that could match `pattern` extending `s`.
    fn candidates(&self, pattern: &Term, s: &Substitution, range: &std::ops::Range<usize>) -> &[usize] {
        let bound = |t: &Term| t.vars().iter().all(|v| s.contains(v));
        let ids: &[usize] = match pattern {
            Term::Var(_) if bound(pattern) => self
                .exact
                .get(&s.apply(pattern))
                .map_or(&[], std::slice::from_ref),
            Term::Var(_) => &self.all,
            Term::App(h, args) => match args.iter().position(bound) {
                Some(i) => self
                    .by_arg
                    .get(&(h.clone(), i, s.apply(&args[i])))
                    .map_or(&[], Vec::as_slice),
                None => self.by_head.get(h).map_or(&[], Vec::as_slice),
            },
        };
        let lo = ids.partition_point(|&id| id < range.start);
        let hi = ids.partition_point(|&id| id < range.end);
        &ids[lo..hi]
    }
}

/// Iterative forward chaining (semi-naive). Conclusion-only variables are
/// instantiated from goal and premise subterms, plus `fresh_vars` fresh
/// variables. Whatever is returned passes [`check_derivation`].
pub fn bounded_prove(
    calc: &HilbertCalculus,
    premises: &[Term],
    goal: &Term,
    opts: ProveOptions,
) -> Result<ProveOutcome> {
    if opts.depth == 0 || opts.size_cap == 0 {
        return Err(Error::invalid("depth and size cap must be positive"));
    }
    let mut known: Vec<Term> = Vec::new();
    let mut origin: Vec<Origin> = Vec::new();
    let mut index = FormulaIndex::default();
    for p in premises {
        if !index.exact.contains_key(p) {
            index.insert(p, known.len());
            known.push(p.clone());
            origin.push(Origin::Premise);
        }
    }
    if let Some(&g) = index.exact.get(goal) {
        return Ok(ProveOutcome::Found(rebuild(calc, premises, &known, &origin, g)));
    }

    let mut pool: Vec<Term> = Vec::new();
    for t in std::iter::once(goal).chain(premises) {
        for s in t.subterms() {
            if !pool.contains(s) {
                pool.push(s.clone());
            }
        }
    }
    let mut used: BTreeSet<String> = goal.vars();
    premises.iter().for_each(|p| p.collect_vars(&mut used));
    let mut k = 0;
    while pool.iter().filter(|t| t.is_var() && !used.contains(&t.to_string())).count() < opts.fresh_vars {
        let v = format!("v{k}");
        k += 1;
        if !used.contains(&v) && !calc.signature.contains(&v) {
            pool.push(Term::Var(v));
        }
    }
    pool.sort_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.cmp(b)));
    let goal_subterms: Vec<Term> = {
        let mut g: Vec<Term> = Vec::new();
        for s in goal.subterms() {
            if !g.contains(s) {
                g.push(s.clone());
            }
        }
        g
    };

    let mut prev_start = 0usize;
    for round in 1..=opts.depth {
        let round_start = known.len();
        let mut fresh: Vec<(Term, Origin)> = Vec::new();
        let mut fresh_index: HashMap<Term, ()> = HashMap::new();

        for (ri, rule) in calc.rules().iter().enumerate() {
            let mut emit = |s: &Substitution, parents: Vec<usize>, fresh: &mut Vec<(Term, Origin)>| {
                let missing: Vec<String> = rule
                    .conclusion
                    .vars()
                    .into_iter()
                    .filter(|v| !s.contains(v))
                    .collect();
                let mut completions: Vec<Substitution> = Vec::new();
                let mut seen: HashSet<Term> = HashSet::new();
                if missing.is_empty() {
                    completions.push(s.clone());
                } else {
                    for g in &goal_subterms {
                        let mut c = s.clone();
                        if match_into(&rule.conclusion, g, &mut c) && seen.insert(c.apply(&rule.conclusion)) {
                            completions.push(c);
                        }
                    }
                    let combos = pool.len().checked_pow(missing.len() as u32).unwrap_or(usize::MAX);
                    if combos <= 4096 {
                        let mut idx = vec![0usize; missing.len()];
                        'outer: loop {
                            let mut c = s.clone();
                            for (v, &i) in missing.iter().zip(&idx) {
                                c.insert(v.clone(), pool[i].clone());
                            }
                            if seen.insert(c.apply(&rule.conclusion)) {
                                completions.push(c);
                            }
                            for slot in idx.iter_mut() {
                                *slot += 1;
                                if *slot < pool.len() {
                                    continue 'outer;
                                }
                                *slot = 0;
                            }
                            break;
                        }
                    }
                }
                for c in completions {
                    let concl = c.apply(&rule.conclusion);
                    if concl.size() > opts.size_cap
                        || index.exact.contains_key(&concl)
                        || fresh_index.contains_key(&concl)
                    {
                        continue;
                    }
                    fresh_index.insert(concl.clone(), ());
                    fresh.push((
                        concl,
                        Origin::Rule {
                            rule: ri,
                            subst: c,
                            parents: parents.clone(),
                        },
                    ));
                }
            };

            if rule.premises.is_empty() {
                if round == 1 {
                    emit(&Substitution::new(), Vec::new(), &mut fresh);
                }
                continue;
            }
            // Semi-naive: premise `pivot` ranges over the previous round's
            // additions, earlier premises over older formulas, later ones over all.
            for pivot in 0..rule.premises.len() {
                let ranges: Vec<std::ops::Range<usize>> = (0..rule.premises.len())
                    .map(|j| match j.cmp(&pivot) {
                        std::cmp::Ordering::Less => 0..prev_start,
                        std::cmp::Ordering::Equal => prev_start..round_start,
                        std::cmp::Ordering::Greater => 0..round_start,
                    })
                    .collect();
                let n = rule.premises.len();
                let mut stack: Vec<(Substitution, Vec<Option<usize>>)> = vec![(Substitution::new(), vec![None; n])];
                while let Some((s, parents)) = stack.pop() {
                    // Most constrained open premise first.
                    let mut best: Option<(usize, &[usize])> = None;
                    for j in (0..n).filter(|&j| parents[j].is_none()) {
                        let c = index.candidates(&rule.premises[j], &s, &ranges[j]);
                        if best.is_none_or(|(_, b)| c.len() < b.len()) {
                            best = Some((j, c));
                            if c.is_empty() {
                                break;
                            }
                        }
                    }
                    let Some((j, cands)) = best else {
                        emit(&s, parents.into_iter().flatten().collect(), &mut fresh);
                        if known.len() + fresh.len() > opts.max_formulas {
                            return Ok(ProveOutcome::ResourceLimit {
                                rounds: round,
                                formulas: known.len() + fresh.len(),
                            });
                        }
                        continue;
                    };
                    let premise = &rule.premises[j];
                    let grown = size_lower_bound(&rule.conclusion, &s);
                    let growth = growth_bound(premise, &rule.conclusion, &s);
                    for &id in cands.iter().rev() {
                        if let Some((base, ratio)) = growth {
                            let extra = known[id].size().saturating_sub(base) as f64;
                            if grown as f64 + ratio * extra > opts.size_cap as f64 + 1e-9 {
                                continue;
                            }
                        }
                        let mut s2 = s.clone();
                        if match_into(premise, &known[id], &mut s2)
                            && size_lower_bound(&rule.conclusion, &s2) <= opts.size_cap
                        {
                            let mut p2 = parents.clone();
                            p2[j] = Some(id);
                            stack.push((s2, p2));
                        }
                    }
                }
            }
        }

        if fresh.is_empty() {
            return Ok(ProveOutcome::NotFound {
                rounds: round,
                formulas: known.len(),
            });
        }
        for (t, o) in fresh {
            index.insert(&t, known.len());
            known.push(t);
            origin.push(o);
        }
        if let Some(&g) = index.exact.get(goal) {
            return Ok(ProveOutcome::Found(rebuild(calc, premises, &known, &origin, g)));
        }
        if known.len() > opts.max_formulas {
            return Ok(ProveOutcome::ResourceLimit {
                rounds: round,
                formulas: known.len(),
            });
        }
        prev_start = round_start;
    }
    Ok(ProveOutcome::NotFound {
        rounds: opts.depth,
        formulas: known.len(),
    })
}

/// Size of `t` under `s`, counting unbound variables as 1.
fn size_lower_bound(t: &Term, s: &Substitution) -> usize {
    match t {
        Term::Var(v) => s.get(v).map_or(1, Term::size),
        Term::App(_, args) => 1 + args.iter().map(|a| size_lower_bound(a, s)).sum::<usize>(),
    }
}

/// For a formula `F` matching `premise` under `s`, the conclusion grows by at
/// least `ratio * (size(F) - base)`. `None` when some new variable of the
/// premise is absent from the conclusion.
fn growth_bound(premise: &Term, conclusion: &Term, s: &Substitution) -> Option<(usize, f64)> {
    let mut occ_p: HashMap<&str, usize> = HashMap::new();
    count_free(premise, s, &mut occ_p);
    if occ_p.is_empty() {
        return None;
    }
    let mut occ_c: HashMap<&str, usize> = HashMap::new();
    count_free(conclusion, s, &mut occ_c);
    let mut ratio = f64::INFINITY;
    for (v, &p) in &occ_p {
        let c = occ_c.get(v).copied().unwrap_or(0);
        if c == 0 {
            return None;
        }
        ratio = ratio.min(c as f64 / p as f64);
    }
    Some((size_lower_bound(premise, s), ratio))
}

fn count_free<'a>(t: &'a Term, s: &Substitution, out: &mut HashMap<&'a str, usize>) {
    match t {
        Term::Var(v) if !s.contains(v) => *out.entry(v.as_str()).or_default() += 1,
        Term::Var(_) => {}
        Term::App(_, args) => args.iter().for_each(|a| count_free(a, s, out)),
    }
}

fn rebuild(
    calc: &HilbertCalculus,
    premises: &[Term],
    known: &[Term],
    origin: &[Origin],
    goal: usize,
) -> Derivation {
    let mut d = Derivation::new(premises.to_vec());
    let mut placed: HashMap<usize, usize> = HashMap::new();
    // Iterative post-order over the parent graph.
    let mut stack = vec![(goal, false)];
    while let Some((id, expanded)) = stack.pop() {
        if placed.contains_key(&id) {
            continue;
        }
        match &origin[id] {
            Origin::Premise => {
                let at = d.steps.len();
                d.steps.push(Step {
                    formula: known[id].clone(),
                    justification: Justification::Premise,
                });
                placed.insert(id, at);
            }
            Origin::Rule { rule, subst, parents } => {
                if expanded {
                    let at = d.steps.len();
                    d.steps.push(Step {
                        formula: known[id].clone(),
                        justification: Justification::Rule {
                            name: calc.rules()[*rule].name.clone(),
                            subst: subst.clone(),
                            refs: parents.iter().map(|p| placed[p]).collect(),
                        },
                    });
                    placed.insert(id, at);
                } else {
                    stack.push((id, true));
                    for p in parents.iter().rev() {
                        if !placed.contains_key(p) {
                            stack.push((*p, false));
                        }
                    }
                }
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::parse_term;

    fn imp_sig() -> Signature {
        Signature::new("imp").with("imp", 2)
    }

    fn t(s: &str, sig: &Signature) -> Term {
        parse_term(s, sig).unwrap()
    }

    fn mp_calc() -> HilbertCalculus {
        HilbertCalculus::parse(
            "R : |- (imp x x)\nMP : x ; (imp x y) |- y\n",
            imp_sig(),
        )
        .unwrap()
    }

    #[test]
    fn calculus_file_round_trip() {
        let sig = Signature::new("s").with("and", 2);
        let text = "S1 : x <-> (and x x)\nA : x ; y |- (and x y)\nW : x <-> (and x y) ; (and y x)\n";
        let c = HilbertCalculus::parse(text, sig.clone()).unwrap();
        let names: Vec<&str> = c.rules().iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["S1/lr", "S1/rl", "A", "W/lr1", "W/lr2", "W/rl"]);
        assert_eq!(c.rule("W/rl").unwrap().premises.len(), 2);
        assert_eq!(c.to_file_string(), text);
        assert_eq!(HilbertCalculus::parse(&c.to_file_string(), sig).unwrap(), c);
    }

    #[test]
    fn calculus_errors() {
        let sig = imp_sig();
        assert!(HilbertCalculus::parse("R : (imp x x)\n", sig.clone()).is_err());
        assert!(matches!(
            HilbertCalculus::parse("R : |- x\nR : |- y\n", sig.clone()),
            Err(Error::Invalid(_))
        ));
        assert!(HilbertCalculus::parse("R : |- (imp x)\n", sig).is_err());
    }

    #[test]
    fn derivation_checks_and_reports() {
        let c = mp_calc();
        let sig = imp_sig();
        let mut d = Derivation::new(vec![]);
        let x = d.premise(t("x", &sig));
        let xy = d.premise(t("(imp x y)", &sig));
        d.apply(&c, "MP", Substitution::new(), vec![x, xy]).unwrap();
        assert!(check_derivation(&c, &d).is_valid());

        // Round trip through the file format.
        let text = d.to_file_string();
        assert_eq!(Derivation::parse(&text, &sig).unwrap(), d);

        // MP with the x→y premise missing.
        let bad = Derivation {
            premises: vec![t("x", &sig)],
            steps: vec![
                Step {
                    formula: t("x", &sig),
                    justification: Justification::Premise,
                },
                Step {
                    formula: t("y", &sig),
                    justification: Justification::Rule {
                        name: "MP".into(),
                        subst: Substitution::new(),
                        refs: vec![0, 0],
                    },
                },
            ],
        };
        let rep = check_derivation(&c, &bad);
        let f = rep.failure.unwrap();
        assert_eq!(f.step, 1);
        assert_eq!(f.expected, Some(t("(imp x y)", &sig)));
        assert_eq!(f.found, Some(t("x", &sig)));
    }

    #[test]
    fn derivation_parse_errors() {
        let sig = imp_sig();
        assert!(Derivation::parse("2. x BY premise\n", &sig).is_err());
        assert!(Derivation::parse("1. x BY rule(MP, {}, [1])\n", &sig).is_err());
        assert!(Derivation::parse("1. x BY magic\n", &sig).is_err());
        let d = Derivation::parse(
            "1. x BY premise\n2. (imp x y) BY premise\n3. y BY rule(MP, {x:=x, y:=y}, [1, 2])\n",
            &sig,
        )
        .unwrap();
        assert!(check_derivation(&mp_calc(), &d).is_valid());
    }

    #[test]
    fn axiom_only_step() {
        let c = mp_calc();
        let sig = imp_sig();
        let d = Derivation::parse("1. (imp z z) BY rule(R, {x:=z}, [])\n", &sig).unwrap();
        assert!(check_derivation(&c, &d).is_valid());
        let d = Derivation::parse("1. (imp z y) BY rule(R, {x:=z}, [])\n", &sig).unwrap();
        assert!(!check_derivation(&c, &d).is_valid());
    }

    #[test]
    fn chain_checks() {
        let sig = Signature::new("s").with("f", 1).with("g", 1);
        let c = HilbertCalculus::parse("U : (f x) <-> (g x)\n", sig.clone()).unwrap();
        let ch = chain_step(&c, &t("(f (f a))", &sig), "U", Direction::Lr, &Substitution::new()).unwrap();
        assert_eq!(ch.end(), &t("(g (f a))", &sig));
        assert!(check_chain(&c, &ch).unwrap().is_valid());
        assert!(check_chain(&c, &ch.reversed()).unwrap().is_valid());
        assert!(check_chain(&c, &ChainProof::trivial(t("a", &sig))).unwrap().is_valid());
        assert_eq!(ChainProof::parse(&ch.to_file_string(), &sig).unwrap(), ch);

        let wrong = ChainProof::from_parts(
            vec![t("(f a)", &sig), t("(f a)", &sig)],
            vec![ChainStep {
                rule: "U".into(),
                dir: Direction::Lr,
                subst: Substitution::from_pairs([("x", t("a", &sig))]),
            }],
        )
        .unwrap();
        let rep = check_chain(&c, &wrong).unwrap();
        assert_eq!(rep.failure.unwrap().expected, Some(t("(g a)", &sig)));

        let multi = HilbertCalculus::parse("A : x ; y |- (f x)\n", sig).unwrap();
        assert!(check_chain(&multi, &ch).is_err());
    }

    #[test]
    fn macro_expansion_requires_all_params() {
        let sig = Signature::new("s").with("f", 1).with("g", 1);
        let c = HilbertCalculus::parse("U : (f x) <-> (g x)\n", sig.clone()).unwrap();
        let start = t("(f (f z))", &sig);
        let ch = chain_step(&c, &start, "U", Direction::Lr, &Substitution::new()).unwrap();
        let m = DerivedRuleMacro::new("U2", ch);
        assert_eq!(m.params, ["z"]);
        assert!(matches!(m.expand(&Substitution::new()), Err(Error::UnboundVariable(_))));
        let inst = m
            .expand(&Substitution::from_pairs([("z", t("(g q)", &sig))]))
            .unwrap();
        assert!(check_chain(&c, &inst).unwrap().is_valid());
        let back = m.apply(&t("(g (f w))", &sig), Direction::Rl, &Substitution::new()).unwrap();
        assert_eq!(back.end(), &t("(f (f w))", &sig));
    }

    #[test]
    fn prover_finds_modus_ponens() {
        let c = mp_calc();
        let sig = imp_sig();
        let out = bounded_prove(
            &c,
            &[t("x", &sig), t("(imp x y)", &sig)],
            &t("y", &sig),
            ProveOptions {
                depth: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let ProveOutcome::Found(d) = out else { panic!("{out:?}") };
        assert!(check_derivation(&c, &d).is_valid());
        assert_eq!(d.conclusion(), Some(&t("y", &sig)));
    }

    #[test]
    fn prover_uses_axioms_with_free_variables() {
        let c = mp_calc();
        let sig = imp_sig();
        let goal = t("(imp (imp a b) (imp a b))", &sig);
        let ProveOutcome::Found(d) = bounded_prove(&c, &[], &goal, ProveOptions::default()).unwrap() else {
            panic!()
        };
        assert_eq!(d.steps.len(), 1);
        assert!(check_derivation(&c, &d).is_valid());
    }

    #[test]
    fn prover_reports_not_found_and_limits() {
        let c = mp_calc();
        let sig = imp_sig();
        let out = bounded_prove(&c, &[], &t("x", &sig), ProveOptions::default()).unwrap();
        assert!(matches!(out, ProveOutcome::NotFound { .. }), "{out:?}");
        let grow = HilbertCalculus::parse("G : x |- (imp x x)\nH : x ; y |- (imp x y)\n", imp_sig()).unwrap();
        let out = bounded_prove(
            &grow,
            &[t("a", &sig), t("b", &sig)],
            &t("c", &sig),
            ProveOptions {
                depth: 10,
                size_cap: 1000,
                max_formulas: 200,
                fresh_vars: 0,
            },
        )
        .unwrap();
        assert!(matches!(out, ProveOutcome::ResourceLimit { .. }), "{out:?}");
        assert!(bounded_prove(&c, &[], &t("x", &sig), ProveOptions { depth: 0, ..Default::default() }).is_err());
    }
}
