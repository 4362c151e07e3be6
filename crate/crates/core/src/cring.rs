//! Commutative rings: polynomial normal forms, the CR calculus, integer
//! numerals and synthesis of ground chain proofs.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::hilbert::{chain_step, ChainProof, ChainStep, DerivedRuleMacro, Direction, HilbertCalculus};
use crate::terms::{match_into, Equation, Signature, Substitution, Term};

pub const CR_CALCULUS: &str = include_str!("../data/cr.calc");

/// Upper bound on macro-level steps in a synthesized script.
pub const MAX_SCRIPT_MOVES: usize = 2_000_000;

/// Largest absolute numeral value the synthesizer will build.
pub const MAX_NUMERAL: i64 = 10_000;

// ---------------------------------------------------------------------------
// Ring terms

pub fn zero() -> Term {
    Term::constant("0")
}

pub fn one() -> Term {
    Term::constant("1")
}

pub fn add(a: Term, b: Term) -> Term {
    Term::binary("+", a, b)
}

pub fn mul(a: Term, b: Term) -> Term {
    Term::binary("*", a, b)
}

pub fn neg(a: Term) -> Term {
    Term::unary("-", a)
}

/// `0`, `1`, `1 + (1 + …)` for k ≥ 2, and `−(encode(−k))` for k < 0.
pub fn encode_int(k: i64) -> Term {
    match k.cmp(&0) {
        Ordering::Equal => zero(),
        Ordering::Less => neg(encode_int(-k)),
        Ordering::Greater => {
            let mut t = one();
            for _ in 1..k {
                t = add(one(), t);
            }
            t
        }
    }
}

// ---------------------------------------------------------------------------
// Polynomials

/// Sorted `(variable, exponent)` pairs; empty for the constant monomial.
pub type Monomial = Vec<(String, u32)>;

/// Canonical form of a ring term: an element of ℤ[vars].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RingPolynomial {
    terms: BTreeMap<Monomial, BigInt>,
}

fn degree(m: &Monomial) -> u32 {
    m.iter().map(|(_, e)| e).sum()
}

/// Graded lexicographic order: total degree first, then the exponent of the
/// alphabetically earliest variable where the two differ.
fn grlex(a: &Monomial, b: &Monomial) -> Ordering {
    degree(a).cmp(&degree(b)).then_with(|| {
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((va, ea)), Some((vb, eb))) => match va.cmp(vb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(eb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        o => return o,
                    },
                },
            }
        }
    })
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out: BTreeMap<String, u32> = a.iter().cloned().collect();
    for (v, e) in b {
        *out.entry(v.clone()).or_default() += e;
    }
    out.into_iter().collect()
}

impl RingPolynomial {
    pub fn zero() -> Self {
        RingPolynomial::default()
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        let c = c.into();
        let mut p = RingPolynomial::zero();
        if !c.is_zero() {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    pub fn var(v: &str) -> Self {
        let mut p = RingPolynomial::zero();
        p.terms.insert(vec![(v.to_string(), 1)], BigInt::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if the polynomial is constant.
    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn coefficient(&self, m: &Monomial) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// Monomials with coefficients, largest first.
    pub fn monomials(&self) -> Vec<(&Monomial, &BigInt)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| grlex(b.0, a.0));
        v
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: &str) -> u32 {
        self.terms
            .keys()
            .flat_map(|m| m.iter().filter(|(v, _)| v == var).map(|(_, e)| *e))
            .max()
            .unwrap_or(0)
    }

    pub fn vars(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .terms
            .keys()
            .flat_map(|m| m.iter().map(|(v, _)| v.clone()))
            .collect();
        v.sort();
        v.dedup();
        v
    }

    fn add_term(&mut self, m: Monomial, c: BigInt) {
        let slot = self.terms.entry(m).or_default();
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        RingPolynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = RingPolynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(mono_mul(ma, mb), ca * cb);
            }
        }
        out
    }

    /// Value at an integer point; missing variables are an error.
    pub fn evaluate(&self, env: &BTreeMap<String, BigInt>) -> Result<BigInt> {
        let mut total = BigInt::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (v, e) in m {
                let x = env.get(v).ok_or_else(|| Error::UnboundVariable(v.clone()))?;
                term *= x.pow(*e);
            }
            total += term;
        }
        Ok(total)
    }
}

impl fmt::Display for RingPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.monomials().into_iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let factors: Vec<String> = m
                .iter()
                .map(|(v, e)| if *e == 1 { v.clone() } else { format!("{v}^{e}") })
                .collect();
            if factors.is_empty() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                f.write_str(&factors.join("*"))?;
            } else {
                write!(f, "{c}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Canonical polynomial of a ring term.
pub fn normalize(t: &Term) -> Result<RingPolynomial> {
    Ok(match t {
        Term::Var(v) => RingPolynomial::var(v),
        Term::App(f, args) => match (f.as_str(), args.as_slice()) {
            ("0", []) => RingPolynomial::zero(),
            ("1", []) => RingPolynomial::constant(1),
            ("-", [a]) => normalize(a)?.neg(),
            ("+", [a, b]) => normalize(a)?.add(&normalize(b)?),
            ("*", [a, b]) => normalize(a)?.mul(&normalize(b)?),
            _ => return Err(Error::ForeignSymbol(f.clone())),
        },
    })
}

/// Whether the equation holds in every commutative ring.
pub fn cr_valid(e: &Equation) -> Result<bool> {
    Ok(normalize(&e.lhs)? == normalize(&e.rhs)?)
}

/// Largest evaluation grid [`grid_valid`] accepts.
pub const MAX_GRID_POINTS: u64 = 1 << 22;

/// Value of a ring term at integer arguments, computed on the term itself.
pub fn eval_ring_term(t: &Term, env: &BTreeMap<String, BigInt>) -> Result<BigInt> {
    Ok(match t {
        Term::Var(v) => env.get(v).cloned().ok_or_else(|| Error::UnboundVariable(v.clone()))?,
        Term::App(f, args) => match (f.as_str(), args.as_slice()) {
            ("0", []) => BigInt::zero(),
            ("1", []) => BigInt::one(),
            ("-", [a]) => -eval_ring_term(a, env)?,
            ("+", [a, b]) => eval_ring_term(a, env)? + eval_ring_term(b, env)?,
            ("*", [a, b]) => eval_ring_term(a, env)? * eval_ring_term(b, env)?,
            _ => return Err(Error::ForeignSymbol(f.clone())),
        },
    })
}

/// Identity test by evaluation: both sides agree on the grid `{0..=d_v}` for
/// every variable `v`, where `d_v` bounds the degree of `v` in both normal forms.
pub fn grid_valid(e: &Equation) -> Result<bool> {
    let (l, r) = (normalize(&e.lhs)?, normalize(&e.rhs)?);
    let vars: Vec<String> = e.vars().into_iter().collect();
    let bounds: Vec<u32> = vars.iter().map(|v| l.degree_in(v).max(r.degree_in(v))).collect();
    let points = bounds
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64 + 1))
        .filter(|&n| n <= MAX_GRID_POINTS)
        .ok_or_else(|| Error::ResourceLimit("evaluation grid too large".into()))?;
    let mut at = vec![0u32; vars.len()];
    for _ in 0..points {
        let env: BTreeMap<String, BigInt> = vars.iter().cloned().zip(at.iter().map(|&k| BigInt::from(k))).collect();
        if eval_ring_term(&e.lhs, &env)? != eval_ring_term(&e.rhs, &env)? {
            return Ok(false);
        }
        for (slot, &d) in at.iter_mut().zip(&bounds) {
            *slot += 1;
            if *slot <= d {
                break;
            }
            *slot = 0;
        }
    }
    Ok(true)
}

/// Term equality up to swapping the arguments of binary operations, i.e.
/// validity in commutative magmas.
pub fn cm_valid(e: &Equation) -> bool {
    cm_canonical(&e.lhs) == cm_canonical(&e.rhs)
}

pub fn cm_canonical(t: &Term) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::App(f, args) => {
            let mut args: Vec<Term> = args.iter().map(cm_canonical).collect();
            if args.len() == 2 && args[1] < args[0] {
                args.swap(0, 1);
            }
            Term::App(f.clone(), args)
        }
    }
}

/// `Γ ⊢ φ` in the logic of a variety that satisfies the oracle: some premise
/// is equal to the goal in the variety.
pub fn lv_entails(
    oracle: impl Fn(&Equation) -> Result<bool>,
    premises: &[Term],
    goal: &Term,
) -> Result<bool> {
    for p in premises {
        if oracle(&Equation::new(p.clone(), goal.clone()))? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// A Diophantine equation `p(z₁,…,zₙ) ≈ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiophantineEquation {
    pub poly: Term,
    /// The unknowns in sorted order.
    pub vars: Vec<String>,
}

impl DiophantineEquation {
    pub fn new(poly: Term) -> Result<Self> {
        Signature::ring().check(&poly).map_err(|e| match e {
            Error::UnknownSymbol { symbol, .. } => Error::ForeignSymbol(symbol),
            e => e,
        })?;
        let vars = poly.vars().into_iter().collect();
        Ok(DiophantineEquation { poly, vars })
    }

    /// `p(encode(k₁),…,encode(kₙ))`.
    pub fn instantiate(&self, values: &[i64]) -> Result<Term> {
        if values.len() != self.vars.len() {
            return Err(Error::invalid(format!(
                "{} values for {} unknowns",
                values.len(),
                self.vars.len()
            )));
        }
        let s = Substitution::from_pairs(
            self.vars
                .iter()
                .zip(values)
                .map(|(v, &k)| (v.as_str(), encode_int(k))),
        );
        Ok(s.apply(&self.poly))
    }

    /// Value of `p` modulo `m` at `values`.
    pub fn eval_mod(&self, values: &[u64], m: u64) -> Result<u64> {
        let env: BTreeMap<String, BigInt> = self
            .vars
            .iter()
            .cloned()
            .zip(values.iter().map(|&v| BigInt::from(v)))
            .collect();
        let v = normalize(&self.poly)?.evaluate(&env)?;
        let m = BigInt::from(m);
        Ok((((v % &m) + &m) % &m).to_u64().unwrap())
    }

    /// The lexicographically first root modulo `m`, if any.
    pub fn root_mod(&self, m: u64) -> Result<Option<Vec<u64>>> {
        let n = self.vars.len();
        let total = m
            .checked_pow(n as u32)
            .ok_or_else(|| Error::ResourceLimit(format!("{m}^{n} candidate roots")))?;
        let mut vals = vec![0u64; n];
        for idx in 0..total {
            let mut r = idx;
            for slot in vals.iter_mut().rev() {
                *slot = r % m;
                r /= m;
            }
            if self.eval_mod(&vals, m)? == 0 {
                return Ok(Some(vals));
            }
        }
        Ok(None)
    }
}

// ---------------------------------------------------------------------------
// The CR calculus and its derived rules

/// The calculus CR, parsed once.
pub fn cr_calculus() -> &'static HilbertCalculus {
    static CALC: OnceLock<HilbertCalculus> = OnceLock::new();
    CALC.get_or_init(|| {
        HilbertCalculus::parse(CR_CALCULUS, Signature::ring()).expect("shipped CR calculus parses")
    })
}

/// Derived rules named after the primitive rule whose context they drop
/// (`B'` for `x·y ⫤⊢ y·x`), paired with that rule.
const ROOT_FORMS: [(&str, &str); 11] = [
    ("A'", "A"),
    ("B'", "B"),
    ("C'", "C"),
    ("D'", "D"),
    ("E'", "E"),
    ("F'", "F"),
    ("G'", "G"),
    ("H'", "H"),
    ("I'", "I"),
    ("L-root", "L"),
    ("M-root", "M"),
];

fn root_form_base(name: &str) -> Option<&'static str> {
    ROOT_FORMS.iter().find(|(m, _)| *m == name).map(|(_, b)| *b)
}

fn sub(x: &Term) -> Substitution {
    Substitution::from_pairs([("x", x.clone())])
}

/// The derived-rule library: every root form plus the context-keeping
/// `L'` and `M'` (`w + −(x·y) ⫤⊢ w + (−x·y)` and `… ⫤⊢ w + (x·−y)`).
pub fn cr_macros() -> &'static BTreeMap<String, DerivedRuleMacro> {
    static LIB: OnceLock<BTreeMap<String, DerivedRuleMacro>> = OnceLock::new();
    LIB.get_or_init(|| {
        let calc = cr_calculus();
        let none = Substitution::new();
        let mut lib = BTreeMap::new();
        for (name, base) in ROOT_FORMS {
            let rule = calc.directed(base, Direction::Lr).unwrap();
            // The ε side of `w + (u·ε)`.
            let eps = rule.premises[0].args()[1].args()[1].clone();
            let mut ch = ChainProof::trivial(eps);
            let mut push = |rule: &str, dir: Direction, extra: &Substitution| {
                let next = chain_step(calc, ch.end(), rule, dir, extra).unwrap();
                ch.append(next).unwrap();
            };
            push("N", Direction::Rl, &none);
            push("O", Direction::Rl, &none);
            push(base, Direction::Lr, &none);
            push("O", Direction::Lr, &none);
            push("N", Direction::Lr, &none);
            lib.insert(name.to_string(), DerivedRuleMacro::new(name, ch));
        }
        for (name, base) in [("L'", "L"), ("M'", "M")] {
            let w = Term::var("w");
            let start = add(w, neg(mul(Term::var("x"), Term::var("y"))));
            let mut ch = ChainProof::trivial(start);
            for (rule, dir) in [("O", Direction::Rl), (base, Direction::Lr), ("O", Direction::Lr)] {
                let next = chain_step(calc, ch.end(), rule, dir, &none).unwrap();
                ch.append(next).unwrap();
            }
            lib.insert(name.to_string(), DerivedRuleMacro::new(name, ch));
        }
        lib
    })
}

// ---------------------------------------------------------------------------
// Scripts: chains whose steps may be derived rules

/// One step of a [`Script`], applied at the root of the current formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Rule(ChainStep),
    Macro {
        name: String,
        dir: Direction,
        subst: Substitution,
    },
}

impl Move {
    pub fn label(&self) -> &str {
        match self {
            Move::Rule(s) => &s.rule,
            Move::Macro { name, .. } => name,
        }
    }

    pub fn dir(&self) -> Direction {
        match self {
            Move::Rule(s) => s.dir,
            Move::Macro { dir, .. } => *dir,
        }
    }

    fn flipped(&self) -> Move {
        match self {
            Move::Rule(s) => Move::Rule(ChainStep {
                rule: s.rule.clone(),
                dir: s.dir.flip(),
                subst: s.subst.clone(),
            }),
            Move::Macro { name, dir, subst } => Move::Macro {
                name: name.clone(),
                dir: dir.flip(),
                subst: subst.clone(),
            },
        }
    }
}

/// The three one-hole contexts needed to show ⫤⊢ is a congruence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Context {
    /// `−(□)`
    Neg,
    /// `χ + □`
    AddLeft(Term),
    /// `χ · □`
    MulLeft(Term),
}

impl Context {
    pub fn wrap(&self, t: Term) -> Term {
        match self {
            Context::Neg => neg(t),
            Context::AddLeft(c) => add(c.clone(), t),
            Context::MulLeft(c) => mul(c.clone(), t),
        }
    }
}

/// A chain over CR in which steps may be derived rules. [`Script::expand`]
/// turns it into a primitive [`ChainProof`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Script {
    terms: Vec<Term>,
    moves: Vec<Move>,
}

impl Script {
    pub fn new(start: Term) -> Self {
        Script {
            terms: vec![start],
            moves: Vec::new(),
        }
    }

    pub fn start(&self) -> &Term {
        &self.terms[0]
    }

    pub fn end(&self) -> &Term {
        self.terms.last().unwrap()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.moves.iter().map(Move::label).collect()
    }

    fn push(&mut self, m: Move, next: Term) -> Result<()> {
        if self.moves.len() >= MAX_SCRIPT_MOVES {
            return Err(Error::ResourceLimit(format!(
                "chain longer than {MAX_SCRIPT_MOVES} steps"
            )));
        }
        self.moves.push(m);
        self.terms.push(next);
        Ok(())
    }

    /// Applies the primitive rule or derived rule `name` at the root.
    pub fn step(&mut self, name: &str, dir: Direction, extra: &Substitution) -> Result<&mut Self> {
        let (m, next) = make_move(self.end(), name, dir, extra)?;
        self.push(m, next)?;
        Ok(self)
    }

    /// Applies `name` to the subterm at `path`, lifting through the
    /// surrounding contexts.
    pub fn step_at(&mut self, path: &[usize], name: &str, dir: Direction, extra: &Substitution) -> Result<&mut Self> {
        self.then_at(path, |t| {
            let mut s = Script::new(t.clone());
            s.step(name, dir, extra)?;
            Ok(s)
        })
    }

    /// Runs `f` on the subterm at `path` and lifts the resulting script.
    pub fn then_at(&mut self, path: &[usize], f: impl FnOnce(&Term) -> Result<Script>) -> Result<&mut Self> {
        let target = self
            .end()
            .subterm(path)
            .ok_or_else(|| Error::invalid(format!("no subterm at {path:?} in {}", self.end())))?
            .clone();
        let inner = f(&target)?;
        if inner.start() != &target {
            return Err(Error::invalid("inner script starts at the wrong subterm"));
        }
        let lifted = at(self.end(), path, inner)?;
        self.append(lifted)?;
        Ok(self)
    }

    pub fn append(&mut self, other: Script) -> Result<()> {
        if other.start() != self.end() {
            return Err(Error::invalid(format!(
                "cannot join scripts: {} then {}",
                self.end(),
                other.start()
            )));
        }
        if self.moves.len() + other.moves.len() > MAX_SCRIPT_MOVES {
            return Err(Error::ResourceLimit(format!(
                "chain longer than {MAX_SCRIPT_MOVES} steps"
            )));
        }
        let mut terms = other.terms.into_iter();
        terms.next();
        self.terms.extend(terms);
        self.moves.extend(other.moves);
        Ok(())
    }

    pub fn reversed(&self) -> Script {
        Script {
            terms: self.terms.iter().rev().cloned().collect(),
            moves: self.moves.iter().rev().map(Move::flipped).collect(),
        }
    }

    /// The script between the context-wrapped endpoints.
    pub fn lift(&self, ctx: &Context) -> Result<Script> {
        let mut out = Script::new(ctx.wrap(self.start().clone()));
        for (m, pair) in self.moves.iter().zip(self.terms.windows(2)) {
            out.append(lift_move(ctx, &pair[0], &pair[1], m)?)?;
        }
        Ok(out)
    }

    /// Primitive chain: derived rules are replaced by their expansions.
    pub fn expand(&self) -> Result<ChainProof> {
        let mut ch = ChainProof::trivial(self.start().clone());
        for (m, pair) in self.moves.iter().zip(self.terms.windows(2)) {
            match m {
                Move::Rule(s) => ch.push(s.clone(), pair[1].clone()),
                Move::Macro { name, dir, subst } => {
                    let mac = &cr_macros()[name];
                    let piece = mac.expand(subst)?;
                    let piece = match dir {
                        Direction::Lr => piece,
                        Direction::Rl => piece.reversed(),
                    };
                    ch.append(piece)?;
                }
            }
        }
        Ok(ch)
    }

    /// Converts a primitive chain over CR.
    pub fn from_chain(ch: &ChainProof) -> Result<Script> {
        let mut s = Script::new(ch.start().clone());
        for (st, next) in ch.steps().iter().zip(&ch.formulas()[1..]) {
            if cr_calculus().directed(&st.rule, st.dir).is_none() {
                return Err(Error::UnknownRule(st.rule.clone()));
            }
            s.push(Move::Rule(st.clone()), next.clone())?;
        }
        Ok(s)
    }
}

fn make_move(current: &Term, name: &str, dir: Direction, extra: &Substitution) -> Result<(Move, Term)> {
    let calc = cr_calculus();
    if calc.directed(name, dir).is_some() {
        let ch = chain_step(calc, current, name, dir, extra)?;
        return Ok((Move::Rule(ch.steps()[0].clone()), ch.end().clone()));
    }
    let mac = cr_macros()
        .get(name)
        .ok_or_else(|| Error::UnknownRule(name.to_string()))?;
    let (from, to) = match dir {
        Direction::Lr => (mac.lhs(), mac.rhs()),
        Direction::Rl => (mac.rhs(), mac.lhs()),
    };
    let mut s = Substitution::new();
    if !match_into(from, current, &mut s) {
        return Err(Error::invalid(format!("`{name}` {dir} does not apply to {current}")));
    }
    for p in &mac.params {
        if !s.contains(p) {
            let t = extra
                .get(p)
                .ok_or_else(|| Error::UnboundVariable(format!("{p} (in `{name}` {dir})")))?;
            s.insert(p.clone(), t.clone());
        }
    }
    let next = s.apply(to);
    Ok((
        Move::Macro {
            name: name.to_string(),
            dir,
            subst: s,
        },
        next,
    ))
}

/// Lifts `inner` (a script on the subterm of `t` at `path`) to a script on `t`.
fn at(t: &Term, path: &[usize], inner: Script) -> Result<Script> {
    let Some((&i, rest)) = path.split_first() else {
        return Ok(inner);
    };
    let Term::App(f, args) = t else {
        return Err(Error::invalid("path runs into a variable"));
    };
    let below = at(&args[i], rest, inner)?;
    if below.is_empty() {
        return Ok(Script::new(t.clone()));
    }
    match (f.as_str(), i) {
        ("-", 0) => below.lift(&Context::Neg),
        ("+", 1) => below.lift(&Context::AddLeft(args[0].clone())),
        ("*", 1) => below.lift(&Context::MulLeft(args[0].clone())),
        (op @ ("+" | "*"), 0) => {
            let (swap, ctx) = if op == "+" {
                ("E'", Context::AddLeft(args[1].clone()))
            } else {
                ("B'", Context::MulLeft(args[1].clone()))
            };
            let none = Substitution::new();
            let mut s = Script::new(t.clone());
            s.step(swap, Direction::Lr, &none)?;
            s.append(below.lift(&ctx)?)?;
            s.step(swap, Direction::Lr, &none)?;
            Ok(s)
        }
        _ => Err(Error::invalid(format!("cannot rewrite inside `{f}`"))),
    }
}

fn with_extra(base: &Substitution, pairs: &[(&str, Term)]) -> Substitution {
    let mut s = base.clone();
    for (v, t) in pairs {
        s.insert(*v, t.clone());
    }
    s
}

/// Lifts one root step `from ⇝ to` into `ctx`.
fn lift_move(ctx: &Context, from: &Term, to: &Term, m: &Move) -> Result<Script> {
    use Direction::{Lr, Rl};
    let none = Substitution::new();
    let mut s = Script::new(ctx.wrap(from.clone()));
    match m {
        Move::Macro { name, dir, subst } => {
            let Some(base) = root_form_base(name) else {
                // Other derived rules are lifted through their expansion.
                let mac = &cr_macros()[name.as_str()];
                let piece = mac.expand(subst)?;
                let piece = if *dir == Rl { piece.reversed() } else { piece };
                return Script::from_chain(&piece)?.lift(ctx);
            };
            match ctx {
                Context::AddLeft(c) => {
                    s.step("O", Rl, &none)?
                        .step(base, *dir, &with_extra(subst, &[("w", c.clone()), ("u", one())]))?
                        .step("O", Lr, &none)?;
                }
                Context::MulLeft(c) => {
                    s.step("N", Rl, &none)?
                        .step(base, *dir, &with_extra(subst, &[("w", zero()), ("u", c.clone())]))?
                        .step("N", Lr, &none)?;
                }
                Context::Neg => {
                    s.step("N", Rl, &none)?
                        .step("O", Rl, &none)?
                        .step("M'", Rl, &none)?
                        .step("L'", Lr, &none)?
                        .step(base, *dir, subst)?
                        .step("L'", Rl, &none)?
                        .step("M'", Lr, &none)?
                        .step("O", Lr, &none)?
                        .step("N", Lr, &none)?;
                }
            }
        }
        Move::Rule(st) if st.dir == Rl => {
            return Ok(lift_move(ctx, to, from, &m.flipped())?.reversed());
        }
        Move::Rule(st) => match (st.rule.as_str(), ctx) {
            ("N", Context::Neg) => {
                s.step("N", Rl, &none)?
                    .step("O", Rl, &none)?
                    .step("M'", Rl, &none)?
                    .step("L'", Lr, &none)?
                    .step("E", Lr, &none)?
                    .step("F", Lr, &none)?
                    .step("L'", Rl, &none)?
                    .step("M'", Lr, &none)?
                    .step("O", Lr, &none)?
                    .step("N", Lr, &none)?;
            }
            ("N", Context::AddLeft(_)) => {
                s.step("E'", Lr, &none)?
                    .step("D'", Lr, &none)?
                    .step("N", Lr, &none)?
                    .step("E'", Lr, &none)?;
            }
            ("N", Context::MulLeft(_)) => {
                s.step("N", Rl, &none)?
                    .step("E", Lr, &none)?
                    .step("F", Lr, &none)?
                    .step("N", Lr, &none)?;
            }
            ("O", Context::Neg) => {
                s.step("I'", Lr, &none)?
                    .step("M'", Lr, &none)?
                    .step("O", Lr, &none)?
                    .step("I'", Rl, &none)?;
            }
            ("O", Context::AddLeft(_)) => {
                s.step("D'", Rl, &none)?
                    .step("O", Lr, &none)?
                    .step("D'", Lr, &none)?;
            }
            ("O", Context::MulLeft(_)) => {
                s.step("H'", Lr, &none)?
                    .step("B", Lr, &none)?
                    .step("C", Lr, &none)?
                    .step("H'", Rl, &none)?;
            }
            (x, _) if cr_calculus().directed(x, Lr).is_some() => {
                let w = st.subst.get("w").cloned().unwrap_or_else(|| Term::var("w"));
                let u = st.subst.get("u").cloned().unwrap_or_else(|| Term::var("u"));
                match ctx {
                    Context::Neg => {
                        s.step("I'", Lr, &none)?
                            .step("L'", Lr, &none)?
                            .step(x, Lr, &with_extra(&st.subst, &[("w", neg(w)), ("u", neg(u))]))?
                            .step("L'", Rl, &none)?
                            .step("I'", Rl, &none)?;
                    }
                    Context::AddLeft(c) => {
                        s.step("D'", Rl, &none)?
                            .step(x, Lr, &with_extra(&st.subst, &[("w", add(c.clone(), w))]))?
                            .step("D'", Lr, &none)?;
                    }
                    Context::MulLeft(c) => {
                        let inner = with_extra(&st.subst, &[("w", mul(c.clone(), w)), ("u", mul(c.clone(), u))]);
                        s.step("H'", Lr, &none)?
                            .step("O", Rl, &none)?
                            .step("A", Rl, &none)?
                            .step("O", Lr, &none)?
                            .step(x, Lr, &inner)?
                            .step("O", Rl, &none)?
                            .step("A", Lr, &none)?
                            .step("O", Lr, &none)?
                            .step("H'", Rl, &none)?;
                    }
                }
            }
            (x, _) => return Err(Error::UnknownRule(x.to_string())),
        },
    }
    if s.end() != &ctx.wrap(to.clone()) {
        return Err(Error::invalid(format!(
            "lifting `{}` produced {} instead of {}",
            m.label(),
            s.end(),
            ctx.wrap(to.clone())
        )));
    }
    Ok(s)
}

/// Lifts a primitive CR chain into a context, step by step.
pub fn context_lift(ch: &ChainProof, ctx: &Context) -> Result<ChainProof> {
    Script::from_chain(ch)?.lift(ctx)?.expand()
}

// ---------------------------------------------------------------------------
// Ground synthesis

fn numeral_value(k: i64) -> Result<i64> {
    if k.abs() > MAX_NUMERAL {
        Err(Error::ResourceLimit(format!("numeral {k} exceeds {MAX_NUMERAL}")))
    } else {
        Ok(k)
    }
}

/// `1·y ⇝ y`.
fn one_mul(t: &Term) -> Result<Script> {
    let none = Substitution::new();
    let mut s = Script::new(t.clone());
    s.step("N", Direction::Rl, &none)?
        .step("O", Direction::Lr, &none)?
        .step("N", Direction::Lr, &none)?;
    Ok(s)
}

/// `t·0 ⇝ 0`.
fn mul_zero(t: &Term) -> Result<Script> {
    use Direction::{Lr, Rl};
    let none = Substitution::new();
    let mut s = Script::new(t.clone());
    s.step("F'", Rl, &none)?
        .step_at(&[1], "G'", Rl, &sub(t))?
        .step("D'", Rl, &none)?
        .step_at(&[0], "H'", Rl, &none)?
        .step_at(&[0, 1], "N", Lr, &none)?
        .step("G'", Lr, &none)?;
    Ok(s)
}

/// `−0 ⇝ 0`.
fn neg_zero(t: &Term) -> Result<Script> {
    use Direction::{Lr, Rl};
    let none = Substitution::new();
    let mut s = Script::new(t.clone());
    s.step("F'", Rl, &none)?
        .step("E'", Lr, &none)?
        .step("G'", Lr, &none)?;
    Ok(s)
}

/// `−−a ⇝ a`.
fn neg_neg(t: &Term) -> Result<Script> {
    use Direction::{Lr, Rl};
    let a = t.args()[0].args()[0].clone();
    let none = Substitution::new();
    let mut s = Script::new(t.clone());
    s.step("F'", Rl, &none)?
        .step_at(&[1], "G'", Rl, &sub(&a))?
        .step_at(&[1], "E'", Lr, &none)?
        .step("D'", Rl, &none)?
        .step_at(&[0], "E'", Lr, &none)?
        .step_at(&[0], "G'", Lr, &none)?
        .step("N", Lr, &none)?;
    Ok(s)
}

/// `−numeral(v) ⇝ numeral(−v)`.
fn neg_numeral(t: &Term, v: i64) -> Result<Script> {
    match v.cmp(&0) {
        Ordering::Greater => Ok(Script::new(t.clone())),
        Ordering::Equal => neg_zero(t),
        Ordering::Less => neg_neg(t),
    }
}

/// `numeral(m) + numeral(n) ⇝ numeral(m+n)`.
fn add_numerals(t: &Term, m: i64, n: i64) -> Result<Script> {
    use Direction::{Lr, Rl};
    let none = Substitution::new();
    let mut s = Script::new(t.clone());
    let (mut m, mut n) = (m, n);
    loop {
        if m == 0 {
            s.step("N", Lr, &none)?;
            return Ok(s);
        }
        if n == 0 {
            s.step("F'", Lr, &none)?;
            return Ok(s);
        }
        match (m > 0, n > 0) {
            (true, true) => {
                if m == 1 {
                    return Ok(s);
                }
                // (1+P)+N ⇝ P+(1+N)
                s.step("D'", Lr, &none)?
                    .step_at(&[1], "E'", Lr, &none)?
                    .step("D'", Rl, &none)?
                    .step("E'", Lr, &none)?;
                m -= 1;
                n += 1;
            }
            (false, false) => {
                s.step("I'", Rl, &none)?;
                s.then_at(&[0], |u| add_numerals(u, -m, -n))?;
                return Ok(s);
            }
            (false, true) => {
                s.step("E'", Lr, &none)?;
                std::mem::swap(&mut m, &mut n);
            }
            (true, false) => {
                let b = -n;
                match (m == 1, b == 1) {
                    (true, true) => {
                        s.step("G'", Lr, &none)?;
                        return Ok(s);
                    }
                    (true, false) => {
                        s.step_at(&[1], "I'", Lr, &none)?
                            .step("D'", Rl, &none)?
                            .step_at(&[0], "G'", Lr, &none)?
                            .step("N", Lr, &none)?;
                        return Ok(s);
                    }
                    (false, true) => {
                        s.step_at(&[0], "E'", Lr, &none)?
                            .step("D'", Lr, &none)?
                            .step_at(&[1], "G'", Lr, &none)?
                            .step("F'", Lr, &none)?;
                        return Ok(s);
                    }
                    (false, false) => {
                        s.step_at(&[1], "I'", Lr, &none)?
                            .step_at(&[0], "E'", Lr, &none)?
                            .step("D'", Lr, &none)?
                            .step_at(&[1], "D'", Rl, &none)?
                            .step_at(&[1, 0], "G'", Lr, &none)?
                            .step_at(&[1], "N", Lr, &none)?;
                        m -= 1;
                        n += 1;
                    }
                }
            }
        }
    }
}

/// `(1+P)·N ⇝ N + (P·N)`.
fn peel_factor(t: &Term) -> Result<Script> {
    use Direction::Lr;
    let none = Substitution::new();
    let mut s = Script::new(t.clone());
    s.step("B'", Lr, &none)?
        .step("H'", Lr, &none)?
        .step_at(&[0], "C'", Lr, &none)?
        .step_at(&[1], "B'", Lr, &none)?;
    Ok(s)
}

/// `numeral(m) · numeral(n) ⇝ numeral(m·n)`.
fn mul_numerals(t: &Term, m: i64, n: i64) -> Result<Script> {
    use Direction::{Lr, Rl};
    let none = Substitution::new();
    let mut s = Script::new(t.clone());
    if n == 0 {
        return mul_zero(t);
    }
    if m == 0 {
        s.step("B'", Lr, &none)?;
        let z = mul_zero(s.end())?;
        s.append(z)?;
        return Ok(s);
    }
    if m < 0 {
        s.step("L-root", Rl, &none)?;
        s.then_at(&[0], |u| mul_numerals(u, -m, n))?;
        let fix = neg_numeral(s.end(), -m * n)?;
        s.append(fix)?;
        return Ok(s);
    }
    if n < 0 {
        s.step("M-root", Rl, &none)?;
        s.then_at(&[0], |u| mul_numerals(u, m, -n))?;
        return Ok(s);
    }
    if m == 1 {
        return one_mul(t);
    }
    // Accumulate: acc + (P·N), one factor of N at a time.
    s.append(peel_factor(t)?)?;
    let mut acc = n;
    let mut k = m - 1;
    loop {
        if k == 1 {
            s.then_at(&[1], one_mul)?;
            let a = add_numerals(s.end(), acc, n)?;
            s.append(a)?;
            return Ok(s);
        }
        s.then_at(&[1], peel_factor)?;
        s.step("D'", Rl, &none)?;
        s.then_at(&[0], |u| add_numerals(u, acc, n))?;
        acc = numeral_value(acc + n)?;
        k -= 1;
    }
}

/// A script from a closed ring term to the numeral of its value.
pub fn to_numeral(t: &Term) -> Result<(Script, i64)> {
    let mut s = Script::new(t.clone());
    let v = match t {
        Term::Var(_) => return Err(Error::OpenTerm(t.to_string())),
        Term::App(f, args) => match (f.as_str(), args.as_slice()) {
            ("0", []) => 0,
            ("1", []) => 1,
            ("-", [a]) => {
                let (inner, va) = to_numeral(a)?;
                s.then_at(&[0], |_| Ok(inner))?;
                let fix = neg_numeral(s.end(), va)?;
                s.append(fix)?;
                numeral_value(-va)?
            }
            ("+" | "*", [a, b]) => {
                let (sa, va) = to_numeral(a)?;
                let (sb, vb) = to_numeral(b)?;
                s.then_at(&[0], |_| Ok(sa))?;
                s.then_at(&[1], |_| Ok(sb))?;
                let (tail, v) = if f == "+" {
                    (add_numerals(s.end(), va, vb)?, va + vb)
                } else {
                    let v = va.checked_mul(vb).ok_or_else(|| Error::ResourceLimit("numeral overflow".into()))?;
                    numeral_value(v)?;
                    (mul_numerals(s.end(), va, vb)?, v)
                };
                s.append(tail)?;
                numeral_value(v)?
            }
            _ => return Err(Error::ForeignSymbol(f.clone())),
        },
    };
    debug_assert_eq!(s.end(), &encode_int(v));
    Ok((s, v))
}

/// A primitive CR chain between two closed, CR-equal terms.
pub fn synth_ground_chain(s: &Term, t: &Term) -> Result<ChainProof> {
    synth_ground_script(s, t)?.expand()
}

pub fn synth_ground_script(s: &Term, t: &Term) -> Result<Script> {
    for x in [s, t] {
        if !x.is_ground() {
            return Err(Error::OpenTerm(x.to_string()));
        }
    }
    if normalize(s)? != normalize(t)? {
        return Err(Error::NotCrEqual(s.to_string(), t.to_string()));
    }
    if s == t {
        return Ok(Script::new(s.clone()));
    }
    let (mut left, _) = to_numeral(s)?;
    let (right, _) = to_numeral(t)?;
    left.append(right.reversed())?;
    Ok(left)
}
