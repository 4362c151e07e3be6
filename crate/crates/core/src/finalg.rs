//! Finite algebras and logical matrices: evaluation, Leibniz and Suszko
//! congruences, deductive filters and model checking.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{HilbertCalculus, Rule};
use crate::terms::{strip_comment, Equation, Signature, Term};

/// Largest carrier for which subset and partition enumeration is attempted.
pub const ENUMERATION_LIMIT: usize = 6;

/// Cap on the number of unary polynomial functions materialized.
pub const POLYNOMIAL_LIMIT: usize = 1 << 18;

/// Assignment spaces at least this large are split across the rayon pool.
const PARALLEL_THRESHOLD: u64 = 1 << 14;

pub type Assignment = BTreeMap<String, usize>;

#[derive(Debug, Clone)]
pub struct FiniteAlgebra {
    signature: Signature,
    size: usize,
    /// Per symbol (declaration order), the row-major table of length `size^arity`.
    tables: Vec<Vec<usize>>,
}

impl FiniteAlgebra {
    pub fn new(signature: Signature, size: usize, tables: Vec<Vec<usize>>) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("carrier must be nonempty"));
        }
        if tables.len() != signature.len() {
            return Err(Error::invalid(format!(
                "{} tables for {} symbols",
                tables.len(),
                signature.len()
            )));
        }
        for ((sym, arity), table) in signature.ops().zip(&tables) {
            let expected = size
                .checked_pow(arity as u32)
                .ok_or_else(|| Error::invalid(format!("table of `{sym}` too large")))?;
            if table.len() != expected {
                return Err(Error::invalid(format!(
                    "table of `{sym}` has {} entries, expected {expected}",
                    table.len()
                )));
            }
            if let Some(bad) = table.iter().find(|&&v| v >= size) {
                return Err(Error::invalid(format!(
                    "table of `{sym}` contains {bad}, outside the carrier 0..{size}"
                )));
            }
        }
        Ok(FiniteAlgebra {
            signature,
            size,
            tables,
        })
    }

    /// Tabulates `f(symbol, args)` for every symbol.
    pub fn from_fn(
        signature: Signature,
        size: usize,
        mut f: impl FnMut(&str, &[usize]) -> usize,
    ) -> Result<Self> {
        let mut tables = Vec::new();
        for (sym, arity) in signature.ops() {
            let mut table = Vec::new();
            let mut args = vec![0usize; arity];
            let total = size.pow(arity as u32);
            for idx in 0..total {
                decode(idx as u64, size, &mut args);
                table.push(f(sym, &args));
            }
            tables.push(table);
        }
        FiniteAlgebra::new(signature, size, tables)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn op_index(&self, symbol: &str) -> Option<usize> {
        self.signature.ops().position(|(s, _)| s == symbol)
    }

    fn apply_index(&self, op: usize, args: &[usize]) -> usize {
        let mut idx = 0;
        for &a in args {
            idx = idx * self.size + a;
        }
        self.tables[op][idx]
    }

    /// Value of the basic operation `symbol` at `args`.
    pub fn op(&self, symbol: &str, args: &[usize]) -> Result<usize> {
        let i = self.op_index(symbol).ok_or_else(|| Error::UnknownSymbol {
            pos: 0,
            symbol: symbol.to_string(),
        })?;
        let arity = self.signature.ops().nth(i).unwrap().1;
        if args.len() != arity || args.iter().any(|&a| a >= self.size) {
            return Err(Error::invalid(format!("bad arguments {args:?} for `{symbol}`")));
        }
        Ok(self.apply_index(i, args))
    }

    pub fn evaluate(&self, t: &Term, env: &Assignment) -> Result<usize> {
        match t {
            Term::Var(v) => match env.get(v) {
                Some(&a) if a < self.size => Ok(a),
                Some(&a) => Err(Error::invalid(format!("{a} is outside the carrier"))),
                None => Err(Error::UnboundVariable(v.clone())),
            },
            Term::App(f, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.evaluate(a, env))
                    .collect::<Result<Vec<_>>>()?;
                self.op(f, &vals)
            }
        }
    }

    fn compile(&self, t: &Term, vars: &[String]) -> Result<Compiled> {
        Ok(match t {
            Term::Var(v) => Compiled::Var(
                vars.iter()
                    .position(|w| w == v)
                    .ok_or_else(|| Error::UnboundVariable(v.clone()))?,
            ),
            Term::App(f, args) => {
                let op = self.op_index(f).ok_or_else(|| Error::UnknownSymbol {
                    pos: 0,
                    symbol: f.clone(),
                })?;
                let arity = self.signature.ops().nth(op).unwrap().1;
                if arity != args.len() {
                    return Err(Error::Arity {
                        symbol: f.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                Compiled::App(
                    op,
                    args.iter()
                        .map(|a| self.compile(a, vars))
                        .collect::<Result<_>>()?,
                )
            }
        })
    }

    fn run(&self, c: &Compiled, vals: &[usize]) -> usize {
        match c {
            Compiled::Var(i) => vals[*i],
            Compiled::App(op, args) => {
                let mut idx = 0;
                for a in args {
                    idx = idx * self.size + self.run(a, vals);
                }
                self.tables[*op][idx]
            }
        }
    }

    /// An assignment refuting `e`, or `None` when the algebra satisfies it.
    pub fn equation_counterexample(&self, e: &Equation) -> Result<Option<Assignment>> {
        let vars: Vec<String> = e.vars().into_iter().collect();
        let lhs = self.compile(&e.lhs, &vars)?;
        let rhs = self.compile(&e.rhs, &vars)?;
        let found = self.search(vars.len(), |vals| self.run(&lhs, vals) != self.run(&rhs, vals))?;
        Ok(found.map(|vals| vars.iter().cloned().zip(vals).collect()))
    }

    pub fn validates_equation(&self, e: &Equation) -> Result<bool> {
        Ok(self.equation_counterexample(e)?.is_none())
    }

    /// First assignment (in lexicographic order) satisfying `bad`.
    fn search(
        &self,
        nvars: usize,
        bad: impl Fn(&[usize]) -> bool + Sync,
    ) -> Result<Option<Vec<usize>>> {
        let total = (self.size as u64)
            .checked_pow(nvars as u32)
            .ok_or_else(|| Error::ResourceLimit(format!("{}^{nvars} assignments", self.size)))?;
        let test = |idx: u64| {
            let mut vals = vec![0usize; nvars];
            decode(idx, self.size, &mut vals);
            bad(&vals)
        };
        let hit = if total >= PARALLEL_THRESHOLD {
            (0..total).into_par_iter().find_first(|&i| test(i))
        } else {
            (0..total).find(|&i| test(i))
        };
        Ok(hit.map(|idx| {
            let mut vals = vec![0usize; nvars];
            decode(idx, self.size, &mut vals);
            vals
        }))
    }

    /// Parses `carrier n` followed by `op name arity` blocks with row-major tables.
    pub fn parse(text: &str) -> Result<FiniteAlgebra> {
        let mut tokens = Vec::new();
        for line in text.lines() {
            tokens.extend(strip_comment(line).split_whitespace());
        }
        let mut it = tokens.into_iter().peekable();
        let num = |tok: Option<&str>, what: &str| -> Result<usize> {
            let tok = tok.ok_or_else(|| Error::invalid(format!("expected {what}")))?;
            tok.parse()
                .map_err(|_| Error::invalid(format!("expected {what}, found `{tok}`")))
        };
        if it.next() != Some("carrier") {
            return Err(Error::invalid("algebra file must start with `carrier n`"));
        }
        let size = num(it.next(), "carrier size")?;
        let mut sig = Signature::new("algebra");
        let mut tables = Vec::new();
        while let Some(tok) = it.next() {
            if tok != "op" {
                return Err(Error::invalid(format!("expected `op`, found `{tok}`")));
            }
            let name = it.next().ok_or_else(|| Error::invalid("expected a symbol"))?;
            let arity = num(it.next(), "arity")?;
            sig.add(name, arity)?;
            let len = size.checked_pow(arity as u32).unwrap_or(usize::MAX);
            let mut table = Vec::new();
            while table.len() < len {
                match it.peek() {
                    Some(&"op") | None => break,
                    Some(_) => table.push(num(it.next(), "table entry")?),
                }
            }
            tables.push(table);
        }
        FiniteAlgebra::new(sig, size, tables)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = format!("carrier {}\n", self.size);
        for ((sym, arity), table) in self.signature.ops().zip(&self.tables) {
            out.push_str(&format!("op {sym} {arity}\n"));
            let row = if arity == 0 { 1 } else { self.size };
            for chunk in table.chunks(row) {
                let cells: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out
    }

    /// Elementary translations `a ↦ f(b₁,…,a,…,bₖ)` as value vectors.
    fn translations(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut args = Vec::new();
        for (op, (_, arity)) in self.signature.ops().enumerate() {
            if arity == 0 {
                continue;
            }
            let params = self.size.pow(arity as u32 - 1);
            for pos in 0..arity {
                let mut rest = vec![0usize; arity - 1];
                for p in 0..params {
                    decode(p as u64, self.size, &mut rest);
                    let f: Vec<usize> = (0..self.size)
                        .map(|a| {
                            args.clear();
                            args.extend_from_slice(&rest[..pos]);
                            args.push(a);
                            args.extend_from_slice(&rest[pos..]);
                            self.apply_index(op, &args)
                        })
                        .collect();
                    if seen.insert(f.clone()) {
                        out.push(f);
                    }
                }
            }
        }
        out
    }
}

/// Equality of carriers, symbols and tables; the signature name is ignored.
impl PartialEq for FiniteAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size
            && self.signature.ops().eq(other.signature.ops())
            && self.tables == other.tables
    }
}

impl Eq for FiniteAlgebra {}

#[derive(Debug, Clone)]
enum Compiled {
    Var(usize),
    App(usize, Vec<Compiled>),
}

/// Mixed-radix decoding, most significant digit first.
fn decode(mut idx: u64, base: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = (idx % base as u64) as usize;
        idx /= base as u64;
    }
}

impl fmt::Display for FiniteAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_file_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalMatrix {
    pub algebra: FiniteAlgebra,
    filter: Vec<bool>,
}

impl LogicalMatrix {
    pub fn new(algebra: FiniteAlgebra, filter: &[usize]) -> Result<Self> {
        let filter = subset_mask(algebra.size(), filter)?;
        Ok(LogicalMatrix { algebra, filter })
    }

    pub fn filter(&self) -> Vec<usize> {
        mask_elements(&self.filter)
    }

    pub fn contains(&self, a: usize) -> bool {
        self.filter.get(a).copied().unwrap_or(false)
    }

    /// Matrix file: the algebra lines (or `algebra PATH`, resolved by the
    /// caller through `load`) plus `filter e1 e2 ...`.
    pub fn parse(text: &str, load: impl Fn(&str) -> Result<String>) -> Result<LogicalMatrix> {
        let mut algebra_text = String::new();
        let mut filter: Option<Vec<usize>> = None;
        for line in text.lines() {
            let body = strip_comment(line);
            if let Some(rest) = body.strip_prefix("filter") {
                let elems = rest
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|_| Error::invalid(format!("bad filter element `{t}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                filter = Some(elems);
            } else if let Some(path) = body.strip_prefix("algebra ") {
                algebra_text.push_str(&load(path.trim())?);
                algebra_text.push('\n');
            } else {
                algebra_text.push_str(body);
                algebra_text.push('\n');
            }
        }
        let filter = filter.ok_or_else(|| Error::invalid("matrix file lacks a `filter` line"))?;
        LogicalMatrix::new(FiniteAlgebra::parse(&algebra_text)?, &filter)
    }

    pub fn to_file_string(&self) -> String {
        let elems: Vec<String> = self.filter().iter().map(|e| e.to_string()).collect();
        format!("{}filter {}\n", self.algebra.to_file_string(), elems.join(" "))
    }
}

fn subset_mask(size: usize, elems: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; size];
    for &e in elems {
        if e >= size {
            return Err(Error::invalid(format!("element {e} outside the carrier 0..{size}")));
        }
        mask[e] = true;
    }
    Ok(mask)
}

fn mask_elements(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i)
        .collect()
}

/// A partition of the carrier stored as its canonical representative map
/// (each element points to the least member of its block).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Congruence {
    rep: Vec<usize>,
}

impl Congruence {
    /// From arbitrary block labels; checked to be compatible with every
    /// operation of `a`.
    pub fn new(a: &FiniteAlgebra, labels: &[usize]) -> Result<Self> {
        if labels.len() != a.size() {
            return Err(Error::invalid("one label per element is required"));
        }
        let c = Congruence::from_labels(labels);
        if !c.is_congruence_of(a) {
            return Err(Error::invalid(format!("{c} is not a congruence")));
        }
        Ok(c)
    }

    fn from_labels(labels: &[usize]) -> Self {
        let mut first: HashMap<usize, usize> = HashMap::new();
        let rep = labels
            .iter()
            .enumerate()
            .map(|(i, l)| *first.entry(*l).or_insert(i))
            .collect();
        Congruence { rep }
    }

    pub fn identity(n: usize) -> Self {
        Congruence {
            rep: (0..n).collect(),
        }
    }

    pub fn total(n: usize) -> Self {
        Congruence { rep: vec![0; n] }
    }

    pub fn size(&self) -> usize {
        self.rep.len()
    }

    pub fn representative(&self, a: usize) -> usize {
        self.rep[a]
    }

    pub fn related(&self, a: usize, b: usize) -> bool {
        self.rep[a] == self.rep[b]
    }

    pub fn is_identity(&self) -> bool {
        self.rep.iter().enumerate().all(|(i, &r)| i == r)
    }

    pub fn is_total(&self) -> bool {
        self.rep.iter().all(|&r| r == 0)
    }

    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &r) in self.rep.iter().enumerate() {
            blocks.entry(r).or_default().push(i);
        }
        blocks.into_values().collect()
    }

    /// Inclusion as relations.
    pub fn is_finer_than(&self, other: &Congruence) -> bool {
        self.rep.len() == other.rep.len()
            && (0..self.rep.len()).all(|i| other.related(i, self.rep[i]))
    }

    pub fn meet(&self, other: &Congruence) -> Congruence {
        let labels: Vec<usize> = self
            .rep
            .iter()
            .zip(&other.rep)
            .map(|(&a, &b)| a * self.rep.len() + b)
            .collect();
        Congruence::from_labels(&labels)
    }

    /// Whether the filter is a union of blocks.
    pub fn compatible_with(&self, filter: &[bool]) -> bool {
        (0..self.rep.len()).all(|i| filter[i] == filter[self.rep[i]])
    }

    pub fn is_congruence_of(&self, a: &FiniteAlgebra) -> bool {
        if self.rep.len() != a.size() {
            return false;
        }
        // Compatibility in one coordinate at a time suffices by transitivity.
        let n = a.size();
        let mut args = Vec::new();
        for (op, (_, arity)) in a.signature.ops().enumerate() {
            if arity == 0 {
                continue;
            }
            let params = n.pow(arity as u32 - 1);
            let mut rest = vec![0usize; arity - 1];
            for pos in 0..arity {
                for p in 0..params {
                    decode(p as u64, n, &mut rest);
                    let mut at = |x: usize| {
                        args.clear();
                        args.extend_from_slice(&rest[..pos]);
                        args.push(x);
                        args.extend_from_slice(&rest[pos..]);
                        a.apply_index(op, &args)
                    };
                    for x in 0..n {
                        let r = self.rep[x];
                        if r != x && !self.related(at(x), at(r)) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Block labels `0..k` in order of first occurrence.
    pub fn labels(&self) -> Vec<usize> {
        let mut ids: HashMap<usize, usize> = HashMap::new();
        self.rep
            .iter()
            .map(|r| {
                let next = ids.len();
                *ids.entry(*r).or_insert(next)
            })
            .collect()
    }
}

impl fmt::Display for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self
            .classes()
            .iter()
            .map(|b| {
                let items: Vec<String> = b.iter().map(|e| e.to_string()).collect();
                format!("{{{}}}", items.join(","))
            })
            .collect();
        write!(f, "[{}]", blocks.join(" "))
    }
}

/// Unary polynomial functions of an algebra as value vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnaryPolynomialSet {
    pub size: usize,
    pub functions: BTreeSet<Vec<usize>>,
}

impl UnaryPolynomialSet {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn contains(&self, f: &[usize]) -> bool {
        self.functions.contains(f)
    }
}

/// Least set with the identity and the constants that is closed under
/// composition with the elementary translations.
pub fn unary_polynomials(a: &FiniteAlgebra) -> Result<UnaryPolynomialSet> {
    let n = a.size();
    let translations = a.translations();
    let mut functions: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut work: Vec<Vec<usize>> = Vec::new();
    for f in std::iter::once((0..n).collect::<Vec<_>>()).chain((0..n).map(|c| vec![c; n])) {
        if functions.insert(f.clone()) {
            work.push(f);
        }
    }
    while let Some(p) = work.pop() {
        for t in &translations {
            let q: Vec<usize> = p.iter().map(|&v| t[v]).collect();
            if !functions.contains(&q) {
                if functions.len() >= POLYNOMIAL_LIMIT {
                    return Err(Error::ResourceLimit(format!(
                        "more than {POLYNOMIAL_LIMIT} unary polynomials"
                    )));
                }
                functions.insert(q.clone());
                work.push(q);
            }
        }
    }
    Ok(UnaryPolynomialSet { size: n, functions })
}

/// Ω F: `a ≡ b` iff `p(a) ∈ F ⟺ p(b) ∈ F` for every unary polynomial `p`.
///
/// Computed by refining the partition {F, A∖F} along elementary translations
/// until it is stable, which yields the same relation without materializing
/// the (possibly huge) polynomial set.
pub fn leibniz_congruence(m: &LogicalMatrix) -> Congruence {
    let a = &m.algebra;
    let translations = a.translations();
    let mut labels: Vec<usize> = m.filter.iter().map(|&b| b as usize).collect();
    let mut classes = labels.iter().collect::<HashSet<_>>().len();
    loop {
        let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
        let next: Vec<usize> = (0..a.size())
            .map(|x| {
                let mut key = Vec::with_capacity(translations.len() + 1);
                key.push(labels[x]);
                key.extend(translations.iter().map(|t| labels[t[x]]));
                let fresh = ids.len();
                *ids.entry(key).or_insert(fresh)
            })
            .collect();
        labels = next;
        if ids.len() == classes {
            break;
        }
        classes = ids.len();
    }
    let c = Congruence::from_labels(&labels);
    assert!(
        c.is_congruence_of(a) && c.compatible_with(&m.filter),
        "Leibniz refinement produced a non-congruence"
    );
    c
}

/// Ω F straight from the definition: group elements by which polynomial
/// images land in F. Fails when the polynomial set exceeds [`POLYNOMIAL_LIMIT`].
pub fn leibniz_by_polynomials(m: &LogicalMatrix) -> Result<Congruence> {
    let polys = unary_polynomials(&m.algebra)?;
    let labels: Vec<Vec<bool>> = (0..m.algebra.size())
        .map(|x| polys.functions.iter().map(|p| m.filter[p[x]]).collect())
        .collect();
    let mut ids: HashMap<&Vec<bool>, usize> = HashMap::new();
    let flat: Vec<usize> = labels
        .iter()
        .map(|k| {
            let fresh = ids.len();
            *ids.entry(k).or_insert(fresh)
        })
        .collect();
    Ok(Congruence::from_labels(&flat))
}

fn guard(n: usize) -> Result<()> {
    if n > ENUMERATION_LIMIT {
        Err(Error::Guard {
            size: n,
            limit: ENUMERATION_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Every congruence of `a`, by enumerating set partitions as restricted
/// growth strings.
pub fn all_congruences(a: &FiniteAlgebra) -> Result<Vec<Congruence>> {
    let n = a.size();
    guard(n)?;
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        let c = Congruence::from_labels(&rgs);
        if c.is_congruence_of(a) {
            out.push(c);
        }
        // Next restricted growth string.
        let mut i = n;
        loop {
            if i <= 1 {
                return Ok(out);
            }
            i -= 1;
            let max_prefix = rgs[..i].iter().copied().max().unwrap_or(0);
            if rgs[i] <= max_prefix {
                rgs[i] += 1;
                for slot in rgs.iter_mut().skip(i + 1) {
                    *slot = 0;
                }
                break;
            }
        }
    }
}

/// Oracle for [`leibniz_congruence`]: the largest congruence compatible with
/// the filter, found among all congruences.
pub fn largest_compatible_congruence_bruteforce(m: &LogicalMatrix) -> Result<Congruence> {
    let compatible: Vec<Congruence> = all_congruences(&m.algebra)?
        .into_iter()
        .filter(|c| c.compatible_with(&m.filter))
        .collect();
    compatible
        .iter()
        .find(|c| compatible.iter().all(|d| d.is_finer_than(c)))
        .cloned()
        .ok_or_else(|| Error::invalid("no largest compatible congruence"))
}

/// Outcome of checking a calculus against a matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelReport {
    pub assignments_checked: u64,
    /// First failing rule and the assignment of its variables.
    pub failure: Option<(String, Assignment)>,
}

impl ModelReport {
    pub fn holds(&self) -> bool {
        self.failure.is_none()
    }
}

struct CompiledRule {
    vars: Vec<String>,
    premises: Vec<Compiled>,
    conclusion: Compiled,
}

fn compile_rule(a: &FiniteAlgebra, r: &Rule) -> Result<CompiledRule> {
    let vars: Vec<String> = r.vars().into_iter().collect();
    Ok(CompiledRule {
        premises: r
            .premises
            .iter()
            .map(|p| a.compile(p, &vars))
            .collect::<Result<_>>()?,
        conclusion: a.compile(&r.conclusion, &vars)?,
        vars,
    })
}

fn filter_satisfies(
    a: &FiniteAlgebra,
    rules: &[(String, CompiledRule)],
    filter: &[bool],
    checked: &mut u64,
) -> Result<Option<(String, Assignment)>> {
    for (name, r) in rules {
        let hit = a.search(r.vars.len(), |vals| {
            r.premises.iter().all(|p| filter[a.run(p, vals)]) && !filter[a.run(&r.conclusion, vals)]
        })?;
        match hit {
            Some(vals) => {
                let mut idx = 0u64;
                for &v in &vals {
                    idx = idx * a.size() as u64 + v as u64;
                }
                *checked += idx + 1;
                return Ok(Some((name.clone(), r.vars.iter().cloned().zip(vals).collect())));
            }
            None => *checked += (a.size() as u64).pow(r.vars.len() as u32),
        }
    }
    Ok(None)
}

fn compile_calculus(c: &HilbertCalculus, a: &FiniteAlgebra) -> Result<Vec<(String, CompiledRule)>> {
    c.rules()
        .iter()
        .map(|r| Ok((r.name.clone(), compile_rule(a, r)?)))
        .collect()
}

/// Exhaustive check that the matrix filter is closed under every rule.
pub fn is_model(c: &HilbertCalculus, m: &LogicalMatrix) -> Result<ModelReport> {
    let rules = compile_calculus(c, &m.algebra)?;
    let mut checked = 0;
    let failure = filter_satisfies(&m.algebra, &rules, &m.filter, &mut checked)?;
    Ok(ModelReport {
        assignments_checked: checked,
        failure,
    })
}

/// The least filter of `c` over `a` containing `seed`.
pub fn generate_filter(c: &HilbertCalculus, a: &FiniteAlgebra, seed: &[usize]) -> Result<Vec<usize>> {
    let rules = compile_calculus(c, a)?;
    let mut filter = subset_mask(a.size(), seed)?;
    loop {
        let mut grew = false;
        for (_, r) in &rules {
            let total = (a.size() as u64).pow(r.vars.len() as u32);
            let mut vals = vec![0usize; r.vars.len()];
            for idx in 0..total {
                decode(idx, a.size(), &mut vals);
                if r.premises.iter().all(|p| filter[a.run(p, &vals)]) {
                    let v = a.run(&r.conclusion, &vals);
                    if !filter[v] {
                        filter[v] = true;
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            return Ok(mask_elements(&filter));
        }
    }
}

/// All deductive filters of `c` over `a`, ordered by bitmask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterFamily {
    pub size: usize,
    pub members: Vec<Vec<usize>>,
}

impl FilterFamily {
    pub fn contains(&self, f: &[usize]) -> bool {
        self.members.iter().any(|m| m == f)
    }

    pub fn is_closure_system(&self) -> bool {
        let all: Vec<usize> = (0..self.size).collect();
        self.contains(&all)
            && self.members.iter().all(|f| {
                self.members.iter().all(|g| {
                    let meet: Vec<usize> = f.iter().copied().filter(|x| g.contains(x)).collect();
                    self.contains(&meet)
                })
            })
    }
}

pub fn enumerate_filters(c: &HilbertCalculus, a: &FiniteAlgebra) -> Result<FilterFamily> {
    let n = a.size();
    guard(n)?;
    let rules = compile_calculus(c, a)?;
    let mut members = Vec::new();
    for bits in 0u64..(1 << n) {
        let filter: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
        let mut checked = 0;
        if filter_satisfies(a, &rules, &filter, &mut checked)?.is_none() {
            members.push(mask_elements(&filter));
        }
    }
    Ok(FilterFamily { size: n, members })
}

/// The Suszko congruence: the meet of Ω G over all filters G ⊇ `f`.
/// `f` need not be a filter itself.
pub fn suszko_congruence(c: &HilbertCalculus, a: &FiniteAlgebra, f: &[usize]) -> Result<Congruence> {
    let family = enumerate_filters(c, a)?;
    suszko_in(&family, a, f)
}

fn suszko_in(family: &FilterFamily, a: &FiniteAlgebra, f: &[usize]) -> Result<Congruence> {
    subset_mask(a.size(), f)?;
    let mut out = Congruence::total(a.size());
    for g in family.members.iter().filter(|g| f.iter().all(|x| g.contains(x))) {
        let m = LogicalMatrix::new(a.clone(), g)?;
        out = out.meet(&leibniz_congruence(&m));
    }
    Ok(out)
}

/// Whether `a` carries a filter of `c` with identity Suszko congruence.
pub fn in_alg_l(c: &HilbertCalculus, a: &FiniteAlgebra) -> Result<bool> {
    let family = enumerate_filters(c, a)?;
    for f in &family.members {
        if suszko_in(&family, a, f)?.is_identity() {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::parse_term;

    fn z3() -> FiniteAlgebra {
        FiniteAlgebra::from_fn(Signature::new("s").with("and", 2), 3, |_, a| (a[0] + a[1]) % 3).unwrap()
    }

    fn semilat() -> HilbertCalculus {
        HilbertCalculus::parse(
            "S1 : x <-> (and x x)\nS2 : (and x y) <-> (and y x)\nS3 : (and x (and y z)) <-> (and (and x y) z)\n",
            Signature::new("s").with("and", 2),
        )
        .unwrap()
    }

    #[test]
    fn evaluation_and_equations() {
        let a = z3();
        let sig = a.signature().clone();
        let env: Assignment = [("x".to_string(), 1), ("y".to_string(), 2)].into();
        assert_eq!(a.evaluate(&parse_term("(and x y)", &sig).unwrap(), &env).unwrap(), 0);
        assert!(matches!(
            a.evaluate(&parse_term("(and x z)", &sig).unwrap(), &env),
            Err(Error::UnboundVariable(_))
        ));
        let comm = Equation::new(parse_term("(and x y)", &sig).unwrap(), parse_term("(and y x)", &sig).unwrap());
        assert!(a.validates_equation(&comm).unwrap());
        let idem = Equation::new(parse_term("(and x x)", &sig).unwrap(), parse_term("x", &sig).unwrap());
        let cex = a.equation_counterexample(&idem).unwrap().unwrap();
        assert_eq!(cex["x"], 1);
    }

    #[test]
    fn algebra_file_round_trip() {
        let a = z3();
        let text = a.to_file_string();
        assert!(text.starts_with("carrier 3\nop and 2\n0 1 2\n"));
        assert_eq!(FiniteAlgebra::parse(&text).unwrap(), a);
        assert!(FiniteAlgebra::parse("carrier 2\nop f 1\n0 2\n").is_err());
        assert!(FiniteAlgebra::parse("carrier 2\nop f 1\n0\n").is_err());
        assert!(FiniteAlgebra::parse("carrier 0\n").is_err());
        let m = LogicalMatrix::new(a, &[1, 2]).unwrap();
        assert_eq!(LogicalMatrix::parse(&m.to_file_string(), |_| unreachable!()).unwrap(), m);
    }

    #[test]
    fn z3_polynomials_are_translations_and_constants() {
        let p = unary_polynomials(&z3()).unwrap();
        let expected: BTreeSet<Vec<usize>> = [
            vec![0, 1, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![0, 0, 0],
            vec![1, 1, 1],
            vec![2, 2, 2],
        ]
        .into();
        assert_eq!(p.functions, expected);
        let trivial = FiniteAlgebra::new(Signature::new("e"), 1, vec![]).unwrap();
        assert_eq!(unary_polynomials(&trivial).unwrap().len(), 1);
    }

    #[test]
    fn leibniz_examples() {
        let m = LogicalMatrix::new(z3(), &[1, 2]).unwrap();
        assert!(leibniz_congruence(&m).is_identity());
        assert_eq!(largest_compatible_congruence_bruteforce(&m).unwrap(), Congruence::identity(3));
        let all = LogicalMatrix::new(z3(), &[0, 1, 2]).unwrap();
        assert!(leibniz_congruence(&all).is_total());
        let empty_sig = FiniteAlgebra::new(Signature::new("e"), 4, vec![]).unwrap();
        let m = LogicalMatrix::new(empty_sig, &[0, 1]).unwrap();
        assert_eq!(leibniz_congruence(&m).classes(), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn congruence_construction_is_checked() {
        let a = z3();
        assert!(Congruence::new(&a, &[0, 0, 1]).is_err());
        assert!(Congruence::new(&a, &[5, 5, 5]).unwrap().is_total());
        assert_eq!(all_congruences(&a).unwrap().len(), 2);
        let big = FiniteAlgebra::new(Signature::new("e"), 7, vec![]).unwrap();
        assert!(matches!(all_congruences(&big), Err(Error::Guard { size: 7, limit: 6 })));
    }

    #[test]
    fn filters_of_semilattice_rules_on_z3() {
        let c = semilat();
        let a = z3();
        assert_eq!(generate_filter(&c, &a, &[1]).unwrap(), vec![1, 2]);
        assert_eq!(generate_filter(&c, &a, &[0]).unwrap(), vec![0]);
        assert_eq!(generate_filter(&c, &a, &[0, 1, 2]).unwrap(), vec![0, 1, 2]);
        let fam = enumerate_filters(&c, &a).unwrap();
        assert!(fam.contains(&[0]) && fam.contains(&[1, 2]));
        assert!(fam.is_closure_system());
        assert!(is_model(&c, &LogicalMatrix::new(a.clone(), &[1, 2]).unwrap()).unwrap().holds());
        assert!(suszko_congruence(&c, &a, &[1, 2]).unwrap().is_identity());
        assert!(in_alg_l(&c, &a).unwrap());
    }

    #[test]
    fn model_failure_reports_assignment() {
        let sig = Signature::new("b").with("and", 2);
        let bool2 = FiniteAlgebra::from_fn(sig.clone(), 2, |_, a| a[0] & a[1]).unwrap();
        let c = HilbertCalculus::parse("Ax : |- x\n", sig).unwrap();
        let rep = is_model(&c, &LogicalMatrix::new(bool2.clone(), &[1]).unwrap()).unwrap();
        let (rule, asg) = rep.failure.unwrap();
        assert_eq!(rule, "Ax");
        assert_eq!(asg["x"], 0);
        assert_eq!(enumerate_filters(&c, &bool2).unwrap().members, vec![vec![0, 1]]);
        let empty = HilbertCalculus::new(bool2.signature().clone());
        assert_eq!(enumerate_filters(&empty, &bool2).unwrap().members.len(), 4);
    }

    #[test]
    fn alg_l_negative_case() {
        let sig = Signature::new("k").with("f", 2);
        let a = FiniteAlgebra::from_fn(sig.clone(), 2, |_, _| 0).unwrap();
        let c = HilbertCalculus::parse("Ax : |- x\n", sig).unwrap();
        assert!(!in_alg_l(&c, &a).unwrap());
        let one = FiniteAlgebra::from_fn(Signature::new("k").with("f", 2), 1, |_, _| 0).unwrap();
        assert!(in_alg_l(&c, &one).unwrap());
    }

    #[test]
    fn large_assignment_spaces_use_the_pool() {
        let sig = Signature::new("r").with("f", 2);
        let a = FiniteAlgebra::from_fn(sig.clone(), 12, |_, x| (x[0] + x[1]) % 12).unwrap();
        let e = Equation::new(
            parse_term("(f (f x y) (f z w))", &sig).unwrap(),
            parse_term("(f (f w z) (f y x))", &sig).unwrap(),
        );
        assert!(a.validates_equation(&e).unwrap());
        let bad = Equation::new(parse_term("(f (f x y) (f z w))", &sig).unwrap(), parse_term("w", &sig).unwrap());
        let cex = a.equation_counterexample(&bad).unwrap().unwrap();
        // Lexicographically first refutation.
        assert_eq!(cex, [("w".into(), 0), ("x".into(), 0), ("y".into(), 0), ("z".into(), 1)].into());
    }
}
