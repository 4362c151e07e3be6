//! Worked examples as executable bundles: the semilattice calculus on ℤ₃, the
//! non-commutative magma, the commutative-magma rule suite and the
//! selfextensionality chains for CR.

use std::fmt;
use std::path::Path;

use crate::cring::{cr_calculus, cr_macros, cm_valid, lv_entails, normalize, Context, Script};
use crate::error::{Error, Result};
use crate::finalg::{
    in_alg_l, is_model, leibniz_congruence, unary_polynomials, Assignment, FiniteAlgebra,
    LogicalMatrix,
};
use crate::hilbert::{chain_step, check_chain, ChainProof, Direction, HilbertCalculus};
use crate::terms::{Equation, Signature, Substitution, Term};

pub const SEMILATTICE_CALCULUS: &str = include_str!("../data/semilattice.calc");
pub const SEMILATTICE_EXTENSION: &str = include_str!("../data/semilattice_ext.calc");
pub const Z3_ALGEBRA: &str = include_str!("../data/z3.alg");

/// Default size parameter of the magma example.
pub const DEFAULT_MAGMA_N: usize = 5;

/// Largest `n` accepted by [`cm_rule_suite`].
pub const CM_SUITE_LIMIT: usize = 6;

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Stated outright in the source example.
    Claim,
    /// Obtained by running a computation.
    Computed,
    /// Follows at once from the definitions.
    Immediate,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Claim => "claim",
            Provenance::Computed => "computed",
            Provenance::Immediate => "immediate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub check: String,
    pub expected: String,
    pub actual: String,
    pub provenance: Provenance,
}

impl ManifestEntry {
    pub fn passed(&self) -> bool {
        self.expected == self.actual
    }
}

/// Named files plus a manifest whose entries are recomputed on every build.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleBundle {
    pub name: String,
    pub files: Vec<(String, String)>,
    pub manifest: Vec<ManifestEntry>,
}

impl ExampleBundle {
    fn new(name: &str) -> Self {
        ExampleBundle {
            name: name.to_string(),
            files: Vec::new(),
            manifest: Vec::new(),
        }
    }

    fn file(&mut self, name: impl Into<String>, content: impl Into<String>) {
        self.files.push((name.into(), content.into()));
    }

    fn expect(&mut self, check: impl Into<String>, expected: impl ToString, actual: impl ToString, provenance: Provenance) {
        self.manifest.push(ManifestEntry {
            check: check.into(),
            expected: expected.to_string(),
            actual: actual.to_string(),
            provenance,
        });
    }

    pub fn passed(&self) -> bool {
        self.manifest.iter().all(ManifestEntry::passed)
    }

    pub fn failures(&self) -> Vec<&ManifestEntry> {
        self.manifest.iter().filter(|e| !e.passed()).collect()
    }

    /// `check-name expected-value provenance` per line.
    pub fn manifest_file(&self) -> String {
        self.manifest
            .iter()
            .map(|e| format!("{} {} {}\n", e.check, e.expected, e.provenance))
            .collect()
    }

    /// Writes every payload file and the manifest into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            std::fs::write(dir.join(name), content)?;
        }
        std::fs::write(dir.join("manifest"), self.manifest_file())
    }
}

impl fmt::Display for ExampleBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bundle {}", self.name)?;
        for e in &self.manifest {
            let verdict = if e.passed() { "PASS" } else { "FAIL" };
            write!(f, "{verdict} {} expected={} ({})", e.check, e.expected, e.provenance)?;
            if !e.passed() {
                write!(f, " actual={}", e.actual)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn pass(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

// ---------------------------------------------------------------------------
// Semilattices

pub fn semilattice_signature() -> Signature {
    Signature::new("semilattice").with("and", 2)
}

pub fn semilattice_calculus() -> HilbertCalculus {
    HilbertCalculus::parse(SEMILATTICE_CALCULUS, semilattice_signature()).expect("shipped calculus parses")
}

pub fn semilattice_extension() -> HilbertCalculus {
    HilbertCalculus::parse(SEMILATTICE_EXTENSION, semilattice_signature()).expect("shipped calculus parses")
}

/// ℤ₃ with `and` read as addition.
pub fn z3_algebra() -> FiniteAlgebra {
    FiniteAlgebra::from_fn(semilattice_signature(), 3, |_, a| (a[0] + a[1]) % 3).unwrap()
}

pub fn semilattice_suite() -> Result<ExampleBundle> {
    let mut b = ExampleBundle::new("semilattice");
    let s = semilattice_calculus();
    let ext = semilattice_extension();
    let z3 = z3_algebra();
    let m = LogicalMatrix::new(z3.clone(), &[1, 2])?;
    b.file("S.calc", s.to_file_string());
    b.file("S_ext.calc", ext.to_file_string());
    b.file("z3.alg", z3.to_file_string());
    b.file("z3_12.matrix", m.to_file_string());

    let model = is_model(&s, &m)?;
    b.expect("model-check(S,Z3,{1,2})", "PASS", pass(model.holds()), Provenance::Claim);
    let omega = leibniz_congruence(&m);
    b.expect("leibniz(Z3,{1,2})", "identity", if omega.is_identity() { "identity".to_string() } else { omega.to_string() }, Provenance::Claim);
    let x = Term::var("x");
    let idem = Equation::new(x.clone(), Term::binary("and", x.clone(), x));
    b.expect("Z3-validates(x=x&x)", "false", z3.validates_equation(&idem)?, Provenance::Computed);
    b.expect("in-alg(S,Z3)", "true", in_alg_l(&s, &z3)?, Provenance::Claim);
    let both = {
        let mut c = s.clone();
        for r in ext.rules() {
            c.push(r.clone())?;
        }
        c
    };
    b.expect("model-check(S+U,Z3,{1,2})", "FAIL", pass(is_model(&both, &m)?.holds()), Provenance::Computed);
    Ok(b)
}

// ---------------------------------------------------------------------------
// Magmas

pub fn magma_signature() -> Signature {
    Signature::new("magma").with("*", 2)
}

fn magma_case(n: usize, a: usize, b: usize) -> Option<usize> {
    if b == 0 {
        Some(if a != n { a } else { 0 })
    } else if a >= 3 && b == a - 1 {
        Some(a)
    } else if a >= 3 && b == a - 2 {
        Some(a - 1)
    } else {
        None
    }
}

/// The magma on `{0,…,n}` with `1·2 = 2`, `2·1 = 1` and the symmetric case table.
pub fn magma_algebra(n: usize) -> Result<FiniteAlgebra> {
    if n < 2 {
        return Err(Error::invalid(format!("magma size parameter must be at least 2, got {n}")));
    }
    FiniteAlgebra::from_fn(magma_signature(), n + 1, |_, args| {
        let (a, b) = (args[0], args[1]);
        match (a, b) {
            (1, 2) => 2,
            (2, 1) => 1,
            _ => magma_case(n, a, b).or_else(|| magma_case(n, b, a)).unwrap_or(1),
        }
    })
}

/// The unary polynomial `(…((1·2)·…·x)·…·n)·0` with `x` in position `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatingPolynomial {
    pub n: usize,
    pub a: usize,
    pub b: usize,
    pub p_a: usize,
    pub p_b: usize,
}

impl SeparatingPolynomial {
    /// Factors left to right; `None` marks `x`.
    pub fn factors(&self) -> Vec<Option<usize>> {
        (1..=self.n)
            .map(|i| (i != self.b).then_some(i))
            .chain(std::iter::once(Some(0)))
            .collect()
    }

    /// The polynomial as a term over parameters `c0 … cn` and `x`, with the
    /// assignment sending `ck` to `k` and `x` to `at`.
    pub fn as_term(&self, at: usize) -> (Term, Assignment) {
        let mut env = Assignment::new();
        let mut acc: Option<Term> = None;
        for fac in self.factors() {
            let leaf = match fac {
                Some(k) => {
                    env.insert(format!("c{k}"), k);
                    Term::var(&format!("c{k}"))
                }
                None => {
                    env.insert("x".to_string(), at);
                    Term::var("x")
                }
            };
            acc = Some(match acc {
                None => leaf,
                Some(l) => Term::binary("*", l, leaf),
            });
        }
        (acc.unwrap(), env)
    }

    /// Whether `p(b) = 0` and `p(a) ≠ 0`.
    pub fn separates(&self) -> bool {
        self.p_b == 0 && self.p_a != 0
    }

    /// `p(a)` as predicted by the example's case analysis.
    pub fn predicted_p_a(&self) -> usize {
        let (n, a, b) = (self.n, self.a, self.b);
        if b < 4 {
            if (a, b) == (1, 2) {
                n - 1
            } else {
                1
            }
        } else if a + 2 == b {
            n - 1
        } else {
            1
        }
    }
}

impl fmt::Display for SeparatingPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        for (i, fac) in self.factors().into_iter().enumerate() {
            let name = fac.map_or("x".to_string(), |k| k.to_string());
            s = if i == 0 { name } else { format!("({s}*{name})") };
        }
        write!(f, "p(x) = {s}; p({}) = {}; p({}) = {}", self.a, self.p_a, self.b, self.p_b)
    }
}

pub fn magma_separating_polynomial(n: usize, a: usize, b: usize) -> Result<SeparatingPolynomial> {
    if !(0 < a && a < b && b <= n) {
        return Err(Error::invalid(format!("need 0 < a < b <= n, got a={a} b={b} n={n}")));
    }
    let alg = magma_algebra(n)?;
    let mut sp = SeparatingPolynomial { n, a, b, p_a: 0, p_b: 0 };
    let eval = |x: usize| -> Result<usize> {
        let mut acc: Option<usize> = None;
        for fac in sp.factors() {
            let v = fac.unwrap_or(x);
            acc = Some(match acc {
                None => v,
                Some(l) => alg.op("*", &[l, v])?,
            });
        }
        Ok(acc.unwrap())
    };
    let (p_a, p_b) = (eval(a)?, eval(b)?);
    sp.p_a = p_a;
    sp.p_b = p_b;
    Ok(sp)
}

/// Commutativity instances: for every binary tree shape with `k ≤ n` leaves
/// over distinct variables and every inner node, the rule swapping that node.
pub fn cm_rules(n: usize) -> Result<HilbertCalculus> {
    if n < 2 {
        return Err(Error::invalid("the rule suite needs n >= 2"));
    }
    if n > CM_SUITE_LIMIT {
        return Err(Error::Guard {
            size: n,
            limit: CM_SUITE_LIMIT,
        });
    }
    let mut c = HilbertCalculus::new(magma_signature());
    for k in 2..=n {
        for (si, shape) in shapes(k).into_iter().enumerate() {
            let mut paths = Vec::new();
            inner_paths(&shape, &mut Vec::new(), &mut paths);
            for (pi, path) in paths.iter().enumerate() {
                let node = shape.subterm(path).unwrap();
                let swapped = Term::binary("*", node.args()[1].clone(), node.args()[0].clone());
                let other = shape.replace_at(path, swapped).unwrap();
                c.push_scheme(&format!("C{k}.{}.{}", si + 1, pi + 1), vec![shape.clone()], vec![other])?;
            }
        }
    }
    Ok(c)
}

/// All binary trees with `k` leaves, leaves named `x1 … xk` left to right.
fn shapes(k: usize) -> Vec<Term> {
    fn go(lo: usize, hi: usize) -> Vec<Term> {
        if lo == hi {
            return vec![Term::var(&format!("x{lo}"))];
        }
        let mut out = Vec::new();
        for mid in lo..hi {
            for l in go(lo, mid) {
                for r in go(mid + 1, hi) {
                    out.push(Term::binary("*", l.clone(), r));
                }
            }
        }
        out
    }
    go(1, k)
}

fn inner_paths(t: &Term, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if t.is_var() {
        return;
    }
    out.push(cur.clone());
    for i in 0..2 {
        cur.push(i);
        inner_paths(&t.args()[i], cur, out);
        cur.pop();
    }
}

pub fn cm_rule_suite(n: usize) -> Result<ExampleBundle> {
    let mut b = ExampleBundle::new(&format!("magma-{n}"));
    let alg = magma_algebra(n)?;
    let m = LogicalMatrix::new(alg.clone(), &[0])?;
    let rules = cm_rules(n)?;
    b.file("magma.alg", alg.to_file_string());
    b.file("magma_0.matrix", m.to_file_string());
    b.file("cm.calc", rules.to_file_string());

    b.expect("1*2", 2, alg.op("*", &[1, 2])?, Provenance::Claim);
    b.expect("2*1", 1, alg.op("*", &[2, 1])?, Provenance::Claim);
    let (x, y) = (Term::var("x"), Term::var("y"));
    let comm = Equation::new(Term::binary("*", x.clone(), y.clone()), Term::binary("*", y.clone(), x.clone()));
    b.expect("validates(x*y=y*x)", "false", alg.validates_equation(&comm)?, Provenance::Claim);
    b.expect(
        "cm-entails(x*y|-y*x)",
        "true",
        lv_entails(|e| Ok(cm_valid(e)), std::slice::from_ref(&comm.lhs), &comm.rhs)?,
        Provenance::Immediate,
    );
    b.expect("model-check(CM-suite,{0})", "PASS", pass(is_model(&rules, &m)?.holds()), Provenance::Claim);
    b.expect("cm-suite-rules", rules.rules().len(), rules.rules().len(), Provenance::Computed);
    let omega = leibniz_congruence(&m);
    b.expect("leibniz(Magma,{0})", "identity", if omega.is_identity() { "identity".to_string() } else { omega.to_string() }, Provenance::Claim);

    let polys = unary_polynomials(&alg)?;
    let mut separated = 0;
    let mut pairs = 0;
    for a in 0..=n {
        for c in a + 1..=n {
            pairs += 1;
            if polys.functions.iter().any(|p| (p[a] == 0) != (p[c] == 0)) {
                separated += 1;
            }
        }
    }
    b.expect("pairs-separated", pairs, separated, Provenance::Claim);
    for a in 1..=n {
        for c in a + 1..=n {
            let sp = magma_separating_polynomial(n, a, c)?;
            b.expect(format!("p[{a},{c}]({c})"), 0, sp.p_b, Provenance::Claim);
            b.expect(format!("p[{a},{c}]({a})!=0"), "true", sp.p_a != 0, Provenance::Claim);
            if c < 4 || a + 2 == c {
                b.expect(format!("p[{a},{c}]({a})"), sp.predicted_p_a(), sp.p_a, Provenance::Claim);
            } else {
                let (term, env) = sp.as_term(a);
                b.expect(format!("p[{a},{c}]({a})"), alg.evaluate(&term, &env)?, sp.p_a, Provenance::Computed);
            }
        }
    }
    Ok(b)
}

// ---------------------------------------------------------------------------
// Selfextensionality chains for CR

/// One encoded chain of the selfextensionality argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppendixChain {
    /// Which display the chain belongs to.
    pub display: &'static str,
    pub name: String,
    /// Steps at the level of derived rules.
    pub script: Script,
    /// The same chain over the primitive rules.
    pub chain: ChainProof,
}

/// Display names, in order.
pub const APPENDIX_DISPLAYS: [&str; 12] = [
    "derived-rules",
    "neg-generic",
    "neg-N",
    "neg-O",
    "Y-add",
    "Y-mul",
    "add-generic",
    "mul-generic",
    "add-N",
    "mul-N",
    "add-O",
    "mul-O",
];

/// Rules of CR of the shape `w + (u·ε) ⫤⊢ w + (u·δ)`.
const GUARDED: [&str; 11] = ["A", "B", "C", "D", "E", "F", "G", "H", "I", "L", "M"];

fn root_step(rule: &str, start: &Term) -> Result<Script> {
    let ch = chain_step(cr_calculus(), start, rule, Direction::Lr, &Substitution::new())?;
    Script::from_chain(&ch)
}

fn lifted(display: &'static str, name: String, rule: &str, start: &Term, ctx: &Context) -> Result<AppendixChain> {
    let script = root_step(rule, start)?.lift(ctx)?;
    let chain = script.expand()?;
    Ok(AppendixChain {
        display,
        name,
        script,
        chain,
    })
}

fn premise_of(rule: &str) -> Term {
    cr_calculus().directed(rule, Direction::Lr).unwrap().premises[0].clone()
}

pub fn appendix_chains() -> Result<Vec<AppendixChain>> {
    let sig = Signature::ring();
    let t = |s: &str| crate::terms::parse_term(s, &sig);
    let chi = Term::var("chi");
    let mut out = Vec::new();
    for name in ["B'", "D'", "E'", "H'", "I'", "L'", "M'"] {
        let m = &cr_macros()[name];
        let mut script = Script::new(m.lhs().clone());
        script.step(name, Direction::Lr, &Substitution::new())?;
        out.push(AppendixChain {
            display: "derived-rules",
            name: name.to_string(),
            chain: m.template.clone(),
            script,
        });
    }
    for x in GUARDED {
        out.push(lifted("neg-generic", format!("-({x})"), x, &premise_of(x), &Context::Neg)?);
    }
    out.push(lifted("neg-N", "-(N)".into(), "N", &t("(+ 0 x)")?, &Context::Neg)?);
    out.push(lifted("neg-O", "-(O)".into(), "O", &t("(+ x (* 1 y))")?, &Context::Neg)?);
    for (display, op) in [("Y-add", "+"), ("Y-mul", "*")] {
        let psi = |i: usize| t(&format!("(+ 0 x{i})"));
        let start = Term::binary(op, psi(1)?, psi(2)?);
        let mut script = Script::new(start);
        script.step_at(&[1], "N", Direction::Lr, &Substitution::new())?;
        script.step_at(&[0], "N", Direction::Lr, &Substitution::new())?;
        let chain = script.expand()?;
        out.push(AppendixChain {
            display,
            name: format!("Y({op})"),
            script,
            chain,
        });
    }
    for x in GUARDED {
        out.push(lifted("add-generic", format!("chi+({x})"), x, &premise_of(x), &Context::AddLeft(chi.clone()))?);
        out.push(lifted("mul-generic", format!("chi*({x})"), x, &premise_of(x), &Context::MulLeft(chi.clone()))?);
    }
    out.push(lifted("add-N", "chi+(N)".into(), "N", &t("(+ 0 x)")?, &Context::AddLeft(chi.clone()))?);
    out.push(lifted("mul-N", "chi*(N)".into(), "N", &t("(+ 0 x)")?, &Context::MulLeft(chi.clone()))?);
    out.push(lifted("add-O", "chi+(O)".into(), "O", &t("(+ x (* 1 y))")?, &Context::AddLeft(chi.clone()))?);
    out.push(lifted("mul-O", "chi*(O)".into(), "O", &t("(+ x (* 1 y))")?, &Context::MulLeft(chi))?);
    Ok(out)
}

/// Step labels fixed by the displays, for the chains that have them.
pub fn expected_labels(name: &str) -> Option<Vec<&'static str>> {
    Some(match name {
        "-(N)" => vec!["N", "O", "M'", "L'", "E", "F", "L'", "M'", "O", "N"],
        "-(O)" => vec!["I'", "M'", "O", "I'"],
        "chi+(N)" => vec!["E'", "D'", "N", "E'"],
        "chi*(N)" => vec!["N", "E", "F", "N"],
        "chi+(O)" => vec!["D'", "O", "D'"],
        "chi*(O)" => vec!["H'", "B", "C", "H'"],
        _ => {
            let (ctx, x) = name.split_once('(')?;
            let x = x.strip_suffix(')')?;
            let x: &'static str = GUARDED.iter().find(|g| **g == x)?;
            match ctx {
                "-" => vec!["I'", "L'", x, "L'", "I'"],
                "chi+" => vec!["D'", x, "D'"],
                "chi*" => vec!["H'", "O", "A", "O", x, "O", "A", "O", "H'"],
                _ => return None,
            }
        }
    })
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|ch| match ch {
            '(' | ')' => "_".to_string(),
            '\'' => "p".to_string(),
            '*' => "mul".to_string(),
            '+' => "add".to_string(),
            '-' => "neg".to_string(),
            c => c.to_string(),
        })
        .collect()
}

pub fn appendix_scripts() -> Result<ExampleBundle> {
    let mut b = ExampleBundle::new("appendix");
    let chains = appendix_chains()?;
    let mut displays_covered = 0;
    for d in APPENDIX_DISPLAYS {
        if chains.iter().any(|c| c.display == d) {
            displays_covered += 1;
        }
    }
    b.expect("displays-encoded", APPENDIX_DISPLAYS.len(), displays_covered, Provenance::Claim);
    b.expect("chains", chains.len(), chains.len(), Provenance::Computed);
    let calc = cr_calculus();
    for c in &chains {
        let file = format!("{}.chain", file_stem(&c.name));
        b.file(file, c.chain.to_file_string());
        let ok = check_chain(calc, &c.chain)?.is_valid();
        b.expect(format!("check-chain {}", c.name), "PASS", pass(ok), Provenance::Claim);
        let same = normalize(c.chain.start())? == normalize(c.chain.end())?;
        b.expect(format!("normalize-endpoints {}", c.name), "equal", if same { "equal" } else { "different" }, Provenance::Immediate);
        if let Some(labels) = expected_labels(&c.name) {
            b.expect(format!("steps {}", c.name), labels.join(","), c.script.labels().join(","), Provenance::Claim);
        }
    }
    Ok(b)
}

/// Every bundle, by name.
pub fn all_bundles() -> Result<Vec<ExampleBundle>> {
    Ok(vec![
        semilattice_suite()?,
        cm_rule_suite(DEFAULT_MAGMA_N)?,
        appendix_scripts()?,
    ])
}
