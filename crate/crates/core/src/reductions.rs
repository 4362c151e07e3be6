//! The calculi L(p) and L(α,β), algebraizability witnesses, finite
//! countermodels and consistency certificates.

use std::collections::BTreeMap;
use std::fmt;

use crate::cring::{cr_calculus, encode_int, normalize, synth_ground_chain, DiophantineEquation};
use crate::error::{Error, Result};
use crate::finalg::{is_model, leibniz_congruence, Congruence, FiniteAlgebra, LogicalMatrix, ModelReport};
use crate::hilbert::{bounded_prove, ChainProof, Derivation, Direction, HilbertCalculus, ProveOptions, ProveOutcome, Rule};
use crate::terms::{parse_equation, strip_comment, Equation, Signature, Substitution, Term};

pub const IFF: &str = "iff";
pub const BOX: &str = "box";
pub const IMP: &str = "imp";

pub const RELATION_ALGEBRA_BASIS: &str = include_str!("../data/relation_algebra.basis");

fn v(name: &str) -> Term {
    Term::var(name)
}

fn iff(a: Term, b: Term) -> Term {
    Term::binary(IFF, a, b)
}

fn imp(a: Term, b: Term) -> Term {
    Term::binary(IMP, a, b)
}

fn bx(a: Term) -> Term {
    Term::unary(BOX, a)
}

fn subst(pairs: &[(&str, Term)]) -> Substitution {
    Substitution::from_pairs(pairs.iter().map(|(v, t)| (*v, t.clone())))
}

/// The ring signature with the binary connective `iff`.
pub fn lp_signature() -> Signature {
    Signature::ring().with(IFF, 2)
}

// ---------------------------------------------------------------------------
// L(p)

/// The Hilbert calculus L(p). `x` and `y` must not occur in `p`.
pub fn build_lp(p: &DiophantineEquation) -> Result<HilbertCalculus> {
    for fresh in ["x", "y"] {
        if p.vars.iter().any(|z| z == fresh) {
            return Err(Error::invalid(format!(
                "`{fresh}` is reserved and may not occur in the polynomial"
            )));
        }
    }
    let (x, y, z, u) = (v("x"), v("y"), v("z"), v("u"));
    let pz = iff(p.poly.clone(), encode_int(0));
    let mut c = HilbertCalculus::new(lp_signature());
    c.push(Rule::axiom("R", iff(x.clone(), x.clone())))?;
    c.push(Rule::new("S", vec![iff(x.clone(), y.clone())], iff(y.clone(), x.clone())))?;
    c.push(Rule::new(
        "T",
        vec![iff(x.clone(), y.clone()), iff(y.clone(), z.clone())],
        iff(x.clone(), z.clone()),
    ))?;
    c.push(Rule::new(
        "Rep1",
        vec![iff(x.clone(), y.clone())],
        iff(Term::unary("-", x.clone()), Term::unary("-", y.clone())),
    ))?;
    for (name, op) in [("Rep2", "+"), ("Rep3", "*"), ("Rep4", IFF)] {
        c.push(Rule::new(
            name,
            vec![iff(x.clone(), y.clone()), iff(z.clone(), u.clone())],
            iff(
                Term::binary(op, x.clone(), z.clone()),
                Term::binary(op, y.clone(), u.clone()),
            ),
        ))?;
    }
    c.push(Rule::new(
        "MP'",
        vec![pz.clone(), x.clone(), iff(x.clone(), y.clone())],
        y.clone(),
    ))?;
    c.push_scheme(
        "A3'",
        vec![pz.clone(), x.clone()],
        vec![iff(x.clone(), iff(x.clone(), x.clone())), pz.clone()],
    )?;
    c.push(Rule::new("G'", vec![pz, x.clone(), y.clone()], iff(x, y)))?;
    for r in cr_calculus().rules() {
        c.push(Rule::axiom(
            format!("CR.{}", r.name),
            iff(r.premises[0].clone(), r.conclusion.clone()),
        ))?;
    }
    Ok(c)
}

/// `∅ ⊢ s ↔ t` in L(p) from a CR chain between `s` and `t`: one (CR) axiom
/// instance per step, (S) for right-to-left steps, and (T) to compose.
pub fn chain_theorem(lp: &HilbertCalculus, ch: &ChainProof) -> Result<Derivation> {
    let mut d = Derivation::new(Vec::new());
    if ch.is_empty() {
        d.apply(lp, "R", subst(&[("x", ch.start().clone())]), vec![])?;
        return Ok(d);
    }
    let f = ch.formulas();
    let mut acc: Option<usize> = None;
    for (i, st) in ch.steps().iter().enumerate() {
        let mut link = d.apply(lp, &format!("CR.{}/lr", st.rule), st.subst.clone(), vec![])?;
        if st.dir == Direction::Rl {
            link = d.apply(
                lp,
                "S",
                subst(&[("x", f[i + 1].clone()), ("y", f[i].clone())]),
                vec![link],
            )?;
        }
        if d.steps[link].formula != iff(f[i].clone(), f[i + 1].clone()) {
            return Err(Error::invalid(format!("chain step {} does not match its rule", i + 1)));
        }
        acc = Some(match acc {
            None => link,
            Some(prev) => d.apply(
                lp,
                "T",
                subst(&[("x", f[0].clone()), ("y", f[i].clone()), ("z", f[i + 1].clone())]),
                vec![prev, link],
            )?,
        });
    }
    Ok(d)
}

/// Evidence that a calculus is algebraizable through `rho` and `tau`:
/// one derivation per condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraizabilityWitness {
    /// Congruence formulas in `x`, `y`.
    pub rho: Vec<Term>,
    /// Defining equations in `x`.
    pub tau: Vec<Equation>,
    /// Whether the witness also claims regularity, i.e. the condition `G`.
    pub regular: bool,
    /// Keyed by condition name: `R`, `MP`, `Rep(f)`, `A3-fwd`, `A3-bwd`, `G`.
    pub derivations: BTreeMap<String, Derivation>,
}

impl AlgebraizabilityWitness {
    /// Every condition with its premises and goals, for the symbols of `sig`.
    pub fn conditions(&self, sig: &Signature) -> Vec<(String, Vec<Term>, Vec<Term>)> {
        let rho = |a: &Term, b: &Term| -> Vec<Term> {
            let s = subst(&[("x", a.clone()), ("y", b.clone())]);
            self.rho.iter().map(|r| s.apply(r)).collect()
        };
        let (x, y) = (v("x"), v("y"));
        let mut out = vec![
            ("R".to_string(), vec![], rho(&x, &x)),
            ("MP".to_string(), [vec![x.clone()], rho(&x, &y)].concat(), vec![y.clone()]),
        ];
        for (f, n) in sig.ops() {
            let xs: Vec<Term> = (1..=n).map(|i| v(&format!("x{i}"))).collect();
            let ys: Vec<Term> = (1..=n).map(|i| v(&format!("y{i}"))).collect();
            let prem = xs.iter().zip(&ys).flat_map(|(a, b)| rho(a, b)).collect();
            out.push((
                format!("Rep({f})"),
                prem,
                rho(&Term::app(f, xs), &Term::app(f, ys)),
            ));
        }
        let a3: Vec<Term> = self
            .tau
            .iter()
            .flat_map(|e| rho(&e.lhs, &e.rhs))
            .collect();
        out.push(("A3-fwd".to_string(), vec![x.clone()], a3.clone()));
        out.push(("A3-bwd".to_string(), a3, vec![x.clone()]));
        if self.regular {
            out.push(("G".to_string(), vec![x.clone(), y.clone()], rho(&x, &y)));
        }
        out
    }
}

/// Result of checking one witness condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionCheck {
    pub name: String,
    pub premises: Vec<Term>,
    pub goals: Vec<Term>,
    /// Number of derivation steps on success.
    pub outcome: std::result::Result<usize, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessReport {
    pub checks: Vec<ConditionCheck>,
}

impl WitnessReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.outcome.is_ok())
    }

    pub fn failures(&self) -> Vec<&ConditionCheck> {
        self.checks.iter().filter(|c| c.outcome.is_err()).collect()
    }
}

impl fmt::Display for WitnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match &c.outcome {
                Ok(n) => writeln!(f, "{:<10} PASS ({n} steps)", c.name)?,
                Err(e) => writeln!(f, "{:<10} FAIL {e}", c.name)?,
            }
        }
        Ok(())
    }
}

/// Replays every condition derivation of `w` against `c`.
pub fn check_algebraizability_witness(c: &HilbertCalculus, w: &AlgebraizabilityWitness) -> WitnessReport {
    let checks = w
        .conditions(&c.signature)
        .into_iter()
        .map(|(name, premises, goals)| {
            let outcome = match w.derivations.get(&name) {
                None => Err("missing derivation".to_string()),
                Some(d) => d.establishes(c, &premises, &goals).map(|()| d.steps.len()),
            };
            ConditionCheck {
                name,
                premises,
                goals,
                outcome,
            }
        })
        .collect();
    WitnessReport { checks }
}

/// Witness for L(p) with ρ = {x ↔ y} and τ = {x ≈ x ↔ x}, built from an
/// integer solution of `p ≈ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpWitness {
    pub calculus: HilbertCalculus,
    pub witness: AlgebraizabilityWitness,
    /// Derivation of `∅ ⊢ p(α⃗) ↔ 0`.
    pub theorem: Derivation,
    /// The CR chain from `p(α⃗)` to `0` behind the theorem.
    pub chain: ChainProof,
}

pub fn make_algebraizability_witness(p: &DiophantineEquation, solution: &[i64]) -> Result<LpWitness> {
    let ground = p.instantiate(solution)?;
    let nf = normalize(&ground)?;
    if !nf.is_zero() {
        return Err(Error::NotASolution(nf.to_string()));
    }
    let lp = build_lp(p)?;
    let chain = synth_ground_chain(&ground, &encode_int(0))?;
    let theorem = chain_theorem(&lp, &chain)?;
    let thm_formula = iff(ground, encode_int(0));
    if theorem.conclusion() != Some(&thm_formula) {
        return Err(Error::invalid("theorem derivation ends at the wrong formula"));
    }
    let alphas = subst(
        &p.vars
            .iter()
            .map(|z| z.as_str())
            .zip(solution.iter().map(|&k| encode_int(k)))
            .collect::<Vec<_>>(),
    );
    let (x, y) = (v("x"), v("y"));
    let with_theorem = |premises: &[Term]| {
        let mut d = Derivation::new(Vec::new());
        let idx: Vec<usize> = premises.iter().map(|t| d.premise(t.clone())).collect();
        let off = d.splice(&theorem);
        let thm = off + theorem.steps.len() - 1;
        (d, idx, thm)
    };
    let mut ders = BTreeMap::new();

    let mut r = Derivation::new(Vec::new());
    r.apply(&lp, "R", Substitution::new(), vec![])?;
    ders.insert("R".to_string(), r);

    let (mut mp, idx, thm) = with_theorem(&[x.clone(), iff(x.clone(), y.clone())]);
    mp.apply(&lp, "MP'", alphas.clone(), vec![thm, idx[0], idx[1]])?;
    ders.insert("MP".to_string(), mp);

    for (f, n) in lp.signature.ops() {
        let mut d = Derivation::new(Vec::new());
        let xs: Vec<Term> = (1..=n).map(|i| v(&format!("x{i}"))).collect();
        let ys: Vec<Term> = (1..=n).map(|i| v(&format!("y{i}"))).collect();
        let prem: Vec<usize> = xs
            .iter()
            .zip(&ys)
            .map(|(a, b)| d.premise(iff(a.clone(), b.clone())))
            .collect();
        match (f, n) {
            (_, 0) => {
                d.apply(&lp, "R", subst(&[("x", Term::constant(f))]), vec![])?;
            }
            ("-", 1) => {
                d.apply(&lp, "Rep1", subst(&[("x", xs[0].clone()), ("y", ys[0].clone())]), prem)?;
            }
            (_, 2) => {
                let rule = match f {
                    "+" => "Rep2",
                    "*" => "Rep3",
                    _ => "Rep4",
                };
                let s = subst(&[
                    ("x", xs[0].clone()),
                    ("y", ys[0].clone()),
                    ("z", xs[1].clone()),
                    ("u", ys[1].clone()),
                ]);
                d.apply(&lp, rule, s, prem)?;
            }
            _ => return Err(Error::invalid(format!("no replacement rule for `{f}`"))),
        }
        ders.insert(format!("Rep({f})"), d);
    }

    let (mut fwd, idx, thm) = with_theorem(std::slice::from_ref(&x));
    fwd.apply(&lp, "A3'/lr1", alphas.clone(), vec![thm, idx[0]])?;
    ders.insert("A3-fwd".to_string(), fwd);

    let (mut bwd, idx, thm) = with_theorem(&[iff(x.clone(), iff(x.clone(), x.clone()))]);
    bwd.apply(&lp, "A3'/rl2", alphas.clone(), vec![idx[0], thm])?;
    ders.insert("A3-bwd".to_string(), bwd);

    let (mut g, idx, thm) = with_theorem(&[x.clone(), y.clone()]);
    g.apply(&lp, "G'", alphas, vec![thm, idx[0], idx[1]])?;
    ders.insert("G".to_string(), g);

    Ok(LpWitness {
        calculus: lp,
        witness: AlgebraizabilityWitness {
            rho: vec![iff(x.clone(), y)],
            tau: vec![Equation::new(x.clone(), iff(x.clone(), x))],
            regular: true,
            derivations: ders,
        },
        theorem,
        chain,
    })
}

/// `ℤ/mℤ` with `a ↔ b = s` when `a = b` and `m_val` otherwise.
pub fn lp_algebra(modulus: usize, s: usize, m_val: usize) -> Result<FiniteAlgebra> {
    if modulus < 2 {
        return Err(Error::invalid("modulus must be at least 2"));
    }
    FiniteAlgebra::from_fn(lp_signature(), modulus, |f, a| match f {
        "+" => (a[0] + a[1]) % modulus,
        "*" => (a[0] * a[1]) % modulus,
        "-" => (modulus - a[0]) % modulus,
        "0" => 0,
        "1" => 1 % modulus,
        _ => {
            if a[0] == a[1] {
                s
            } else {
                m_val
            }
        }
    })
}

/// Two reduced models of L(p) on one algebra with different filters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountermodelReport {
    pub modulus: usize,
    pub s: usize,
    pub m_val: usize,
    pub k: usize,
    /// `⟨A,{s}⟩` and `⟨A,{s,k}⟩`.
    pub matrices: [LogicalMatrix; 2],
    pub models: [ModelReport; 2],
    pub leibniz: [Congruence; 2],
    /// For all `a ≠ b`: `a ↔ a = s` lies in both filters, `a ↔ b = m_val` in neither.
    pub separation: bool,
}

impl CountermodelReport {
    pub fn passed(&self) -> bool {
        self.models.iter().all(ModelReport::holds)
            && self.leibniz.iter().all(Congruence::is_identity)
            && self.matrices[0].filter() != self.matrices[1].filter()
            && self.separation
    }
}

impl fmt::Display for CountermodelReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "algebra: Z/{}Z with iff(a,b) = {} if a = b else {}", self.modulus, self.s, self.m_val)?;
        for i in 0..2 {
            let m = &self.models[i];
            writeln!(
                f,
                "matrix {:?}: model {} ({} assignments), leibniz {}",
                self.matrices[i].filter(),
                if m.holds() { "yes" } else { "NO" },
                m.assignments_checked,
                self.leibniz[i],
            )?;
            if let Some((rule, asg)) = &m.failure {
                writeln!(f, "  fails rule {rule} at {asg:?}")?;
            }
        }
        writeln!(f, "separation by iff(a, z): {}", if self.separation { "yes" } else { "NO" })?;
        writeln!(
            f,
            "scope: truth is not implicitly definable over this finite fragment of the reduced models"
        )
    }
}

pub fn build_countermodel(
    p: &DiophantineEquation,
    modulus: usize,
    s: usize,
    m_val: usize,
    k: usize,
) -> Result<CountermodelReport> {
    if modulus < 3 {
        return Err(Error::invalid("modulus must be at least 3"));
    }
    if [s, m_val, k].iter().any(|&e| e >= modulus) || s == m_val || s == k || m_val == k {
        return Err(Error::invalid(format!(
            "s, m and k must be distinct elements below {modulus}"
        )));
    }
    if let Some(root) = p.root_mod(modulus as u64)? {
        return Err(Error::HasRoot {
            modulus: modulus as u64,
            root,
        });
    }
    let lp = build_lp(p)?;
    let a = lp_algebra(modulus, s, m_val)?;
    let m1 = LogicalMatrix::new(a.clone(), &[s])?;
    let m2 = LogicalMatrix::new(a.clone(), &[s, k])?;
    let models = [is_model(&lp, &m1)?, is_model(&lp, &m2)?];
    let leibniz = [leibniz_congruence(&m1), leibniz_congruence(&m2)];
    let mut separation = true;
    for x in 0..modulus {
        for y in 0..modulus {
            let q = a.op(IFF, &[x, y])?;
            let ok = if x == y {
                m1.contains(q) && m2.contains(q)
            } else {
                !m1.contains(q) && !m2.contains(q)
            };
            separation &= ok;
        }
    }
    Ok(CountermodelReport {
        modulus,
        s,
        m_val,
        k,
        matrices: [m1, m2],
        models,
        leibniz,
        separation,
    })
}

// ---------------------------------------------------------------------------
// L(α,β)

/// Reads a basis file: `op name arity` lines declare the signature and
/// `eq lhs = rhs` lines give the equations.
pub fn parse_basis(name: &str, text: &str) -> Result<(Signature, Vec<Equation>)> {
    let mut sig = Signature::new(name);
    let mut eqs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let ctx = |e: Error| Error::invalid(format!("basis line {}: {e}", lineno + 1));
        if let Some(rest) = line.strip_prefix("op ") {
            let mut parts = rest.split_whitespace();
            let (Some(sym), Some(ar), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(ctx(Error::invalid("expected `op symbol arity`")));
            };
            let ar = ar
                .parse()
                .map_err(|_| ctx(Error::invalid(format!("bad arity `{ar}`"))))?;
            sig.add(sym, ar).map_err(ctx)?;
        } else if let Some(rest) = line.strip_prefix("eq ") {
            eqs.push(parse_equation(rest, &sig).map_err(ctx)?);
        } else {
            return Err(ctx(Error::invalid("expected `op` or `eq`")));
        }
    }
    Ok((sig, eqs))
}

/// The shipped relation-algebra signature and basis.
pub fn relation_algebra_basis() -> (Signature, Vec<Equation>) {
    parse_basis("relation_algebra", RELATION_ALGEBRA_BASIS).expect("shipped basis parses")
}

/// `sig` extended with `box` and `imp`.
pub fn lab_signature(sig: &Signature) -> Result<Signature> {
    sig.merged(&Signature::new("modal").with(BOX, 1).with(IMP, 2))
}

/// `φ₃` for an `n`-ary symbol `f`.
fn phi3(f: &str, n: usize) -> Term {
    let xs: Vec<Term> = (1..=n).map(|i| v(&format!("x{i}"))).collect();
    let ys: Vec<Term> = (1..=n).map(|i| v(&format!("y{i}"))).collect();
    let mut t = imp(Term::app(f, xs.clone()), Term::app(f, ys.clone()));
    for (a, b) in xs.into_iter().zip(ys).rev() {
        t = imp(imp(b.clone(), a.clone()), t);
        t = imp(imp(a, b), t);
    }
    t
}

/// The formulas `φ₁ … φ₆` with their names; `φ₃` once per symbol of `full`.
pub fn phi_formulas(full: &Signature) -> Vec<(String, Term)> {
    let (x, y, z) = (v("x"), v("y"), v("z"));
    let mut out = vec![
        ("phi1".to_string(), imp(x.clone(), imp(y.clone(), x.clone()))),
        (
            "phi2".to_string(),
            imp(
                imp(x.clone(), imp(y.clone(), z.clone())),
                imp(imp(x.clone(), y.clone()), imp(x.clone(), z.clone())),
            ),
        ),
    ];
    for (f, n) in full.ops() {
        out.push((format!("phi3.{f}"), phi3(f, n)));
    }
    out.push(("phi4".to_string(), imp(x.clone(), imp(x.clone(), bx(x.clone())))));
    out.push(("phi5".to_string(), imp(x.clone(), imp(bx(x.clone()), x.clone()))));
    out.push((
        "phi6".to_string(),
        imp(imp(bx(x.clone()), x.clone()), imp(imp(x.clone(), bx(x.clone())), x)),
    ));
    out
}

fn check_one_variable(t: &Term, what: &str) -> Result<()> {
    match t.vars().into_iter().find(|z| z != "x") {
        Some(z) => Err(Error::invalid(format!("{what} must be a term in x alone, found `{z}`"))),
        None => Ok(()),
    }
}

/// Rules `Rep.f` for every symbol of `full`.
fn push_rep_rules(c: &mut HilbertCalculus, full: &Signature) -> Result<()> {
    for (f, n) in full.ops() {
        let mut prem = Vec::new();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 1..=n {
            let (a, b) = (v(&format!("x{i}")), v(&format!("y{i}")));
            prem.push(imp(a.clone(), b.clone()));
            prem.push(imp(b.clone(), a.clone()));
            xs.push(a);
            ys.push(b);
        }
        c.push(Rule::new(format!("Rep.{f}"), prem, imp(Term::app(f, xs), Term::app(f, ys))))?;
    }
    Ok(())
}

fn push_v_axioms(c: &mut HilbertCalculus, basis: &[Equation]) -> Result<()> {
    for (i, e) in basis.iter().enumerate() {
        c.push(Rule::axiom(format!("V{}/lr", i + 1), imp(e.lhs.clone(), e.rhs.clone())))?;
        c.push(Rule::axiom(format!("V{}/rl", i + 1), imp(e.rhs.clone(), e.lhs.clone())))?;
    }
    Ok(())
}

/// The Hilbert calculus L(α,β) over `sig` extended with `box` and `imp`.
pub fn build_lab(alpha: &Term, beta: &Term, basis: &[Equation], sig: &Signature) -> Result<HilbertCalculus> {
    check_one_variable(alpha, "alpha")?;
    check_one_variable(beta, "beta")?;
    let full = lab_signature(sig)?;
    full.check(alpha)?;
    full.check(beta)?;
    let (x, y) = (v("x"), v("y"));
    let mut c = HilbertCalculus::new(full.clone());
    c.push(Rule::axiom("R", imp(x.clone(), x.clone())))?;
    c.push(Rule::new("MP", vec![x.clone(), imp(x.clone(), y.clone())], y))?;
    push_rep_rules(&mut c, &full)?;
    c.push_scheme(
        "A3",
        vec![x.clone()],
        vec![imp(bx(x.clone()), x.clone()), imp(x.clone(), bx(x))],
    )?;
    push_v_axioms(&mut c, basis)?;
    for (name, phi) in phi_formulas(&full) {
        let s = subst(&[("x", phi.clone())]);
        c.push(Rule::new(format!("W.{name}"), vec![imp(s.apply(alpha), s.apply(beta))], phi))?;
    }
    Ok(c)
}

/// The witness ρ = {x → y, y → x}, τ = {x ≈ □x}, read directly off the
/// rules of an L(α,β) calculus.
pub fn lab_witness(c: &HilbertCalculus) -> Result<AlgebraizabilityWitness> {
    let (x, y) = (v("x"), v("y"));
    let mut ders = BTreeMap::new();
    let mut r = Derivation::new(Vec::new());
    r.apply(c, "R", Substitution::new(), vec![])?;
    ders.insert("R".to_string(), r);

    let mut mp = Derivation::new(Vec::new());
    let p0 = mp.premise(x.clone());
    let p1 = mp.premise(imp(x.clone(), y.clone()));
    mp.premise(imp(y.clone(), x.clone()));
    mp.apply(c, "MP", Substitution::new(), vec![p0, p1])?;
    ders.insert("MP".to_string(), mp);

    for (f, n) in c.signature.ops() {
        let mut d = Derivation::new(Vec::new());
        let refs: Vec<usize> = (1..=n)
            .flat_map(|i| {
                let (a, b) = (v(&format!("x{i}")), v(&format!("y{i}")));
                [imp(a.clone(), b.clone()), imp(b, a)]
            })
            .map(|t| d.premise(t))
            .collect();
        let rule = format!("Rep.{f}");
        d.apply(c, &rule, Substitution::new(), refs.clone())?;
        let swap = subst(
            &(1..=n)
                .flat_map(|i| {
                    let (a, b) = (format!("x{i}"), format!("y{i}"));
                    [(a.clone(), v(&b)), (b, v(&a))]
                })
                .collect::<Vec<_>>()
                .iter()
                .map(|(k, t)| (k.as_str(), t.clone()))
                .collect::<Vec<_>>(),
        );
        let swapped: Vec<usize> = refs.chunks(2).flat_map(|p| [p[1], p[0]]).collect();
        d.apply(c, &rule, swap, swapped)?;
        ders.insert(format!("Rep({f})"), d);
    }

    let mut fwd = Derivation::new(Vec::new());
    let px = fwd.premise(x.clone());
    fwd.apply(c, "A3/lr1", Substitution::new(), vec![px])?;
    fwd.apply(c, "A3/lr2", Substitution::new(), vec![px])?;
    ders.insert("A3-fwd".to_string(), fwd);

    let mut bwd = Derivation::new(Vec::new());
    let a = bwd.premise(imp(x.clone(), bx(x.clone())));
    let b = bwd.premise(imp(bx(x.clone()), x.clone()));
    let rl = c.rule("A3/rl").ok_or_else(|| Error::UnknownRule("A3/rl".into()))?;
    let refs = rl
        .premises
        .iter()
        .map(|p| if p == &bwd.steps[a].formula { a } else { b })
        .collect();
    bwd.apply(c, "A3/rl", Substitution::new(), refs)?;
    ders.insert("A3-bwd".to_string(), bwd);

    Ok(AlgebraizabilityWitness {
        rho: vec![imp(x.clone(), y.clone()), imp(y, x.clone())],
        tau: vec![Equation::new(x.clone(), bx(x))],
        regular: false,
        derivations: ders,
    })
}

/// One rewrite with basis equation `index` (1-based) in direction `dir`, at
/// `path` inside α, turning α into β.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhiEvidence {
    /// α and β are the same term.
    Identity,
    OneStep {
        index: usize,
        dir: Direction,
        subst: Substitution,
        path: Vec<usize>,
    },
}

/// Searches for single-rewrite evidence that `alpha ≈ beta` follows from `basis`.
pub fn find_one_step_evidence(basis: &[Equation], alpha: &Term, beta: &Term) -> Option<PhiEvidence> {
    if alpha == beta {
        return Some(PhiEvidence::Identity);
    }
    let mut paths = Vec::new();
    collect_paths(alpha, &mut Vec::new(), &mut paths);
    for path in paths {
        let sub = alpha.subterm(&path)?;
        for (i, e) in basis.iter().enumerate() {
            for dir in [Direction::Lr, Direction::Rl] {
                let (from, to) = match dir {
                    Direction::Lr => (&e.lhs, &e.rhs),
                    Direction::Rl => (&e.rhs, &e.lhs),
                };
                let Some(s) = crate::terms::match_term(from, sub) else {
                    continue;
                };
                if to.vars().iter().any(|z| !s.contains(z)) {
                    continue;
                }
                if alpha.replace_at(&path, s.apply(to)).as_ref() == Some(beta) {
                    return Some(PhiEvidence::OneStep {
                        index: i + 1,
                        dir,
                        subst: s,
                        path,
                    });
                }
            }
        }
    }
    None
}

fn collect_paths(t: &Term, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    out.push(cur.clone());
    for (i, a) in t.args().iter().enumerate() {
        cur.push(i);
        collect_paths(a, cur, out);
        cur.pop();
    }
}

/// Derivations of every `φᵢ` in `c`, each ending in its (W) rule. The
/// evidence shows `α(x) → β(x)` in one basis rewrite, and is instantiated
/// with `x := φᵢ` for each premise `α(φᵢ) → β(φᵢ)`.
pub fn derive_phi_theorems(c: &HilbertCalculus, alpha: &Term, beta: &Term, evidence: &PhiEvidence) -> Result<Vec<Derivation>> {
    let w_rules: Vec<&Rule> = c.rules().iter().filter(|r| r.name.starts_with("W.")).collect();
    if w_rules.is_empty() {
        return Err(Error::invalid("calculus has no (W) rules"));
    }
    let mut out = Vec::new();
    for w in w_rules {
        let phi = &w.conclusion;
        let inst = subst(&[("x", phi.clone())]);
        let (a, b) = (inst.apply(alpha), inst.apply(beta));
        if w.premises != [imp(a.clone(), b.clone())] {
            return Err(Error::invalid(format!(
                "rule `{}` is not the (W) rule for this alpha and beta",
                w.name
            )));
        }
        let mut d = Derivation::new(Vec::new());
        let fwd = match evidence {
            PhiEvidence::Identity => {
                if a != b {
                    return Err(Error::invalid("alpha and beta differ; identity evidence does not apply"));
                }
                d.apply(c, "R", subst(&[("x", a.clone())]), vec![])?
            }
            PhiEvidence::OneStep { index, dir, subst: s, path } => {
                one_step_implication(c, &mut d, &a, &b, *index, *dir, &s.then(&inst), path)?
            }
        };
        d.apply(c, &w.name, Substitution::new(), vec![fwd])?;
        out.push(d);
    }
    Ok(out)
}

fn one_step_implication(
    c: &HilbertCalculus,
    d: &mut Derivation,
    a: &Term,
    b: &Term,
    index: usize,
    dir: Direction,
    s: &Substitution,
    path: &[usize],
) -> Result<usize> {
    let insufficient = || Error::invalid("evidence is not a single basis rewrite from alpha to beta");
    let (fwd_rule, bwd_rule) = match dir {
        Direction::Lr => (format!("V{index}/lr"), format!("V{index}/rl")),
        Direction::Rl => (format!("V{index}/rl"), format!("V{index}/lr")),
    };
    let mut fwd = d.apply(c, &fwd_rule, s.clone(), vec![])?;
    let mut bwd = d.apply(c, &bwd_rule, s.clone(), vec![])?;
    let hole_a = a.subterm(path).ok_or_else(insufficient)?;
    let hole_b = b.subterm(path).ok_or_else(insufficient)?;
    if d.steps[fwd].formula != imp(hole_a.clone(), hole_b.clone()) {
        return Err(insufficient());
    }
    for k in (0..path.len()).rev() {
        let (Term::App(f, xs), Term::App(_, ys)) =
            (a.subterm(&path[..k]).unwrap(), b.subterm(&path[..k]).unwrap())
        else {
            return Err(insufficient());
        };
        let mut refs = Vec::new();
        let mut there = Substitution::new();
        let mut back = Substitution::new();
        for (j, (xj, yj)) in xs.iter().zip(ys).enumerate() {
            if j == path[k] {
                refs.push((fwd, bwd));
            } else {
                if xj != yj {
                    return Err(insufficient());
                }
                let r = match d.find(&imp(xj.clone(), xj.clone())) {
                    Some(r) => r,
                    None => d.apply(c, "R", subst(&[("x", xj.clone())]), vec![])?,
                };
                refs.push((r, r));
            }
            let (xn, yn) = (format!("x{}", j + 1), format!("y{}", j + 1));
            there.insert(xn.clone(), xj.clone());
            there.insert(yn.clone(), yj.clone());
            back.insert(xn, yj.clone());
            back.insert(yn, xj.clone());
        }
        let rule = format!("Rep.{f}");
        let fr: Vec<usize> = refs.iter().flat_map(|(p, q)| [*p, *q]).collect();
        let br: Vec<usize> = refs.iter().flat_map(|(p, q)| [*q, *p]).collect();
        fwd = d.apply(c, &rule, there, fr)?;
        bwd = d.apply(c, &rule, back, br)?;
    }
    if d.steps[fwd].formula != imp(a.clone(), b.clone()) {
        return Err(insufficient());
    }
    Ok(fwd)
}

/// `{0,1}` as a Boolean algebra with `·` as meet, converse as the identity,
/// `one` as top, `→` as Boolean implication and `□` constantly 1.
pub fn frege_algebra(sig: &Signature) -> Result<FiniteAlgebra> {
    let full = lab_signature(sig)?;
    for (f, n) in sig.ops() {
        let known = matches!(
            (f, n),
            ("meet", 2) | ("join", 2) | ("neg", 1) | ("comp", 2) | ("conv", 1) | ("one", 0)
        );
        if !known {
            return Err(Error::ForeignSymbol(f.to_string()));
        }
    }
    FiniteAlgebra::from_fn(full, 2, |f, a| match f {
        "meet" | "comp" => a[0] & a[1],
        "join" => a[0] | a[1],
        "neg" => 1 - a[0],
        "conv" => a[0],
        "one" | BOX => 1,
        _ => (1 - a[0]) | a[1],
    })
}

/// `⟨B,{1}⟩` with one model-check per axiom group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FregeConsistencyModel {
    pub matrix: LogicalMatrix,
    pub checklist: Vec<(String, ModelReport)>,
}

impl FregeConsistencyModel {
    pub fn holds(&self) -> bool {
        self.checklist.iter().all(|(_, r)| r.holds())
    }
}

impl fmt::Display for FregeConsistencyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, r) in &self.checklist {
            match &r.failure {
                None => writeln!(f, "{name:<10} PASS ({} assignments)", r.assignments_checked)?,
                Some((rule, asg)) => writeln!(f, "{name:<10} FAIL rule {rule} at {asg:?}")?,
            }
        }
        Ok(())
    }
}

pub fn build_frege_consistency_model(sig: &Signature, basis: &[Equation]) -> Result<FregeConsistencyModel> {
    let a = frege_algebra(sig)?;
    for e in basis {
        if let Some(asg) = a.equation_counterexample(e)? {
            return Err(Error::invalid(format!(
                "basis equation {} = {} fails in the two-element expansion at {asg:?}",
                e.lhs, e.rhs
            )));
        }
    }
    let matrix = LogicalMatrix::new(a, &[1])?;
    let full = matrix.algebra.signature().clone();
    let phis = phi_formulas(&full);
    let mut checklist = Vec::new();
    for group in ["phi1", "phi2", "phi3", "phi4", "phi5", "phi6"] {
        let mut c = HilbertCalculus::new(full.clone());
        for (name, phi) in &phis {
            if name == group || name.starts_with(&format!("{group}.")) {
                c.push(Rule::axiom(name.clone(), phi.clone()))?;
            }
        }
        checklist.push((group.to_string(), is_model(&c, &matrix)?));
    }
    let mut vc = HilbertCalculus::new(full.clone());
    push_v_axioms(&mut vc, basis)?;
    checklist.push(("V".to_string(), is_model(&vc, &matrix)?));
    let mut mp = HilbertCalculus::new(full);
    mp.push(Rule::new("MP", vec![v("x"), imp(v("x"), v("y"))], v("y")))?;
    checklist.push(("MP".to_string(), is_model(&mp, &matrix)?));
    Ok(FregeConsistencyModel { matrix, checklist })
}

// ---------------------------------------------------------------------------
// Consistency

/// A proper-filter model of a calculus plus a failed bounded search for `∅ ⊢ x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyCertificate {
    pub matrix: LogicalMatrix,
    pub model: ModelReport,
    pub search: ProveOutcome,
}

impl ConsistencyCertificate {
    pub fn passed(&self) -> bool {
        self.model.holds()
            && self.matrix.filter().len() < self.matrix.algebra.size()
            && matches!(self.search, ProveOutcome::NotFound { .. })
    }
}

pub fn consistency_certificate(c: &HilbertCalculus, matrix: LogicalMatrix, opts: ProveOptions) -> Result<ConsistencyCertificate> {
    let model = is_model(c, &matrix)?;
    let search = bounded_prove(c, &[], &v("x"), opts)?;
    Ok(ConsistencyCertificate { matrix, model, search })
}

/// `⟨ℤ/3ℤ, {1}⟩` with `a ↔ b = 1` if equal and `0` otherwise.
pub fn lp_consistency_matrix() -> LogicalMatrix {
    LogicalMatrix::new(lp_algebra(3, 1, 0).unwrap(), &[1]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::check_derivation;
    use crate::terms::parse_term;

    fn lp_term(s: &str) -> Term {
        parse_term(s, &lp_signature()).unwrap()
    }

    fn dio(s: &str) -> DiophantineEquation {
        DiophantineEquation::new(parse_term(s, &Signature::ring()).unwrap()).unwrap()
    }

    #[test]
    fn lp_shape() {
        let p = dio("(+ z (- (+ 1 1)))");
        let c = build_lp(&p).unwrap();
        let mp = c.rule("MP'").unwrap();
        assert_eq!(mp.premises[0], lp_term("(iff (+ z (- (+ 1 1))) 0)"));
        assert_eq!(mp.premises[1..], [lp_term("x"), lp_term("(iff x y)")]);
        assert_eq!(mp.conclusion, lp_term("y"));
        assert_eq!(
            c.rule("CR.A/lr").unwrap().conclusion,
            lp_term("(iff (+ w (* u (* (* x y) z))) (+ w (* u (* x (* y z)))))")
        );
        assert_eq!(c.rules().iter().filter(|r| r.name.starts_with("CR.")).count(), 26);
        assert_eq!(c.rules().iter().filter(|r| r.name.starts_with("A3'")).count(), 4);
        assert!(build_lp(&dio("(+ x 1)")).is_err());
        let back = HilbertCalculus::parse(&c.to_file_string(), lp_signature()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn witness_for_solvable_polynomial() {
        let p = dio("(+ z (- (+ 1 1)))");
        let w = make_algebraizability_witness(&p, &[2]).unwrap();
        assert_eq!(
            w.theorem.conclusion().unwrap(),
            &lp_term("(iff (+ (+ 1 1) (- (+ 1 1))) 0)")
        );
        assert!(check_derivation(&w.calculus, &w.theorem).is_valid());
        let report = check_algebraizability_witness(&w.calculus, &w.witness);
        assert!(report.passed(), "{report}");

        let mut broken = w.witness.clone();
        broken.derivations.remove("G");
        let report = check_algebraizability_witness(&w.calculus, &broken);
        assert_eq!(report.failures().len(), 1);
        assert_eq!(report.failures()[0].name, "G");
    }

    #[test]
    fn trivial_and_failing_solutions() {
        let w = make_algebraizability_witness(&dio("z"), &[0]).unwrap();
        assert_eq!(w.theorem.steps.len(), 1);
        assert_eq!(w.theorem.conclusion().unwrap(), &lp_term("(iff 0 0)"));
        assert!(matches!(
            make_algebraizability_witness(&dio("1"), &[]),
            Err(Error::NotASolution(_))
        ));
    }

    #[test]
    fn countermodel_mod_four() {
        let p = dio("(+ (* (+ 1 1) z) 1)");
        let r = build_countermodel(&p, 4, 1, 0, 2).unwrap();
        assert!(r.passed(), "{r}");
        assert!(matches!(
            build_countermodel(&p, 3, 1, 0, 2),
            Err(Error::HasRoot { modulus: 3, .. })
        ));
    }

    #[test]
    fn lab_shape_and_witness() {
        let (sig, basis) = relation_algebra_basis();
        let x = Term::var("x");
        let c = build_lab(&x, &x, &basis, &sig).unwrap();
        assert_eq!(c.rules().iter().filter(|r| r.name.starts_with('V')).count(), 2 * basis.len());
        let a3: Vec<&Rule> = c.rules().iter().filter(|r| r.name.starts_with("A3/lr")).collect();
        assert_eq!(a3.len(), 2);
        let full = c.signature.clone();
        let w1 = c.rule("W.phi1").unwrap();
        assert_eq!(w1.conclusion, parse_term("(imp x (imp y x))", &full).unwrap());
        let w = lab_witness(&c).unwrap();
        let report = check_algebraizability_witness(&c, &w);
        assert!(report.passed(), "{report}");
        let bad = parse_term("(meet x y)", &sig).unwrap();
        assert!(build_lab(&bad, &x, &basis, &sig).is_err());
    }

    #[test]
    fn phi_theorems() {
        let (sig, basis) = relation_algebra_basis();
        let x = Term::var("x");
        let c = build_lab(&x, &x, &basis, &sig).unwrap();
        for d in derive_phi_theorems(&c, &x, &x, &PhiEvidence::Identity).unwrap() {
            assert!(check_derivation(&c, &d).is_valid());
        }
        let alpha = parse_term("(conv (conv (neg x)))", &sig).unwrap();
        let beta = parse_term("(neg x)", &sig).unwrap();
        let ev = find_one_step_evidence(&basis, &alpha, &beta).unwrap();
        let c = build_lab(&alpha, &beta, &basis, &sig).unwrap();
        let ds = derive_phi_theorems(&c, &alpha, &beta, &ev).unwrap();
        assert_eq!(ds.len(), 5 + c.signature.len());
        for d in &ds {
            assert!(check_derivation(&c, d).is_valid());
        }
        let nested = parse_term("(neg (conv (conv (neg x))))", &sig).unwrap();
        let ev = find_one_step_evidence(&basis, &nested, &parse_term("(neg (neg x))", &sig).unwrap()).unwrap();
        let c2 = build_lab(&nested, &parse_term("(neg (neg x))", &sig).unwrap(), &basis, &sig).unwrap();
        for d in derive_phi_theorems(&c2, &nested, &parse_term("(neg (neg x))", &sig).unwrap(), &ev).unwrap() {
            assert!(check_derivation(&c2, &d).is_valid());
        }
        let two = parse_term("(conv (conv (conv (conv x))))", &sig).unwrap();
        assert!(find_one_step_evidence(&basis, &two, &x).is_none());
    }

    #[test]
    fn frege_model() {
        let (sig, basis) = relation_algebra_basis();
        let m = build_frege_consistency_model(&sig, &basis).unwrap();
        assert!(m.holds(), "{m}");
        assert_eq!(m.checklist.len(), 8);
        let bad = Equation::new(Term::var("x"), parse_term("(neg x)", &sig).unwrap());
        assert!(build_frege_consistency_model(&sig, &[bad]).is_err());
    }
}
