//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the target exits nonzero if any criterion fails or overruns its time budget.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use aalkit::cli::{run, CommandOutcome};
use aalkit::cring::{cr_calculus, cr_valid, encode_int, eval_ring_term, normalize, DiophantineEquation};
use aalkit::finalg::{
    is_model, largest_compatible_congruence_bruteforce, leibniz_congruence, unary_polynomials, FiniteAlgebra,
    LogicalMatrix,
};
use aalkit::gallery::{
    appendix_chains, cm_rules, expected_labels, magma_algebra, magma_separating_polynomial, semilattice_calculus,
    z3_algebra, APPENDIX_DISPLAYS,
};
use aalkit::hilbert::{check_chain, check_derivation, HilbertCalculus, ProveOptions};
use aalkit::reductions::{
    build_countermodel, build_frege_consistency_model, build_lab, build_lp, check_algebraizability_witness,
    consistency_certificate, derive_phi_theorems, find_one_step_evidence, frege_algebra, lab_signature,
    lab_witness, lp_consistency_matrix, make_algebraizability_witness, phi_formulas, relation_algebra_basis,
    PhiEvidence, IFF,
};
use aalkit::sample;
use aalkit::terms::{parse_term, Equation, Signature, Substitution, Term};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn cli(args: &[&str]) -> CommandOutcome {
    run(std::iter::once("aalkit").chain(args.iter().copied()))
}

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn ring(s: &str) -> Term {
    parse_term(s, &Signature::ring()).unwrap()
}

fn semilattice_reduced_model() -> Check {
    let m = ok(LogicalMatrix::new(z3_algebra(), &[1, 2]))?;
    let model = ok(is_model(&semilattice_calculus(), &m))?;
    ensure(model.holds(), format!("not a model: {:?}", model.failure))?;
    let omega = leibniz_congruence(&m);
    ensure(omega.is_identity(), format!("Leibniz congruence {omega}"))?;
    let a = cli(&["model-check", "--calculus", &data("semilattice.calc"), "--algebra", &data("z3.alg"), "--filter", "1,2"]);
    ensure(a.status == 0, format!("cli model-check: {}", a.report))?;
    let b = cli(&["leibniz", "--algebra", &data("z3.alg"), "--filter", "1,2"]);
    ensure(b.status == 0 && b.report.contains("[{0} {1} {2}]"), format!("cli leibniz: {}", b.report))?;
    Ok(format!("model ({} assignments), Leibniz {omega}", model.assignments_checked))
}

fn magma_example() -> Check {
    let n = 5;
    let a = ok(magma_algebra(n))?;
    let op = |x: usize, y: usize| a.op("*", &[x, y]).unwrap();
    ensure(op(1, 2) == 2 && op(2, 1) == 1, "1*2 or 2*1 wrong")?;
    let xy = Term::binary("*", Term::var("x"), Term::var("y"));
    let yx = Term::binary("*", Term::var("y"), Term::var("x"));
    ensure(!ok(a.validates_equation(&Equation::new(xy, yx)))?, "algebra is commutative")?;

    let m = ok(LogicalMatrix::new(a.clone(), &[0]))?;
    ensure(leibniz_congruence(&m).is_identity(), "<A,{0}> not reduced")?;
    let polys = ok(unary_polynomials(&a))?;
    let mut pairs = 0;
    for x in 0..=n {
        for y in x + 1..=n {
            let sep = polys.functions.iter().any(|f| (f[x] == 0) != (f[y] == 0));
            ensure(sep, format!("no separating polynomial for {x},{y}"))?;
            pairs += 1;
        }
    }
    ensure(pairs == 15, format!("{pairs} pairs"))?;

    let listed = [(1, 2, n - 1), (1, 3, 1), (2, 3, 1)];
    for x in 1..=n {
        for y in x + 1..=n {
            let p = ok(magma_separating_polynomial(n, x, y))?;
            ensure(p.p_b == 0, format!("p({y}) = {} for a={x}", p.p_b))?;
            ensure(p.p_a != 0, format!("p({x}) = 0 for b={y}"))?;
            let (term, env) = p.as_term(x);
            ensure(ok(a.evaluate(&term, &env))? == p.p_a, format!("term value differs at a={x}, b={y}"))?;
            if let Some(&(_, _, want)) = listed.iter().find(|(la, lb, _)| (*la, *lb) == (x, y)) {
                ensure(p.p_a == want, format!("p({x}) = {} for b={y}, expected {want}", p.p_a))?;
            }
        }
    }

    let suite = ok(cm_rules(n))?;
    let r = ok(is_model(&suite, &m))?;
    ensure(r.holds(), format!("CM suite fails: {:?}", r.failure))?;
    Ok(format!(
        "15 pairs separated, listed sub-cases exact, {} CM rules hold ({} assignments)",
        suite.rules().len(),
        r.assignments_checked
    ))
}

fn appendix_replay() -> Check {
    let chains = ok(appendix_chains())?;
    for d in APPENDIX_DISPLAYS {
        ensure(chains.iter().any(|c| c.display == d), format!("display {d} not encoded"))?;
    }
    let mut steps = 0;
    for c in &chains {
        let r = ok(check_chain(cr_calculus(), &c.chain))?;
        ensure(r.is_valid(), format!("{}: {:?}", c.name, r.failure))?;
        ensure(
            ok(normalize(c.chain.start()))? == ok(normalize(c.chain.end()))?,
            format!("{}: endpoints differ", c.name),
        )?;
        if let Some(labels) = expected_labels(&c.name) {
            ensure(c.script.labels() == labels, format!("{}: labels {:?}", c.name, c.script.labels()))?;
        }
        steps += c.chain.len();
    }
    Ok(format!("{} chains over {} displays, {steps} primitive steps", chains.len(), APPENDIX_DISPLAYS.len()))
}

/// Grid evaluation independent of the normal form except for degree bounds.
fn grid_oracle(e: &Equation) -> bool {
    let vars: Vec<String> = e.vars().into_iter().collect();
    let (l, r) = (normalize(&e.lhs).unwrap(), normalize(&e.rhs).unwrap());
    let deg: Vec<u32> = vars.iter().map(|v| l.degree_in(v).max(r.degree_in(v))).collect();
    let mut at = vec![0u32; vars.len()];
    loop {
        let env: BTreeMap<String, BigInt> = vars.iter().cloned().zip(at.iter().map(|&k| BigInt::from(k))).collect();
        if eval_ring_term(&e.lhs, &env).unwrap() != eval_ring_term(&e.rhs, &env).unwrap() {
            return false;
        }
        let mut i = 0;
        loop {
            if i == at.len() {
                return true;
            }
            at[i] += 1;
            if at[i] <= deg[i] {
                break;
            }
            at[i] = 0;
            i += 1;
        }
    }
}

/// Commutes and distributes at random: always CR-equal to the input.
fn ring_variant(rng: &mut ChaCha8Rng, t: &Term) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::App(f, args) => {
            let mut args: Vec<Term> = args.iter().map(|a| ring_variant(rng, a)).collect();
            if args.len() == 2 && rng.gen_bool(0.5) {
                args.swap(0, 1);
            }
            if f == "*" && rng.gen_bool(0.5) {
                if let Term::App(g, inner) = &args[1] {
                    if g == "+" {
                        let l = Term::binary("*", args[0].clone(), inner[0].clone());
                        let r = Term::binary("*", args[0].clone(), inner[1].clone());
                        return Term::binary("+", l, r);
                    }
                }
            }
            Term::App(f.clone(), args)
        }
    }
}

fn ring_oracle_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let vars = ["x", "y", "z"];
    let mut valid = 0;
    for i in 0..500 {
        let l = sample::ring_term(&mut rng, &vars, 4);
        let r = match i % 3 {
            0 => sample::ring_term(&mut rng, &vars, 4),
            1 => ring_variant(&mut rng, &l),
            _ => Term::binary("+", ring_variant(&mut rng, &l), sample::ring_term(&mut rng, &vars, 2)),
        };
        let e = Equation::new(l, r);
        let nf = ok(cr_valid(&e))?;
        ensure(nf == grid_oracle(&e), format!("disagreement on {e}"))?;
        valid += nf as usize;
    }
    ensure(valid > 100 && valid < 450, format!("degenerate sample: {valid} valid"))?;
    let c = cli(&["normalize", "--oracle-trials", "500", "--seed", "20"]);
    ensure(c.status == 0, format!("cli: {}", c.report))?;
    Ok(format!("500 pairs agree ({valid} valid)"))
}

fn compare_leibniz(a: &FiniteAlgebra, f: &[usize]) -> Result<(), String> {
    let m = ok(LogicalMatrix::new(a.clone(), f))?;
    let fast = leibniz_congruence(&m);
    let slow = ok(largest_compatible_congruence_bruteforce(&m))?;
    ensure(fast == slow, format!("filter {f:?}: {fast} vs {slow} on {}", a.to_file_string()))
}

fn leibniz_oracle_equivalence() -> Check {
    let sig = Signature::new("binary").with("*", 2);
    let mut count = 0;
    for n in 1..=3usize {
        for code in 0..n.pow((n * n) as u32) {
            let mut c = code;
            let a = ok(FiniteAlgebra::from_fn(sig.clone(), n, |_, _| {
                let v = c % n;
                c /= n;
                v
            }))?;
            for bits in 0..1usize << n {
                let f: Vec<usize> = (0..n).filter(|i| bits >> i & 1 == 1).collect();
                compare_leibniz(&a, &f)?;
                count += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.gen_range(1..=4);
        let a = ok(sample::algebra(&mut rng, &sig, n))?;
        let f = sample::subset(&mut rng, n);
        compare_leibniz(&a, &f)?;
    }
    Ok(format!("{count} exhaustive matrices and 200 random ones agree"))
}

fn lp_positive_direction() -> Check {
    let p = ok(DiophantineEquation::new(Term::binary("+", Term::var("z"), encode_int(-2))))?;
    let w = ok(make_algebraizability_witness(&p, &[2]))?;
    let report = check_algebraizability_witness(&w.calculus, &w.witness);
    ensure(report.passed(), format!("witness fails:\n{report}"))?;
    let goal = Term::binary(IFF, ok(p.instantiate(&[2]))?, Term::constant("0"));
    ensure(check_derivation(&w.calculus, &w.theorem).is_valid(), "theorem derivation invalid")?;
    ensure(w.theorem.conclusion() == Some(&goal), "theorem has the wrong conclusion")?;
    ensure(w.theorem.steps.iter().all(|s| s.justification != aalkit::hilbert::Justification::Premise), "theorem uses premises")?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("w");
    let c = cli(&["witness", "--p", "(+ z (- (+ 1 1)))", "--solution", "2", "--out", out.to_str().unwrap()]);
    ensure(c.status == 0 && out.join("theorem.drv").exists(), format!("cli: {}", c.report))?;
    Ok(format!("{} conditions, theorem {goal} in {} steps", report.checks.len(), w.theorem.steps.len()))
}

fn lp_countermodel() -> Check {
    let p = ok(DiophantineEquation::new(ring("(+ (* (+ 1 1) z) 1)")))?;
    ensure(ok(p.root_mod(4))?.is_none(), "p has a root mod 4")?;
    let r = ok(build_countermodel(&p, 4, 1, 0, 2))?;
    ensure(r.passed(), format!("countermodel fails:\n{r}"))?;
    ensure(r.matrices[0].algebra == r.matrices[1].algebra, "different algebras")?;
    ensure(r.matrices[0].filter() != r.matrices[1].filter(), "same filter")?;
    Ok(format!(
        "reduced models {:?} and {:?} on Z/4Z ({} assignments each)",
        r.matrices[0].filter(),
        r.matrices[1].filter(),
        r.models[0].assignments_checked
    ))
}

/// α(x), β(x) from each basis equation with every variable set to x, plus α = β = x.
fn shipped_lab_pairs() -> Vec<(Term, Term)> {
    let (_, basis) = relation_algebra_basis();
    let x = Term::var("x");
    let mut out = vec![(x.clone(), x.clone())];
    for e in &basis {
        let mut s = Substitution::new();
        for v in e.vars() {
            s.insert(v, x.clone());
        }
        out.push((s.apply(&e.lhs), s.apply(&e.rhs)));
    }
    out
}

fn lab_checks() -> Check {
    let (sig, basis) = relation_algebra_basis();
    let pairs = shipped_lab_pairs();
    for (a, b) in &pairs {
        let c = ok(build_lab(a, b, &basis, &sig))?;
        let w = ok(lab_witness(&c))?;
        ensure(w.rho.len() == 2 && w.tau.len() == 1, "unexpected witness shape")?;
        let r = check_algebraizability_witness(&c, &w);
        ensure(r.passed(), format!("witness for {a} = {b} fails:\n{r}"))?;
    }

    let model = ok(build_frege_consistency_model(&sig, &basis))?;
    ensure(model.holds(), format!("Boolean model fails:\n{model}"))?;
    ensure(model.matrix.filter() == vec![1], "filter is not {1}")?;

    let full = ok(lab_signature(&sig))?;
    let phis: Vec<Term> = phi_formulas(&full).into_iter().map(|(_, t)| t).collect();
    let x = Term::var("x");
    let one_step = (parse_term("(conv (conv x))", &sig).unwrap(), x.clone());
    for (a, b) in [(x.clone(), x.clone()), one_step] {
        let ev = find_one_step_evidence(&basis, &a, &b).ok_or(format!("no evidence for {a} = {b}"))?;
        if a == b {
            ensure(ev == PhiEvidence::Identity, "identity evidence expected")?;
        }
        let c = ok(build_lab(&a, &b, &basis, &sig))?;
        let ds = ok(derive_phi_theorems(&c, &a, &b, &ev))?;
        ensure(ds.len() == phis.len(), format!("{} phi theorems, expected {}", ds.len(), phis.len()))?;
        for (d, phi) in ds.iter().zip(&phis) {
            ensure(check_derivation(&c, d).is_valid(), format!("invalid derivation of {phi}"))?;
            ensure(d.conclusion() == Some(phi), format!("derivation does not end in {phi}"))?;
            ensure(d.steps.iter().all(|s| s.justification != aalkit::hilbert::Justification::Premise), "uses premises")?;
        }
    }
    Ok(format!(
        "{} calculi algebraizable, Boolean model holds ({} groups), {} phi theorems per case",
        pairs.len(),
        model.checklist.len(),
        phis.len()
    ))
}

fn shipped_lps() -> Vec<HilbertCalculus> {
    ["(+ z (- (+ 1 1)))", "(+ (* (+ 1 1) z) 1)", "(+ (* z z) 1)", "(+ (* u u) (- (* v v)))"]
        .iter()
        .map(|s| build_lp(&DiophantineEquation::new(ring(s)).unwrap()).unwrap())
        .collect()
}

fn consistency() -> Check {
    let opts = ProveOptions {
        depth: 6,
        size_cap: 12,
        max_formulas: 100_000,
        fresh_vars: 0,
    };
    let mut n = 0;
    for c in shipped_lps() {
        let cert = ok(consistency_certificate(&c, lp_consistency_matrix(), opts))?;
        ensure(cert.passed(), format!("L(p) certificate fails: {:?}", cert.search))?;
        n += 1;
    }
    let (sig, basis) = relation_algebra_basis();
    for (a, b) in shipped_lab_pairs() {
        let c = ok(build_lab(&a, &b, &basis, &sig))?;
        let m = ok(LogicalMatrix::new(ok(frege_algebra(&sig))?, &[1]))?;
        let cert = ok(consistency_certificate(&c, m, opts))?;
        ensure(cert.passed(), format!("L({a},{b}) certificate fails: {:?}", cert.search))?;
        n += 1;
    }
    let lp = cli(&["build-lp", "--p", "(+ z (- (+ 1 1)))", "--check-consistency", "--depth", "6"]);
    ensure(lp.status == 0, format!("cli build-lp: {}", lp.report))?;
    let lab = cli(&["build-lab", "--alpha", "x", "--beta", "x", "--check-consistency", "--depth", "6"]);
    ensure(lab.status == 0, format!("cli build-lab: {}", lab.report))?;
    let prove = cli(&["prove", "x", "--calculus", "@cr", "--depth", "6"]);
    ensure(prove.status == 1, format!("cli prove: {}", prove.report))?;
    Ok(format!("{n} calculi: proper-filter model and no derivation of x at depth 6"))
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Duration, fn() -> Check)> = vec![
        ("1 semilattice reduced model", Duration::from_secs(1), semilattice_reduced_model),
        ("2 magma example", Duration::from_secs(10), magma_example),
        ("3 appendix replay", Duration::from_secs(5), appendix_replay),
        ("4 ring oracle soundness", Duration::from_secs(30), ring_oracle_soundness),
        ("5 leibniz oracle equivalence", Duration::from_secs(60), leibniz_oracle_equivalence),
        ("6 L(p) witness", Duration::from_secs(10), lp_positive_direction),
        ("7 L(p) countermodel", Duration::from_secs(30), lp_countermodel),
        ("8 L(alpha,beta)", Duration::from_secs(10), lab_checks),
        ("9 consistency", Duration::from_secs(30), consistency),
    ];
    let mut failed = Vec::new();
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let outcome = outcome.and_then(|m| {
            if took <= budget {
                Ok(m)
            } else {
                Err(format!("took {took:?}, budget {budget:?}"))
            }
        });
        match outcome {
            Ok(m) => println!("PASS criterion {name}: {m} [{took:.2?}]"),
            Err(e) => {
                println!("FAIL criterion {name}: {e} [{took:.2?}]");
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
