//! Batch command-line front end. [`run`] parses an argument vector and
//! returns the report that the `aalkit` binary prints.
//!
//! Every report starts with `RESULT: PASS`, `RESULT: FAIL` or `RESULT: ERROR`.
//! Exit status is 0 on pass, 1 on a failed check and 2 on usage errors or
//! guard violations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cring::{self, cr_calculus, grid_valid, normalize, DiophantineEquation};
use crate::error::{Error, Result};
use crate::finalg::{
    enumerate_filters, in_alg_l, is_model, largest_compatible_congruence_bruteforce, leibniz_congruence,
    suszko_congruence, Assignment, FiniteAlgebra, LogicalMatrix,
};
use crate::gallery::{self, semilattice_calculus, semilattice_extension, semilattice_signature};
use crate::hilbert::{
    bounded_prove, check_chain, check_derivation, ChainProof, Derivation, HilbertCalculus, ProveOptions,
    ProveOutcome,
};
use crate::reductions::{
    self, build_countermodel, build_frege_consistency_model, build_lab, build_lp, check_algebraizability_witness,
    consistency_certificate, derive_phi_theorems, find_one_step_evidence, lab_signature, lab_witness,
    lp_consistency_matrix, lp_signature, make_algebraizability_witness, parse_basis, relation_algebra_basis,
    ConsistencyCertificate,
};
use crate::sample;
use crate::terms::{parse_term, Equation, Signature, Term};

/// Exit status plus the text report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub status: i32,
    pub report: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

impl CommandOutcome {
    fn new(verdict: Verdict, body: &str) -> Self {
        let (word, status) = match verdict {
            Verdict::Pass => ("PASS", 0),
            Verdict::Fail => ("FAIL", 1),
            Verdict::Error => ("ERROR", 2),
        };
        let mut report = format!("RESULT: {word}\n");
        report.push_str(body);
        if !report.ends_with('\n') {
            report.push('\n');
        }
        CommandOutcome { status, report }
    }

    pub fn verdict(&self) -> Verdict {
        match self.status {
            0 => Verdict::Pass,
            1 => Verdict::Fail,
            _ => Verdict::Error,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "aalkit", version, about = "Logical matrices, Hilbert calculi and ring chain proofs")]
struct Cli {
    /// Worker threads for exhaustive searches.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CalcArgs {
    /// Calculus file, or one of `@cr`, `@semilattice`, `@semilattice-ext`.
    #[arg(long)]
    calculus: String,
    /// Signature file, or one of `ring`, `lp`, `lab`, `relation`, `semilattice`, `magma`.
    #[arg(long)]
    signature: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct MatrixArgs {
    /// Algebra file (a matrix file also works and supplies its filter).
    #[arg(long)]
    algebra: PathBuf,
    /// Designated elements, comma separated.
    #[arg(long, value_delimiter = ',')]
    filter: Option<Vec<usize>>,
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    /// Forward-chaining rounds.
    #[arg(long, default_value_t = 6)]
    depth: usize,
    #[arg(long, default_value_t = 12)]
    size_cap: usize,
    #[arg(long, default_value_t = 100_000)]
    max_formulas: usize,
    #[arg(long, default_value_t = 0)]
    fresh_vars: usize,
}

impl SearchArgs {
    fn options(&self) -> ProveOptions {
        ProveOptions {
            depth: self.depth,
            size_cap: self.size_cap,
            max_formulas: self.max_formulas,
            fresh_vars: self.fresh_vars,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a term or a file and print it back in canonical form.
    Parse {
        input: String,
        /// term, signature, calculus, algebra, matrix, derivation, chain or basis.
        #[arg(long, default_value = "term")]
        kind: String,
        #[arg(long)]
        signature: Option<String>,
    },
    /// Evaluate a term in an algebra.
    Eval {
        term: String,
        #[arg(long)]
        algebra: PathBuf,
        /// Values as `x=1,y=0`; missing variables are drawn from the seed.
        #[arg(long, value_delimiter = ',')]
        assign: Vec<String>,
    },
    /// Check that a matrix is a model of a calculus.
    ModelCheck {
        #[command(flatten)]
        calc: CalcArgs,
        #[command(flatten)]
        matrix: MatrixArgs,
    },
    /// Leibniz congruence of a matrix; passes when the matrix is reduced.
    Leibniz {
        #[arg(long, required_unless_present = "verify_oracles")]
        algebra: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        filter: Option<Vec<usize>>,
        /// Compare against brute force on every one-binary-operation algebra
        /// of size at most 3 and on random algebras of size at most 4.
        #[arg(long)]
        verify_oracles: bool,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Suszko congruence; passes when it is the identity.
    Suszko {
        #[command(flatten)]
        calc: CalcArgs,
        #[command(flatten)]
        matrix: MatrixArgs,
    },
    /// Every deductive filter of a calculus on an algebra.
    Filters {
        #[command(flatten)]
        calc: CalcArgs,
        #[arg(long)]
        algebra: PathBuf,
    },
    /// Bounded forward search for a derivation.
    Prove {
        goal: String,
        #[arg(long)]
        premise: Vec<String>,
        #[command(flatten)]
        calc: CalcArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Replay a derivation file.
    CheckProof {
        file: PathBuf,
        #[command(flatten)]
        calc: CalcArgs,
        /// Goal the derivation must reach.
        #[arg(long)]
        goal: Option<String>,
    },
    /// Replay a chain file (the CR calculus by default).
    CheckChain {
        file: PathBuf,
        #[arg(long, default_value = "@cr")]
        calculus: String,
        #[arg(long)]
        signature: Option<String>,
    },
    /// Polynomial normal form of a ring term; with a second term, test equality.
    Normalize {
        term: Option<String>,
        other: Option<String>,
        /// Compare the normal form with grid evaluation on this many random pairs.
        #[arg(long)]
        oracle_trials: Option<usize>,
        #[arg(long, default_value_t = 3)]
        vars: usize,
        #[arg(long, default_value_t = 4)]
        term_depth: usize,
    },
    /// CR chain between two ground terms, or a displayed derived-rule chain.
    CrChain {
        from: Option<String>,
        to: Option<String>,
        /// One of the appendix display names; `list` prints them.
        #[arg(long)]
        display: Option<String>,
    },
    /// Build L(p) for a ring polynomial.
    BuildLp {
        #[arg(long)]
        p: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also certify a proper-filter model and a failed search for `x`.
        #[arg(long)]
        check_consistency: bool,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Build L(α,β) over a basis and check its algebraizability witness.
    BuildLab {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        beta: String,
        /// Basis file; the relation-algebra basis by default.
        #[arg(long)]
        basis: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        check_consistency: bool,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Algebraizability witness of L(p) from an integer solution.
    Witness {
        #[arg(long)]
        p: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        solution: Vec<i64>,
        /// Directory for the emitted derivation files.
        #[arg(long, default_value = "witness")]
        out: PathBuf,
    },
    /// Two reduced models of L(p) on Z/mZ with different filters.
    Countermodel {
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 4)]
        modulus: usize,
        #[arg(long, default_value_t = 1)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        m_val: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Two-element model of the Frege-hierarchy calculus over a basis.
    FregeModel {
        #[arg(long)]
        basis: Option<PathBuf>,
    },
    /// Rebuild the example bundles and compare with their manifests.
    Gallery {
        /// Bundle names: semilattice, magma, appendix. All by default.
        names: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = gallery::DEFAULT_MAGMA_N)]
        magma_n: usize,
    },
}

/// Runs one command. `argv[0]` is the program name.
pub fn run<I, T>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CommandOutcome {
                    status: 0,
                    report: e.to_string(),
                },
                _ => CommandOutcome::new(Verdict::Error, &e.render().to_string()),
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return CommandOutcome::new(Verdict::Error, &format!("thread pool: {e}")),
    };
    let seed = cli.seed;
    match pool.install(|| dispatch(cli.command, seed)) {
        Ok((verdict, body)) => CommandOutcome::new(verdict, &body),
        Err(e) => {
            let kind = if e.is_guard() { "guard" } else { "error" };
            CommandOutcome::new(Verdict::Error, &format!("{kind}: {e}"))
        }
    }
}

type Report = (Verdict, String);

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Invalid(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn builtin_signature(name: &str) -> Result<Option<Signature>> {
    Ok(Some(match name {
        "ring" => Signature::ring(),
        "lp" => lp_signature(),
        "lab" => lab_signature(&relation_algebra_basis().0)?,
        "relation" => relation_algebra_basis().0,
        "semilattice" => semilattice_signature(),
        "magma" => gallery::magma_signature(),
        _ => return Ok(None),
    }))
}

fn load_signature(source: &str) -> Result<Signature> {
    match builtin_signature(source)? {
        Some(s) => Ok(s),
        None => Signature::parse(source, &read(Path::new(source))?),
    }
}

/// Signature for a calculus: explicit, else the builtin's own, else the
/// algebra's, else the ring signature.
fn load_calculus(args: &CalcArgs, algebra: Option<&FiniteAlgebra>) -> Result<HilbertCalculus> {
    let explicit = args.signature.as_deref().map(load_signature).transpose()?;
    match args.calculus.as_str() {
        "@cr" => Ok(cr_calculus().clone()),
        "@semilattice" => Ok(semilattice_calculus()),
        "@semilattice-ext" => {
            let mut c = semilattice_calculus();
            for r in semilattice_extension().rules() {
                c.push(r.clone())?;
            }
            Ok(c)
        }
        b if b.starts_with('@') => Err(Error::Invalid(format!("unknown builtin calculus `{b}`"))),
        path => {
            let sig = explicit
                .or_else(|| algebra.map(|a| a.signature().clone()))
                .unwrap_or_else(Signature::ring);
            HilbertCalculus::parse(&read(Path::new(path))?, sig)
        }
    }
}

fn load_matrix_file(path: &Path) -> Result<LogicalMatrix> {
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    LogicalMatrix::parse(&read(path)?, |p| read(&dir.join(p)))
}

fn is_matrix_text(text: &str) -> bool {
    text.lines().any(|l| {
        let l = l.trim_start();
        l.starts_with("filter") || l.starts_with("algebra ")
    })
}

fn load_algebra(path: &Path) -> Result<FiniteAlgebra> {
    let text = read(path)?;
    if is_matrix_text(&text) {
        Ok(load_matrix_file(path)?.algebra)
    } else {
        FiniteAlgebra::parse(&text)
    }
}

fn load_matrix(args: &MatrixArgs) -> Result<LogicalMatrix> {
    let text = read(&args.algebra)?;
    match (&args.filter, is_matrix_text(&text)) {
        (Some(f), false) => LogicalMatrix::new(FiniteAlgebra::parse(&text)?, f),
        (Some(f), true) => LogicalMatrix::new(load_matrix_file(&args.algebra)?.algebra, f),
        (None, true) => load_matrix_file(&args.algebra),
        (None, false) => Err(Error::Invalid("no filter: pass --filter or a matrix file".into())),
    }
}

fn ring_term(s: &str) -> Result<Term> {
    parse_term(s, &Signature::ring())
}

fn list(xs: &[usize]) -> String {
    let items: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

fn dispatch(cmd: Command, seed: u64) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let v = match cmd {
        Command::Parse { input, kind, signature } => {
            let sig = || -> Result<Signature> {
                signature.as_deref().map(load_signature).unwrap_or_else(|| Ok(Signature::ring()))
            };
            let text = if kind == "term" { input.clone() } else { read(Path::new(&input))? };
            let printed = match kind.as_str() {
                "term" => {
                    let t = parse_term(&text, &sig()?)?;
                    format!("term: {t}\nsize: {}\ndepth: {}\n", t.size(), t.depth())
                }
                "signature" => Signature::parse(&input, &text)?.to_file_string(),
                "calculus" => HilbertCalculus::parse(&text, sig()?)?.to_file_string(),
                "algebra" => FiniteAlgebra::parse(&text)?.to_file_string(),
                "matrix" => load_matrix_file(Path::new(&input))?.to_file_string(),
                "derivation" => Derivation::parse(&text, &sig()?)?.to_file_string(),
                "chain" => ChainProof::parse(&text, &sig()?)?.to_file_string(),
                "basis" => {
                    let (s, eqs) = parse_basis(&input, &text)?;
                    let mut b = String::new();
                    for (sym, ar) in s.ops() {
                        writeln!(b, "op {sym} {ar}").unwrap();
                    }
                    for e in eqs {
                        writeln!(b, "eq {e}").unwrap();
                    }
                    b
                }
                k => return Err(Error::Invalid(format!("unknown kind `{k}`"))),
            };
            out.push_str(&printed);
            Verdict::Pass
        }

        Command::Eval { term, algebra, assign } => {
            let a = load_algebra(&algebra)?;
            let t = parse_term(&term, a.signature())?;
            let mut env = Assignment::new();
            for item in &assign {
                let (k, val) = item
                    .split_once('=')
                    .ok_or_else(|| Error::Invalid(format!("bad assignment `{item}`")))?;
                let val: usize = val
                    .trim()
                    .parse()
                    .map_err(|_| Error::Invalid(format!("bad value in `{item}`")))?;
                env.insert(k.trim().to_string(), val);
            }
            for var in t.vars() {
                env.entry(var).or_insert_with(|| rng.gen_range(0..a.size()));
            }
            let value = a.evaluate(&t, &env)?;
            for (k, val) in &env {
                writeln!(out, "{k} = {val}").unwrap();
            }
            writeln!(out, "value: {value}").unwrap();
            Verdict::Pass
        }

        Command::ModelCheck { calc, matrix } => {
            let m = load_matrix(&matrix)?;
            let c = load_calculus(&calc, Some(&m.algebra))?;
            let r = is_model(&c, &m)?;
            writeln!(out, "rules: {}", c.rules().len()).unwrap();
            writeln!(out, "filter: {}", list(&m.filter())).unwrap();
            writeln!(out, "assignments: {}", r.assignments_checked).unwrap();
            match &r.failure {
                None => writeln!(out, "model: yes").unwrap(),
                Some((rule, asg)) => writeln!(out, "model: no\nfailing rule: {rule}\nassignment: {asg:?}").unwrap(),
            }
            verdict(r.holds())
        }

        Command::Leibniz {
            algebra,
            filter,
            verify_oracles,
            samples,
        } => {
            if verify_oracles {
                let (checked, mismatches) = leibniz_oracle_suite(&mut rng, samples)?;
                writeln!(out, "matrices compared: {checked}").unwrap();
                writeln!(out, "mismatches: {}", mismatches.len()).unwrap();
                for m in mismatches.iter().take(5) {
                    out.push_str(m);
                }
                verdict(mismatches.is_empty())
            } else {
                let m = load_matrix(&MatrixArgs {
                    algebra: algebra.expect("required by clap"),
                    filter,
                })?;
                let omega = leibniz_congruence(&m);
                writeln!(out, "filter: {}", list(&m.filter())).unwrap();
                writeln!(out, "leibniz: {omega}").unwrap();
                writeln!(out, "reduced: {}", if omega.is_identity() { "yes" } else { "no" }).unwrap();
                verdict(omega.is_identity())
            }
        }

        Command::Suszko { calc, matrix } => {
            let m = load_matrix(&matrix)?;
            let c = load_calculus(&calc, Some(&m.algebra))?;
            let s = suszko_congruence(&c, &m.algebra, &m.filter())?;
            writeln!(out, "filter: {}", list(&m.filter())).unwrap();
            writeln!(out, "suszko: {s}").unwrap();
            writeln!(out, "identity: {}", if s.is_identity() { "yes" } else { "no" }).unwrap();
            verdict(s.is_identity())
        }

        Command::Filters { calc, algebra } => {
            let a = load_algebra(&algebra)?;
            let c = load_calculus(&calc, Some(&a))?;
            let fam = enumerate_filters(&c, &a)?;
            writeln!(out, "filters: {}", fam.members.len()).unwrap();
            for f in &fam.members {
                writeln!(out, "  {}", list(f)).unwrap();
            }
            writeln!(out, "closure system: {}", if fam.is_closure_system() { "yes" } else { "no" }).unwrap();
            writeln!(out, "in Alg: {}", if in_alg_l(&c, &a)? { "yes" } else { "no" }).unwrap();
            verdict(fam.is_closure_system())
        }

        Command::Prove {
            goal,
            premise,
            calc,
            search,
        } => {
            let c = load_calculus(&calc, None)?;
            let g = parse_term(&goal, &c.signature)?;
            let ps = premise
                .iter()
                .map(|p| parse_term(p, &c.signature))
                .collect::<Result<Vec<_>>>()?;
            match bounded_prove(&c, &ps, &g, search.options())? {
                ProveOutcome::Found(d) => {
                    writeln!(out, "found: {} steps", d.steps.len()).unwrap();
                    out.push_str(&d.to_file_string());
                    Verdict::Pass
                }
                ProveOutcome::NotFound { rounds, formulas } => {
                    writeln!(out, "not found: {rounds} rounds, {formulas} formulas").unwrap();
                    Verdict::Fail
                }
                ProveOutcome::ResourceLimit { rounds, formulas } => {
                    return Err(Error::ResourceLimit(format!(
                        "search stopped in round {rounds} at {formulas} formulas"
                    )))
                }
            }
        }

        Command::CheckProof { file, calc, goal } => {
            let c = load_calculus(&calc, None)?;
            let d = Derivation::parse(&read(&file)?, &c.signature)?;
            let r = check_derivation(&c, &d);
            writeln!(out, "steps checked: {}", r.steps_checked).unwrap();
            let mut ok = r.is_valid();
            if let Some(f) = &r.failure {
                writeln!(out, "failure: {f}").unwrap();
            }
            if let Some(g) = goal {
                let g = parse_term(&g, &c.signature)?;
                let reached = d.find(&g).is_some();
                writeln!(out, "goal {g}: {}", if reached { "reached" } else { "missing" }).unwrap();
                ok &= reached;
            } else if let Some(concl) = d.conclusion() {
                writeln!(out, "conclusion: {concl}").unwrap();
            }
            verdict(ok)
        }

        Command::CheckChain {
            file,
            calculus,
            signature,
        } => {
            let c = load_calculus(
                &CalcArgs {
                    calculus,
                    signature,
                },
                None,
            )?;
            let ch = ChainProof::parse(&read(&file)?, &c.signature)?;
            let r = check_chain(&c, &ch)?;
            writeln!(out, "transitions checked: {}", r.steps_checked).unwrap();
            writeln!(out, "from: {}\nto: {}", ch.start(), ch.end()).unwrap();
            if let Some(f) = &r.failure {
                writeln!(out, "failure: {f}").unwrap();
            }
            verdict(r.is_valid())
        }

        Command::Normalize {
            term,
            other,
            oracle_trials,
            vars,
            term_depth,
        } => {
            if let Some(n) = oracle_trials {
                let names: Vec<String> = (0..vars).map(|i| format!("x{i}")).collect();
                let names: Vec<&str> = names.iter().map(String::as_str).collect();
                if names.is_empty() {
                    return Err(Error::Invalid("--vars must be positive".into()));
                }
                let mut disagree = 0;
                let mut valid = 0;
                for _ in 0..n {
                    let l = sample::ring_term(&mut rng, &names, term_depth);
                    let r = if rng.gen_ratio(1, 3) {
                        shuffle_ring(&mut rng, &l)
                    } else {
                        sample::ring_term(&mut rng, &names, term_depth)
                    };
                    let e = Equation::new(l, r);
                    let (a, b) = (cring::cr_valid(&e)?, grid_valid(&e)?);
                    valid += a as usize;
                    if a != b {
                        disagree += 1;
                        if disagree <= 5 {
                            writeln!(out, "disagreement: {e} normal form {a}, grid {b}").unwrap();
                        }
                    }
                }
                writeln!(out, "pairs: {n}\nvalid: {valid}\ndisagreements: {disagree}").unwrap();
                verdict(disagree == 0)
            } else {
                let t = ring_term(term.as_deref().ok_or_else(|| Error::Invalid("missing term".into()))?)?;
                let nf = normalize(&t)?;
                writeln!(out, "{nf}").unwrap();
                match other {
                    None => Verdict::Pass,
                    Some(o) => {
                        let nf2 = normalize(&ring_term(&o)?)?;
                        writeln!(out, "{nf2}").unwrap();
                        let eq = nf == nf2;
                        writeln!(out, "equal: {}", if eq { "yes" } else { "no" }).unwrap();
                        verdict(eq)
                    }
                }
            }
        }

        Command::CrChain { from, to, display } => match display {
            Some(name) if name == "list" => {
                for d in gallery::APPENDIX_DISPLAYS {
                    writeln!(out, "{d}").unwrap();
                }
                Verdict::Pass
            }
            Some(name) => {
                let chains: Vec<_> = gallery::appendix_chains()?
                    .into_iter()
                    .filter(|c| c.display == name)
                    .collect();
                if chains.is_empty() {
                    return Err(Error::Invalid(format!("unknown display `{name}`")));
                }
                let mut ok = true;
                for c in &chains {
                    let r = check_chain(cr_calculus(), &c.chain)?;
                    let same = normalize(c.chain.start())? == normalize(c.chain.end())?;
                    ok &= r.is_valid() && same;
                    writeln!(
                        out,
                        "# {} ({} moves, {} primitive steps): {}",
                        c.name,
                        c.script.len(),
                        c.chain.len(),
                        if r.is_valid() && same { "valid" } else { "INVALID" }
                    )
                    .unwrap();
                    out.push_str(&c.chain.to_file_string());
                }
                verdict(ok)
            }
            None => {
                let (Some(s), Some(t)) = (from, to) else {
                    return Err(Error::Invalid("give two ground terms or --display".into()));
                };
                let (s, t) = (ring_term(&s)?, ring_term(&t)?);
                match cring::synth_ground_chain(&s, &t) {
                    Ok(ch) => {
                        let r = check_chain(cr_calculus(), &ch)?;
                        writeln!(out, "steps: {}", ch.len()).unwrap();
                        out.push_str(&ch.to_file_string());
                        verdict(r.is_valid())
                    }
                    Err(e @ Error::NotCrEqual(..)) => {
                        writeln!(out, "{e}").unwrap();
                        Verdict::Fail
                    }
                    Err(e) => return Err(e),
                }
            }
        },

        Command::BuildLp {
            p,
            out: path,
            check_consistency,
            search,
        } => {
            let dio = DiophantineEquation::new(ring_term(&p)?)?;
            let c = build_lp(&dio)?;
            let text = c.to_file_string();
            writeln!(out, "rules: {}", c.rules().len()).unwrap();
            match &path {
                Some(f) => {
                    write(f, &text)?;
                    writeln!(out, "written: {}", f.display()).unwrap();
                }
                None => out.push_str(&text),
            }
            if check_consistency {
                let cert = consistency_certificate(&c, lp_consistency_matrix(), search.options())?;
                describe_certificate(&mut out, &cert);
                verdict(cert.passed())
            } else {
                Verdict::Pass
            }
        }

        Command::BuildLab {
            alpha,
            beta,
            basis,
            out: path,
            check_consistency,
            search,
        } => {
            let (sig, eqs) = match &basis {
                Some(f) => parse_basis("basis", &read(f)?)?,
                None => relation_algebra_basis(),
            };
            let (a, b) = (parse_term(&alpha, &sig)?, parse_term(&beta, &sig)?);
            let c = build_lab(&a, &b, &eqs, &sig)?;
            writeln!(out, "rules: {}", c.rules().len()).unwrap();
            if let Some(f) = &path {
                write(f, &c.to_file_string())?;
                writeln!(out, "written: {}", f.display()).unwrap();
            }
            let w = lab_witness(&c)?;
            let report = check_algebraizability_witness(&c, &w);
            writeln!(out, "witness:").unwrap();
            out.push_str(&report.to_string());
            let mut ok = report.passed();
            match find_one_step_evidence(&eqs, &a, &b) {
                Some(ev) => {
                    let ds = derive_phi_theorems(&c, &a, &b, &ev)?;
                    let all = ds.iter().all(|d| check_derivation(&c, d).is_valid());
                    writeln!(out, "phi theorems: {} derived, {}", ds.len(), if all { "valid" } else { "INVALID" })
                        .unwrap();
                    ok &= all;
                }
                None => writeln!(out, "phi theorems: no one-step evidence").unwrap(),
            }
            if check_consistency {
                let m = LogicalMatrix::new(reductions::frege_algebra(&sig)?, &[1])?;
                let cert = consistency_certificate(&c, m, search.options())?;
                describe_certificate(&mut out, &cert);
                ok &= cert.passed();
            }
            verdict(ok)
        }

        Command::Witness { p, solution, out: dir } => {
            let dio = DiophantineEquation::new(ring_term(&p)?)?;
            let w = match make_algebraizability_witness(&dio, &solution) {
                Ok(w) => w,
                Err(e @ Error::NotASolution(_)) => {
                    writeln!(out, "{e}").unwrap();
                    return Ok((Verdict::Fail, out));
                }
                Err(e) => return Err(e),
            };
            let report = check_algebraizability_witness(&w.calculus, &w.witness);
            let theorem_ok = check_derivation(&w.calculus, &w.theorem).is_valid();
            writeln!(out, "variables: {}", dio.vars.join(",")).unwrap();
            writeln!(out, "theorem: {}", w.theorem.conclusion().map(|t| t.to_string()).unwrap_or_default())
                .unwrap();
            writeln!(out, "theorem steps: {} ({})", w.theorem.steps.len(), if theorem_ok { "valid" } else { "INVALID" })
                .unwrap();
            writeln!(out, "chain steps: {}", w.chain.len()).unwrap();
            out.push_str(&report.to_string());
            write(&dir.join("lp.calc"), &w.calculus.to_file_string())?;
            write(&dir.join("theorem.drv"), &w.theorem.to_file_string())?;
            write(&dir.join("theorem.chain"), &w.chain.to_file_string())?;
            for (name, d) in &w.witness.derivations {
                write(&dir.join(format!("{}.drv", file_safe(name))), &d.to_file_string())?;
            }
            writeln!(out, "emitted: {}", dir.display()).unwrap();
            verdict(report.passed() && theorem_ok)
        }

        Command::Countermodel {
            p,
            modulus,
            s,
            m_val,
            k,
        } => {
            let dio = DiophantineEquation::new(ring_term(&p)?)?;
            match build_countermodel(&dio, modulus, s, m_val, k) {
                Ok(r) => {
                    out.push_str(&r.to_string());
                    verdict(r.passed())
                }
                Err(e @ Error::HasRoot { .. }) => {
                    writeln!(out, "{e}").unwrap();
                    Verdict::Fail
                }
                Err(e) => return Err(e),
            }
        }

        Command::FregeModel { basis } => {
            let (sig, eqs) = match &basis {
                Some(f) => parse_basis("basis", &read(f)?)?,
                None => relation_algebra_basis(),
            };
            let m = build_frege_consistency_model(&sig, &eqs)?;
            writeln!(out, "filter: {}", list(&m.matrix.filter())).unwrap();
            out.push_str(&m.to_string());
            verdict(m.holds())
        }

        Command::Gallery { names, out: dir, magma_n } => {
            let names = if names.is_empty() {
                vec!["semilattice".to_string(), "magma".to_string(), "appendix".to_string()]
            } else {
                names
            };
            let mut ok = true;
            for n in &names {
                let b = match n.as_str() {
                    "semilattice" => gallery::semilattice_suite()?,
                    "magma" => gallery::cm_rule_suite(magma_n)?,
                    "appendix" => gallery::appendix_scripts()?,
                    other => return Err(Error::Invalid(format!("unknown bundle `{other}`"))),
                };
                ok &= b.passed();
                out.push_str(&b.to_string());
                if let Some(d) = &dir {
                    let target = d.join(&b.name);
                    b.write_to(&target)
                        .map_err(|e| Error::Invalid(format!("{}: {e}", target.display())))?;
                }
            }
            verdict(ok)
        }
    };
    Ok((v, out))
}

fn describe_certificate(out: &mut String, cert: &ConsistencyCertificate) {
    writeln!(out, "consistency model: filter {} of {} elements, {}", list(&cert.matrix.filter()), cert.matrix.algebra.size(), if cert.model.holds() { "model" } else { "NOT a model" }).unwrap();
    match &cert.search {
        ProveOutcome::Found(_) => writeln!(out, "search for x: FOUND").unwrap(),
        ProveOutcome::NotFound { rounds, formulas } => {
            writeln!(out, "search for x: not found ({rounds} rounds, {formulas} formulas)").unwrap()
        }
        ProveOutcome::ResourceLimit { rounds, formulas } => {
            writeln!(out, "search for x: inconclusive, limit hit in round {rounds} at {formulas} formulas").unwrap()
        }
    }
}

/// `Rep(+)` becomes `Rep.plus`; other punctuation is spelled in hex.
fn file_safe(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        match c {
            '(' => out.push('.'),
            ')' => {}
            '+' => out.push_str("plus"),
            '*' => out.push_str("times"),
            '-' if out.ends_with('.') => out.push_str("minus"),
            c if c.is_alphanumeric() || c == '-' || c == '_' || c == '.' => out.push(c),
            c => write!(out, "x{:x}", c as u32).unwrap(),
        }
    }
    out
}

/// An equivalent term obtained by commuting sums and products at random.
fn shuffle_ring(rng: &mut ChaCha8Rng, t: &Term) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::App(f, args) => {
            let mut args: Vec<Term> = args.iter().map(|a| shuffle_ring(rng, a)).collect();
            if args.len() == 2 && rng.gen_bool(0.5) {
                args.swap(0, 1);
            }
            Term::App(f.clone(), args)
        }
    }
}

/// Number of matrices compared and a description of each mismatch.
fn leibniz_oracle_suite(rng: &mut ChaCha8Rng, samples: usize) -> Result<(usize, Vec<String>)> {
    let sig = Signature::new("binary").with("*", 2);
    let mut jobs: Vec<(usize, Vec<usize>)> = Vec::new();
    for n in 1..=3usize {
        let count = n.pow((n * n) as u32);
        for code in 0..count {
            let mut table = Vec::with_capacity(n * n);
            let mut c = code;
            for _ in 0..n * n {
                table.push(c % n);
                c /= n;
            }
            jobs.push((n, table));
        }
    }
    let exhaustive: Vec<Vec<String>> = jobs
        .par_iter()
        .map(|(n, table)| -> Result<Vec<String>> {
            let a = FiniteAlgebra::new(sig.clone(), *n, vec![table.clone()])?;
            let mut bad = Vec::new();
            for bits in 0..1u32 << n {
                let f: Vec<usize> = (0..*n).filter(|i| bits >> i & 1 == 1).collect();
                compare_leibniz(&a, &f, &mut bad)?;
            }
            Ok(bad)
        })
        .collect::<Result<_>>()?;
    let mut checked: usize = jobs.iter().map(|(n, _)| 1 << n).sum();
    let mut bad: Vec<String> = exhaustive.into_iter().flatten().collect();
    for _ in 0..samples {
        let n = rng.gen_range(1..=4);
        let a = sample::algebra(rng, &sig, n)?;
        let f = sample::subset(rng, n);
        compare_leibniz(&a, &f, &mut bad)?;
        checked += 1;
    }
    Ok((checked, bad))
}

fn compare_leibniz(a: &FiniteAlgebra, f: &[usize], bad: &mut Vec<String>) -> Result<()> {
    let m = LogicalMatrix::new(a.clone(), f)?;
    let fast = leibniz_congruence(&m);
    let slow = largest_compatible_congruence_bruteforce(&m)?;
    if fast != slow {
        bad.push(format!("mismatch on `{}` filter {}: {fast} vs {slow}\n", a.to_file_string().replace('\n', " "), list(f)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &[&str]) -> CommandOutcome {
        run(std::iter::once("aalkit").chain(args.iter().copied()))
    }

    fn data(name: &str) -> String {
        format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    #[test]
    fn first_line_and_status() {
        let o = go(&["normalize", "(+ x (- x))"]);
        assert_eq!(o.report, "RESULT: PASS\n0\n");
        assert_eq!(o.status, 0);
        let o = go(&["normalize", "x", "(* x x)"]);
        assert_eq!(o.verdict(), Verdict::Fail);
        assert!(o.report.starts_with("RESULT: FAIL\n"));
    }

    #[test]
    fn usage_and_guard_errors_exit_two() {
        assert_eq!(go(&["frobnicate"]).status, 2);
        assert_eq!(go(&["leibniz"]).status, 2);
        let o = go(&["gallery", "magma", "--magma-n", "9"]);
        assert_eq!(o.status, 2);
        assert!(o.report.contains("guard"), "{}", o.report);
    }

    #[test]
    fn leibniz_on_z3() {
        let o = go(&["leibniz", "--algebra", &data("z3.alg"), "--filter", "1,2"]);
        assert_eq!(o.status, 0);
        assert!(o.report.contains("leibniz: [{0} {1} {2}]"));
        let o = go(&["leibniz", "--algebra", &data("z3.alg"), "--filter", "0"]);
        assert_eq!(o.status, 0);
    }

    #[test]
    fn builtin_calculus_needs_no_signature() {
        let o = go(&["model-check", "--calculus", "@semilattice-ext", "--algebra", &data("z3.alg"), "--filter", "1,2"]);
        assert_eq!(o.status, 1, "{}", o.report);
        assert!(o.report.contains("failing rule: U"));
    }

    #[test]
    fn file_names_stay_distinct() {
        let names = ["Rep(+)", "Rep(*)", "Rep(-)", "Rep(iff)", "A3-fwd"];
        let safe: std::collections::BTreeSet<String> = names.iter().map(|n| file_safe(n)).collect();
        assert_eq!(safe.len(), names.len());
        assert!(safe.contains("Rep.plus") && safe.contains("Rep.minus") && safe.contains("A3-fwd"));
    }

    #[test]
    fn seeded_eval_is_deterministic() {
        let a = go(&["eval", "(and x y)", "--algebra", &data("z3.alg"), "--seed", "11"]);
        let b = go(&["eval", "(and x y)", "--algebra", &data("z3.alg"), "--seed", "11"]);
        assert_eq!(a, b);
        assert_eq!(a.status, 0);
    }
}
