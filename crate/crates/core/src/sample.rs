//! Seeded random terms and algebras for oracle comparisons.

use rand::Rng;

use crate::cring::{add, mul, neg, one, zero};
use crate::error::Result;
use crate::finalg::FiniteAlgebra;
use crate::terms::{Signature, Term};

/// A ring term over `vars` with [`Term::depth`] at most `depth`.
pub fn ring_term<R: Rng + ?Sized>(rng: &mut R, vars: &[&str], depth: usize) -> Term {
    if depth == 0 {
        return Term::var(vars[rng.gen_range(0..vars.len())]);
    }
    if depth == 1 || rng.gen_ratio(1, 4) {
        return match rng.gen_range(0..vars.len() + 2) {
            0 => zero(),
            1 => one(),
            i => Term::var(vars[i - 2]),
        };
    }
    match rng.gen_range(0..5) {
        0 => neg(ring_term(rng, vars, depth - 1)),
        1 | 2 => add(ring_term(rng, vars, depth - 1), ring_term(rng, vars, depth - 1)),
        _ => mul(ring_term(rng, vars, depth - 1), ring_term(rng, vars, depth - 1)),
    }
}

/// An algebra of the given signature with uniformly random tables.
pub fn algebra<R: Rng + ?Sized>(rng: &mut R, sig: &Signature, size: usize) -> Result<FiniteAlgebra> {
    FiniteAlgebra::from_fn(sig.clone(), size, |_, _| rng.gen_range(0..size))
}

/// A uniformly random subset of `0..size`.
pub fn subset<R: Rng + ?Sized>(rng: &mut R, size: usize) -> Vec<usize> {
    (0..size).filter(|_| rng.gen_bool(0.5)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn terms_respect_depth_and_vars() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t = ring_term(&mut rng, &["x", "y"], 4);
            assert!(t.depth() <= 4);
            assert!(t.vars().iter().all(|v| v == "x" || v == "y"));
            Signature::ring().check(&t).unwrap();
        }
    }

    #[test]
    fn algebra_tables_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sig = Signature::new("m").with("*", 2);
        let a = algebra(&mut rng, &sig, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!(a.op("*", &[i, j]).unwrap() < 4);
            }
        }
    }
}
