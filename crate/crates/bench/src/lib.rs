//! Deterministic inputs for the kernel benchmarks.

use std::sync::Arc;

use nast::{Laurent, LieAlgebra, LieElement, LieVec, WittRing, W};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ring(p: u64, m: u32, n0: usize) -> Arc<WittRing> {
    Arc::new(WittRing::with_precision(p, m, n0).expect("valid parameters"))
}

pub fn witt(r: &WittRing, rng: &mut ChaCha8Rng) -> W {
    let c: Vec<i64> = (0..r.n0).map(|_| rng.gen_range(0..r.modulus as i64)).collect();
    r.from_coords(&c)
}

pub fn series(r: &Arc<WittRing>, rng: &mut ChaCha8Rng, lo: i64, prec: i64) -> Laurent {
    let terms: Vec<(i64, W)> = (lo..prec).map(|e| (e, witt(r, rng))).collect();
    Laurent::from_terms(r, &terms, prec)
}

/// Invertible series: a unit constant term plus random higher terms.
pub fn unit_series(r: &Arc<WittRing>, rng: &mut ChaCha8Rng, prec: i64) -> Laurent {
    let mut terms: Vec<(i64, W)> = (1..prec).map(|e| (e, witt(r, rng))).collect();
    terms.push((0, r.one()));
    Laurent::from_terms(r, &terms, prec)
}

pub fn element(alg: &LieAlgebra, r: &WittRing, rng: &mut ChaCha8Rng) -> LieElement {
    let mut x = LieVec::zero();
    for h in 0..alg.dim() {
        x.add_term(r, h, witt(r, rng));
    }
    x
}
