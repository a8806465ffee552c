use std::sync::Arc;

use nast::lift_solver::{ad_h_class2_check, h_iterate_check, op_r, op_s, s_layer_element, solve_lift, torsion_check};
use nast::nilpotent_lie::d_generators;
use nast::ramification::{char_p_break, mixed_break, rat_string, search_break, tower_break_holds};
use nast::witt_pairing::{gram_matrix, pair};
use nast::{
    Error, FiltrationContext, HMap, Laurent, LieAlgebra, LieElement, LieSeries, LieVec, LiftForm, SElementPack,
    SeriesRing, UnitClass, WittRing, W,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;

pub const SUITES: [&str; 9] = ["bch", "pairing", "prop21", "prop31", "lemma32", "lemma34", "lemma36", "prop38", "thm44"];

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checked: usize,
    pub passed: bool,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

struct Tally {
    checked: usize,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { checked: 0, failures: vec![], notes: vec![] }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self, suite: &str) -> SuiteReport {
        SuiteReport { suite: suite.into(), checked: self.checked, passed: self.failures.is_empty(), failures: self.failures, notes: self.notes }
    }
}

fn ring(cfg: &RunConfig) -> Result<Arc<WittRing>, Error> {
    Ok(Arc::new(WittRing::with_precision(cfg.p, cfg.m, cfg.n0)?))
}

fn rand_w(r: &WittRing, rng: &mut ChaCha8Rng) -> W {
    let c: Vec<i64> = (0..r.n0).map(|_| rng.gen_range(0..r.modulus as i64)).collect();
    r.from_coords(&c)
}

fn rand_elem(alg: &LieAlgebra, r: &WittRing, rng: &mut ChaCha8Rng) -> LieElement {
    let mut x = LieVec::zero();
    for h in 0..alg.dim() {
        if rng.gen_bool(0.5) {
            x.add_term(r, h, rand_w(r, rng));
        }
    }
    x
}

fn rand_series(r: &Arc<WittRing>, rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Laurent {
    let terms: Vec<(i64, W)> = (lo..hi).map(|e| (e, rand_w(r, rng))).collect();
    Laurent::from_terms(r, &terms, hi)
}

pub fn run(cfg: &RunConfig, suite: &str) -> Result<SuiteReport, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = Tally::new();
    match suite {
        "bch" => {
            let r = ring(cfg)?;
            let class = cfg.class.unwrap_or(cfg.p as usize - 1);
            let alg = LieAlgebra::free(cfg.p, class, 3)?;
            let flat = LieAlgebra::free(cfg.p, 1, 3)?;
            for _ in 0..200 {
                let (x, y, z) = (rand_elem(&alg, &r, &mut rng), rand_elem(&alg, &r, &mut rng), rand_elem(&alg, &r, &mut rng));
                let lhs = alg.ch_compose(r.as_ref(), &alg.ch_compose(r.as_ref(), &x, &y), &z);
                let rhs = alg.ch_compose(r.as_ref(), &x, &alg.ch_compose(r.as_ref(), &y, &z));
                t.check(lhs == rhs, || "associativity".into());
                t.check(alg.ch_power(r.as_ref(), &x, r.modulus).is_zero(), || "p^M-th power".into());
                let (u, v) = (rand_elem(&flat, &r, &mut rng), rand_elem(&flat, &r, &mut rng));
                t.check(flat.ch_compose(r.as_ref(), &u, &v) == u.add(r.as_ref(), &v), || "class-1 composition".into());
            }
        }
        "pairing" => {
            let r = ring(cfg)?;
            let g = gram_matrix(&r, cfg.amax)?;
            for (i, row) in g.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    t.check(v == u64::from(i == j), || format!("Gram entry ({i},{j}) = {v}"));
                }
            }
            for _ in 0..100 {
                let h = rand_series(&r, &mut rng, -8, 4);
                let f = h.sigma().sub(&h).truncate(4);
                let exps: Vec<(u32, W)> =
                    (1..8u32).filter(|a| *a as u64 % cfg.p != 0).map(|a| (a, rand_w(&r, &mut rng))).collect();
                let unit = UnitClass::new(&r, rng.gen_range(0..r.modulus as i64), &exps)?;
                t.check(pair(&f, &unit)? == 0, || "coboundary pairs nontrivially".into());
            }
        }
        "prop21" => {
            let r = ring(cfg)?;
            let pack = SElementPack::standard(&r, cfg.prec.unwrap_or(80))?;
            t.check(pack.differential_vanishes(cfg.p as u32), || "l gamma_ls != 0".into());
            t.check(pack.frobenius_relation_holds()?, || "sigma(S') != S".into());
            t.check(pack.factorization_holds()?, || "S != S'(p + S'')".into());
            let res = pack.eta_residual();
            t.check(res.terms().all(|(_, c)| r.valuation(c) >= 2.min(cfg.m)), || "eta residual".into());
            t.check(r.is_unit(pack.eta0.coeff(0)) && r.is_unit(pack.eta1.coeff(0)), || "eta0, eta1 units".into());
        }
        "prop31" => {
            let r = ring(cfg)?;
            let n_max = cfg.p.pow(cfg.m) as u32;
            let prec = cfg.prec.unwrap_or(12 * n_max as i64);
            let pack = SElementPack::standard(&r, prec + 20)?;
            for n in 1..=n_max {
                t.check(h_iterate_check(&pack, n, prec)?, || format!("h^{n}(t) != t E(n, S)"));
            }
        }
        "lemma32" => {
            let r = ring(cfg)?;
            let sr = SeriesRing::new(&r);
            let class = cfg.class.unwrap_or(2).min(cfg.p as usize - 1);
            let alg = LieAlgebra::new(cfg.p, class, cfg.n0 as u32, d_generators(cfg.p, cfg.n0 as u32, 4, |_| 1), None)?;
            for _ in 0..100 {
                let mut b: LieSeries = LieVec::zero();
                for h in 0..alg.dim() {
                    if rng.gen_bool(0.4) {
                        b.terms.insert(h, rand_series(&r, &mut rng, -30, 20));
                    }
                }
                let rb = op_r(&alg, &r, &b)?;
                let sb = op_s(&alg, &r, &b)?;
                let back = rb.add(&sr, &alg.sigma_series(&sr, &sb)).sub(&sr, &sb).sub(&sr, &b);
                t.check(back.terms.values().all(|c| c.val_or_prec() >= b.prec()), || "b != R(b) + (sigma - 1)S(b)".into());
            }
        }
        "lemma34" => {
            if cfg.m != 1 {
                return Err(Error::Precondition("the class-2 shift check runs at M = 1".into()));
            }
            let r = ring(cfg)?;
            let ctx = FiltrationContext::standard(&r, 2.min(cfg.p as usize - 1), 3)?;
            let h = HMap::from_pack(ctx.pack(), ctx.prec)?;
            let rep = ad_h_class2_check(&ctx, &h)?;
            t.checked += rep.checked;
            t.failures.extend(rep.failures.iter().map(|w| format!("{} -> {} (weight {}, bound {})", w.generator, w.word, w.weight, w.bound)));
            if !rep.v0_fixed {
                t.failures.push("V0 is not fixed".into());
            }
        }
        "lemma36" => {
            if cfg.m != 1 {
                return Err(Error::Precondition("the torsion check uses the e-form solver, which needs M = 1".into()));
            }
            let r = ring(cfg)?;
            let ctx = FiltrationContext::standard(&r, 2.min(cfg.p as usize - 1), 2)?;
            let h = HMap::from_pack(ctx.pack(), ctx.prec)?;
            let sol = solve_lift(&ctx, &h, LiftForm::E, ctx.class)?;
            for i in 0..20 {
                let mut coeff = || rand_w(&r, &mut rng);
                let m = s_layer_element(&ctx.d_alg, &ctx.basis, &mut coeff, 4, 40);
                t.check(torsion_check(&ctx, &sol, &h, &m)?, || format!("sample {i} leaves S^p M"));
            }
        }
        "prop38" => {
            let r = ring(cfg)?;
            let w_max = if cfg.m == 1 { cfg.p as u32 } else { 2 };
            let ctx = FiltrationContext::standard(&r, cfg.p as usize - 1, w_max)?;
            let estar = ctx.pack().estar;
            for s in 1..(cfg.p as u32).min(w_max) {
                let f = char_p_break(cfg.p, cfg.m, estar, s)?;
                let b = search_break(&ctx, s, cfg.nmax)?;
                let found = b.value.as_ref().map(rat_string).unwrap_or_else(|| "none".into());
                t.check(b.stabilized_at.is_some() && found == f.to_string(), || format!("s={s}: formula {f}, search {found}"));
                let stable = b.stabilized_at.map(|n| format!("stable at N={n}")).unwrap_or_else(|| "not stable".into());
                t.notes.push(format!("s={s}: break {found}, {stable}"));
            }
        }
        "thm44" => {
            for p in [3u64, 5, 7] {
                for m in 1..=3u32 {
                    let step = (p - 1) * p.pow(m - 1);
                    for e_k in (1..).map(|k| k * step).take_while(|&e| e <= 40) {
                        t.check(tower_break_holds(p, m, e_k)?, || format!("tower break p={p} M={m} e_K={e_k}"));
                        for s in 1..p as u32 {
                            let b = mixed_break(p, m, e_k, s)?;
                            t.check(b.agree, || format!("p={p} M={m} e_K={e_k} s={s}"));
                        }
                    }
                }
            }
            t.notes.push(format!("grid size {}", t.checked));
        }
        other => return Err(Error::Params(format!("unknown suite {other}; expected one of {}", SUITES.join(", ")))),
    }
    Ok(t.finish(suite))
}
