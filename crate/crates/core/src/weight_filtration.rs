//! The weight filtration `L(s)`, the submodule `N`, reduction modulo
//! `(sigma - id)`-coboundaries in the basis `S^{-m} t^b`, and the
//! normalized element `e_dagger`.
//!
//! Two free Lie algebras are involved. The D-algebra carries the generators
//! `D(a, n)`, `D0` of `e = sum t^{-a} D(a,0) + alpha_0 D0`; the V-algebra
//! carries `V(b, m, i)` of weight `m` and `V0` of weight 1, and `L(s)` is
//! spanned there by Hall words of weight `>= s`. The context computes the
//! surjection `psi` from the truncated D-algebra onto `L / L(w+1)` by solving
//! `e_dagger o c = sigma(c) o psi(e)` degree by degree.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::artin_hasse::SElementPack;
use crate::base_arith::{WittRing, W};
use crate::lift_solver::{solve_conjugation, Split};
use crate::nilpotent_lie::{
    build_e, d_generators, GeneratorId, LieAlgebra, LieElement, LieSeries, LieVec, SeriesRing,
};
use crate::series::{Laurent, INF};
use crate::{Error, Result};

/// Weight of the zero element.
pub const WEIGHT_INF: u32 = u32::MAX;

/// Reduction of a scalar series: `g = sum S^{-m} t^b normal[(b,m)] +
/// alpha_0 l0 + sigma(tilde) - tilde`.
#[derive(Clone, Debug)]
pub struct SeriesReduction {
    pub normal: BTreeMap<(u32, u32), W>,
    pub l0: W,
    pub tilde: Laurent,
}

/// Same over `L_K`; `l0` lies in `L`.
#[derive(Clone, Debug)]
pub struct CoboundaryReduction {
    pub normal: BTreeMap<(u32, u32), LieElement>,
    pub l0: LieElement,
    pub tilde: LieSeries,
}

// principal part handled, power-series part not yet split
#[derive(Clone, Debug)]
struct Partial {
    normal: BTreeMap<(u32, u32), W>,
    plus: Laurent,
    tilde: Laurent,
}

/// Series data around `S` for expansions in powers of `S`.
pub struct SBasis {
    pub pack: SElementPack,
    ring: Arc<WittRing>,
    estar: i64,
    low: Laurent,
    unit_inv: Laurent,
    s_inv: Laurent,
    spp: Laurent,
    pows: Mutex<Vec<Laurent>>,
    inv_pows: Mutex<Vec<Laurent>>,
    spp_pows: Mutex<Vec<Laurent>>,
    monomials: Mutex<HashMap<(i64, usize), Arc<Partial>>>,
}

impl std::fmt::Debug for SBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SBasis").field("estar", &self.estar).field("prec", &self.pack.prec()).finish()
    }
}

fn cached_pow(cache: &Mutex<Vec<Laurent>>, base: &Laurent, k: usize) -> Laurent {
    let mut v = cache.lock().expect("power cache");
    while v.len() <= k {
        let next = match v.last() {
            None => Laurent::one(&base.ring),
            Some(last) => last.mul(base),
        };
        v.push(next);
    }
    v[k].clone()
}

impl SBasis {
    pub fn new(pack: SElementPack) -> Result<Self> {
        let ring = pack.ring().clone();
        let estar = pack.estar as i64;
        if pack.prec() <= 2 * estar {
            return Err(Error::Precision(format!("S known only below t^{}, need well beyond t^{}", pack.prec(), estar)));
        }
        let s = pack.s.clone();
        let low = s.slice(-INF, estar);
        let unit = s.sub(&low).shift(-estar);
        let unit_inv = unit.inverse()?;
        let s_inv = s.inverse()?;
        let spp = pack.sdoubleprime.add(&Laurent::constant(&ring, ring.from_int(ring.p as i64)));
        Ok(SBasis {
            pack,
            ring,
            estar,
            low,
            unit_inv,
            s_inv,
            spp,
            pows: Mutex::new(vec![]),
            inv_pows: Mutex::new(vec![]),
            spp_pows: Mutex::new(vec![]),
            monomials: Mutex::new(HashMap::new()),
        })
    }

    pub fn ring(&self) -> &Arc<WittRing> {
        &self.ring
    }

    pub fn estar(&self) -> u64 {
        self.pack.estar
    }

    pub fn e0(&self) -> u64 {
        self.pack.e0
    }

    /// `S^k`.
    pub fn s_pow(&self, k: usize) -> Laurent {
        cached_pow(&self.pows, &self.pack.s, k)
    }

    /// `S^{-k}`.
    pub fn s_inv_pow(&self, k: usize) -> Laurent {
        cached_pow(&self.inv_pows, &self.s_inv, k)
    }

    /// `S^k` for any integer `k`.
    pub fn s_power(&self, k: i64) -> Laurent {
        if k >= 0 {
            self.s_pow(k as usize)
        } else {
            self.s_inv_pow((-k) as usize)
        }
    }

    fn spp_pow(&self, k: usize) -> Laurent {
        cached_pow(&self.spp_pows, &self.spp, k)
    }

    /// `S^{-m} t^b`.
    pub fn dagger_monomial(&self, b: u32, m: u32) -> Laurent {
        self.s_inv_pow(m as usize).shift(b as i64)
    }

    /// Division `g = r + S q` with `deg r < e*`, for a power series `g`.
    pub fn weierstrass_div(&self, g: &Laurent) -> Result<(Laurent, Laurent)> {
        let e = self.estar;
        let mut cur = g.clone();
        let mut q = Laurent::exact_zero(&self.ring);
        for _ in 0..(self.ring.prec as usize + 2) {
            let lo = cur.slice(-INF, e);
            let hi = cur.sub(&lo).shift(-e);
            if hi.is_zero() {
                if cur.prec() < e {
                    return Err(Error::Precision(format!("remainder mod S known only below t^{}", cur.prec())));
                }
                return Ok((lo, q));
            }
            let step = hi.mul(&self.unit_inv);
            q = q.add(&step);
            cur = lo.sub(&step.mul(&self.low)).truncate(cur.prec());
        }
        Err(Error::NoConvergence("division by S did not terminate".into()))
    }

    fn reduce_principal(&self, g: &Laurent) -> Result<Partial> {
        let ring = &self.ring;
        let p = ring.p as i64;
        let mut out = Partial {
            normal: BTreeMap::new(),
            plus: Laurent::exact_zero(ring),
            tilde: Laurent::exact_zero(ring),
        };
        if g.is_zero() {
            return Ok(out);
        }
        // smallest i0 >= 1 with S^{i0} g a power series
        let mut i0 = 1usize;
        let numer = loop {
            let cand = g.mul(&self.s_pow(i0));
            if cand.val_or_prec() >= 0 {
                break cand;
            }
            i0 += 1;
            if i0 > 4096 {
                return Err(Error::Precision("no power of S clears the poles".into()));
            }
        };
        let mut queue: Vec<(Laurent, usize)> = vec![(numer, i0)];
        let mut tilde_by_m: BTreeMap<usize, Laurent> = BTreeMap::new();
        let mut guard = 0usize;
        while let Some((numer, m)) = queue.pop() {
            guard += 1;
            if guard > 100_000 {
                return Err(Error::NoConvergence("coboundary reduction".into()));
            }
            let mut cur = numer;
            for j in 0..m {
                let (r, q) = self.weierstrass_div(&cur)?;
                cur = q;
                let mm = (m - j) as u32;
                for (b, c) in r.terms() {
                    if b % p != 0 {
                        let e = out.normal.entry((b as u32, mm)).or_insert(W::ZERO);
                        *e = ring.add(*e, c);
                    } else {
                        // c t^b S^{-mm} = sigma(s') with s' = sigma^{-1}(c) t^{b/p} (p + S'')^mm S^{-mm}
                        let n = self.spp_pow(mm as usize).mul(&Laurent::monomial(ring, ring.frob_inv(c), b / p));
                        let slot = tilde_by_m.entry(mm as usize).or_insert_with(|| Laurent::exact_zero(ring));
                        *slot = slot.add(&n);
                        queue.push((n, mm as usize));
                    }
                }
            }
            out.plus = out.plus.add(&cur);
        }
        for (m, n) in tilde_by_m {
            out.tilde = out.tilde.add(&n.mul(&self.s_inv_pow(m)));
        }
        Ok(out)
    }

    fn monomial_partial(&self, e: i64, i: usize) -> Result<Arc<Partial>> {
        if let Some(v) = self.monomials.lock().expect("monomial cache").get(&(e, i)) {
            return Ok(v.clone());
        }
        let (_, gamma) = self.ring.dual_bases();
        let v = Arc::new(self.reduce_principal(&Laurent::monomial(&self.ring, gamma[i], e))?);
        self.monomials.lock().expect("monomial cache").insert((e, i), v.clone());
        Ok(v)
    }

    /// Reduction of a scalar series with finite principal part, known at
    /// least through `t^0`.
    pub fn reduce_series(&self, g: &Laurent) -> Result<SeriesReduction> {
        if g.prec() < 1 {
            return Err(Error::Precision(format!("series known only below t^{}", g.prec())));
        }
        let ring = &self.ring;
        let principal = g.slice(-INF, 0);
        let part = self.reduce_principal(&principal)?;
        let plus = part.plus.add(&g.sub(&principal));
        if plus.prec() < 1 {
            return Err(Error::Precision("power-series part lost its constant term".into()));
        }
        let c0 = plus.coeff(0);
        let l0 = ring.from_int(ring.trace(c0) as i64);
        let z = constant_correction(ring, c0);
        let pos = plus.sub(&Laurent::constant(ring, c0));
        let tilde = part.tilde.add(&Laurent::constant(ring, z)).add(&neg_sigma_sum(&pos));
        Ok(SeriesReduction { normal: part.normal, l0, tilde })
    }

    /// `sum S^{-m} t^b normal + alpha_0 l0 + sigma(tilde) - tilde`.
    pub fn reconstruct_series(&self, red: &SeriesReduction) -> Laurent {
        let ring = &self.ring;
        let mut out = Laurent::constant(ring, ring.mul(ring.alpha0(), red.l0));
        for (&(b, m), &c) in &red.normal {
            out = out.add(&self.dagger_monomial(b, m).scale(c));
        }
        out.add(&red.tilde.sigma()).sub(&red.tilde)
    }

    /// Reduction over `L_K`, with `sigma` twisting the generators of `alg`.
    pub fn reduce_mod_coboundary(&self, alg: &LieAlgebra, x: &LieSeries) -> Result<CoboundaryReduction> {
        let ring = &self.ring;
        if x.prec() < 1 {
            return Err(Error::Precision(format!("element known only below t^{}", x.prec())));
        }
        let (beta, _) = ring.dual_bases();
        let mut normal: BTreeMap<(u32, u32), LieElement> = BTreeMap::new();
        let mut plus = x.nonneg();
        let mut tilde: LieSeries = LieVec::zero();
        for (e, alpha) in x.principal().by_exponent() {
            for (i, b) in beta.iter().enumerate() {
                let l = trace_twist(alg, ring, &alpha.scale(ring.as_ref(), b));
                if l.is_zero() {
                    continue;
                }
                let part = self.monomial_partial(e, i)?;
                for (&bm, &c) in &part.normal {
                    normal.entry(bm).or_insert_with(LieVec::zero).add_assign(ring.as_ref(), &l.scale(ring.as_ref(), &c));
                }
                plus.add_tensor(&part.plus, &l);
                tilde.add_tensor(&part.tilde, &l);
            }
        }
        normal.retain(|_, v| !v.is_zero());
        if plus.prec() < 1 {
            return Err(Error::Precision("power-series part lost its constant term".into()));
        }
        let c0 = plus.coeff(0)?;
        let l0 = trace_twist(alg, ring, &c0);
        let r = ring.as_ref();
        let mut z = LieVec::zero();
        for i in 1..ring.n0 {
            let si = alg.sigma_twist_pow(r, &c0, i as i64);
            for j in 0..i {
                z.add_assign(r, &si.scale(r, &ring.frob_pow(ring.alpha0(), j as i64)));
            }
        }
        tilde.add_tensor(&Laurent::one(ring), &z);
        let pos = plus.map_series(|c| Ok(c.sub(&Laurent::constant(ring, c.coeff(0)))))?;
        let sr = SeriesRing::new(ring);
        let prec = pos.prec();
        let mut cur = pos;
        while cur.terms.values().any(|c| c.val_or_prec() < prec) {
            tilde = tilde.sub(&sr, &cur);
            cur = alg.sigma_series(&sr, &cur);
        }
        let tilde = tilde.truncate(prec);
        Ok(CoboundaryReduction { normal, l0, tilde })
    }

    /// `sum S^{-m} t^b l_(b,m) + alpha_0 l0 + sigma(tilde) - tilde` over `L_K`.
    pub fn reconstruct(&self, alg: &LieAlgebra, red: &CoboundaryReduction) -> LieSeries {
        let ring = &self.ring;
        let sr = SeriesRing::new(ring);
        let mut out = LieSeries::tensor(&Laurent::constant(ring, ring.alpha0()), &red.l0);
        for (&(b, m), l) in &red.normal {
            out.add_tensor(&self.dagger_monomial(b, m), l);
        }
        out.add(&sr, &alg.sigma_series(&sr, &red.tilde)).sub(&sr, &red.tilde)
    }
}

/// `sum_n sigma^n(x)` with the generator twist, an element of `L`.
pub fn trace_twist(alg: &LieAlgebra, ring: &WittRing, x: &LieElement) -> LieElement {
    let mut out = LieVec::zero();
    for n in 0..ring.n0 {
        out.add_assign(ring, &alg.sigma_twist_pow(ring, x, n as i64));
    }
    out
}

// z with sigma(z) - z = c - alpha_0 Tr(c)
fn constant_correction(ring: &WittRing, c: W) -> W {
    let mut z = W::ZERO;
    for i in 1..ring.n0 {
        for j in 0..i {
            let t = ring.mul(ring.frob_pow(ring.alpha0(), j as i64), ring.frob_pow(c, i as i64));
            z = ring.add(z, t);
        }
    }
    z
}

// -sum_{j>=0} sigma^j(f) for f in m(K), truncated at the cap of f
fn neg_sigma_sum(f: &Laurent) -> Laurent {
    let prec = f.prec();
    let mut acc = Laurent::exact_zero(&f.ring);
    let mut cur = f.clone();
    while cur.val_or_prec() < prec {
        acc = acc.sub(&cur);
        cur = cur.sigma();
    }
    acc.truncate(prec)
}

/// `e_dagger = (-sigma x) o e o x` in D-coordinates.
#[derive(Clone, Debug)]
pub struct DaggerForm {
    pub e_dagger: LieSeries,
    pub x: LieSeries,
    pub v: BTreeMap<(u32, u32), LieElement>,
    pub v0: LieElement,
    /// `V`-tables after each pass of the iteration.
    pub history: Vec<BTreeMap<(u32, u32), LieElement>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DaggerJson {
    pub v: BTreeMap<String, BTreeMap<usize, Vec<u64>>>,
    pub v0: BTreeMap<usize, Vec<u64>>,
    pub passes: usize,
}

impl DaggerForm {
    pub fn to_json(&self, ring: &WittRing) -> DaggerJson {
        DaggerJson {
            v: self.v.iter().map(|(&(b, m), l)| (format!("{b},{m}"), l.to_json(ring))).collect(),
            v0: self.v0.to_json(ring),
            passes: self.history.len(),
        }
    }
}

/// The filtration data: `S`, both algebras, the map `psi` from D- to
/// V-coordinates, and the weight cap `w_max` (everything is computed modulo
/// `L(w_max + 1)`).
pub struct FiltrationContext {
    pub basis: Arc<SBasis>,
    pub ring: Arc<WittRing>,
    pub class: usize,
    pub w_max: u32,
    pub a_max: u32,
    pub d_alg: LieAlgebra,
    pub v_alg: LieAlgebra,
    pub e: LieSeries,
    pub e_dagger_v: LieSeries,
    /// `L(s)` is spanned by D-words of weight `>= s` (true for `M = 1`).
    pub monomial: bool,
    pub prec: i64,
    psi_words: Vec<LieElement>,
}

impl std::fmt::Debug for FiltrationContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiltrationContext")
            .field("class", &self.class)
            .field("w_max", &self.w_max)
            .field("a_max", &self.a_max)
            .field("d_dim", &self.d_alg.dim())
            .field("v_dim", &self.v_alg.dim())
            .finish()
    }
}

/// Lower bound for the weight of `D(a, n)`: `D_a` lies in `L(u)` once
/// `a >= e*(u-1) + (M-1) e0 + 1`; exact for `M = 1`.
pub fn d_weight_bound(a: u32, estar: u64, e0: u64, m: u32) -> u32 {
    if a == 0 {
        return 1;
    }
    let shift = (m as i64 - 1) * e0 as i64;
    let x = a as i64 - shift - 1;
    if x < 0 {
        1
    } else {
        (x / estar as i64 + 1) as u32
    }
}

impl FiltrationContext {
    /// Build the context for `S0` from `pack`, nilpotent class `class < p`
    /// and weight cap `w_max`. `prec` bounds the positive part of every
    /// series; `None` picks a cap from the pole orders involved.
    pub fn new(pack: SElementPack, class: usize, w_max: u32, prec: Option<i64>) -> Result<Self> {
        let ring = pack.ring().clone();
        let (p, m, n0) = (ring.p, ring.prec, ring.n0 as u32);
        let (estar, e0) = (pack.estar, pack.e0);
        if w_max == 0 {
            return Err(Error::Params("weight cap must be positive".into()));
        }
        let a_max = (estar * w_max as u64 + (m as u64 - 1) * e0) as u32;
        let depth = a_max as i64 + (m as i64 - 1) * e0 as i64;
        let prec = prec.unwrap_or(2 + (p as i64 + 1) * depth * class as i64 + estar as i64);
        if pack.prec() < prec + 2 * depth + estar as i64 * (w_max as i64 + 2) {
            return Err(Error::Precision(format!(
                "S is known below t^{}, the context needs t^{}",
                pack.prec(),
                prec + 2 * depth + estar as i64 * (w_max as i64 + 2)
            )));
        }
        let basis = Arc::new(SBasis::new(pack)?);
        let d_gens = d_generators(p, n0, a_max, |a| d_weight_bound(a, estar, e0, m));
        let d_alg = LieAlgebra::new(p, class, n0, d_gens, Some(w_max))?;
        let mut v_gens = vec![(GeneratorId::V0, 1)];
        for mm in 1..=w_max {
            for b in 1..estar as u32 {
                if b as u64 % p == 0 {
                    continue;
                }
                for i in 0..n0 {
                    v_gens.push((GeneratorId::V { b, m: mm, i }, mm));
                }
            }
        }
        let v_alg = LieAlgebra::new(p, class, n0, v_gens, Some(w_max))?;
        let e = build_e(&d_alg, &ring).truncate(prec);
        let e_dagger_v = dagger_element(&basis, &v_alg).truncate(prec);
        let init = vec![LieVec::zero(); d_alg.gens.len()];
        let sol = solve_conjugation(&d_alg, &e, &v_alg, &ring, &e_dagger_v, init, class, Split::Plain)?;
        let psi_words = d_alg.eval_words_in(&v_alg, ring.as_ref(), &sol.images);
        Ok(FiltrationContext {
            basis,
            ring,
            class,
            w_max,
            a_max,
            d_alg,
            v_alg,
            e,
            e_dagger_v,
            monomial: m == 1,
            prec,
            psi_words,
        })
    }

    /// Context for `S0 = t`.
    pub fn standard(ring: &Arc<WittRing>, class: usize, w_max: u32) -> Result<Self> {
        let p = ring.p as i64;
        let estar = p.pow(ring.prec);
        let a_max = estar * w_max as i64 + (ring.prec as i64 - 1) * (estar - estar / p);
        let depth = a_max + (ring.prec as i64 - 1) * (estar - estar / p);
        let prec = 2 + (p + 1) * depth * class as i64 + estar;
        let pack = SElementPack::standard(ring, prec + 2 * depth + estar * (w_max as i64 + 2) + 8)?;
        Self::new(pack, class, w_max, Some(prec))
    }

    pub fn pack(&self) -> &SElementPack {
        &self.basis.pack
    }

    /// Weight of an element of the V-algebra; `WEIGHT_INF` for zero.
    pub fn weight(&self, l: &LieElement) -> u32 {
        let r = self.ring.as_ref();
        l.terms
            .iter()
            .filter(|(_, c)| !r.is_zero(**c))
            .map(|(&h, _)| self.v_alg.weight(h))
            .min()
            .unwrap_or(WEIGHT_INF)
    }

    /// `psi` on an element of the D-algebra over `W_M(k)`.
    pub fn psi(&self, x: &LieElement) -> LieElement {
        let r = self.ring.as_ref();
        let mut out = LieVec::zero();
        for (&h, c) in &x.terms {
            out.add_assign(r, &self.psi_words[h].scale(r, c));
        }
        out
    }

    /// `psi` on `L_K`.
    pub fn psi_series(&self, x: &LieSeries) -> LieSeries {
        let mut out = LieVec::zero();
        for (&h, f) in &x.terms {
            out.add_tensor(f, &self.psi_words[h]);
        }
        out
    }

    /// Weight of a D-coordinate element, through `psi`.
    pub fn d_weight(&self, x: &LieElement) -> u32 {
        self.weight(&self.psi(x))
    }

    /// Whether a D-coordinate element lies in `L(s)_k`.
    pub fn in_filtration(&self, x: &LieElement, s: u32) -> Result<bool> {
        if s > self.w_max + 1 {
            return Err(Error::Precondition(format!("L({s}) lies beyond the weight cap {}", self.w_max)));
        }
        Ok(self.d_weight(x) >= s)
    }

    /// Whether a V-coordinate element of `L_K` lies in
    /// `N^(i) = sum_{s >= i} S^{-s} L(s)_{m(K)}`.
    pub fn in_n_layer(&self, x: &LieSeries, i: u32) -> Result<bool> {
        for (&h, f) in &x.terms {
            let w = self.v_alg.weight(h);
            if w < i {
                if !f.is_zero() {
                    return Ok(false);
                }
                continue;
            }
            let g = f.mul(&self.basis.s_pow(w as usize));
            if g.prec() < 1 {
                return Err(Error::Precision(format!("coefficient known only below t^{}", g.prec())));
            }
            if g.val_or_prec() < 1 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Membership in `N`; `coords_d` selects D-coordinates (mapped by `psi`).
    pub fn membership_n(&self, x: &LieSeries, coords_d: bool) -> Result<bool> {
        if coords_d {
            self.in_n_layer(&self.psi_series(x), 1)
        } else {
            self.in_n_layer(x, 1)
        }
    }

    /// `S^s`.
    pub fn unit_power_s(&self, s: u32) -> Laurent {
        self.basis.s_pow(s as usize)
    }

    /// Iterate `x <- x o l~` where `(-sigma x) o e o x = (normal part) +
    /// sigma(l~) - l~` until the correction vanishes, in the D-algebra.
    pub fn normalize_dagger(&self, e: &LieSeries) -> Result<DaggerForm> {
        let sr = SeriesRing::new(&self.ring);
        let alg = &self.d_alg;
        let mut x: LieSeries = LieVec::zero();
        let mut history = vec![];
        if e.all_zero() {
            return Ok(DaggerForm { e_dagger: e.clone(), x, v: BTreeMap::new(), v0: LieVec::zero(), history });
        }
        for _ in 0..=(self.class + 1) {
            let sx = alg.sigma_series(&sr, &x);
            let r = alg.ch_compose(&sr, &alg.ch_compose(&sr, &sx.neg(&sr), e), &x);
            let red = self.basis.reduce_mod_coboundary(alg, &r)?;
            history.push(red.normal.clone());
            if red.tilde.all_zero() {
                let mut ed = LieSeries::tensor(&Laurent::constant(&self.ring, self.ring.alpha0()), &red.l0);
                for (&(b, m), l) in &red.normal {
                    ed.add_tensor(&self.basis.dagger_monomial(b, m), l);
                }
                return Ok(DaggerForm { e_dagger: ed, x, v: red.normal, v0: red.l0, history });
            }
            x = alg.ch_compose(&sr, &x, &red.tilde);
        }
        Err(Error::NoConvergence("dagger normalization did not settle within the class bound".into()))
    }

    /// `(-sigma x) o e o x - e_dagger`, which vanishes below the cap.
    pub fn dagger_residual(&self, form: &DaggerForm) -> LieSeries {
        let sr = SeriesRing::new(&self.ring);
        let alg = &self.d_alg;
        let sx = alg.sigma_series(&sr, &form.x);
        let r = alg.ch_compose(&sr, &alg.ch_compose(&sr, &sx.neg(&sr), &self.e), &form.x);
        r.sub(&sr, &form.e_dagger)
    }
}

/// `sum S^{-m} t^b gamma_i V(b,m,i) + alpha_0 V0` in the V-algebra.
pub fn dagger_element(basis: &SBasis, v_alg: &LieAlgebra) -> LieSeries {
    let ring = basis.ring();
    let (_, gamma) = ring.dual_bases();
    let mut out = LieVec::zero();
    for (h, g) in v_alg.gens.iter().enumerate() {
        match *g {
            GeneratorId::V { b, m, i } => {
                out.terms.insert(h, basis.dagger_monomial(b, m).scale(gamma[i as usize]));
            }
            GeneratorId::V0 => {
                out.terms.insert(h, Laurent::constant(ring, ring.alpha0()));
            }
            _ => {}
        }
    }
    out
}
