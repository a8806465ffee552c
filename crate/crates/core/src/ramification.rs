//! Ramification elements `F0(gamma, -N)`, the ideals they generate, the
//! breaks `v(s, M)` in characteristic `p`, the Herbrand function of the
//! tower `K(pi_M)` and the mixed-characteristic breaks.
//!
//! `F0(gamma, -N)` is the sum over tuples `(a_1, n_1), ..., (a_r, n_r)`
//! with `a_1 != 0`, `M > n_1 >= n_2 >= ... >= n_r >= -N` and
//! `sum a_i p^{n_i} = gamma` of
//! `p^{n_1} a_1 eta(n) [...[D(a_1,n_1), D(a_2,n_2)], ..., D(a_r,n_r)]`,
//! where `eta(n)` is the inverse product of the factorials of the run
//! lengths of equal `n_i`, and `D(0, n) = sigma^n(alpha_0) D0`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::base_arith::{inv_mod, WittRing, W};
use crate::nilpotent_lie::{GeneratorId, LieAlgebra, LieElement, LieVec};
use crate::weight_filtration::FiltrationContext;
use crate::{Error, Result};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn rat_frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Decimal form `n` or `n/d` of a rational.
pub fn rat_string(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parse `n` or `n/d`.
pub fn parse_rat(s: &str) -> Result<BigRational> {
    let parse = |x: &str| x.trim().parse::<BigInt>().map_err(|_| Error::Parse(format!("not a rational: {s}")));
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse(d)?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s}")));
            }
            Ok(BigRational::new(parse(n)?, d))
        }
        None => Ok(BigRational::from_integer(parse(s)?)),
    }
}

/// All `F0(gamma, -N)` with nonzero value for a fixed `N`, from one
/// enumeration of the tuples allowed by the algebra's generators.
#[derive(Clone, Debug)]
pub struct F0Table {
    pub depth: u32,
    pub values: BTreeMap<BigRational, LieElement>,
}

impl F0Table {
    pub fn build(alg: &LieAlgebra, ring: &WittRing, depth: u32) -> Self {
        let mut values: BTreeMap<BigRational, LieElement> = BTreeMap::new();
        let a_list: Vec<u32> = alg
            .gens
            .iter()
            .filter_map(|g| match g {
                GeneratorId::D { a, n: 0 } if *a > 0 => Some(*a),
                _ => None,
            })
            .collect();
        let has_d0 = alg.generator(GeneratorId::D0).is_some();
        let mut st = Enum { alg, ring, depth: depth as i64, a_list: &a_list, has_d0, values: &mut values };
        for &a1 in &a_list {
            for n1 in 0..ring.prec as i64 {
                let Some(x) = st.d_elem(a1, n1) else { continue };
                let gamma = rat(a1 as i64) * pow_rat(ring.p, n1);
                // p^{n1} a1
                let lead = ring.mul_p_pow(ring.from_int(a1 as i64), n1 as u32);
                if ring.is_zero(lead) {
                    continue;
                }
                st.walk(&x, gamma, lead, n1, 1, 1, 1);
            }
        }
        values.retain(|_, v| !v.is_zero());
        F0Table { depth, values }
    }

    pub fn get(&self, gamma: &BigRational) -> LieElement {
        self.values.get(gamma).cloned().unwrap_or_else(LieVec::zero)
    }
}

fn pow_rat(p: u64, n: i64) -> BigRational {
    let b = BigInt::from(p).pow(n.unsigned_abs() as u32);
    if n >= 0 {
        BigRational::from_integer(b)
    } else {
        BigRational::new(BigInt::one(), b)
    }
}

struct Enum<'a> {
    alg: &'a LieAlgebra,
    ring: &'a WittRing,
    depth: i64,
    a_list: &'a [u32],
    has_d0: bool,
    values: &'a mut BTreeMap<BigRational, LieElement>,
}

impl Enum<'_> {
    fn d_elem(&self, a: u32, n: i64) -> Option<LieElement> {
        let n0 = self.ring.n0 as i64;
        if a == 0 {
            let h = self.alg.generator(GeneratorId::D0)?;
            return Some(LieVec::single(h, self.ring.frob_pow(self.ring.alpha0(), n)));
        }
        let h = self.alg.generator(GeneratorId::D { a, n: n.rem_euclid(n0) as u32 })?;
        Some(LieVec::single(h, self.ring.one()))
    }

    // record the current bracket, then extend it by one more factor
    #[allow(clippy::too_many_arguments)]
    fn walk(&mut self, x: &LieElement, gamma: BigRational, lead: W, last_n: i64, run: u64, fact: u64, r: usize) {
        let ring = self.ring;
        let eta_den = fact * factorial(run);
        let inv = inv_mod(eta_den % ring.modulus, ring.modulus).expect("run lengths stay below p");
        let coeff = ring.scale(lead, inv);
        let term = x.scale(ring, &coeff);
        self.values.entry(gamma.clone()).or_insert_with(LieVec::zero).add_assign(ring, &term);
        if r >= self.alg.max_degree {
            return;
        }
        let mut next_a: Vec<u32> = self.a_list.to_vec();
        if self.has_d0 {
            next_a.push(0);
        }
        for n in (-self.depth..=last_n).rev() {
            for &a in &next_a {
                let Some(d) = self.d_elem(a, n) else { continue };
                let y = self.alg.bracket(ring, x, &d);
                if y.is_zero() {
                    continue;
                }
                let g = &gamma + rat(a as i64) * pow_rat(ring.p, n);
                let (run2, fact2) = if n == last_n { (run + 1, fact) } else { (1, fact * factorial(run)) };
                self.walk(&y, g, lead, n, run2, fact2, r + 1);
            }
        }
    }
}

fn factorial(n: u64) -> u64 {
    (1..=n).product::<u64>().max(1)
}

/// A `W_M(k)`-submodule of `L_k` in echelon form over the chain ring: each
/// row has a pivot `p^v` and everything before the pivot vanishes; the
/// `p^{M-v}` multiple of every row is also reduced in.
#[derive(Clone, Debug, Default)]
pub struct Ideal {
    pub rows: BTreeMap<usize, LieElement>,
}

impl Ideal {
    // leading-term reduction; stops at the first pivot that does not divide
    fn reduce(&self, ring: &WittRing, x: &LieElement) -> LieElement {
        let mut x = x.clone();
        loop {
            let Some((h, c)) = x.terms.iter().find(|(_, c)| !ring.is_zero(**c)).map(|(&h, &c)| (h, c)) else {
                return LieVec::zero();
            };
            let Some(row) = self.rows.get(&h) else { return x };
            let vr = ring.valuation(row.terms[&h]);
            if ring.valuation(c) < vr {
                return x;
            }
            let f = ring.div_p_pow(c, vr).expect("valuation checked");
            x = x.sub(ring, &row.scale(ring, &f));
            x.terms.retain(|_, c| !ring.is_zero(*c));
        }
    }

    fn insert(&mut self, ring: &WittRing, x: &LieElement) {
        let mut queue = vec![x.clone()];
        while let Some(v) = queue.pop() {
            let v = self.reduce(ring, &v);
            let Some((&h, &c)) = v.terms.iter().find(|(_, c)| !ring.is_zero(**c)) else { continue };
            let val = ring.valuation(c);
            let u = ring.div_p_pow(c, val).expect("valuation");
            let row = v.scale(ring, &ring.inv(u).expect("unit part"));
            if let Some(old) = self.rows.insert(h, row.clone()) {
                queue.push(old);
            }
            if val > 0 {
                queue.push(row.scale(ring, &ring.from_int(ring.p.pow(ring.prec - val) as i64)));
            }
        }
    }

    pub fn contains(&self, ring: &WittRing, x: &LieElement) -> bool {
        self.reduce(ring, x).is_zero()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Whether `self` is contained in `other`.
    pub fn within(&self, ring: &WittRing, other: &Ideal) -> bool {
        self.rows.values().all(|r| other.contains(ring, r))
    }
}

/// Incremental closure under the sigma-twist and brackets with generators.
#[derive(Clone, Debug)]
pub struct IdealBuilder<'a> {
    alg: &'a LieAlgebra,
    ring: &'a WittRing,
    pub ideal: Ideal,
}

impl<'a> IdealBuilder<'a> {
    pub fn new(alg: &'a LieAlgebra, ring: &'a WittRing) -> Self {
        IdealBuilder { alg, ring, ideal: Ideal::default() }
    }

    pub fn add(&mut self, x: &LieElement) {
        let (alg, ring) = (self.alg, self.ring);
        let gens: Vec<LieElement> = (0..alg.gens.len()).map(|g| LieVec::single(g, ring.one())).collect();
        let mut queue = vec![x.clone()];
        while let Some(v) = queue.pop() {
            let red = self.ideal.reduce(ring, &v);
            if red.is_zero() {
                continue;
            }
            self.ideal.insert(ring, &red);
            queue.push(alg.sigma_twist(ring, &red));
            for g in &gens {
                let b = alg.bracket(ring, &red, g);
                if !b.is_zero() {
                    queue.push(b);
                }
            }
        }
    }
}

/// Smallest ideal of `L` whose scalar extension contains `elements`.
pub fn minimal_ideal_containing(alg: &LieAlgebra, ring: &WittRing, elements: &[LieElement]) -> Ideal {
    let mut b = IdealBuilder::new(alg, ring);
    for x in elements {
        b.add(x);
    }
    b.ideal
}

/// `p^{M-1}(e* s - 1)`.
pub fn char_p_break(p: u64, m: u32, estar: u64, s: u32) -> Result<u64> {
    if s == 0 || s as u64 >= p {
        return Err(Error::Params(format!("s = {s} must lie in 1..p")));
    }
    Ok(p.pow(m - 1) * (estar * s as u64 - 1))
}

/// Outcome of the search for the largest `gamma` whose tail ideal leaves
/// `L(s+1)`.
#[derive(Clone, Debug, Serialize)]
pub struct BreakSearch {
    pub s: u32,
    #[serde(serialize_with = "ser_opt_rat")]
    pub value: Option<BigRational>,
    /// First `N` whose answer (value and ideal) matched `N - 1`.
    pub stabilized_at: Option<u32>,
    pub history: Vec<Option<String>>,
}

fn ser_opt_rat<S: serde::Serializer>(q: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match q {
        Some(q) => s.serialize_some(&rat_string(q)),
        None => s.serialize_none(),
    }
}

fn search_once(ctx: &FiltrationContext, s: u32, depth: u32) -> (Option<BigRational>, Ideal) {
    let table = F0Table::build(&ctx.d_alg, &ctx.ring, depth);
    let mut b = IdealBuilder::new(&ctx.d_alg, &ctx.ring);
    for (gamma, v) in table.values.iter().rev() {
        b.add(v);
        if b.ideal.rows.values().any(|row| ctx.d_weight(row) <= s) {
            return (Some(gamma.clone()), b.ideal);
        }
    }
    (None, b.ideal)
}

/// Search with `N = 0, 1, ...` until two consecutive answers agree.
pub fn search_break(ctx: &FiltrationContext, s: u32, n_max: u32) -> Result<BreakSearch> {
    if s + 1 > ctx.w_max + 1 {
        return Err(Error::Precondition(format!("L({}) lies beyond the weight cap {}", s + 1, ctx.w_max)));
    }
    let mut history = vec![];
    let mut prev: Option<(Option<BigRational>, Ideal)> = None;
    for n in 0..=n_max {
        let (v, ideal) = search_once(ctx, s, n);
        history.push(v.as_ref().map(rat_string));
        if let Some((pv, pi)) = &prev {
            let r = ctx.ring.as_ref();
            if *pv == v && pi.within(r, &ideal) && ideal.within(r, pi) {
                return Ok(BreakSearch { s, value: v, stabilized_at: Some(n), history });
            }
        }
        prev = Some((v, ideal));
    }
    let value = prev.and_then(|(v, _)| v);
    Ok(BreakSearch { s, value, stabilized_at: None, history })
}

/// The piecewise-linear `phi` with `phi(0) = 0`, slope 1 on `(0, e*)` and
/// `p^{-m}` on `(e* p^{m-1}, e* p^m)`, where `e* = p e_K / (p - 1)`.
#[derive(Clone, Debug)]
pub struct HerbrandFunction {
    pub p: u64,
    pub e_k: BigRational,
    pub estar: BigRational,
}

impl HerbrandFunction {
    pub fn new(p: u64, e_k: BigRational) -> Result<Self> {
        if !e_k.is_positive() {
            return Err(Error::Params("e_K must be positive".into()));
        }
        let estar = &e_k * rat(p as i64) / rat(p as i64 - 1);
        Ok(HerbrandFunction { p, e_k, estar })
    }

    pub fn phi(&self, x: &BigRational) -> Result<BigRational> {
        if x.is_negative() {
            return Err(Error::Params("phi is defined for x >= 0".into()));
        }
        if *x <= self.estar {
            return Ok(x.clone());
        }
        let p = rat(self.p as i64);
        let mut m = 1i64;
        let mut lo = self.estar.clone();
        loop {
            let hi = &lo * &p;
            if *x <= hi {
                let slope = BigRational::one() / pow_rat(self.p, m);
                return Ok(&self.estar + rat(m - 1) * &self.e_k + (x - &lo) * slope);
            }
            lo = hi;
            m += 1;
        }
    }

    /// `e* p^{m-1}` for `m = 1..=count`.
    pub fn breakpoints(&self, count: u32) -> Vec<BigRational> {
        (0..count as i64).map(|m| &self.estar * pow_rat(self.p, m)).collect()
    }
}

/// Both forms of the mixed-characteristic break.
#[derive(Clone, Debug, Serialize)]
pub struct MixedBreak {
    pub s: u32,
    #[serde(serialize_with = "ser_rat")]
    pub closed: BigRational,
    #[serde(serialize_with = "ser_rat")]
    pub phi_path: BigRational,
    pub agree: bool,
}

fn ser_rat<S: serde::Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&rat_string(q))
}

/// `(p - 1) p^{M-1}` divides `e_K`.
pub fn check_divisibility(p: u64, m: u32, e_k: u64) -> Result<()> {
    let d = (p - 1) * p.pow(m - 1);
    if e_k == 0 || e_k % d != 0 {
        return Err(Error::Precondition(format!("e_K = {e_k} is not a positive multiple of (p-1)p^(M-1) = {d}")));
    }
    Ok(())
}

/// `e_K (M + s/(p-1)) - (1 - delta_{1s})/p` and
/// `max(e* + e_K (M-1), phi(p^{M-1}(s e* - 1)))`.
pub fn mixed_break(p: u64, m: u32, e_k: u64, s: u32) -> Result<MixedBreak> {
    check_divisibility(p, m, e_k)?;
    if s == 0 || s as u64 >= p {
        return Err(Error::Params(format!("s = {s} must lie in 1..p")));
    }
    let ek = rat(e_k as i64);
    let pi = p as i64;
    let mut closed = &ek * (rat(m as i64) + rat_frac(s as i64, pi - 1));
    if s != 1 {
        closed -= rat_frac(1, pi);
    }
    let h = HerbrandFunction::new(p, ek.clone())?;
    let tower = &h.estar + &ek * rat(m as i64 - 1);
    let arg = pow_rat(p, m as i64 - 1) * (rat(s as i64) * &h.estar - rat(1));
    let phi_path = tower.max(h.phi(&arg)?);
    Ok(MixedBreak { s, agree: closed == phi_path, closed, phi_path })
}

/// `phi(p^{M-1} e*) = e* + e_K (M - 1)`.
pub fn tower_break_holds(p: u64, m: u32, e_k: u64) -> Result<bool> {
    check_divisibility(p, m, e_k)?;
    let h = HerbrandFunction::new(p, rat(e_k as i64))?;
    let v = h.phi(&(pow_rat(p, m as i64 - 1) * &h.estar))?;
    Ok(v == &h.estar + rat(e_k as i64) * rat(m as i64 - 1))
}

/// Whether `t^a S^{-u}` lies in `m(K)` modulo `p^c`.
pub fn t_power_in_max_ideal(ctx_basis: &crate::weight_filtration::SBasis, a: i64, u: usize, c: u32) -> Result<bool> {
    let ring = ctx_basis.ring();
    let f = ctx_basis.s_inv_pow(u).shift(a);
    if f.prec() < 1 {
        return Err(Error::Precision(format!("t^{a} S^-{u} known only below t^{}", f.prec())));
    }
    let ok = f.terms().filter(|&(e, _)| e <= 0).all(|(_, x)| ring.valuation(x) >= c);
    Ok(ok)
}

#[derive(Clone, Debug, Serialize)]
pub struct CharPBreak {
    pub s: u32,
    pub formula: String,
    pub search: Option<BreakSearch>,
    pub agree: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportParams {
    pub p: u64,
    #[serde(rename = "M")]
    pub m: u32,
    #[serde(rename = "N0")]
    pub n0: usize,
    pub e_star: u64,
    #[serde(rename = "e_K")]
    pub e_k: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HerbrandJson {
    pub e_star: String,
    pub breakpoints: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Checks {
    pub two_path: bool,
    pub tower_break: bool,
    pub char_p_search: Option<bool>,
    pub monotone_in_s: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RamificationReport {
    pub params: ReportParams,
    pub char_p_breaks: Vec<CharPBreak>,
    pub mixed_breaks: Vec<MixedBreak>,
    pub herbrand: HerbrandJson,
    pub checks: Checks,
}

impl RamificationReport {
    pub fn passed(&self) -> bool {
        self.checks.two_path && self.checks.tower_break && self.checks.monotone_in_s && self.checks.char_p_search != Some(false)
    }
}

/// Breaks for `s = 1..p-1`. `e_star` is the valuation of `S` for the
/// characteristic-`p` formula; a context, when given, also runs the ideal
/// search with `N <= n_max`.
pub fn breaks_report(
    ring: &WittRing,
    e_star: u64,
    e_k: u64,
    search: Option<(&FiltrationContext, u32)>,
) -> Result<RamificationReport> {
    let (p, m) = (ring.p, ring.prec);
    check_divisibility(p, m, e_k)?;
    let mut char_p_breaks = vec![];
    let mut mixed_breaks = vec![];
    for s in 1..p as u32 {
        let f = char_p_break(p, m, e_star, s)?;
        let (srch, agree) = match search {
            Some((ctx, n_max)) if s < ctx.w_max => {
                let b = search_break(ctx, s, n_max)?;
                let ok = b.stabilized_at.is_some() && b.value == Some(rat(f as i64));
                (Some(b), Some(ok))
            }
            _ => (None, None),
        };
        char_p_breaks.push(CharPBreak { s, formula: f.to_string(), search: srch, agree });
        mixed_breaks.push(mixed_break(p, m, e_k, s)?);
    }
    let h = HerbrandFunction::new(p, rat(e_k as i64))?;
    let two_path = mixed_breaks.iter().all(|b| b.agree);
    let monotone_in_s = mixed_breaks.windows(2).all(|w| w[0].closed < w[1].closed)
        && char_p_breaks.windows(2).all(|w| w[0].formula.parse::<u64>().ok() < w[1].formula.parse::<u64>().ok());
    let searched: Vec<bool> = char_p_breaks.iter().filter_map(|b| b.agree).collect();
    let checks = Checks {
        two_path,
        tower_break: tower_break_holds(p, m, e_k)?,
        char_p_search: if searched.is_empty() { None } else { Some(searched.iter().all(|&x| x)) },
        monotone_in_s,
    };
    Ok(RamificationReport {
        params: ReportParams { p, m, n0: ring.n0, e_star, e_k },
        char_p_breaks,
        mixed_breaks,
        herbrand: HerbrandJson {
            e_star: rat_string(&h.estar),
            breakpoints: h.breakpoints(m + 1).iter().map(rat_string).collect(),
        },
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artin_hasse::SElementPack;
    use crate::weight_filtration::SBasis;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use std::sync::Arc;

    fn ring(p: u64, m: u32, n0: usize) -> Arc<WittRing> {
        Arc::new(WittRing::with_precision(p, m, n0).unwrap())
    }

    fn q(s: &str) -> BigRational {
        parse_rat(s).unwrap()
    }

    #[test]
    fn rationals_round_trip() {
        for s in ["0", "3", "11/3", "-2/5"] {
            assert_eq!(rat_string(&q(s)), s);
        }
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn formula_values() {
        assert_eq!(char_p_break(3, 1, 3, 1).unwrap(), 2);
        assert_eq!(char_p_break(3, 1, 3, 2).unwrap(), 5);
        assert_eq!(char_p_break(3, 2, 9, 1).unwrap(), 24);
        assert!(char_p_break(3, 1, 3, 3).is_err());
    }

    #[test]
    fn herbrand_values() {
        let h = HerbrandFunction::new(3, rat(2)).unwrap();
        assert_eq!(h.estar, rat(3));
        assert_eq!(h.phi(&rat(0)).unwrap(), rat(0));
        assert_eq!(h.phi(&rat(3)).unwrap(), rat(3));
        assert_eq!(h.phi(&rat(5)).unwrap(), q("11/3"));
        for m in 0..5i64 {
            let x = &h.estar * pow_rat(3, m);
            assert_eq!(h.phi(&x).unwrap(), &h.estar + rat(m) * &h.e_k);
        }
        assert!(h.phi(&rat(-1)).is_err());
    }

    #[test]
    fn mixed_spot_values() {
        let b1 = mixed_break(3, 1, 2, 1).unwrap();
        assert_eq!((b1.closed.clone(), b1.agree), (rat(3), true));
        let b2 = mixed_break(3, 1, 2, 2).unwrap();
        assert_eq!((b2.closed.clone(), b2.agree), (q("11/3"), true));
        assert!(mixed_break(3, 1, 3, 1).is_err());
        for m in 1..=3 {
            for e_k in (1..=10).map(|k| k * 2 * 3u64.pow(m - 1)) {
                let b = mixed_break(3, m, e_k, 1).unwrap();
                assert_eq!(b.closed, rat(e_k as i64) * (rat(m as i64) + rat_frac(1, 2)));
            }
        }
    }

    #[test]
    fn two_path_grid() {
        for p in [3u64, 5, 7] {
            for m in 1..=3u32 {
                let step = (p - 1) * p.pow(m - 1);
                for e_k in (1..).map(|k| k * step).take_while(|&e| e <= 40) {
                    assert!(tower_break_holds(p, m, e_k).unwrap());
                    let mut last = None;
                    for s in 1..p as u32 {
                        let b = mixed_break(p, m, e_k, s).unwrap();
                        assert!(b.agree, "p={p} M={m} e_K={e_k} s={s}");
                        if let Some(l) = last {
                            assert!(b.closed > l);
                        }
                        last = Some(b.closed);
                    }
                }
            }
        }
    }

    #[test]
    fn monotone_in_e_k() {
        for s in 1..3 {
            let a = mixed_break(3, 1, 2, s).unwrap().closed;
            let b = mixed_break(3, 1, 4, s).unwrap().closed;
            assert!(a < b);
        }
    }

    #[test]
    fn t_power_criterion_grid() {
        for (p, m) in [(3u64, 1u32), (3, 2), (3, 3), (5, 2)] {
            let r = ring(p, m, 1);
            let sb = SBasis::new(SElementPack::standard(&r, 400).unwrap()).unwrap();
            let (estar, e0) = (sb.estar() as i64, sb.e0() as i64);
            for c in (1..=m).filter(|&c| c < m || m <= 2) {
                for u in 1..p as usize {
                    for a in 0..(estar * (u as i64 + 2)) {
                        let expect = a > estar * u as i64 + e0 * (c as i64 - 1);
                        assert_eq!(t_power_in_max_ideal(&sb, a, u, c).unwrap(), expect, "p={p} M={m} a={a} u={u} c={c}");
                    }
                }
            }
        }
    }

    #[test]
    fn t_power_criterion_outside_range() {
        let r = ring(3, 2, 1);
        let sb = SBasis::new(SElementPack::standard(&r, 200).unwrap()).unwrap();
        assert!(t_power_in_max_ideal(&sb, 28, 3, 2).unwrap());
        assert!(!t_power_in_max_ideal(&sb, 27, 3, 2).unwrap());
    }

    #[test]
    fn single_index_terms() {
        let r = ring(3, 1, 1);
        let ctx = FiltrationContext::standard(&r, 2, 2).unwrap();
        let table = F0Table::build(&ctx.d_alg, &r, 1);
        for a in [1u32, 2, 4, 5] {
            let h = ctx.d_alg.generator(GeneratorId::D { a, n: 0 }).unwrap();
            let x = table.get(&rat(a as i64));
            assert_eq!(x.terms.get(&h), Some(&r.from_int(a as i64)));
        }
    }

    #[test]
    fn ideal_basics() {
        let r = WittRing::with_precision(3, 2, 2).unwrap();
        let alg = LieAlgebra::new(3, 2, 2, vec![(GeneratorId::D0, 1), (GeneratorId::D { a: 1, n: 0 }, 1), (GeneratorId::D { a: 1, n: 1 }, 1)], None).unwrap();
        assert!(minimal_ideal_containing(&alg, &r, &[LieVec::zero()]).is_empty());
        let d0 = LieVec::single(alg.generator(GeneratorId::D0).unwrap(), r.from_int(3));
        let i = minimal_ideal_containing(&alg, &r, std::slice::from_ref(&d0));
        assert!(i.contains(&r, &d0));
        let d1 = LieVec::single(alg.generator(GeneratorId::D { a: 1, n: 0 }).unwrap(), r.one());
        assert!(!i.contains(&r, &d1));
        assert!(!i.contains(&r, &LieVec::single(alg.generator(GeneratorId::D0).unwrap(), r.one())));
        let b = alg.bracket(&r, &d0, &d1);
        assert!(i.contains(&r, &b));
        // sigma-twist of D(1,0) is D(1,1)
        let j = minimal_ideal_containing(&alg, &r, std::slice::from_ref(&d1));
        let d11 = LieVec::single(alg.generator(GeneratorId::D { a: 1, n: 1 }).unwrap(), r.one());
        assert!(j.contains(&r, &d11));
        let k = minimal_ideal_containing(&alg, &r, &[d1, d0]);
        assert!(i.within(&r, &k) && j.within(&r, &k));
    }

    fn check_above_break(r: &Arc<WittRing>, w_max: u32, n: u32, seed: u64) {
        let ctx = FiltrationContext::standard(r, (r.p - 1) as usize, w_max).unwrap();
        let table = F0Table::build(&ctx.d_alg, r, n);
        let estar = ctx.pack().estar;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for s in 1..w_max {
            let brk = rat(char_p_break(r.p, r.prec, estar, s).unwrap() as i64);
            let above: Vec<&BigRational> = table.values.keys().filter(|g| **g > brk).collect();
            for _ in 0..20 {
                let g = above.choose(&mut rng).unwrap();
                assert!(ctx.in_filtration(&table.get(g), s + 1).unwrap(), "gamma {g} s {s}");
            }
            let a = (estar * s as u64 - 1) as u32;
            let h = ctx.d_alg.generator(GeneratorId::D { a, n: (r.prec - 1) % r.n0 as u32 }).unwrap();
            let lead = r.mul_p_pow(r.from_int(a as i64), r.prec - 1);
            let diff = table.get(&brk).sub(r.as_ref(), &LieVec::single(h, lead));
            assert!(ctx.in_filtration(&diff, s + 1).unwrap());
            assert!(!ctx.in_filtration(&table.get(&brk), s + 1).unwrap());
        }
    }

    #[test]
    fn elements_above_break_p3_m1() {
        check_above_break(&ring(3, 1, 1), 3, 2, 7);
    }

    #[test]
    fn elements_above_break_p3_m1_n2() {
        check_above_break(&ring(3, 1, 2), 3, 1, 11);
    }

    #[test]
    fn break_search_p3_m1() {
        let r = ring(3, 1, 1);
        let ctx = FiltrationContext::standard(&r, 2, 3).unwrap();
        for (s, v) in [(1, 2), (2, 5)] {
            let b = search_break(&ctx, s, 4).unwrap();
            assert_eq!(b.value, Some(rat(v)), "{b:?}");
            assert!(b.stabilized_at.is_some());
        }
    }

    #[test]
    fn break_search_p3_m2() {
        let r = ring(3, 2, 1);
        let ctx = FiltrationContext::standard(&r, 2, 2).unwrap();
        let b = search_break(&ctx, 1, 3).unwrap();
        assert_eq!(b.value, Some(rat(24)));
        assert!(b.stabilized_at.is_some());
    }

    #[test]
    fn elements_above_break_p3_m2() {
        check_above_break(&ring(3, 2, 1), 2, 1, 5);
    }

    #[test]
    fn report_json_shape() {
        let r = ring(3, 1, 1);
        let rep = breaks_report(&r, 3, 2, None).unwrap();
        assert!(rep.passed());
        let v = serde_json::to_value(&rep).unwrap();
        assert_eq!(v["mixed_breaks"][1]["closed"], "11/3");
        assert_eq!(v["checks"]["two_path"], true);
        assert_eq!(v["herbrand"]["breakpoints"][0], "3");
    }

    proptest! {
        #[test]
        fn phi_is_monotone_and_continuous(num in 0i64..2000, den in 1i64..50) {
            let h = HerbrandFunction::new(5, rat(8)).unwrap();
            let x = rat_frac(num, den);
            let eps = rat_frac(1, 1000);
            let a = h.phi(&x).unwrap();
            let b = h.phi(&(&x + &eps)).unwrap();
            prop_assert!(b > a);
            prop_assert!(&b - &a <= eps);
        }
    }
}
