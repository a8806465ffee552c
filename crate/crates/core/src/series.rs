//! Laurent series in `t` over `W_K(k)` with an explicit precision cap.
//!
//! A series `f` stores `lo`, a dense run of coefficients starting at `t^lo`,
//! and `prec`: every coefficient of an exponent below `prec` is asserted
//! (those outside the stored run are zero), nothing is claimed at or above
//! `prec`. `prec = INF` marks an exact finite Laurent polynomial.
//!
//! Every operation computes the precision it can prove; operations that
//! would need an unknown coefficient fail with `Error::Precision`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::base_arith::{WittRing, W};
use crate::{Error, Result};

/// Precision of exact series.
pub const INF: i64 = i64::MAX / 4;

fn padd(a: i64, b: i64) -> i64 {
    if a >= INF || b >= INF {
        INF
    } else {
        a + b
    }
}

#[derive(Clone, Debug)]
pub struct Laurent {
    pub ring: Arc<WittRing>,
    lo: i64,
    prec: i64,
    c: Vec<W>,
}

impl PartialEq for Laurent {
    fn eq(&self, other: &Self) -> bool {
        self.prec == other.prec && self.lo_eq(other)
    }
}

/// JSON form: `{"low": int, "prec": int or null, "coeffs": {exp: [ints]}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaurentJson {
    pub low: i64,
    pub prec: Option<i64>,
    pub coeffs: BTreeMap<i64, Vec<u64>>,
}

impl Laurent {
    /// Build from a coefficient run starting at `t^lo`.
    pub fn new(ring: &Arc<WittRing>, lo: i64, c: Vec<W>, prec: i64) -> Self {
        let mut s = Laurent { ring: ring.clone(), lo, prec, c };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        if self.prec < INF {
            let keep = (self.prec - self.lo).max(0) as usize;
            if self.c.len() > keep {
                self.c.truncate(keep);
            }
        }
        let r = &self.ring;
        while let Some(&last) = self.c.last() {
            if r.is_zero(last) {
                self.c.pop();
            } else {
                break;
            }
        }
        let lead = self.c.iter().take_while(|&&x| r.is_zero(x)).count();
        if lead > 0 {
            self.c.drain(..lead);
            self.lo += lead as i64;
        }
        if self.c.is_empty() {
            self.lo = 0;
        }
    }

    fn lo_eq(&self, other: &Self) -> bool {
        self.c == other.c && (self.c.is_empty() || self.lo == other.lo)
    }

    /// `O(t^prec)`.
    pub fn zero(ring: &Arc<WittRing>, prec: i64) -> Self {
        Laurent { ring: ring.clone(), lo: 0, prec, c: vec![] }
    }

    pub fn exact_zero(ring: &Arc<WittRing>) -> Self {
        Self::zero(ring, INF)
    }

    pub fn constant(ring: &Arc<WittRing>, a: W) -> Self {
        Self::new(ring, 0, vec![a], INF)
    }

    pub fn one(ring: &Arc<WittRing>) -> Self {
        Self::constant(ring, ring.one())
    }

    /// Exact monomial `a t^e`.
    pub fn monomial(ring: &Arc<WittRing>, a: W, e: i64) -> Self {
        Self::new(ring, e, vec![a], INF)
    }

    /// The variable `t`.
    pub fn t(ring: &Arc<WittRing>) -> Self {
        Self::monomial(ring, ring.one(), 1)
    }

    /// Exact series from `(exponent, coefficient)` pairs.
    pub fn from_terms(ring: &Arc<WittRing>, terms: &[(i64, W)], prec: i64) -> Self {
        if terms.is_empty() {
            return Self::zero(ring, prec);
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut c = vec![W::ZERO; (hi - lo + 1) as usize];
        for &(e, a) in terms {
            let i = (e - lo) as usize;
            c[i] = ring.add(c[i], a);
        }
        Self::new(ring, lo, c, prec)
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec >= INF
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn valuation(&self) -> Option<i64> {
        if self.c.is_empty() {
            None
        } else {
            Some(self.lo)
        }
    }

    /// Valuation, or the precision for a series with no known nonzero term.
    pub fn val_or_prec(&self) -> i64 {
        self.valuation().unwrap_or(self.prec)
    }

    /// Largest exponent with a stored nonzero coefficient.
    pub fn degree(&self) -> Option<i64> {
        if self.c.is_empty() {
            None
        } else {
            Some(self.lo + self.c.len() as i64 - 1)
        }
    }

    /// True if all asserted coefficients vanish.
    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Coefficient of `t^e`; panics above the precision cap.
    pub fn coeff(&self, e: i64) -> W {
        assert!(e < self.prec, "coefficient t^{e} beyond precision {}", self.prec);
        self.coeff_unchecked(e)
    }

    /// Coefficient of `t^e`, or a precision error.
    pub fn try_coeff(&self, e: i64) -> Result<W> {
        if e >= self.prec {
            return Err(Error::Precision(format!("coefficient t^{e} beyond cap {}", self.prec)));
        }
        Ok(self.coeff_unchecked(e))
    }

    fn coeff_unchecked(&self, e: i64) -> W {
        if e < self.lo || e >= self.lo + self.c.len() as i64 {
            W::ZERO
        } else {
            self.c[(e - self.lo) as usize]
        }
    }

    /// Nonzero terms `(exponent, coefficient)` in increasing order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, W)> + '_ {
        let r = &self.ring;
        self.c
            .iter()
            .enumerate()
            .filter(move |(_, &x)| !r.is_zero(x))
            .map(move |(i, &x)| (self.lo + i as i64, x))
    }

    /// Lower the precision cap.
    pub fn truncate(&self, prec: i64) -> Self {
        let mut s = self.clone();
        s.prec = s.prec.min(prec);
        s.normalize();
        s
    }

    /// Keep only exponents in `[from, to)`, as an exact polynomial.
    pub fn slice(&self, from: i64, to: i64) -> Self {
        let to = to.min(self.prec);
        let terms: Vec<(i64, W)> = self.terms().filter(|&(e, _)| e >= from && e < to).collect();
        Self::from_terms(&self.ring, &terms, INF)
    }

    /// Equality of all coefficients below `bound` (both must be known there).
    pub fn eq_below(&self, other: &Self, bound: i64) -> Result<bool> {
        if bound > self.prec || bound > other.prec {
            return Err(Error::Precision(format!(
                "comparison below t^{bound} with caps {} and {}",
                self.prec, other.prec
            )));
        }
        Ok(self.sub(other).val_or_prec() >= bound)
    }

    pub fn add(&self, o: &Self) -> Self {
        let prec = self.prec.min(o.prec);
        if self.c.is_empty() {
            return o.truncate(prec);
        }
        if o.c.is_empty() {
            return self.truncate(prec);
        }
        let lo = self.lo.min(o.lo);
        let hi = (self.lo + self.c.len() as i64).max(o.lo + o.c.len() as i64);
        let mut c = vec![W::ZERO; (hi - lo) as usize];
        for (i, &x) in self.c.iter().enumerate() {
            c[(self.lo - lo) as usize + i] = x;
        }
        for (i, &x) in o.c.iter().enumerate() {
            let j = (o.lo - lo) as usize + i;
            c[j] = self.ring.add(c[j], x);
        }
        Self::new(&self.ring, lo, c, prec)
    }

    pub fn neg(&self) -> Self {
        let c = self.c.iter().map(|&x| self.ring.neg(x)).collect();
        Laurent { ring: self.ring.clone(), lo: self.lo, prec: self.prec, c }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, a: W) -> Self {
        let c = self.c.iter().map(|&x| self.ring.mul(x, a)).collect();
        Self::new(&self.ring, self.lo, c, self.prec)
    }

    pub fn scale_int(&self, k: i64) -> Self {
        let c = self.c.iter().map(|&x| self.ring.scale_i64(x, k)).collect();
        Self::new(&self.ring, self.lo, c, self.prec)
    }

    /// Multiply by `t^k`.
    pub fn shift(&self, k: i64) -> Self {
        Laurent { ring: self.ring.clone(), lo: self.lo + k, prec: padd(self.prec, k), c: self.c.clone() }
    }

    /// Product with proven precision `min(Pa + vb, Pb + va)`.
    pub fn mul(&self, o: &Self) -> Self {
        let prec = padd(self.prec, o.val_or_prec()).min(padd(o.prec, self.val_or_prec()));
        self.mul_raw(o, prec)
    }

    /// Product truncated at `prec` without precision bookkeeping; callers
    /// must have proven that `prec` is sound.
    pub(crate) fn mul_raw(&self, o: &Self, prec: i64) -> Self {
        if self.c.is_empty() || o.c.is_empty() {
            return Self::zero(&self.ring, prec);
        }
        let lo = self.lo + o.lo;
        let full = self.c.len() + o.c.len() - 1;
        let len = if prec >= INF { full } else { ((prec - lo).max(0) as usize).min(full) };
        let mut c = vec![W::ZERO; len];
        let r = &self.ring;
        for (i, &x) in self.c.iter().enumerate() {
            if i >= len {
                break;
            }
            if r.is_zero(x) {
                continue;
            }
            let jmax = (len - i).min(o.c.len());
            for j in 0..jmax {
                let y = o.c[j];
                c[i + j] = r.add(c[i + j], r.mul(x, y));
            }
        }
        Self::new(&self.ring, lo, c, prec)
    }

    /// Non-negative power.
    pub fn pow(&self, n: u64) -> Self {
        let mut r = Self::one(&self.ring);
        for _ in 0..n {
            r = r.mul(self);
        }
        r
    }

    /// Integer power; negative exponents go through the inverse.
    pub fn powi(&self, n: i64) -> Result<Self> {
        if n >= 0 {
            Ok(self.pow(n as u64))
        } else {
            Ok(self.inverse()?.pow((-n) as u64))
        }
    }

    /// Multiplicative inverse. The series must have a unit coefficient below
    /// its cap; writing `f = c t^v (1 + y)` with `v` the first unit exponent,
    /// the terms of `y` below `t^0` are divisible by `p`, so the geometric
    /// series converges and loses at most `(K-1) L` of precision, `L` the
    /// depth of those terms.
    pub fn inverse(&self) -> Result<Self> {
        let r = &self.ring;
        let (v0, c0) = self
            .terms()
            .find(|&(_, x)| r.is_unit(x))
            .ok_or_else(|| Error::NotUnit("series has no unit coefficient below its cap".into()))?;
        let cinv = r.inv(c0)?;
        let mut y = self.scale(cinv).shift(-v0);
        y = y.sub(&Self::one(&self.ring));
        let depth = (-y.val_or_prec()).max(0);
        let target = if y.is_zero() && y.prec >= INF {
            INF
        } else if y.prec >= INF {
            return Err(Error::Precision(
                "inverse of an exact non-monomial series needs an explicit cap; truncate first".into(),
            ));
        } else {
            y.prec - (r.prec as i64 - 1) * depth
        };
        let negy = y.neg();
        let mut g = Self::one(&self.ring).truncate(target);
        let mut term = Self::one(&self.ring);
        let mut guard = 0usize;
        loop {
            term = term.mul_raw(&negy, target);
            if term.is_zero() {
                break;
            }
            g = g.add(&term);
            guard += 1;
            if guard > 100_000 {
                return Err(Error::NoConvergence("inverse geometric series".into()));
            }
        }
        let g = Laurent { prec: target, ..g };
        Ok(g.scale(cinv).shift(-v0))
    }

    /// `self / o`.
    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inverse()?))
    }

    /// Frobenius lift: `sum a_i t^i -> sum sigma(a_i) t^{p i}`.
    pub fn sigma(&self) -> Self {
        self.sigma_pow(1)
    }

    /// `sigma^n` for `n >= 0`.
    pub fn sigma_pow(&self, n: u32) -> Self {
        if n == 0 {
            return self.clone();
        }
        let r = &self.ring;
        let pn = (r.p as i64).pow(n);
        let terms: Vec<(i64, W)> = self.terms().map(|(e, a)| (e * pn, r.frob_pow(a, n as i64))).collect();
        let prec = if self.prec >= INF { INF } else { self.prec.saturating_mul(pn).min(INF) };
        Self::from_terms(&self.ring, &terms, prec)
    }

    /// `sigma^{-n}`, defined when every exponent and the cap are divisible
    /// by `p^n`.
    pub fn sigma_inv_pow(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Ok(self.clone());
        }
        let r = &self.ring;
        let pn = (r.p as i64).pow(n);
        let mut terms = vec![];
        for (e, a) in self.terms() {
            if e % pn != 0 {
                return Err(Error::Precondition(format!("t^{e} is not in the image of sigma^{n}")));
            }
            terms.push((e / pn, r.frob_pow(a, -(n as i64))));
        }
        let prec = if self.prec >= INF { INF } else { self.prec.div_euclid(pn) + i64::from(self.prec.rem_euclid(pn) != 0) };
        Ok(Self::from_terms(&self.ring, &terms, prec))
    }

    /// Apply the Frobenius of `W(k)` to coefficients only.
    pub fn frob_coeffs(&self, n: i64) -> Self {
        let c = self.c.iter().map(|&x| self.ring.frob_pow(x, n)).collect();
        Self::new(&self.ring, self.lo, c, self.prec)
    }

    /// Formal derivative `d/dt`.
    pub fn derivative(&self) -> Self {
        let r = &self.ring;
        let terms: Vec<(i64, W)> = self.terms().map(|(e, a)| (e - 1, r.scale_i64(a, e))).collect();
        Self::from_terms(&self.ring, &terms, padd(self.prec, -1))
    }

    /// Coefficient of `t^{-1}`.
    pub fn residue(&self) -> Result<W> {
        self.try_coeff(-1)
    }

    /// Logarithmic derivative `u'/u`; includes `a_0/t` when `u = t^{a_0} v`.
    pub fn dlog(&self) -> Result<Self> {
        self.derivative().div(self)
    }

    /// Composition `f(g)`. `g` must have positive valuation; a principal
    /// part of `f` additionally needs `g` invertible.
    pub fn substitute(&self, g: &Self) -> Result<Self> {
        let vg = g.val_or_prec();
        if vg < 1 {
            return Err(Error::Precondition("substitution needs a series of positive valuation".into()));
        }
        let ring = &self.ring;
        // O(t^P) in f becomes O(g^P), of valuation P v_g
        let prec = if self.prec >= INF { INF } else { self.prec.saturating_mul(vg) };
        let mut acc = Self::zero(ring, INF);
        // non-negative part by Horner
        let top = self.degree().unwrap_or(-1);
        if top >= 0 {
            let mut h = Self::zero(ring, INF);
            for e in (0..=top).rev() {
                h = h.mul(g).add(&Self::constant(ring, self.coeff_unchecked(e)));
                if prec < INF {
                    h = h.truncate(h.prec().min(prec));
                }
            }
            acc = acc.add(&h);
        }
        let lowest = self.valuation().unwrap_or(0);
        if lowest < 0 {
            let ginv = g.inverse()?;
            let mut hpart = Self::zero(ring, INF);
            // Horner in g^{-1}: sum_{k>=1} a_{-k} g^{-k}
            let depth = -lowest;
            for k in (1..=depth).rev() {
                hpart = hpart.add(&Self::constant(ring, self.coeff_unchecked(-k))).mul(&ginv);
            }
            acc = acc.add(&hpart);
        }
        Ok(acc.truncate(prec))
    }

    /// Compositional inverse of `f = u_1 t + ...` with `u_1` a unit, by
    /// Newton iteration `g <- g - (f(g) - t) / f'(g)`.
    pub fn reversion(&self, prec: i64) -> Result<Self> {
        let ring = &self.ring;
        if self.valuation() != Some(1) || !ring.is_unit(self.coeff(1)) {
            return Err(Error::Precondition("reversion needs f = (unit) t + O(t^2)".into()));
        }
        let prec = prec.min(self.prec);
        let t = Self::t(ring);
        let df = self.derivative();
        let mut g = t.scale(ring.inv(self.coeff(1))?).truncate(prec.min(2));
        let mut known = 2i64.min(prec);
        while known < prec {
            known = (2 * known).min(prec);
            let terms: Vec<(i64, W)> = g.terms().collect();
            let g0 = Self::from_terms(ring, &terms, known);
            let fg = self.truncate(known).substitute(&g0)?.sub(&t).truncate(known);
            let dfg = df.truncate(known).substitute(&g0)?;
            g = g0.sub(&fg.mul(&dfg.inverse()?)).truncate(known);
        }
        Ok(g)
    }

    /// The `a`-th root with constant term `1` of a series `1 + O(t)`, `a`
    /// prime to `p`.
    pub fn root(&self, a: u64) -> Result<Self> {
        let ring = &self.ring;
        if a % ring.p == 0 {
            return Err(Error::Params(format!("root index {a} divisible by p")));
        }
        if self.valuation() != Some(0) || self.coeff(0) != ring.one() {
            return Err(Error::Precondition("root needs a series with constant term 1".into()));
        }
        if self.prec >= INF {
            return Err(Error::Precision("root of an exact series needs an explicit cap".into()));
        }
        let prec = self.prec;
        let ainv = crate::base_arith::inv_mod(a % ring.modulus, ring.modulus).expect("a prime to p");
        let mut x = Self::one(ring).truncate(prec);
        for _ in 0..64 {
            // x <- x - (x^a - u) / (a x^{a-1})
            let xa1 = x.pow(a - 1);
            let fx = xa1.mul(&x).sub(self);
            let corr = fx.mul(&xa1.inverse()?).scale_int(ainv as i64);
            let nx = x.sub(&corr).truncate(prec);
            if nx == x {
                break;
            }
            x = nx;
        }
        if !x.pow(a).eq_below(self, prec)? {
            return Err(Error::NoConvergence("Newton iteration for the root".into()));
        }
        Ok(x)
    }

    /// Whether `self` lies in `d * m(K)` where `m(K) = t W[[t]]`: computes
    /// `self / d` and checks that nothing at or below `t^0` survives.
    pub fn in_ideal(&self, d: &Self) -> Result<bool> {
        let q = self.div(d)?;
        if q.prec() < 1 {
            return Err(Error::Precision(format!("quotient known only below t^{}", q.prec())));
        }
        Ok(q.val_or_prec() >= 1)
    }

    pub fn to_json(&self) -> LaurentJson {
        LaurentJson {
            low: self.valuation().unwrap_or(0),
            prec: if self.prec >= INF { None } else { Some(self.prec) },
            coeffs: self.terms().map(|(e, a)| (e, self.ring.coords(a))).collect(),
        }
    }

    pub fn from_json(ring: &Arc<WittRing>, j: &LaurentJson) -> Result<Self> {
        let prec = j.prec.unwrap_or(INF);
        let mut terms = vec![];
        for (&e, v) in &j.coeffs {
            if e >= prec {
                return Err(Error::Parse(format!("coefficient t^{e} beyond cap {prec}")));
            }
            if v.len() > ring.n0 {
                return Err(Error::Parse("Witt vector has too many coordinates".into()));
            }
            let cs: Vec<i64> = v.iter().map(|&x| x as i64).collect();
            terms.push((e, ring.from_coords(&cs)));
        }
        Ok(Self::from_terms(ring, &terms, prec))
    }
}
