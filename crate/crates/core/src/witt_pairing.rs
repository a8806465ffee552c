//! The Witt pairing `[f, g) = Tr Res(f dlog Col g)` between
//! `O(K)/(sigma - id)O(K)` and `K*/K*^{p^M}`, and the embedding of unit
//! classes into the degree-1 part of the Lie algebra.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::artin_hasse::col;
use crate::base_arith::{reduce_i64, WittRing, W};
use crate::nilpotent_lie::{GeneratorId, LieAlgebra, LieElement, LieVec};
use crate::series::Laurent;
use crate::{Error, Result};

/// A class `t0^{a0} prod_a E(alpha_a, t0^a)^{1/a}` mod `p^M`-th powers.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitClass {
    pub ring: Arc<WittRing>,
    pub a0: u64,
    pub exponents: BTreeMap<u32, W>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitClassJson {
    pub a0: i64,
    #[serde(default)]
    pub exponents: BTreeMap<u32, Vec<i64>>,
}

impl UnitClass {
    pub fn new(ring: &Arc<WittRing>, a0: i64, exps: &[(u32, W)]) -> Result<Self> {
        let mut exponents = BTreeMap::new();
        for &(a, alpha) in exps {
            if a == 0 || a as u64 % ring.p == 0 {
                return Err(Error::Params(format!("index {a} is not a positive integer prime to p")));
            }
            let e = exponents.entry(a).or_insert(W::ZERO);
            *e = ring.add(*e, alpha);
        }
        exponents.retain(|_, v| !ring.is_zero(*v));
        Ok(UnitClass { ring: ring.clone(), a0: reduce_i64(a0, ring.modulus), exponents })
    }

    /// The class of `t0`.
    pub fn uniformizer(ring: &Arc<WittRing>) -> Self {
        UnitClass { ring: ring.clone(), a0: 1, exponents: BTreeMap::new() }
    }

    /// The class of `E(alpha, t0^a)^{1/a}`.
    pub fn single(ring: &Arc<WittRing>, a: u32, alpha: W) -> Result<Self> {
        Self::new(ring, 0, &[(a, alpha)])
    }

    /// Group law (written multiplicatively on `K*`).
    pub fn mul(&self, o: &Self) -> Result<Self> {
        if self.ring != o.ring {
            return Err(Error::Mismatch("unit classes over different rings".into()));
        }
        let mut exps: Vec<(u32, W)> = self.exponents.iter().map(|(&a, &v)| (a, v)).collect();
        exps.extend(o.exponents.iter().map(|(&a, &v)| (a, v)));
        Self::new(&self.ring, (self.a0 + o.a0) as i64, &exps)
    }

    /// `k`-th power.
    pub fn pow(&self, k: i64) -> Self {
        let r = &self.ring;
        UnitClass {
            ring: r.clone(),
            a0: r.scale_i64(r.from_int(self.a0 as i64), k).0[0],
            exponents: self.exponents.iter().map(|(&a, &v)| (a, r.scale_i64(v, k))).filter(|(_, v)| !r.is_zero(*v)).collect(),
        }
    }

    /// `Col(g)` with cap `prec`.
    pub fn col(&self, prec: i64) -> Result<Laurent> {
        let exps: Vec<(u32, W)> = self.exponents.iter().map(|(&a, &v)| (a, v)).collect();
        col(&self.ring, self.a0 as i64, &exps, prec)
    }

    /// `a0 D0 + sum_a sum_n sigma^n(alpha_a) D(a, n)`.
    pub fn to_generator_module(&self, alg: &LieAlgebra) -> Result<LieElement> {
        let r = &self.ring;
        let mut out = LieVec::zero();
        if self.a0 != 0 {
            let h = alg.generator(GeneratorId::D0).ok_or_else(|| Error::Precondition("algebra lacks D0".into()))?;
            out.add_term(r.as_ref(), h, r.from_int(self.a0 as i64));
        }
        for (&a, &alpha) in &self.exponents {
            for n in 0..r.n0 as u32 {
                let h = alg
                    .generator(GeneratorId::D { a, n })
                    .ok_or_else(|| Error::Precondition(format!("cutoff excludes D({a},{n})")))?;
                out.add_term(r.as_ref(), h, r.frob_pow(alpha, n as i64));
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> UnitClassJson {
        UnitClassJson {
            a0: self.a0 as i64,
            exponents: self.exponents.iter().map(|(&a, &v)| (a, self.ring.coords(v).into_iter().map(|c| c as i64).collect())).collect(),
        }
    }

    pub fn from_json(ring: &Arc<WittRing>, j: &UnitClassJson) -> Result<Self> {
        let exps: Vec<(u32, W)> = j.exponents.iter().map(|(&a, v)| (a, ring.from_coords(v))).collect();
        Self::new(ring, j.a0, &exps)
    }
}

/// `[f, g) = Tr Res(f dlog Col g)` in `Z/p^M`.
pub fn pair(f: &Laurent, g: &UnitClass) -> Result<u64> {
    if f.ring != g.ring {
        return Err(Error::Mismatch("series and unit class over different rings".into()));
    }
    if f.prec() < 1 {
        return Err(Error::Precision(format!("f is known only below t^{}, the pairing needs t^0", f.prec())));
    }
    // dlog Col g is needed up to t^{-v(f)}
    let depth = (-f.val_or_prec()).max(0);
    let u = g.col(depth + 2)?;
    let w = u.dlog()?;
    let res = f.mul(&w).residue()?;
    Ok(f.ring.trace(res))
}

/// The basis element `gamma_i t^{-a}` of `O(K)` dual to `E(beta_i, t0^a)^{1/a}`.
pub fn dual_series(ring: &Arc<WittRing>, i: usize, a: u32) -> Laurent {
    let (_, gamma) = ring.dual_bases();
    Laurent::monomial(ring, gamma[i], -(a as i64))
}

/// The unit class `E(beta_j, t0^a)^{1/a}`.
pub fn basis_unit(ring: &Arc<WittRing>, j: usize, a: u32) -> Result<UnitClass> {
    let (beta, _) = ring.dual_bases();
    UnitClass::single(ring, a, beta[j])
}

/// Gram matrix of `{gamma_i t^{-a}}` against `{E(beta_j, t0^{a'})^{1/a'}}`
/// for `a, a' <= a_max` prime to `p`; rows and columns are ordered by
/// `(a, i)`.
pub fn gram_matrix(ring: &Arc<WittRing>, a_max: u32) -> Result<Vec<Vec<u64>>> {
    let idx: Vec<(u32, usize)> =
        (1..=a_max).filter(|a| *a as u64 % ring.p != 0).flat_map(|a| (0..ring.n0).map(move |i| (a, i))).collect();
    let mut rows = vec![];
    for &(a, i) in &idx {
        let f = dual_series(ring, i, a);
        let mut row = vec![];
        for &(b, j) in &idx {
            row.push(pair(&f, &basis_unit(ring, j, b)?)?);
        }
        rows.push(row);
    }
    Ok(rows)
}
