//! Exact arithmetic in `k = F_{p^N0}`, `W_K(k)` and `Z/p^K`.
//!
//! `W_K(k)` is realised as `Z/p^K [x] / (F)` where `F` is the integer lift
//! (digits in `[0, p)`) of the lowest monic irreducible polynomial of degree
//! `N0` over `F_p`, ordered lexicographically on its coefficients read from
//! `x^{N0-1}` down to `x^0`. The same integer polynomial is used at every
//! precision, so rings of different precision are compatible quotients of
//! `W(k)`. Elements are stored as `N0` coordinates in the basis
//! `1, x, ..., x^{N0-1}`; this list of integers is also the JSON form of a
//! Witt vector.
//!
//! Witt components `(a_0, ..., a_{K-1})` correspond to `sum p^i [a_i^{p^-i}]`
//! where `[.]` is the Teichmuller lift.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported residue degree `N0`.
pub const MAX_N0: usize = 4;

pub(crate) fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(m as i128) as u64)
}

/// Reduce a signed integer into `[0, m)`.
pub fn reduce_i64(a: i64, m: u64) -> u64 {
    (a as i128).rem_euclid(m as i128) as u64
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// p-adic valuation of a nonzero integer; `u32::MAX` for zero.
pub fn vp(n: i64, p: u64) -> u32 {
    if n == 0 {
        return u32::MAX;
    }
    let mut n = n.unsigned_abs();
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// `p`-adic valuation of `n!`.
pub fn vp_factorial(n: u64, p: u64) -> u32 {
    let mut v = 0;
    let mut q = p;
    while q <= n {
        v += (n / q) as u32;
        q = match q.checked_mul(p) {
            Some(x) => x,
            None => break,
        };
    }
    v
}

/// Parameters `(p, M, N0)`: `p` an odd prime, Witt length `M`, `k = F_{p^N0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimePower {
    pub p: u64,
    #[serde(rename = "M")]
    pub m: u32,
    #[serde(rename = "N0")]
    pub n0: usize,
}

impl PrimePower {
    pub fn new(p: u64, m: u32, n0: usize) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::Params(format!("p = {p} must be an odd prime")));
        }
        if m == 0 {
            return Err(Error::Params("M must be positive".into()));
        }
        if n0 == 0 || n0 > MAX_N0 {
            return Err(Error::Params(format!("N0 = {n0} must lie in 1..={MAX_N0}")));
        }
        let pm = (p as u128).checked_pow(m + 2).unwrap_or(u128::MAX);
        if pm >= 1u128 << 62 {
            return Err(Error::Params(format!("p^M too large for p = {p}, M = {m}")));
        }
        Ok(Self { p, m, n0 })
    }

    /// `q0 = p^N0`.
    pub fn q0(&self) -> u64 {
        self.p.pow(self.n0 as u32)
    }

    /// `p^M`.
    pub fn pm(&self) -> u64 {
        self.p.pow(self.m)
    }
}

/// An element of some `W_K(k)`; meaningful only together with its ring.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct W(pub [u64; MAX_N0]);

impl W {
    pub const ZERO: W = W([0; MAX_N0]);
}

// ---------------------------------------------------------------------------
// polynomials over F_p, used only to choose the defining polynomial

fn poly_trim(a: &mut Vec<u64>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn poly_mulmod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut r = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            r[i + j] = (r[i + j] + x * y) % p;
        }
    }
    poly_rem(r, f, p)
}

fn poly_rem(mut r: Vec<u64>, f: &[u64], p: u64) -> Vec<u64> {
    poly_trim(&mut r);
    let d = f.len() - 1;
    let lead_inv = inv_mod(f[d], p).expect("field");
    while r.len() > d {
        let top = r.len() - 1;
        let c = mulmod(r[top], lead_inv, p);
        for i in 0..=d {
            let idx = top - d + i;
            r[idx] = (r[idx] + p - mulmod(c, f[i], p)) % p;
        }
        poly_trim(&mut r);
    }
    r
}

fn poly_gcd(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
    poly_trim(&mut a);
    poly_trim(&mut b);
    while !b.is_empty() {
        let r = poly_rem(a.clone(), &b, p);
        a = b;
        b = r;
    }
    a
}

fn poly_x_pow(e: u64, f: &[u64], p: u64) -> Vec<u64> {
    let mut result = vec![1u64];
    let mut base = poly_rem(vec![0, 1], f, p);
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mulmod(&result, &base, f, p);
        }
        base = poly_mulmod(&base, &base, f, p);
        e >>= 1;
    }
    result
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = vec![];
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Rabin's irreducibility test for a monic `f` of degree `n` over `F_p`.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let n = f.len() - 1;
    if n == 1 {
        return true;
    }
    let xq = poly_x_pow(p.pow(n as u32), f, p);
    let mut diff = xq.clone();
    diff.resize(diff.len().max(2), 0);
    diff[1] = (diff[1] + p - 1) % p;
    poly_trim(&mut diff);
    if !diff.is_empty() {
        return false;
    }
    for r in prime_factors(n) {
        let mut g = poly_x_pow(p.pow((n / r) as u32), f, p);
        g.resize(g.len().max(2), 0);
        g[1] = (g[1] + p - 1) % p;
        let d = poly_gcd(f.to_vec(), g, p);
        if d.len() != 1 {
            return false;
        }
    }
    true
}

/// Lowest monic irreducible of degree `n` over `F_p`; returns the low
/// coefficients `f_0, ..., f_{n-1}`.
pub fn lowest_irreducible(p: u64, n: usize) -> Vec<u64> {
    let count = p.pow(n as u32);
    for code in 0..count {
        let mut f = Vec::with_capacity(n + 1);
        let mut c = code;
        for _ in 0..n {
            f.push(c % p);
            c /= p;
        }
        f.push(1);
        if is_irreducible(&f, p) {
            f.pop();
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

// ---------------------------------------------------------------------------

/// The ring `W_K(k)` at a chosen precision `K`, with Frobenius, trace and
/// the fixed dual bases.
#[derive(Clone, Debug)]
pub struct WittRing {
    pub p: u64,
    /// Precision: the ring is `W_K(k)` with `K = prec`.
    pub prec: u32,
    pub n0: usize,
    /// `p^prec`.
    pub modulus: u64,
    poly: [u64; MAX_N0],
    sigma: Vec<W>,
    sigma_inv: Vec<W>,
    zeta: W,
    alpha0: W,
    beta: Vec<W>,
    gamma: Vec<W>,
}

impl PartialEq for WittRing {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.prec == other.prec && self.n0 == other.n0
    }
}

impl WittRing {
    /// `W_M(k)` for the given parameters.
    pub fn new(pp: PrimePower) -> Result<Self> {
        Self::with_precision(pp.p, pp.m, pp.n0)
    }

    /// `W_K(F_{p^n0})` at an arbitrary precision `K`.
    pub fn with_precision(p: u64, k: u32, n0: usize) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::Params(format!("p = {p} must be an odd prime")));
        }
        if k == 0 || n0 == 0 || n0 > MAX_N0 {
            return Err(Error::Params(format!("bad precision {k} or degree {n0}")));
        }
        let modulus = (p as u128).pow(k);
        if modulus >= 1u128 << 63 {
            return Err(Error::Params(format!("p^{k} exceeds 63 bits")));
        }
        let f = lowest_irreducible(p, n0);
        let mut poly = [0u64; MAX_N0];
        poly[..n0].copy_from_slice(&f);
        let mut ring = WittRing {
            p,
            prec: k,
            n0,
            modulus: modulus as u64,
            poly,
            sigma: vec![],
            sigma_inv: vec![],
            zeta: W::ZERO,
            alpha0: W::ZERO,
            beta: vec![],
            gamma: vec![],
        };
        ring.init_frobenius()?;
        ring.init_trace_data()?;
        Ok(ring)
    }

    /// The residue field `k` as the ring at precision 1.
    pub fn residue_field(&self) -> WittRing {
        Self::with_precision(self.p, 1, self.n0).expect("valid parameters")
    }

    /// Same field, different precision.
    pub fn at_precision(&self, k: u32) -> Result<WittRing> {
        Self::with_precision(self.p, k, self.n0)
    }

    pub fn q0(&self) -> u64 {
        self.p.pow(self.n0 as u32)
    }

    pub fn params(&self) -> PrimePower {
        PrimePower { p: self.p, m: self.prec, n0: self.n0 }
    }

    fn init_frobenius(&mut self) -> Result<()> {
        let n0 = self.n0;
        self.zeta = self.teichmuller_of(self.gen());
        // columns: zeta^i in the x-basis
        let mut z = vec![self.one()];
        for i in 1..n0 {
            z.push(self.mul(z[i - 1], self.zeta));
        }
        let zinv = self.invert_matrix(&z)?;
        // sigma(x^j) = sum_i c_ij sigma(zeta^i) = sum_i c_ij zeta^{p i}
        let mut zp = vec![self.one()];
        let zeta_p = self.pow(self.zeta, self.p);
        for i in 1..n0 {
            zp.push(self.mul(zp[i - 1], zeta_p));
        }
        let zeta_pinv = self.pow(self.zeta, self.q0() / self.p);
        let mut zpi = vec![self.one()];
        for i in 1..n0 {
            zpi.push(self.mul(zpi[i - 1], zeta_pinv));
        }
        self.sigma = (0..n0).map(|j| self.apply_matrix(&zp, zinv[j])).collect();
        self.sigma_inv = (0..n0).map(|j| self.apply_matrix(&zpi, zinv[j])).collect();
        Ok(())
    }

    fn init_trace_data(&mut self) -> Result<()> {
        let n0 = self.n0;
        let mut xj = self.one();
        let mut alpha0 = None;
        for _ in 0..n0 {
            let t = self.trace(xj);
            if t % self.p != 0 {
                let inv = inv_mod(t, self.modulus).expect("unit trace");
                alpha0 = Some(self.scale(xj, inv));
                break;
            }
            xj = self.mul(xj, self.gen());
        }
        self.alpha0 = alpha0.ok_or_else(|| Error::Params("trace is not surjective".into()))?;
        let xs: Vec<W> = (0..n0).map(|i| self.x_pow(i as u64)).collect();
        // Gram matrix G_ij = Tr(x^i x^j); gamma_j = sum_k (G^-1)_kj x^k
        let gram: Vec<W> = (0..n0)
            .map(|j| {
                let mut col = W::ZERO;
                for i in 0..n0 {
                    col.0[i] = self.trace(self.mul(xs[i], xs[j]));
                }
                col
            })
            .collect();
        let ginv = self
            .invert_int_matrix(&gram)
            .map_err(|_| Error::Params("trace form degenerate".into()))?;
        self.gamma = (0..n0)
            .map(|j| {
                let mut g = W::ZERO;
                for k in 0..n0 {
                    g.0[k] = ginv[j].0[k];
                }
                g
            })
            .collect();
        self.beta = xs;
        Ok(())
    }

    fn gen(&self) -> W {
        self.x_pow(1)
    }

    fn x_pow(&self, e: u64) -> W {
        let mut x = W::ZERO;
        if self.n0 == 1 {
            // x = -f_0 in the degree-one case
            x.0[0] = (self.modulus - self.poly[0] % self.modulus) % self.modulus;
            return self.pow(x, e);
        }
        x.0[1] = 1;
        self.pow(x, e)
    }

    /// `sum_i cols[i] * v_i`.
    fn apply_matrix(&self, cols: &[W], v: W) -> W {
        let mut r = W::ZERO;
        for (i, c) in cols.iter().enumerate() {
            r = self.add(r, self.scale(*c, v.0[i]));
        }
        r
    }

    /// Invert the matrix with the given columns over this ring's scalars
    /// (`Z/p^K`). Column `j` of the result is returned as `out[j]`.
    fn invert_int_matrix(&self, cols: &[W]) -> Result<Vec<W>> {
        let n = self.n0;
        let m = self.modulus;
        // a[i][j] row-major
        let mut a: Vec<Vec<u64>> = (0..n).map(|i| (0..n).map(|j| cols[j].0[i]).collect()).collect();
        let mut inv: Vec<Vec<u64>> = (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect();
        for c in 0..n {
            let piv = (c..n)
                .find(|&r| a[r][c] % self.p != 0)
                .ok_or_else(|| Error::NotUnit("singular matrix".into()))?;
            a.swap(c, piv);
            inv.swap(c, piv);
            let pinv = inv_mod(a[c][c], m).unwrap();
            for j in 0..n {
                a[c][j] = mulmod(a[c][j], pinv, m);
                inv[c][j] = mulmod(inv[c][j], pinv, m);
            }
            for r in 0..n {
                if r != c && a[r][c] != 0 {
                    let f = a[r][c];
                    for j in 0..n {
                        a[r][j] = (a[r][j] + m - mulmod(f, a[c][j], m)) % m;
                        inv[r][j] = (inv[r][j] + m - mulmod(f, inv[c][j], m)) % m;
                    }
                }
            }
        }
        Ok((0..n)
            .map(|j| {
                let mut w = W::ZERO;
                for i in 0..n {
                    w.0[i] = inv[i][j];
                }
                w
            })
            .collect())
    }

    fn invert_matrix(&self, cols: &[W]) -> Result<Vec<W>> {
        self.invert_int_matrix(cols)
    }

    // -- basic ring operations ------------------------------------------------

    pub fn zero(&self) -> W {
        W::ZERO
    }

    pub fn one(&self) -> W {
        let mut w = W::ZERO;
        w.0[0] = 1 % self.modulus;
        w
    }

    pub fn from_int(&self, a: i64) -> W {
        let mut w = W::ZERO;
        w.0[0] = reduce_i64(a, self.modulus);
        w
    }

    /// Element from coordinates in the polynomial basis, reduced.
    pub fn from_coords(&self, c: &[i64]) -> W {
        let mut w = W::ZERO;
        for (i, &v) in c.iter().enumerate().take(self.n0) {
            w.0[i] = reduce_i64(v, self.modulus);
        }
        w
    }

    pub fn coords(&self, a: W) -> Vec<u64> {
        a.0[..self.n0].to_vec()
    }

    pub fn is_zero(&self, a: W) -> bool {
        a.0[..self.n0].iter().all(|&c| c == 0)
    }

    pub fn add(&self, a: W, b: W) -> W {
        let m = self.modulus;
        let mut r = W::ZERO;
        for i in 0..self.n0 {
            let s = a.0[i] + b.0[i];
            r.0[i] = if s >= m { s - m } else { s };
        }
        r
    }

    pub fn sub(&self, a: W, b: W) -> W {
        let m = self.modulus;
        let mut r = W::ZERO;
        for i in 0..self.n0 {
            r.0[i] = if a.0[i] >= b.0[i] { a.0[i] - b.0[i] } else { a.0[i] + m - b.0[i] };
        }
        r
    }

    pub fn neg(&self, a: W) -> W {
        self.sub(W::ZERO, a)
    }

    /// Multiply by an integer scalar already reduced mod `p^K`.
    pub fn scale(&self, a: W, k: u64) -> W {
        let mut r = W::ZERO;
        for i in 0..self.n0 {
            r.0[i] = mulmod(a.0[i], k, self.modulus);
        }
        r
    }

    pub fn scale_i64(&self, a: W, k: i64) -> W {
        self.scale(a, reduce_i64(k, self.modulus))
    }

    pub fn mul(&self, a: W, b: W) -> W {
        let m = self.modulus;
        let n = self.n0;
        if n == 1 {
            let mut r = W::ZERO;
            r.0[0] = mulmod(a.0[0], b.0[0], m);
            return r;
        }
        let mut prod = [0u128; 2 * MAX_N0];
        for i in 0..n {
            if a.0[i] == 0 {
                continue;
            }
            for j in 0..n {
                prod[i + j] = (prod[i + j] + a.0[i] as u128 * b.0[j] as u128) % m as u128;
            }
        }
        // x^n = -sum f_i x^i
        for d in (n..2 * n - 1).rev() {
            let c = prod[d];
            if c == 0 {
                continue;
            }
            prod[d] = 0;
            for i in 0..n {
                let f = self.poly[i] as u128;
                if f != 0 {
                    let idx = d - n + i;
                    prod[idx] = (prod[idx] + (m as u128 - (c * f) % m as u128)) % m as u128;
                }
            }
        }
        let mut r = W::ZERO;
        for i in 0..n {
            r.0[i] = prod[i] as u64;
        }
        r
    }

    pub fn pow(&self, a: W, mut e: u64) -> W {
        let mut r = self.one();
        let mut b = a;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }

    /// Minimum p-adic valuation of the coordinates; `prec` for zero.
    pub fn valuation(&self, a: W) -> u32 {
        a.0[..self.n0]
            .iter()
            .map(|&c| if c == 0 { self.prec } else { vp(c as i64, self.p).min(self.prec) })
            .min()
            .unwrap_or(self.prec)
    }

    pub fn is_unit(&self, a: W) -> bool {
        self.valuation(a) == 0
    }

    /// Multiplicative inverse of a unit.
    pub fn inv(&self, a: W) -> Result<W> {
        if !self.is_unit(a) {
            return Err(Error::NotUnit("Witt vector divisible by p".into()));
        }
        let mut abar = W::ZERO;
        for i in 0..self.n0 {
            abar.0[i] = a.0[i] % self.p;
        }
        let mut y = self.pow(abar, self.q0() - 2);
        let two = self.from_int(2);
        let mut good = 1u32;
        while good < self.prec {
            y = self.mul(y, self.sub(two, self.mul(a, y)));
            good *= 2;
        }
        debug_assert_eq!(self.mul(a, y), self.one());
        Ok(y)
    }

    /// Exact division by `p^v`; fails if `a` is not divisible. The result
    /// is determined modulo `p^{K-v}`; the representative returned has
    /// coordinates in `[0, p^{K-v})`.
    pub fn div_p_pow(&self, a: W, v: u32) -> Result<W> {
        let d = self.p.pow(v);
        let mut r = W::ZERO;
        for i in 0..self.n0 {
            if a.0[i] % d != 0 {
                return Err(Error::Integrality(format!("coordinate not divisible by p^{v}")));
            }
            r.0[i] = a.0[i] / d;
        }
        Ok(r)
    }

    /// Multiply by `p^v`.
    pub fn mul_p_pow(&self, a: W, v: u32) -> W {
        if v >= self.prec {
            return W::ZERO;
        }
        self.scale(a, self.p.pow(v))
    }

    /// Digit lift of an element of another ring of the same field.
    pub fn lift_from(&self, other: &WittRing, a: W) -> W {
        let mut r = W::ZERO;
        for i in 0..self.n0 {
            r.0[i] = a.0[i] % other.modulus % self.modulus;
        }
        r
    }

    /// Reduction / digit-lift of `a` from `other` into this ring.
    pub fn reduce_from(&self, other: &WittRing, a: W) -> W {
        self.lift_from(other, a)
    }

    // -- Frobenius and trace ----------------------------------------------------

    /// `sigma(a)`: the Frobenius automorphism.
    pub fn frob(&self, a: W) -> W {
        if self.n0 == 1 {
            return a;
        }
        self.apply_matrix(&self.sigma, a)
    }

    pub fn frob_inv(&self, a: W) -> W {
        if self.n0 == 1 {
            return a;
        }
        self.apply_matrix(&self.sigma_inv, a)
    }

    /// `sigma^n(a)` for any integer `n`.
    pub fn frob_pow(&self, a: W, n: i64) -> W {
        let n = n.rem_euclid(self.n0 as i64);
        let mut r = a;
        for _ in 0..n {
            r = self.frob(r);
        }
        r
    }

    /// `Tr(a) = sum_n sigma^n(a)`, an element of `Z/p^K`.
    pub fn trace(&self, a: W) -> u64 {
        let mut s = W::ZERO;
        let mut x = a;
        for _ in 0..self.n0 {
            s = self.add(s, x);
            x = self.frob(x);
        }
        debug_assert!(s.0[1..self.n0].iter().all(|&c| c == 0));
        s.0[0]
    }

    /// The fixed element `alpha_0` with `Tr(alpha_0) = 1`.
    pub fn alpha0(&self) -> W {
        self.alpha0
    }

    /// The bases `(beta_i)` and `(gamma_i)` with `Tr(beta_i gamma_j) = delta_ij`.
    pub fn dual_bases(&self) -> (Vec<W>, Vec<W>) {
        (self.beta.clone(), self.gamma.clone())
    }

    /// Teichmuller representative of `x`.
    pub fn zeta(&self) -> W {
        self.zeta
    }

    /// Teichmuller lift of the residue of `a`.
    pub fn teichmuller_of(&self, a: W) -> W {
        let mut z = W::ZERO;
        for i in 0..self.n0 {
            z.0[i] = a.0[i] % self.p;
        }
        let q0 = self.q0();
        loop {
            let nz = self.pow(z, q0);
            if nz == z {
                return z;
            }
            z = nz;
        }
    }

    /// Teichmuller lift of a residue field element given by coordinates
    /// mod `p`.
    pub fn teichmuller(&self, a: W) -> W {
        self.teichmuller_of(a)
    }

    // -- Witt components ---------------------------------------------------------

    /// Element with Witt components `comps` (field elements as coordinate
    /// vectors mod `p`).
    pub fn from_components(&self, comps: &[W]) -> W {
        let field = self.residue_field();
        let mut r = W::ZERO;
        for (i, &c) in comps.iter().enumerate().take(self.prec as usize) {
            let mut root = c;
            for _ in 0..i {
                root = field.frob_inv(root);
            }
            let t = self.teichmuller_of(root);
            r = self.add(r, self.mul_p_pow(t, i as u32));
        }
        r
    }

    /// Witt components of `a`.
    pub fn to_components(&self, a: W) -> Vec<W> {
        let field = self.residue_field();
        let mut r = a;
        let mut out = Vec::with_capacity(self.prec as usize);
        for i in 0..self.prec {
            let mut b = W::ZERO;
            for j in 0..self.n0 {
                b.0[j] = r.0[j] % self.p;
            }
            let mut comp = b;
            for _ in 0..i {
                comp = field.frob(comp);
            }
            out.push(comp);
            let diff = self.sub(r, self.teichmuller_of(b));
            r = self.div_p_pow(diff, 1).expect("difference divisible by p");
        }
        out
    }
}

/// A Witt vector bundled with its ring; operations check that both operands
/// live in the same ring.
#[derive(Clone, Debug)]
pub struct WittVector {
    pub ring: Arc<WittRing>,
    pub value: W,
}

impl PartialEq for WittVector {
    fn eq(&self, other: &Self) -> bool {
        *self.ring == *other.ring && self.value == other.value
    }
}

impl WittVector {
    pub fn new(ring: Arc<WittRing>, value: W) -> Self {
        Self { ring, value }
    }

    pub fn from_components(ring: Arc<WittRing>, comps: &[W]) -> Self {
        let value = ring.from_components(comps);
        Self { ring, value }
    }

    pub fn components(&self) -> Vec<W> {
        self.ring.to_components(self.value)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if *self.ring != *other.ring {
            return Err(Error::Mismatch(format!(
                "W_{}(F_{}^{}) vs W_{}(F_{}^{})",
                self.ring.prec, self.ring.p, self.ring.n0, other.ring.prec, other.ring.p, other.ring.n0
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::new(self.ring.clone(), self.ring.add(self.value, other.value)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::new(self.ring.clone(), self.ring.mul(self.value, other.value)))
    }

    pub fn frobenius(&self) -> Self {
        Self::new(self.ring.clone(), self.ring.frob(self.value))
    }

    pub fn trace(&self) -> u64 {
        self.ring.trace(self.value)
    }

    pub fn to_json(&self) -> Vec<u64> {
        self.ring.coords(self.value)
    }
}
