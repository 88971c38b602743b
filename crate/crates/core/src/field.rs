//! The tower F_p ⊂ F_q ⊂ F_{q²}, with table-driven arithmetic.
//!
//! Elements of F_q are indices packing their coefficient vector over F_p in
//! base p; elements of F_{q²} pack the pair (c0, c1) with respect to the
//! basis {1, γ}, where γ is a root of the quadratic modulus over F_q.
//! At the scales this library targets (q ≤ 9) full multiplication and
//! logarithm tables fit in a few kilobytes, so every field operation is a
//! lookup.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numint;

/// An element of F_{q²}, index c0 + q*c1.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fq2Elt(pub u16);

impl Fq2Elt {
    pub const ZERO: Fq2Elt = Fq2Elt(0);
    pub const ONE: Fq2Elt = Fq2Elt(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Parameters and lookup tables for the tower F_p ⊂ F_q ⊂ F_{q²}.
#[derive(Clone)]
pub struct FieldTower {
    pub p: u32,
    pub n: u32,
    pub q: u32,
    pub k: u32,
    pub seed: u64,
    /// monic irreducible of degree n over F_p defining F_q (little-endian, packed ints)
    pub fq_modulus: Vec<u32>,
    /// (m0, m1): F_{q²} = F_q[γ]/(γ² + m1·γ + m0), coefficients as F_q indices
    pub qm2_modulus: [u16; 2],
    /// fixed multiplicative generator of F_{q²}*
    pub lambda: Fq2Elt,
    fq_add: Vec<u16>,
    fq_neg: Vec<u16>,
    q2_mul: Vec<u16>,
    q2_inv: Vec<u16>,
    frob_q: Vec<u16>,
    log_tab: Vec<u32>,
    exp_tab: Vec<u16>,
}

// ---- F_p polynomial helpers used only during construction ----

fn fp_poly_mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = vec![0u32; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            r[i + j] = (r[i + j] + ai * bj) % p;
        }
    }
    r
}

fn fp_poly_rem(mut a: Vec<u32>, m: &[u32], p: u32) -> Vec<u32> {
    // m monic
    while a.len() >= m.len() {
        let c = *a.last().unwrap();
        if c != 0 {
            let sh = a.len() - m.len();
            for (i, &mi) in m.iter().enumerate() {
                a[sh + i] = (a[sh + i] + p * p - c * mi % p) % p;
            }
        }
        a.pop();
    }
    a
}

fn unpack(mut e: u32, p: u32, n: usize) -> Vec<u32> {
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        v.push(e % p);
        e /= p;
    }
    v
}

fn pack(v: &[u32], p: u32) -> u32 {
    v.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// Irreducibility over F_p by trial division (degrees are tiny here).
fn fp_irreducible(m: &[u32], p: u32) -> bool {
    let n = m.len() - 1;
    for d in 1..=n / 2 {
        // all monic divisor candidates of degree d
        for e in 0..p.pow(d as u32) {
            let mut cand = unpack(e, p, d);
            cand.push(1);
            let mut r = m.to_vec();
            r = fp_poly_rem(r, &cand, p);
            if r.iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

impl FieldTower {
    /// Construct the tower for q = p^n with target extension degree k.
    pub fn build(p: u32, n: u32, k: u32, seed: u64) -> Result<FieldTower> {
        if !numint::is_prime(p as u64) {
            return Err(Error::NotPrime(p as u64));
        }
        let q = p.checked_pow(n).filter(|&q| q <= 256).ok_or(Error::RegimeViolation { k, q: 0 })?;
        if k == 0 || k >= q {
            return Err(Error::RegimeViolation { k, q });
        }

        // F_q = F_p[u]/(g), g the first monic irreducible of degree n
        let fq_modulus = if n == 1 {
            vec![0, 1]
        } else {
            (0..p.pow(n))
                .map(|e| {
                    let mut v = unpack(e, p, n as usize);
                    v.push(1);
                    v
                })
                .find(|m| fp_irreducible(m, p))
                .map(|m| m.iter().map(|&c| c).collect())
                .expect("irreducible polynomials of every degree exist")
        };

        let qi = q as usize;
        let mut fq_add = vec![0u16; qi * qi];
        let mut fq_mul = vec![0u16; qi * qi];
        let mut fq_neg = vec![0u16; qi];
        let mut fq_inv = vec![0u16; qi];
        for a in 0..q {
            let av = unpack(a, p, n as usize);
            fq_neg[a as usize] = pack(&av.iter().map(|&c| (p - c) % p).collect::<Vec<_>>(), p) as u16;
            for b in 0..q {
                let bv = unpack(b, p, n as usize);
                let s: Vec<u32> = av.iter().zip(&bv).map(|(&x, &y)| (x + y) % p).collect();
                fq_add[(a * q + b) as usize] = pack(&s, p) as u16;
                let m = fp_poly_rem(fp_poly_mul(&av, &bv, p), &fq_modulus, p);
                let mut mv = m;
                mv.resize(n as usize, 0);
                fq_mul[(a * q + b) as usize] = pack(&mv, p) as u16;
            }
        }
        for a in 1..q {
            let inv = (1..q)
                .find(|&b| fq_mul[(a * q + b) as usize] == 1)
                .expect("field inverse exists");
            fq_inv[a as usize] = inv as u16;
        }

        // quadratic modulus over F_q: first monic x² + m1 x + m0 with no root in F_q
        let fq_sq = |t: u32| fq_mul[(t * q + t) as usize] as u32;
        let mut qm2 = None;
        'outer: for m1 in 0..q {
            for m0 in 0..q {
                let has_root = (0..q).any(|t| {
                    let v = fq_add[(fq_sq(t) * q + fq_mul[(m1 * q + t) as usize] as u32) as usize];
                    fq_add[(v as u32 * q + m0) as usize] == 0
                });
                if !has_root {
                    qm2 = Some([m0 as u16, m1 as u16]);
                    break 'outer;
                }
            }
        }
        let qm2_modulus = qm2.expect("irreducible quadratics over F_q exist");

        // F_{q²} multiplication via (a0 + a1γ)(b0 + b1γ), γ² = -m1 γ - m0
        let q2 = qi * qi;
        let m0 = qm2_modulus[0] as u32;
        let m1 = qm2_modulus[1] as u32;
        let fadd = |a: u32, b: u32| fq_add[(a * q + b) as usize] as u32;
        let fmul = |a: u32, b: u32| fq_mul[(a * q + b) as usize] as u32;
        let fneg = |a: u32| fq_neg[a as usize] as u32;
        let mut q2_mul = vec![0u16; q2 * q2];
        for a in 0..q2 {
            let (a0, a1) = (a as u32 % q, a as u32 / q);
            for b in 0..q2 {
                let (b0, b1) = (b as u32 % q, b as u32 / q);
                let t = fmul(a1, b1); // γ² coefficient
                let c0 = fadd(fmul(a0, b0), fneg(fmul(t, m0)));
                let c1 = fadd(fadd(fmul(a0, b1), fmul(a1, b0)), fneg(fmul(t, m1)));
                q2_mul[a * q2 + b] = (c0 + q * c1) as u16;
            }
        }
        let mut q2_inv = vec![0u16; q2];
        for a in 1..q2 {
            let inv = (1..q2)
                .find(|&b| q2_mul[a * q2 + b] == 1)
                .expect("field inverse exists");
            q2_inv[a] = inv as u16;
        }

        // λ: least element of full multiplicative order q²-1
        let group = (q2 - 1) as u64;
        let factors = numint::factor(group);
        let pow = |a: usize, mut e: u64| -> usize {
            let mut r = 1usize;
            let mut b = a;
            while e > 0 {
                if e & 1 == 1 {
                    r = q2_mul[r * q2 + b] as usize;
                }
                b = q2_mul[b * q2 + b] as usize;
                e >>= 1;
            }
            r
        };
        let lambda = (1..q2)
            .find(|&a| factors.iter().all(|&(r, _)| pow(a, group / r) != 1))
            .expect("F_{q²}* is cyclic");
        debug_assert_eq!(pow(lambda, group), 1);

        let mut log_tab = vec![u32::MAX; q2];
        let mut exp_tab = vec![0u16; group as usize];
        let mut cur = 1usize;
        for i in 0..group as usize {
            exp_tab[i] = cur as u16;
            log_tab[cur] = i as u32;
            cur = q2_mul[cur * q2 + lambda] as usize;
        }
        debug_assert_eq!(cur, 1);
        debug_assert!(log_tab[1..].iter().all(|&l| l != u32::MAX));

        let mut frob_q = vec![0u16; q2];
        for a in 1..q2 {
            frob_q[a] = {
                let mut r = 1usize;
                let mut b = a;
                let mut e = q as u64;
                while e > 0 {
                    if e & 1 == 1 {
                        r = q2_mul[r * q2 + b] as usize;
                    }
                    b = q2_mul[b * q2 + b] as usize;
                    e >>= 1;
                }
                r as u16
            };
        }

        Ok(FieldTower {
            p,
            n,
            q,
            k,
            seed,
            fq_modulus,
            qm2_modulus,
            lambda: Fq2Elt(lambda as u16),
            fq_add,
            fq_neg,
            q2_mul,
            q2_inv,
            frob_q,
            log_tab,
            exp_tab,
        })
    }

    /// |F_{q²}| = q².
    pub fn q2(&self) -> u32 {
        self.q * self.q
    }

    /// q^{2k} − 1, the order of F_{q^{2k}}*.
    pub fn group_order(&self) -> u64 {
        (self.q as u64).pow(2 * self.k) - 1
    }

    /// q² − 1, the order of F_{q²}*.
    pub fn subgroup_order(&self) -> u64 {
        (self.q2() - 1) as u64
    }

    pub fn elt(&self, c0: u16, c1: u16) -> Fq2Elt {
        debug_assert!((c0 as u32) < self.q && (c1 as u32) < self.q);
        Fq2Elt(c0 + self.q as u16 * c1)
    }

    /// Coefficient pair (c0, c1) over F_q with respect to {1, γ}.
    pub fn coeffs(&self, e: Fq2Elt) -> (u16, u16) {
        (e.0 % self.q as u16, e.0 / self.q as u16)
    }

    /// γ, the generator of F_{q²} over F_q.
    pub fn gamma(&self) -> Fq2Elt {
        self.elt(0, 1)
    }

    /// True iff e lies in the subfield F_q.
    pub fn in_fq(&self, e: Fq2Elt) -> bool {
        self.coeffs(e).1 == 0
    }

    /// All q² elements in index order (0 first).
    pub fn elements(&self) -> impl Iterator<Item = Fq2Elt> {
        (0..self.q2() as u16).map(Fq2Elt)
    }

    /// The subfield F_q, in index order.
    pub fn fq_elements(&self) -> impl Iterator<Item = Fq2Elt> + '_ {
        (0..self.q as u16).map(|c| self.elt(c, 0))
    }

    pub fn add(&self, a: Fq2Elt, b: Fq2Elt) -> Fq2Elt {
        let q = self.q;
        let (a0, a1) = self.coeffs(a);
        let (b0, b1) = self.coeffs(b);
        let c0 = self.fq_add[(a0 as u32 * q + b0 as u32) as usize];
        let c1 = self.fq_add[(a1 as u32 * q + b1 as u32) as usize];
        Fq2Elt(c0 + q as u16 * c1)
    }

    pub fn neg(&self, a: Fq2Elt) -> Fq2Elt {
        let (a0, a1) = self.coeffs(a);
        Fq2Elt(self.fq_neg[a0 as usize] + self.q as u16 * self.fq_neg[a1 as usize])
    }

    pub fn sub(&self, a: Fq2Elt, b: Fq2Elt) -> Fq2Elt {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Fq2Elt, b: Fq2Elt) -> Fq2Elt {
        Fq2Elt(self.q2_mul[a.0 as usize * self.q2() as usize + b.0 as usize])
    }

    /// Multiplicative inverse; panics on zero (callers check).
    pub fn inv(&self, a: Fq2Elt) -> Fq2Elt {
        assert!(!a.is_zero(), "inversion of zero");
        Fq2Elt(self.q2_inv[a.0 as usize])
    }

    pub fn pow(&self, a: Fq2Elt, e: u64) -> Fq2Elt {
        if a.is_zero() {
            return if e == 0 { Fq2Elt::ONE } else { Fq2Elt::ZERO };
        }
        let l = self.log_tab[a.0 as usize] as u64;
        let g = self.subgroup_order();
        Fq2Elt(self.exp_tab[((l as u128 * e as u128) % g as u128) as usize])
    }

    /// Frobenius x ↦ x^q (the nontrivial automorphism of F_{q²}/F_q).
    pub fn frob(&self, a: Fq2Elt) -> Fq2Elt {
        Fq2Elt(self.frob_q[a.0 as usize])
    }

    /// Discrete log with respect to λ.
    pub fn fq2_dlog(&self, e: Fq2Elt) -> Result<u64> {
        if e.is_zero() {
            return Err(Error::ZeroElement);
        }
        Ok(self.log_tab[e.0 as usize] as u64)
    }

    /// λ^e.
    pub fn lambda_pow(&self, e: u64) -> Fq2Elt {
        Fq2Elt(self.exp_tab[(e % self.subgroup_order()) as usize])
    }
}

impl std::fmt::Debug for FieldTower {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldTower")
            .field("p", &self.p)
            .field("n", &self.n)
            .field("k", &self.k)
            .field("qm2_modulus", &self.qm2_modulus)
            .field("lambda", &self.lambda)
            .finish()
    }
}

/// Serializable tower description; rebuildable deterministically.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
pub struct TowerSpec {
    pub p: u32,
    pub n: u32,
    pub k: u32,
    pub seed: u64,
    pub qm2_modulus: Vec<u16>,
    pub lambda: Vec<u16>,
}

impl FieldTower {
    pub fn spec(&self) -> TowerSpec {
        let (l0, l1) = self.coeffs(self.lambda);
        TowerSpec {
            p: self.p,
            n: self.n,
            k: self.k,
            seed: self.seed,
            qm2_modulus: vec![self.qm2_modulus[0], self.qm2_modulus[1]],
            lambda: vec![l0, l1],
        }
    }

    pub fn from_spec(spec: &TowerSpec) -> Result<FieldTower> {
        let t = FieldTower::build(spec.p, spec.n, spec.k, spec.seed)?;
        if t.spec() != *spec {
            return Err(Error::Parse("tower spec does not match deterministic rebuild".into()));
        }
        Ok(t)
    }
}
