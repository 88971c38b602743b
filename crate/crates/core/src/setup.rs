//! Search for the defining pair (h0, h1) and classify the resulting ring.
//!
//! The ring polynomial is x^q·h1(x) − h0(x); a valid setup exposes a monic
//! irreducible factor f of degree k with multiplicity one, whose cofactors
//! must avoid the trap patterns: no linear cofactor, every cofactor degree
//! coprime to k, and f not of Kummer shape x^k − a.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldTower, Fq2Elt};
use crate::poly::FqsPoly;

/// Which of the trap-avoidance constraints the search enforces; all on by
/// default. Relaxing them is how the deliberate-trap demonstrations work.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SetupConstraints {
    pub require_no_linear_cofactor: bool,
    pub require_gcd_one: bool,
    pub require_nonkummer: bool,
}

impl Default for SetupConstraints {
    fn default() -> Self {
        SetupConstraints {
            require_no_linear_cofactor: true,
            require_gcd_one: true,
            require_nonkummer: true,
        }
    }
}

impl SetupConstraints {
    pub fn relaxed() -> Self {
        SetupConstraints {
            require_no_linear_cofactor: false,
            require_gcd_one: false,
            require_nonkummer: false,
        }
    }
}

/// A validated (h0, h1) pair together with the factorization of its ring
/// polynomial: ring_poly = unit · f · ∏ f_i^{a_i}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetupInstance {
    pub h0: FqsPoly,
    pub h1: FqsPoly,
    pub f: FqsPoly,
    /// (f_i, a_i, k_i): cofactor, multiplicity, degree
    pub cofactors: Vec<(FqsPoly, u32, u32)>,
    pub unit: Fq2Elt,
    pub ring_poly: FqsPoly,
    pub tried: u64,
}

impl SetupInstance {
    pub fn k(&self) -> u32 {
        self.f.degree() as u32
    }

    /// Canonical hash binding the tower parameters and (h0, h1); downstream
    /// artifacts carry it so stale caches are detected.
    pub fn hash(&self, t: &FieldTower) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(format!("p={} n={} k={} seed={};", t.p, t.n, t.k, t.seed));
        for poly in [&self.h0, &self.h1, &self.f] {
            for c in &poly.0 {
                h.update(c.0.to_le_bytes());
            }
            h.update(b"|");
        }
        format!("{:x}", h.finalize())
    }

    /// Exact reassembly: unit · f · ∏ f_i^{a_i} = ring_poly = x^q h1 − h0.
    pub fn verify(&self, t: &FieldTower) -> Result<()> {
        let ring = t.psub(
            &t.pmul(&FqsPoly::monomial(t.q as usize), &self.h1),
            &self.h0,
        );
        if ring != self.ring_poly {
            return Err(Error::BadFactorization);
        }
        let mut prod = t.pmul(&FqsPoly::constant(self.unit), &self.f);
        for (g, a, _) in &self.cofactors {
            for _ in 0..*a {
                prod = t.pmul(&prod, g);
            }
        }
        if prod != self.ring_poly {
            return Err(Error::BadFactorization);
        }
        if t.pgcd(&self.h0, &self.h1).degree() > 0 {
            return Err(Error::BadFactorization);
        }
        Ok(())
    }
}

/// Trap inventory for a setup.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifyReport {
    /// cofactors of degree one (each is a zero divisor trap)
    pub linear_traps: Vec<FqsPoly>,
    /// (k_i, gcd(k_i, k)) for every cofactor
    pub cofactor_degrees: Vec<(u32, u32)>,
    pub kummer: bool,
    /// all monic divisors of ring_poly with 1 ≤ deg < k (descent traps)
    pub small_divisors: Vec<FqsPoly>,
}

fn gcd_u32(a: u32, b: u32) -> u32 {
    crate::numint::gcd(a as u64, b as u64) as u32
}

/// f has Kummer shape x^k − a (all intermediate coefficients vanish).
pub fn is_kummer_shape(f: &FqsPoly) -> bool {
    let k = f.degree();
    k >= 1 && (1..k as usize).all(|i| f.coeff(i).is_zero())
}

fn check_constraints(
    k: u32,
    f: &FqsPoly,
    cof: &[(FqsPoly, u32, u32)],
    c: &SetupConstraints,
) -> bool {
    if c.require_no_linear_cofactor && cof.iter().any(|&(_, _, ki)| ki == 1) {
        return false;
    }
    if c.require_gcd_one && cof.iter().any(|&(_, _, ki)| gcd_u32(ki, k) != 1) {
        return false;
    }
    if c.require_nonkummer && is_kummer_shape(f) {
        return false;
    }
    true
}

/// Evaluate one (h0, h1) candidate; Some(setup) if it satisfies `constraints`.
fn try_candidate(
    t: &FieldTower,
    h0: &FqsPoly,
    h1: &FqsPoly,
    constraints: &SetupConstraints,
    closest: &mut (u32, String),
) -> Option<SetupInstance> {
    let k = t.k;
    if t.pgcd(h0, h1).degree() > 0 {
        return None;
    }
    let ring = t.psub(&t.pmul(&FqsPoly::monomial(t.q as usize), h1), h0);
    if ring.degree() < k as i64 {
        return None;
    }
    let fac = t.factorize(&ring).ok()?;
    // f = first monic irreducible factor of degree k with multiplicity 1
    let f = fac
        .factors
        .iter()
        .find(|(g, m)| g.degree() == k as i64 && *m == 1)?
        .0
        .clone();
    let cof: Vec<(FqsPoly, u32, u32)> = fac
        .factors
        .iter()
        .filter(|(g, _)| *g != f)
        .map(|(g, m)| (g.clone(), *m, g.degree() as u32))
        .collect();
    // score near-misses for diagnostics: one point per satisfied constraint
    let score = [
        !cof.iter().any(|&(_, _, ki)| ki == 1),
        !cof.iter().any(|&(_, _, ki)| gcd_u32(ki, k) != 1),
        !is_kummer_shape(&f),
    ]
    .iter()
    .filter(|&&b| b)
    .count() as u32
        + 1;
    if score > closest.0 {
        let degs: Vec<u32> = cof.iter().map(|&(_, _, ki)| ki).collect();
        *closest = (score, format!("deg-k factor found, cofactor degrees {degs:?}"));
    }
    if !check_constraints(k, &f, &cof, constraints) {
        return None;
    }
    Some(SetupInstance {
        h0: h0.clone(),
        h1: h1.clone(),
        f,
        cofactors: cof,
        unit: fac.unit,
        ring_poly: ring,
        tried: 0,
    })
}

/// Deterministic candidate stream: h1 over monic linears by coefficient
/// order, then the constant 1; for each h1, h0 over degree-exactly-2
/// polynomials first (lead, then lower coefficients ascending), then
/// degree ≤ 1.
fn candidates(t: &FieldTower) -> impl Iterator<Item = (FqsPoly, FqsPoly)> + '_ {
    let q2 = t.q2() as u16;
    let h1s = (0..q2)
        .map(|c| FqsPoly::linear(Fq2Elt(c)))
        .chain(std::iter::once(FqsPoly::one()));
    h1s.flat_map(move |h1| {
        let deg2 = (1..q2).flat_map(move |c2| {
            (0..q2).flat_map(move |c1| {
                (0..q2).map(move |c0| {
                    FqsPoly::from_coeffs(vec![Fq2Elt(c0), Fq2Elt(c1), Fq2Elt(c2)])
                })
            })
        });
        let deg01 = (0..q2)
            .flat_map(move |c1| (0..q2).map(move |c0| FqsPoly::from_coeffs(vec![Fq2Elt(c0), Fq2Elt(c1)])))
            .filter(|h0| !h0.is_zero());
        deg2.chain(deg01).map(move |h0| (h0, h1.clone()))
    })
}

/// Rebuild a setup from explicit (h0, h1), applying the same factor
/// selection and constraint checks as the search.
pub fn instantiate(
    t: &FieldTower,
    h0: FqsPoly,
    h1: FqsPoly,
    constraints: &SetupConstraints,
) -> Result<SetupInstance> {
    let mut closest = (0u32, String::new());
    let s = try_candidate(t, &h0, &h1, constraints, &mut closest)
        .ok_or(Error::SearchExhausted { tried: 1, closest_miss: Some(closest.1) })?;
    s.verify(t)?;
    Ok(s)
}

/// First (in enumeration order) setup satisfying the constraints, trying at
/// most `budget` candidates.
pub fn search_setup(
    t: &FieldTower,
    constraints: &SetupConstraints,
    budget: u64,
) -> Result<SetupInstance> {
    assert!(budget >= 1);
    if t.k >= t.q {
        return Err(Error::RegimeViolation { k: t.k, q: t.q });
    }
    let mut closest = (0u32, String::from("no deg-k multiplicity-1 factor seen"));
    let mut tried = 0u64;
    for (h0, h1) in candidates(t) {
        if tried >= budget {
            break;
        }
        tried += 1;
        if let Some(mut s) = try_candidate(t, &h0, &h1, constraints, &mut closest) {
            s.tried = tried;
            s.verify(t)?;
            return Ok(s);
        }
    }
    Err(Error::SearchExhausted { tried, closest_miss: Some(closest.1) })
}

/// All setups satisfying the constraints within budget, in enumeration order.
/// The relation-generation stage may need to iterate over several setups
/// before the lattice shape conforms, so callers ask for a stream.
pub fn search_setups(
    t: &FieldTower,
    constraints: &SetupConstraints,
    budget: u64,
    max_results: usize,
) -> Result<Vec<SetupInstance>> {
    let mut out = Vec::new();
    let mut closest = (0u32, String::from("no deg-k multiplicity-1 factor seen"));
    let mut tried = 0u64;
    for (h0, h1) in candidates(t) {
        if tried >= budget || out.len() >= max_results {
            break;
        }
        tried += 1;
        if let Some(mut s) = try_candidate(t, &h0, &h1, constraints, &mut closest) {
            s.tried = tried;
            s.verify(t)?;
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err(Error::SearchExhausted { tried, closest_miss: Some(closest.1) });
    }
    Ok(out)
}

/// Enumerate all monic divisors of ring_poly of degree in [1, k): products of
/// sub-multisets of the irreducible factorization.
fn small_divisors(t: &FieldTower, s: &SetupInstance) -> Vec<FqsPoly> {
    let mut all: Vec<(FqsPoly, u32)> = vec![(s.f.clone(), 1)];
    for (g, a, _) in &s.cofactors {
        all.push((g.clone(), *a));
    }
    let mut divs = vec![FqsPoly::one()];
    for (g, a) in &all {
        let mut next = Vec::new();
        for d in &divs {
            let mut cur = d.clone();
            next.push(cur.clone());
            for _ in 0..*a {
                cur = t.pmul(&cur, g);
                if cur.degree() < s.k() as i64 {
                    next.push(cur.clone());
                }
            }
        }
        divs = next;
    }
    let mut out: Vec<FqsPoly> = divs.into_iter().filter(|d| d.degree() >= 1).collect();
    out.sort();
    out.dedup();
    out
}

pub fn classify_setup(t: &FieldTower, s: &SetupInstance) -> ClassifyReport {
    let k = s.k();
    ClassifyReport {
        linear_traps: s
            .cofactors
            .iter()
            .filter(|&&(_, _, ki)| ki == 1)
            .map(|(g, _, _)| g.clone())
            .collect(),
        cofactor_degrees: s.cofactors.iter().map(|&(_, _, ki)| (ki, gcd_u32(ki, k))).collect(),
        kummer: is_kummer_shape(&s.f),
        small_divisors: small_divisors(t, s),
    }
}
