//! Factor-base relation generation over the coset sweep, and assembly of
//! the augmented relation lattice.
//!
//! Each coset representative m = (a b; c d) yields the candidate identity
//!   h1 · (cx+d) · ∏_{α∈F_q}((ax+b) − α(cx+d))
//!     ≡ (a^q h0 + b^q h1)(cx+d) − (ax+b)(c^q h0 + d^q h1)   mod ring_poly,
//! whose left side is a known product of factor-base linears and whose right
//! side has degree ≤ 3. When the right side is 1-smooth the identity becomes
//! a row λ^{e0}·∏(x+α_i)^{e_i} ≡ 1, and every produced row is re-verified by
//! exact reassembly before it is admitted.

use serde::{Deserialize, Serialize};

use crate::cosets::{CosetRep, CosetSet};
use crate::error::{Error, Result};
use crate::field::{FieldTower, Fq2Elt};
use crate::poly::FqsPoly;
use crate::setup::SetupInstance;

/// The ordered factor base α₁ = 0, α₂, …, α_{q²}: element index i holds
/// the α with field index i, so position and field index coincide.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorBase {
    pub alphas: Vec<Fq2Elt>,
}

impl FactorBase {
    pub fn new(t: &FieldTower) -> FactorBase {
        FactorBase { alphas: t.elements().collect() }
    }

    pub fn index_of(&self, alpha: Fq2Elt) -> usize {
        alpha.0 as usize
    }
}

/// A single relation: λ^{e0} · ∏ (x+α_i)^{e[i]} ≡ 1 mod ring_poly.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RelationRow {
    pub e0: i64,
    pub e: Vec<i64>,
    pub coset: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationSet {
    pub rows: Vec<RelationRow>,
    pub augmented: bool,
    pub width: usize,
}

/// Exponent accumulator for a product of linear polynomials: tracks the unit
/// (product of leading coefficients) and the factor-base exponents.
struct LinearProduct<'a> {
    t: &'a FieldTower,
    unit: Fq2Elt,
    exps: Vec<i64>,
}

impl<'a> LinearProduct<'a> {
    fn new(t: &'a FieldTower) -> Self {
        LinearProduct { t, unit: Fq2Elt::ONE, exps: vec![0; t.q2() as usize] }
    }

    /// Multiply by (c1·x + c0)^w; c1 may be zero (pure unit).
    fn mul_linear(&mut self, c1: Fq2Elt, c0: Fq2Elt, w: i64) -> Result<()> {
        if c1.is_zero() {
            if c0.is_zero() {
                return Err(Error::BothZero);
            }
            let l = self.t.fq2_dlog(c0)?;
            let g = self.t.subgroup_order() as i64;
            let e = ((l as i64 * w) % g + g) % g;
            self.unit = self.t.mul(self.unit, self.t.lambda_pow(e as u64));
        } else {
            let alpha = self.t.mul(c0, self.t.inv(c1));
            self.exps[alpha.0 as usize] += w;
            let l = self.t.fq2_dlog(c1)?;
            let g = self.t.subgroup_order() as i64;
            let e = ((l as i64 * w) % g + g) % g;
            self.unit = self.t.mul(self.unit, self.t.lambda_pow(e as u64));
        }
        Ok(())
    }
}

/// The relation right-hand side for m = (a b; c d):
/// (a^q h0 + b^q h1)(cx+d) − (ax+b)(c^q h0 + d^q h1).
fn relation_rhs(t: &FieldTower, s: &SetupInstance, rep: &CosetRep) -> FqsPoly {
    let q = t.q as u64;
    let (a, b, c, d) = (rep.a, rep.b, rep.c, rep.d);
    let (aq, bq, cq, dq) = (t.pow(a, q), t.pow(b, q), t.pow(c, q), t.pow(d, q));
    let t1 = t.padd(&t.pscale(&s.h0, aq), &t.pscale(&s.h1, bq));
    let t2 = t.padd(&t.pscale(&s.h0, cq), &t.pscale(&s.h1, dq));
    let cxd = FqsPoly::from_coeffs(vec![d, c]);
    let axb = FqsPoly::from_coeffs(vec![b, a]);
    t.psub(&t.pmul(&t1, &cxd), &t.pmul(&axb, &t2))
}

/// Exact recheck of a relation row against the ring.
pub fn verify_relation(t: &FieldTower, s: &SetupInstance, row: &RelationRow) -> bool {
    let ring = &s.ring_poly;
    let mut num = FqsPoly::constant(t.lambda_pow(row.e0.rem_euclid(t.subgroup_order() as i64) as u64));
    let mut den = FqsPoly::one();
    for (i, &e) in row.e.iter().enumerate() {
        let lin = FqsPoly::linear(Fq2Elt(i as u16));
        let (target, reps) = if e >= 0 { (&mut num, e) } else { (&mut den, -e) };
        for _ in 0..reps {
            *target = t.pmod(&t.pmul(target, &lin), ring);
        }
    }
    t.pmod(&t.psub(&num, &den), ring).is_zero()
}

fn relation_for_rep(
    t: &FieldTower,
    s: &SetupInstance,
    rep: &CosetRep,
    coset: usize,
) -> Result<Option<RelationRow>> {
    let mut lhs = LinearProduct::new(t);
    // h1 contributes as the linear (or unit) it is
    match s.h1.degree() {
        1 => lhs.mul_linear(Fq2Elt::ONE, s.h1.coeff(0), 1)?,
        0 => lhs.mul_linear(Fq2Elt::ZERO, s.h1.coeff(0), 1)?,
        _ => return Err(Error::DegreeOutOfRange(s.h1.degree().max(0) as usize)),
    }
    lhs.mul_linear(rep.c, rep.d, 1)?;
    for alpha in t.fq_elements() {
        lhs.mul_linear(
            t.sub(rep.a, t.mul(alpha, rep.c)),
            t.sub(rep.b, t.mul(alpha, rep.d)),
            1,
        )?;
    }

    let rhs = relation_rhs(t, s, rep);
    if rhs.is_zero() {
        return Ok(None);
    }
    if !t.is_smooth(&rhs, 1) {
        return Ok(None);
    }
    let fac = t.factorize(&rhs)?;
    let mut e = lhs.exps;
    for (g, m) in &fac.factors {
        debug_assert_eq!(g.degree(), 1);
        e[g.coeff(0).0 as usize] -= *m as i64;
    }
    let g = t.subgroup_order() as i64;
    let e0 = (t.fq2_dlog(lhs.unit)? as i64 - t.fq2_dlog(fac.unit)? as i64).rem_euclid(g);
    let row = RelationRow { e0, e, coset };
    // Exact congruence of the unmerged identity: left product ≡ right side.
    let ring = &s.ring_poly;
    let mut lhs_poly = t.pmod(&s.h1, ring);
    lhs_poly = t.pmod(&t.pmul(&lhs_poly, &FqsPoly::from_coeffs(vec![rep.d, rep.c])), ring);
    for alpha in t.fq_elements() {
        let lin = FqsPoly::from_coeffs(vec![
            t.sub(rep.b, t.mul(alpha, rep.d)),
            t.sub(rep.a, t.mul(alpha, rep.c)),
        ]);
        lhs_poly = t.pmod(&t.pmul(&lhs_poly, &lin), ring);
    }
    if !t.pmod(&t.psub(&lhs_poly, &rhs), ring).is_zero() {
        return Err(Error::BadFactorization);
    }
    // The merged row cancels common linear factors from both sides; that step
    // is only valid when no linear is a zero divisor of the ring, i.e. when
    // the setup carries no degree-one cofactor.
    let has_linear_cofactor = s.cofactors.iter().any(|&(_, _, ki)| ki == 1);
    if !has_linear_cofactor && !verify_relation(t, s, &row) {
        return Err(Error::BadFactorization);
    }
    Ok(Some(row))
}

/// Relation for one coset, or None if the right side is not 1-smooth.
/// Setups carrying a linear cofactor are refused: the relation would involve
/// a zero divisor of the ring.
pub fn factor_base_relation(
    t: &FieldTower,
    s: &SetupInstance,
    rep: &CosetRep,
    coset: usize,
) -> Result<Option<RelationRow>> {
    if s.cofactors.iter().any(|&(_, _, ki)| ki == 1) {
        return Err(Error::LinearTrapPresent);
    }
    relation_for_rep(t, s, rep, coset)
}

/// Test-only path for the zero-divisor demonstration: runs relation
/// generation even when the setup has a linear cofactor.
pub fn factor_base_relation_forced(
    t: &FieldTower,
    s: &SetupInstance,
    rep: &CosetRep,
    coset: usize,
) -> Result<Option<RelationRow>> {
    relation_for_rep(t, s, rep, coset)
}

/// All accepted rows over the coset sweep, augmented to the L̂₁ generators.
/// `strict` enforces the row-count precondition for a structurally
/// non-deficient SNF; the pipeline may disable it and let the lattice shape
/// check judge the instance instead.
pub fn collect_relations(
    t: &FieldTower,
    s: &SetupInstance,
    cosets: &CosetSet,
    jobs: usize,
    strict: bool,
) -> Result<RelationSet> {
    let run = || -> Result<Vec<Option<RelationRow>>> {
        use rayon::prelude::*;
        cosets
            .reps
            .par_iter()
            .enumerate()
            .map(|(i, rep)| factor_base_relation(t, s, rep, i))
            .collect()
    };
    let collected = if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool")
            .install(run)?
    } else {
        run()?
    };
    let rows: Vec<RelationRow> = collected.into_iter().flatten().collect();
    let need = t.q2() as usize + 1;
    if strict && rows.len() < need {
        return Err(Error::InsufficientRelations { got: rows.len(), need });
    }
    Ok(augment(t, rows))
}

/// Append the q²+1 lattice generators that lift L̂₂ to L̂₁: the λ-order row
/// (q²−1, 0,…,0) and one group-order row per factor-base element.
fn augment(t: &FieldTower, mut rows: Vec<RelationRow>) -> RelationSet {
    let q2 = t.q2() as usize;
    let width = q2 + 1;
    let order = t.group_order() as i64;
    rows.push(RelationRow { e0: t.subgroup_order() as i64, e: vec![0; q2], coset: usize::MAX });
    for i in 0..q2 {
        let mut e = vec![0; q2];
        e[i] = order;
        rows.push(RelationRow { e0: 0, e, coset: usize::MAX });
    }
    RelationSet { rows, augmented: true, width }
}

impl RelationSet {
    /// Rows as an integer matrix (λ-exponent first, then the q² exponents).
    pub fn matrix(&self) -> Vec<Vec<i64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut v = Vec::with_capacity(self.width);
                v.push(r.e0);
                v.extend_from_slice(&r.e);
                v
            })
            .collect()
    }

    /// Only the sampled relation rows (no augmentation generators).
    pub fn sampled(&self) -> impl Iterator<Item = &RelationRow> {
        self.rows.iter().filter(|r| r.coset != usize::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosets::enumerate_cosets;
    use crate::setup::{search_setup, SetupConstraints};

    #[test]
    fn q4_relations_verified() {
        let t = FieldTower::build(2, 2, 3, 0).unwrap();
        let s = search_setup(&t, &SetupConstraints::default(), 1 << 20).unwrap();
        let cs = enumerate_cosets(&t);
        let rs = collect_relations(&t, &s, &cs, 0, false).unwrap();
        let sampled: Vec<_> = rs.sampled().collect();
        assert!(!sampled.is_empty());
        for row in &sampled {
            assert!(verify_relation(&t, &s, row));
        }
        // augmentation: exactly q²+1 synthetic rows with the documented shape
        let synth: Vec<_> = rs.rows.iter().filter(|r| r.coset == usize::MAX).collect();
        assert_eq!(synth.len(), t.q2() as usize + 1);
        assert_eq!(synth[0].e0, (t.q2() - 1) as i64);
        assert!(synth[0].e.iter().all(|&x| x == 0));
        for (i, r) in synth[1..].iter().enumerate() {
            assert_eq!(r.e0, 0);
            assert!(r.e.iter().enumerate().all(|(j, &x)| if j == i {
                x == t.group_order() as i64
            } else {
                x == 0
            }));
        }
    }

    #[test]
    fn strict_threshold() {
        // q=4 yields fewer than q²+1 = 17 smooth cosets; strict mode reports it
        let t = FieldTower::build(2, 2, 3, 0).unwrap();
        let s = search_setup(&t, &SetupConstraints::default(), 1 << 20).unwrap();
        let cs = enumerate_cosets(&t);
        match collect_relations(&t, &s, &cs, 0, true) {
            Err(Error::InsufficientRelations { got, need }) => {
                assert_eq!(need, 17);
                assert!(got < 17);
            }
            Ok(rs) => {
                // if this setup clears the bar, the invariant still holds
                assert!(rs.sampled().count() >= 17);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn coset_invariance_small_q() {
        // matrices in one coset (m composed with any g over F_q) give the
        // same relation row
        let t = FieldTower::build(3, 1, 1, 0).unwrap();
        let s = search_setup(&t, &SetupConstraints::relaxed(), 1 << 20).unwrap();
        let cs = enumerate_cosets(&t);
        let rep = &cs.reps[7];
        let base = factor_base_relation_forced(&t, &s, rep, 7).unwrap();
        let fq: Vec<Fq2Elt> = t.fq_elements().collect();
        let mut checked = 0;
        for &ga in &fq {
            for &gb in &fq {
                for &gc in &fq {
                    for &gd in &fq {
                        let det = t.sub(t.mul(ga, gd), t.mul(gb, gc));
                        if det.is_zero() {
                            continue;
                        }
                        // left-composition by g over F_q stays in the coset:
                        // supports (and hence relations) must agree
                        let m2 = CosetRep {
                            a: t.add(t.mul(ga, rep.a), t.mul(gb, rep.c)),
                            b: t.add(t.mul(ga, rep.b), t.mul(gb, rep.d)),
                            c: t.add(t.mul(gc, rep.a), t.mul(gd, rep.c)),
                            d: t.add(t.mul(gc, rep.b), t.mul(gd, rep.d)),
                            canonical_support: rep.canonical_support.clone(),
                        };
                        let sup = t.mobius_support(m2.a, m2.b, m2.c, m2.d);
                        assert_eq!(sup, rep.canonical_support);
                        let r2 = factor_base_relation_forced(&t, &s, &m2, 7).unwrap();
                        match (&base, &r2) {
                            (Some(x), Some(y)) => {
                                assert_eq!(x.e, y.e);
                                assert_eq!(x.e0, y.e0);
                            }
                            (None, None) => {}
                            _ => panic!("acceptance must be coset-invariant"),
                        }
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn linear_trap_refused() {
        // find a setup with a linear cofactor (constraints off) and check
        // the guarded entry point rejects it
        let t = FieldTower::build(2, 2, 3, 0).unwrap();
        let mut relaxed = SetupConstraints::relaxed();
        relaxed.require_no_linear_cofactor = false;
        let cs = enumerate_cosets(&t);
        // scan setups until one with a linear cofactor appears
        let setups = crate::setup::search_setups(&t, &relaxed, 1 << 20, 50).unwrap();
        let bad = setups.iter().find(|s| s.cofactors.iter().any(|&(_, _, ki)| ki == 1));
        if let Some(bad) = bad {
            match factor_base_relation(&t, bad, &cs.reps[0], 0) {
                Err(Error::LinearTrapPresent) => {}
                other => panic!("expected LinearTrapPresent, got {other:?}"),
            }
        }
    }
}
