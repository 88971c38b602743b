//! Trap detection, trap randomization, the trap-avoiding descent lattice,
//! and full discrete-log assembly.
//!
//! For a monic W of degree w ≥ 2 and a coset representative m = (a b; c d),
//! writing Ŵ = Σ c_j^q h0^j h1^{w−j} for W = Σ c_j x^j, the substitution
//! x ↦ m(W) into x^q − x = ∏(x−α) yields
//!   h1^w · (cW+d) · ∏_{α∈F_q}((aW+b) − α(cW+d)) ≡ N_{m,W}  mod ring_poly,
//! with N_{m,W} = (a^q Ŵ + b^q h1^w)(cW+d) − (aW+b)(c^q Ŵ + d^q h1^w).
//! The left side is a unit times shifts W+β, so a coset is accepted when
//! N_{m,W} is ⌈w/2⌉-smooth and coprime to ring_poly; the accepted shift
//! vectors span the descent lattice L(W), and membership of (1,0,…,0)
//! rewrites log W in terms of logs of polynomials of degree ≤ ⌈w/2⌉.
//!
//! Divisors of ring_poly are traps: their own shift coordinate is zero in
//! every accepted relation, so they are power-randomized away from the
//! divisor locus before descending. At the tiny field sizes this crate
//! targets, the accepted-relation count can be too small for the lattice to
//! contain the target vector; `full_dlog` then falls back to searching a
//! power W^i mod f that splits into linears, which is feasible only at desk
//! scale and is reported as such in the trace.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cosets::{CosetRep, CosetSet};
use crate::error::{Error, Result};
use crate::field::{FieldTower, Fq2Elt};
use crate::lattice::solve_membership;
use crate::linlog::DlogTable;
use crate::numint;
use crate::poly::FqsPoly;
use crate::setup::SetupInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrapStatus {
    Clean,
    TrapDivisor,
    SharesFactor,
    IsModulus,
}

/// Classify W against the ring modulus by gcd computations only.
pub fn trap_check(t: &FieldTower, w: &FqsPoly, setup: &SetupInstance) -> Result<TrapStatus> {
    let deg = w.degree();
    if !(1..=setup.f.degree()).contains(&deg) || !w.is_monic() {
        return Err(Error::DegreeOutOfRange(deg.max(0) as usize));
    }
    if *w == setup.f {
        return Ok(TrapStatus::IsModulus);
    }
    let g = t.pgcd(w, &setup.ring_poly);
    if g.degree() <= 0 {
        Ok(TrapStatus::Clean)
    } else if g == *w {
        Ok(TrapStatus::TrapDivisor)
    } else {
        Ok(TrapStatus::SharesFactor)
    }
}

/// Replace a trap W by V = W^i mod f with gcd(V, ring_poly) = 1 and
/// gcd(i, q^{2k}−1) = 1, so log W = i⁻¹ · log V. The exponent search is
/// deterministic and increasing.
pub fn randomize_trap(
    t: &FieldTower,
    w: &FqsPoly,
    setup: &SetupInstance,
    bound: u64,
) -> Result<(FqsPoly, u64)> {
    match trap_check(t, w, setup)? {
        TrapStatus::Clean => {
            return Err(Error::DescentStuck("randomize_trap on a clean polynomial".into()))
        }
        TrapStatus::IsModulus => return Err(Error::DegreeOutOfRange(setup.f.degree() as usize)),
        _ => {}
    }
    let order = t.group_order();
    for i in 2..=bound {
        if numint::gcd(i, order) != 1 {
            continue;
        }
        let v = t.ppowmod(w, i, &setup.f);
        if v.degree() < 1 {
            continue;
        }
        if t.pgcd(&v, &setup.ring_poly).degree() == 0 {
            return Ok((v, i));
        }
    }
    Err(Error::RandomizationExhausted(bound))
}

/// One accepted descent relation: shift exponents v over α ∈ F_{q²}
/// (index order, so v[0] is the exponent of W itself), the λ-logs of the
/// left-side unit and of the right-side leading unit, the h1 exponent, and
/// the right side's monic factorization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AcceptedRel {
    pub coset: usize,
    pub v: Vec<i64>,
    pub unit_lhs: u32,
    pub unit_rhs: u32,
    pub h1_exp: u32,
    pub rhs: Vec<(FqsPoly, u32)>,
}

fn relation_for(
    t: &FieldTower,
    setup: &SetupInstance,
    w: &FqsPoly,
    rep: &CosetRep,
    coset: usize,
) -> Result<Option<AcceptedRel>> {
    let deg = w.degree() as usize;
    let bound = deg.div_ceil(2);
    let q = t.q as u64;
    let (a, b, c, d) = (rep.a, rep.b, rep.c, rep.d);
    let (aq, bq, cq, dq) = (t.pow(a, q), t.pow(b, q), t.pow(c, q), t.pow(d, q));

    // Ŵ = Σ c_j^q h0^j h1^{deg−j}
    let mut wh = FqsPoly::zero();
    let mut h0p = FqsPoly::one();
    let mut h1pows = vec![FqsPoly::one()];
    for _ in 0..deg {
        h1pows.push(t.pmul(h1pows.last().unwrap(), &setup.h1));
    }
    for j in 0..=deg {
        let cj = w.coeff(j);
        if !cj.is_zero() {
            let term = t.pscale(&t.pmul(&h0p, &h1pows[deg - j]), t.pow(cj, q));
            wh = t.padd(&wh, &term);
        }
        if j < deg {
            h0p = t.pmul(&h0p, &setup.h0);
        }
    }
    let h1w = &h1pows[deg];

    let cwd = t.padd(&t.pscale(w, c), &FqsPoly::constant(d));
    let awb = t.padd(&t.pscale(w, a), &FqsPoly::constant(b));
    let t1 = t.padd(&t.pscale(&wh, aq), &t.pscale(h1w, bq));
    let t2 = t.padd(&t.pscale(&wh, cq), &t.pscale(h1w, dq));
    let n = t.psub(&t.pmul(&t1, &cwd), &t.pmul(&awb, &t2));
    if n.is_zero() {
        return Ok(None);
    }
    if t.pgcd(&n, &setup.ring_poly).degree() != 0 {
        return Ok(None);
    }
    if !t.is_smooth(&n, bound) {
        return Ok(None);
    }

    // left side: unit · ∏ (W+β)^{v_β}
    let mut v = vec![0i64; t.q2() as usize];
    let mut unit = Fq2Elt::ONE;
    let mut shift = |c1: Fq2Elt, c0: Fq2Elt| -> Result<()> {
        if c1.is_zero() {
            if c0.is_zero() {
                return Err(Error::BothZero);
            }
            unit = t.mul(unit, c0);
        } else {
            v[t.mul(c0, t.inv(c1)).0 as usize] += 1;
            unit = t.mul(unit, c1);
        }
        Ok(())
    };
    shift(c, d)?;
    for alpha in t.fq_elements() {
        shift(t.sub(a, t.mul(alpha, c)), t.sub(b, t.mul(alpha, d)))?;
    }

    let fac = t.factorize(&n)?;
    debug_assert!(fac.factors.iter().all(|(g, _)| g.degree() as usize <= bound));
    debug_assert!(fac.factors.iter().map(|&(_, m)| m as usize).sum::<usize>() <= 3 * deg);

    // exact reassembly check mod ring_poly
    let ring = &setup.ring_poly;
    let mut lhs = t.pmod(&t.pscale(h1w, unit), ring);
    for (beta, &e) in v.iter().enumerate() {
        let sh = t.padd(w, &FqsPoly::constant(Fq2Elt(beta as u16)));
        for _ in 0..e {
            lhs = t.pmod(&t.pmul(&lhs, &sh), ring);
        }
    }
    if !t.pmod(&t.psub(&lhs, &n), ring).is_zero() {
        return Err(Error::BadFactorization);
    }

    Ok(Some(AcceptedRel {
        coset,
        v,
        unit_lhs: t.fq2_dlog(unit)? as u32,
        unit_rhs: t.fq2_dlog(fac.unit)? as u32,
        h1_exp: deg as u32,
        rhs: fac.factors,
    }))
}

/// All accepted descent relations for W across the coset sweep. No trap
/// precondition: the trap demonstrations call this directly on divisors.
pub fn descend_relations(
    t: &FieldTower,
    setup: &SetupInstance,
    cosets: &CosetSet,
    w: &FqsPoly,
) -> Result<Vec<AcceptedRel>> {
    use rayon::prelude::*;
    let collected: Result<Vec<Option<AcceptedRel>>> = cosets
        .reps
        .par_iter()
        .enumerate()
        .map(|(i, rep)| relation_for(t, setup, w, rep, i))
        .collect();
    Ok(collected?.into_iter().flatten().collect())
}

/// A product expression λ^{lambda_exp} · ∏ g^{e_g} for W mod f, every g
/// monic of degree ≤ ⌈w/2⌉ (h1 appears as one of the g when it is linear).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DescentExpr {
    pub lambda_exp: u64,
    pub factors: BTreeMap<FqsPoly, u64>,
}

fn expr_add(t: &FieldTower, e: &mut DescentExpr, g: &FqsPoly, c: i64) {
    let order = t.group_order() as i64;
    let cur = e.factors.entry(g.clone()).or_insert(0);
    *cur = (*cur as i64 + c).rem_euclid(order) as u64;
}

/// Evaluate an expression in F_{q²}[x]/(f).
pub fn expr_eval(t: &FieldTower, setup: &SetupInstance, e: &DescentExpr) -> FqsPoly {
    let f = &setup.f;
    let sub = t.subgroup_order() as u64;
    let mut acc = FqsPoly::constant(t.lambda_pow(e.lambda_exp % sub));
    for (g, &c) in &e.factors {
        if c == 0 {
            continue;
        }
        acc = t.pmod(&t.pmul(&acc, &t.ppowmod(g, c, f)), f);
    }
    acc
}

/// One descent step: accepted relations, membership of (1,0,…,0) in L(W),
/// and the resulting verified product expression.
pub fn descend_step(
    t: &FieldTower,
    setup: &SetupInstance,
    cosets: &CosetSet,
    w: &FqsPoly,
) -> Result<(DescentExpr, Vec<AcceptedRel>)> {
    if trap_check(t, w, setup)? != TrapStatus::Clean {
        return Err(Error::LinearTrapPresent);
    }
    let rels = descend_relations(t, setup, cosets, w)?;
    let width = t.q2() as usize;
    let lat: Vec<Vec<BigInt>> = rels
        .iter()
        .map(|r| r.v.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut target = vec![BigInt::zero(); width];
    target[0] = BigInt::from(1);
    let coeffs = if lat.is_empty() {
        None
    } else {
        solve_membership(&lat, &target)
    };
    let Some(coeffs) = coeffs else {
        return Err(Error::DescentStuck(format!(
            "(1,0,...,0) not in L(W) from {} accepted relations (deg {})",
            rels.len(),
            w.degree()
        )));
    };

    let order = t.group_order();
    let sub = t.subgroup_order() as i64;
    let red = |x: &BigInt, m: i64| -> i64 {
        let mut r = x % m;
        if r.is_negative() {
            r += m;
        }
        r.to_i64().unwrap()
    };
    let mut expr = DescentExpr::default();
    let mut lam: i64 = 0;
    for (r, x) in rels.iter().zip(coeffs.iter()) {
        if x.is_zero() {
            continue;
        }
        let xo = red(x, order as i64);
        let xs = red(x, sub);
        // log W picks up x·(log N − w·log h1 − λlog(unit_lhs))
        lam = (lam + xs * (r.unit_rhs as i64 - r.unit_lhs as i64)).rem_euclid(sub);
        for (g, m) in &r.rhs {
            expr_add(t, &mut expr, g, ((xo as i128 * *m as i128) % order as i128) as i64);
        }
        if setup.h1.degree() == 1 {
            expr_add(
                t,
                &mut expr,
                &setup.h1,
                -(((xo as i128 * r.h1_exp as i128) % order as i128) as i64),
            );
        } else {
            // constant h1 folds into the λ part
            let l = t.fq2_dlog(setup.h1.coeff(0)).unwrap_or(0) as i64;
            lam = (lam - xs * (r.h1_exp as i64) * l).rem_euclid(sub);
        }
    }
    expr.lambda_exp = lam as u64;

    let got = expr_eval(t, setup, &expr);
    let want = t.pmod(w, &setup.f);
    if got != want {
        return Err(Error::VerificationFailed);
    }
    Ok((expr, rels))
}

/// JSON-serializable audit trace of a descent run.
#[derive(Clone, Debug, Serialize)]
pub struct DescentNode {
    pub poly: String,
    pub degree: i64,
    pub status: TrapStatus,
    pub method: String,
    pub accepted: usize,
    pub log: u64,
    pub children: Vec<DescentNode>,
}

pub struct DescentCtx<'a> {
    pub t: &'a FieldTower,
    pub setup: &'a SetupInstance,
    pub cosets: &'a CosetSet,
    pub table: &'a DlogTable,
    pub randomize_bound: u64,
    pub power_smooth_bound: u64,
    memo: HashMap<FqsPoly, u64>,
}

impl<'a> DescentCtx<'a> {
    pub fn new(
        t: &'a FieldTower,
        setup: &'a SetupInstance,
        cosets: &'a CosetSet,
        table: &'a DlogTable,
    ) -> Self {
        DescentCtx {
            t,
            setup,
            cosets,
            table,
            randomize_bound: 1 << 16,
            power_smooth_bound: 1 << 16,
            memo: HashMap::new(),
        }
    }

    fn lambda_log(&self, e: u64) -> u64 {
        numint::mul_mod(e % self.t.subgroup_order() as u64, self.table.log_lambda, self.table.order)
    }

    /// Desk-scale fallback: find i coprime to the group order with
    /// W^i mod f 1-smooth, then read all logs from the table.
    fn power_smooth(&self, w: &FqsPoly) -> Result<(u64, u64)> {
        let t = self.t;
        let order = self.table.order;
        for i in 1..=self.power_smooth_bound {
            if numint::gcd(i, order) != 1 {
                continue;
            }
            let v = t.ppowmod(w, i, &self.setup.f);
            if v.is_zero() || !t.is_smooth(&v, 1) {
                continue;
            }
            let fac = t.factorize(&v)?;
            let mut log = self.lambda_log(t.fq2_dlog(fac.unit)? as u64);
            for (g, m) in &fac.factors {
                let lg = self.table.logs[g.coeff(0).0 as usize];
                log = (log + numint::mul_mod(lg, *m as u64, order)) % order;
            }
            let inv = numint::inv_mod(i, order).expect("i coprime to order");
            return Ok((numint::mul_mod(log, inv, order), i));
        }
        Err(Error::DescentStuck(format!(
            "no 1-smooth power of deg-{} polynomial within bound",
            w.degree()
        )))
    }

    fn expr_log(&mut self, expr: &DescentExpr, children: &mut Vec<DescentNode>) -> Result<u64> {
        let order = self.table.order;
        let mut log = self.lambda_log(expr.lambda_exp);
        for (g, &c) in expr.factors.clone().iter() {
            if c == 0 {
                continue;
            }
            let lg = self.poly_log(g, children)?;
            log = (log + numint::mul_mod(lg, c, order)) % order;
        }
        Ok(log)
    }

    /// log of a monic polynomial of degree 1..k to the table base, with the
    /// trace node for this subtree appended to `out`.
    pub fn poly_log(&mut self, w: &FqsPoly, out: &mut Vec<DescentNode>) -> Result<u64> {
        let t = self.t;
        assert!(w.is_monic());
        if w.degree() == 1 {
            let log = self.table.logs[w.coeff(0).0 as usize];
            out.push(DescentNode {
                poly: t.poly_string(w),
                degree: 1,
                status: trap_check(t, w, self.setup)?,
                method: "table".into(),
                accepted: 0,
                log,
                children: vec![],
            });
            return Ok(log);
        }
        if let Some(&log) = self.memo.get(w) {
            out.push(DescentNode {
                poly: t.poly_string(w),
                degree: w.degree(),
                status: trap_check(t, w, self.setup)?,
                method: "memo".into(),
                accepted: 0,
                log,
                children: vec![],
            });
            return Ok(log);
        }
        let status = trap_check(t, w, self.setup)?;
        let order = self.table.order;

        let mut children = Vec::new();
        let (log, method, accepted) = if status != TrapStatus::Clean {
            let (v, i) = randomize_trap(t, w, self.setup, self.randomize_bound)?;
            let (vm, unit) = monic_split(t, &v);
            let lv = self.poly_log(&vm, &mut children)?;
            let lv = (lv + self.lambda_log(t.fq2_dlog(unit)? as u64)) % order;
            let inv = numint::inv_mod(i, order).expect("i coprime to order");
            (numint::mul_mod(lv, inv, order), format!("randomized (i={i})"), 0)
        } else {
            match descend_step(t, self.setup, self.cosets, w) {
                Ok((expr, rels)) => {
                    let log = self.expr_log(&expr, &mut children)?;
                    (log, "lattice".to_string(), rels.len())
                }
                Err(Error::DescentStuck(_)) => {
                    let (log, i) = self.power_smooth(w)?;
                    (log, format!("power-smooth (i={i})"), 0)
                }
                Err(e) => return Err(e),
            }
        };

        // verify before publishing to the memo table
        let got = t.ppowmod(&FqsPoly::linear(self.table.base), log, &self.setup.f);
        if got != t.pmod(w, &self.setup.f) {
            return Err(Error::VerificationFailed);
        }
        self.memo.insert(w.clone(), log);
        out.push(DescentNode {
            poly: t.poly_string(w),
            degree: w.degree(),
            status,
            method,
            accepted,
            log,
            children,
        });
        Ok(log)
    }
}

/// Split a nonzero polynomial into (monic part, leading unit).
pub fn monic_split(t: &FieldTower, a: &FqsPoly) -> (FqsPoly, Fq2Elt) {
    let lead = a.leading();
    (t.pmonic(a), lead)
}

/// Discrete log of `target` mod f to base x+α_base from the table, via
/// factorization and recursive descent. Returns the log and the audit trace.
pub fn full_dlog(
    t: &FieldTower,
    setup: &SetupInstance,
    table: &DlogTable,
    cosets: &CosetSet,
    target: &FqsPoly,
) -> Result<(u64, Vec<DescentNode>)> {
    let f = &setup.f;
    let red = t.pmod(target, f);
    if red.is_zero() {
        return Err(Error::ZeroElement);
    }
    let order = table.order;
    let mut ctx = DescentCtx::new(t, setup, cosets, table);
    let mut trace = Vec::new();
    let fac = t.factorize(&red)?;
    let mut log = numint::mul_mod(
        t.fq2_dlog(fac.unit)? as u64 % t.subgroup_order() as u64,
        table.log_lambda,
        order,
    );
    for (g, m) in &fac.factors {
        let lg = ctx.poly_log(g, &mut trace)?;
        log = (log + numint::mul_mod(lg, *m as u64, order)) % order;
    }
    let got = t.ppowmod(&FqsPoly::linear(table.base), log, f);
    if got != red {
        return Err(Error::VerificationFailed);
    }
    Ok((log, trace))
}
