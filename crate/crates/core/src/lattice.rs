//! Exact integer-lattice linear algebra: Hermite and Smith normal forms
//! with unimodular transforms, membership solving, and quotient invariants.
//!
//! Everything is arbitrary-precision: the group order q^{2k}−1 alone
//! overflows machine words well before SNF intermediates do. Every normal
//! form re-verifies its transform identity by exact multiplication before
//! returning — the matrices here are small enough that the recheck is free.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Rectangular matrix of exact integers, row major.
pub type IntMat = Vec<Vec<BigInt>>;

pub fn from_i64(rows: &[Vec<i64>]) -> IntMat {
    rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

pub fn identity(n: usize) -> IntMat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn mat_mul(a: &IntMat, b: &IntMat) -> IntMat {
    let cols = b[0].len();
    a.iter()
        .map(|ar| {
            (0..cols)
                .map(|j| ar.iter().zip(b).map(|(x, br)| x * &br[j]).sum())
                .collect()
        })
        .collect()
}

/// Row-style Hermite normal form: returns (H, T) with T·M = H, T unimodular;
/// pivots positive, entries above each pivot reduced into [0, pivot).
pub fn hnf(m: &IntMat) -> (IntMat, IntMat) {
    let nrows = m.len();
    let ncols = if nrows == 0 { 0 } else { m[0].len() };
    let mut h = m.clone();
    let mut t = identity(nrows);
    let mut pivot_row = 0usize;
    for col in 0..ncols {
        if pivot_row == nrows {
            break;
        }
        // euclid the column below pivot_row down to a single nonzero entry
        loop {
            let mut best: Option<usize> = None;
            for i in pivot_row..nrows {
                if !h[i][col].is_zero()
                    && best.map_or(true, |b| h[i][col].abs() < h[b][col].abs())
                {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            h.swap(pivot_row, b);
            t.swap(pivot_row, b);
            let mut done = true;
            for i in pivot_row + 1..nrows {
                if h[i][col].is_zero() {
                    continue;
                }
                let q = h[i][col].div_euclid(&h[pivot_row][col]);
                row_sub(&mut h, i, pivot_row, &q);
                row_sub(&mut t, i, pivot_row, &q);
                if !h[i][col].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if h[pivot_row][col].is_zero() {
            continue;
        }
        if h[pivot_row][col].is_negative() {
            row_negate(&mut h, pivot_row);
            row_negate(&mut t, pivot_row);
        }
        // reduce entries above the pivot into [0, pivot)
        for i in 0..pivot_row {
            let q = h[i][col].div_euclid(&h[pivot_row][col]);
            if !q.is_zero() {
                row_sub(&mut h, i, pivot_row, &q);
                row_sub(&mut t, i, pivot_row, &q);
            }
        }
        pivot_row += 1;
    }
    debug_assert_eq!(mat_mul(&t, m), h);
    (h, t)
}

fn row_sub(m: &mut IntMat, i: usize, j: usize, q: &BigInt) {
    if q.is_zero() {
        return;
    }
    let rj = m[j].clone();
    for (x, y) in m[i].iter_mut().zip(&rj) {
        *x -= q * y;
    }
}

fn row_negate(m: &mut IntMat, i: usize) {
    for x in &mut m[i] {
        *x = -&*x;
    }
}

trait DivEuclidBig {
    fn div_euclid(&self, d: &BigInt) -> BigInt;
}

impl DivEuclidBig for BigInt {
    fn div_euclid(&self, d: &BigInt) -> BigInt {
        let (q, r) = self.div_rem(d);
        if r.is_negative() {
            if d.is_negative() {
                q + 1
            } else {
                q - 1
            }
        } else {
            q
        }
    }
}

/// Smith normal form with both transforms: U·M·V = D, plus V⁻¹ maintained
/// alongside (the quotient-coordinate map the log solver reads rows from).
#[derive(Clone, Debug)]
pub struct SnfResult {
    pub d: IntMat,
    pub u: IntMat,
    pub v: IntMat,
    pub vinv: IntMat,
}

impl SnfResult {
    /// Diagonal entries (length = min(rows, cols)).
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.d.len().min(self.d.first().map_or(0, |r| r.len())))
            .map(|i| self.d[i][i].clone())
            .collect()
    }
}

fn transpose(m: &IntMat) -> IntMat {
    let nrows = m.len();
    let ncols = if nrows == 0 { 0 } else { m[0].len() };
    (0..ncols).map(|j| (0..nrows).map(|i| m[i][j].clone()).collect()).collect()
}

/// Inverse of a unimodular matrix via its HNF: T·M = I forces T = M⁻¹.
fn invert_unimodular(m: &IntMat) -> IntMat {
    let (h, t) = hnf(m);
    assert_eq!(h, identity(m.len()), "matrix is not unimodular");
    t
}

fn is_diagonal(m: &IntMat) -> bool {
    m.iter()
        .enumerate()
        .all(|(i, r)| r.iter().enumerate().all(|(j, x)| i == j || x.is_zero()))
}

pub fn snf(m: &IntMat) -> SnfResult {
    let nrows = m.len();
    let ncols = if nrows == 0 { 0 } else { m[0].len() };
    let mut d = m.clone();
    let mut u = identity(nrows);
    let mut v = identity(ncols);
    let mut vinv = identity(ncols);

    // diagonalize by alternating row- and column-HNF passes; unlike naive
    // min-pivot elimination this keeps intermediate entries HNF-sized
    loop {
        let (h, t) = hnf(&d);
        u = mat_mul(&t, &u);
        d = h;
        if is_diagonal(&d) {
            // move any diagonal zeros after the nonzeros (HNF can strand a
            // zero row between pivot columns)
            break;
        }
        let (h2, t2) = hnf(&transpose(&d));
        d = transpose(&h2);
        let t2t = transpose(&t2);
        v = mat_mul(&v, &t2t);
        vinv = mat_mul(&transpose(&invert_unimodular(&t2)), &vinv);
        if is_diagonal(&d) {
            break;
        }
    }

    // compact the diagonal: shift nonzero entries to the leading positions
    let nd = nrows.min(ncols);
    for i in 0..nd {
        if d[i][i].is_zero() {
            if let Some(j) = (i + 1..nd).find(|&j| !d[j][j].is_zero()) {
                d.swap(i, j);
                u.swap(i, j);
                for row in d.iter_mut() {
                    row.swap(i, j);
                }
                for row in v.iter_mut() {
                    row.swap(i, j);
                }
                vinv.swap(i, j);
            }
        }
    }

    // enforce the divisibility chain: a violating pair (dᵢ, dⱼ) is coupled
    // by a column add and re-diagonalized, which replaces them by
    // (gcd, lcm·unit); repeat until the chain holds
    loop {
        let mut fixed = true;
        'scan: for i in 0..nd {
            for j in i + 1..nd {
                let (a, b) = (d[i][i].clone(), d[j][j].clone());
                if a.is_zero() && !b.is_zero() {
                    // zero before nonzero: swap into order
                    d.swap(i, j);
                    u.swap(i, j);
                    for row in d.iter_mut() {
                        row.swap(i, j);
                    }
                    for row in v.iter_mut() {
                        row.swap(i, j);
                    }
                    vinv.swap(i, j);
                    fixed = false;
                    break 'scan;
                }
                if !a.is_zero() && !(&b % &a).is_zero() {
                    // col_i += col_j couples the pair; HNF alternation then
                    // produces gcd/lcm in their places
                    for row in d.iter_mut() {
                        let x = row[j].clone();
                        row[i] += x;
                    }
                    for row in v.iter_mut() {
                        let x = row[j].clone();
                        row[i] += x;
                    }
                    let ri = vinv[i].clone();
                    for (x, y) in vinv[j].iter_mut().zip(&ri) {
                        *x -= y;
                    }
                    loop {
                        let (h, t) = hnf(&d);
                        u = mat_mul(&t, &u);
                        d = h;
                        if is_diagonal(&d) {
                            break;
                        }
                        let (h2, t2) = hnf(&transpose(&d));
                        d = transpose(&h2);
                        v = mat_mul(&v, &transpose(&t2));
                        vinv = mat_mul(&transpose(&invert_unimodular(&t2)), &vinv);
                        if is_diagonal(&d) {
                            break;
                        }
                    }
                    fixed = false;
                    break 'scan;
                }
            }
        }
        if fixed {
            break;
        }
    }

    let res = SnfResult { d, u, v, vinv };
    // exactness guarantees, cheap at this scale
    debug_assert_eq!(mat_mul(&mat_mul(&res.u, m), &res.v), res.d);
    debug_assert_eq!(mat_mul(&res.v, &res.vinv), identity(ncols));
    let diag = res.diagonal();
    debug_assert!(diag
        .windows(2)
        .all(|w| w[1].is_zero() || (!w[0].is_zero() && (&w[1] % &w[0]).is_zero()) || (w[0].is_zero() && w[1].is_zero())));
    res
}

/// Integer coefficients x with x·L = target, or None. Verified exactly.
pub fn solve_membership(l: &IntMat, target: &[BigInt]) -> Option<Vec<BigInt>> {
    let (h, t) = hnf(l);
    let mut residual: Vec<BigInt> = target.to_vec();
    let mut coeffs = vec![BigInt::zero(); l.len()];
    for (i, row) in h.iter().enumerate() {
        let Some(p) = row.iter().position(|x| !x.is_zero()) else { continue };
        if residual[p].is_zero() {
            continue;
        }
        let (q, r) = residual[p].div_rem(&row[p]);
        if !r.is_zero() {
            return None;
        }
        for (x, y) in residual.iter_mut().zip(row) {
            *x -= &q * y;
        }
        for (c, ti) in coeffs.iter_mut().zip(&t[i]) {
            *c += &q * ti;
        }
    }
    if residual.iter().any(|x| !x.is_zero()) {
        return None;
    }
    // exact recheck: coeffs·L = target
    let mut check = vec![BigInt::zero(); target.len()];
    for (c, row) in coeffs.iter().zip(l) {
        for (x, y) in check.iter_mut().zip(row) {
            *x += c * y;
        }
    }
    if check != target {
        return None;
    }
    Some(coeffs)
}

/// Convenience membership test over i64 rows.
pub fn in_row_lattice(rows: &[Vec<i64>], target: &[i64]) -> bool {
    let l = from_i64(rows);
    let t: Vec<BigInt> = target.iter().map(|&x| BigInt::from(x)).collect();
    solve_membership(&l, &t).is_some()
}

/// Abelian invariants of Z^ambient / rowlattice(L): non-unit SNF diagonal
/// entries, with 0 entries for each ambient dimension not covered by the
/// lattice rank (infinite factors).
pub fn quotient_invariants(l: &IntMat, ambient_dim: usize) -> Vec<BigInt> {
    if l.is_empty() {
        return vec![BigInt::zero(); ambient_dim];
    }
    assert!(l.iter().all(|r| r.len() == ambient_dim));
    let s = snf(l);
    let diag = s.diagonal();
    let rank = diag.iter().filter(|x| !x.is_zero()).count();
    let mut out: Vec<BigInt> = diag
        .into_iter()
        .filter(|x| !x.is_zero() && !x.is_one())
        .collect();
    out.extend(std::iter::repeat(BigInt::zero()).take(ambient_dim - rank));
    out
}
