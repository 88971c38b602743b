//! Dense univariate polynomials over F_{q²}, with complete factorization.
//!
//! Coefficients are little-endian (index = degree) and always normalized:
//! no trailing zeros, so the zero polynomial is the empty vector. Degrees in
//! this pipeline stay below ~4k ≤ 40, so quadratic-time arithmetic is fine
//! and factorization uses the textbook squarefree / distinct-degree /
//! equal-degree chain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldTower, Fq2Elt};

/// A polynomial over F_{q²}; coefficient i is the coefficient of x^i.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FqsPoly(pub Vec<Fq2Elt>);

/// unit · ∏ factors_i ^ mult_i, factors monic irreducible, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub unit: Fq2Elt,
    pub factors: Vec<(FqsPoly, u32)>,
}

impl FqsPoly {
    pub fn zero() -> FqsPoly {
        FqsPoly(Vec::new())
    }

    pub fn one() -> FqsPoly {
        FqsPoly(vec![Fq2Elt::ONE])
    }

    pub fn constant(c: Fq2Elt) -> FqsPoly {
        if c.is_zero() {
            FqsPoly::zero()
        } else {
            FqsPoly(vec![c])
        }
    }

    /// x + c
    pub fn linear(c: Fq2Elt) -> FqsPoly {
        FqsPoly(vec![c, Fq2Elt::ONE])
    }

    /// x^d
    pub fn monomial(d: usize) -> FqsPoly {
        let mut v = vec![Fq2Elt::ZERO; d + 1];
        v[d] = Fq2Elt::ONE;
        FqsPoly(v)
    }

    pub fn from_coeffs(mut v: Vec<Fq2Elt>) -> FqsPoly {
        while v.last().map_or(false, |c| c.is_zero()) {
            v.pop();
        }
        FqsPoly(v)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.0.len() == 1 && self.0[0] == Fq2Elt::ONE
    }

    /// Degree; -1 (as i64) for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.0.len() as i64 - 1
    }

    pub fn leading(&self) -> Fq2Elt {
        *self.0.last().unwrap_or(&Fq2Elt::ZERO)
    }

    pub fn coeff(&self, i: usize) -> Fq2Elt {
        self.0.get(i).copied().unwrap_or(Fq2Elt::ZERO)
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == Fq2Elt::ONE
    }
}

impl FieldTower {
    pub fn padd(&self, a: &FqsPoly, b: &FqsPoly) -> FqsPoly {
        let n = a.0.len().max(b.0.len());
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            v.push(self.add(a.coeff(i), b.coeff(i)));
        }
        FqsPoly::from_coeffs(v)
    }

    pub fn psub(&self, a: &FqsPoly, b: &FqsPoly) -> FqsPoly {
        let n = a.0.len().max(b.0.len());
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            v.push(self.sub(a.coeff(i), b.coeff(i)));
        }
        FqsPoly::from_coeffs(v)
    }

    pub fn pneg(&self, a: &FqsPoly) -> FqsPoly {
        FqsPoly(a.0.iter().map(|&c| self.neg(c)).collect())
    }

    pub fn pscale(&self, a: &FqsPoly, c: Fq2Elt) -> FqsPoly {
        if c.is_zero() {
            return FqsPoly::zero();
        }
        FqsPoly(a.0.iter().map(|&x| self.mul(x, c)).collect())
    }

    pub fn pmul(&self, a: &FqsPoly, b: &FqsPoly) -> FqsPoly {
        if a.is_zero() || b.is_zero() {
            return FqsPoly::zero();
        }
        let mut v = vec![Fq2Elt::ZERO; a.0.len() + b.0.len() - 1];
        for (i, &ai) in a.0.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, &bj) in b.0.iter().enumerate() {
                v[i + j] = self.add(v[i + j], self.mul(ai, bj));
            }
        }
        FqsPoly(v)
    }

    pub fn pmonic(&self, a: &FqsPoly) -> FqsPoly {
        if a.is_zero() || a.is_monic() {
            return a.clone();
        }
        self.pscale(a, self.inv(a.leading()))
    }

    /// (quotient, remainder); b must be nonzero.
    pub fn pdivmod(&self, a: &FqsPoly, b: &FqsPoly) -> (FqsPoly, FqsPoly) {
        assert!(!b.is_zero(), "division by zero polynomial");
        if a.0.len() < b.0.len() {
            return (FqsPoly::zero(), a.clone());
        }
        let linv = self.inv(b.leading());
        let mut r = a.0.clone();
        let mut q = vec![Fq2Elt::ZERO; a.0.len() - b.0.len() + 1];
        for i in (b.0.len() - 1..a.0.len()).rev() {
            let c = self.mul(r[i], linv);
            if c.is_zero() {
                continue;
            }
            q[i + 1 - b.0.len()] = c;
            for (j, &bj) in b.0.iter().enumerate() {
                let idx = i + 1 - b.0.len() + j;
                r[idx] = self.sub(r[idx], self.mul(c, bj));
            }
        }
        (FqsPoly::from_coeffs(q), FqsPoly::from_coeffs(r))
    }

    pub fn pmod(&self, a: &FqsPoly, m: &FqsPoly) -> FqsPoly {
        self.pdivmod(a, m).1
    }

    /// Monic gcd (gcd(0,0) = 0).
    pub fn pgcd(&self, a: &FqsPoly, b: &FqsPoly) -> FqsPoly {
        let mut a = a.clone();
        let mut b = b.clone();
        while !b.is_zero() {
            let r = self.pmod(&a, &b);
            a = b;
            b = r;
        }
        self.pmonic(&a)
    }

    pub fn ppowmod(&self, a: &FqsPoly, mut e: u64, m: &FqsPoly) -> FqsPoly {
        let mut base = self.pmod(a, m);
        let mut r = self.pmod(&FqsPoly::one(), m);
        while e > 0 {
            if e & 1 == 1 {
                r = self.pmod(&self.pmul(&r, &base), m);
            }
            base = self.pmod(&self.pmul(&base, &base), m);
            e >>= 1;
        }
        r
    }

    pub fn peval(&self, a: &FqsPoly, x: Fq2Elt) -> Fq2Elt {
        a.0.iter().rev().fold(Fq2Elt::ZERO, |acc, &c| self.add(self.mul(acc, x), c))
    }

    pub fn pderiv(&self, a: &FqsPoly) -> FqsPoly {
        if a.0.len() < 2 {
            return FqsPoly::zero();
        }
        let mut v = Vec::with_capacity(a.0.len() - 1);
        for (i, &c) in a.0.iter().enumerate().skip(1) {
            // i·c, computed in characteristic p
            let rep = (i as u32) % self.p;
            let mut s = Fq2Elt::ZERO;
            for _ in 0..rep {
                s = self.add(s, c);
            }
            v.push(s);
        }
        FqsPoly::from_coeffs(v)
    }

    /// Apply x ↦ x^q coefficient-wise.
    pub fn pfrob_coeffs(&self, a: &FqsPoly) -> FqsPoly {
        FqsPoly(a.0.iter().map(|&c| self.frob(c)).collect())
    }

    /// ∏_{α ∈ S} (x + α)
    pub fn product_of_linears<I: IntoIterator<Item = Fq2Elt>>(&self, alphas: I) -> FqsPoly {
        let mut r = FqsPoly::one();
        for a in alphas {
            r = self.pmul(&r, &FqsPoly::linear(a));
        }
        r
    }

    /// p-th root of a polynomial whose exponents are all multiples of p
    /// (arises for derivative-zero factors); coefficient root is c^{q²/p}.
    fn pth_root(&self, a: &FqsPoly) -> FqsPoly {
        let p = self.p as usize;
        let e = (self.q2() / self.p) as u64;
        let mut v = Vec::new();
        for i in (0..a.0.len()).step_by(p) {
            v.push(self.pow(a.0[i], e));
        }
        FqsPoly::from_coeffs(v)
    }

    /// Squarefree decomposition of a monic polynomial: list of (g_i, i) with
    /// a = ∏ g_i^i, g_i squarefree pairwise-coprime (only i with g_i ≠ 1).
    pub fn squarefree_decomp(&self, a: &FqsPoly) -> Vec<(FqsPoly, u32)> {
        if a.degree() < 1 {
            return Vec::new();
        }
        let a = self.pmonic(a);
        let d = self.pderiv(&a);
        if d.is_zero() {
            // a = b^p
            let b = self.pth_root(&a);
            return self
                .squarefree_decomp(&b)
                .into_iter()
                .map(|(g, m)| (g, m * self.p))
                .collect();
        }
        let mut out = Vec::new();
        let mut c = self.pgcd(&a, &d);
        let mut w = self.pdivmod(&a, &c).0;
        let mut i = 1u32;
        while !w.is_one() {
            let y = self.pgcd(&w, &c);
            let g = self.pdivmod(&w, &y).0;
            if g.degree() > 0 {
                out.push((g, i));
            }
            w = y.clone();
            c = self.pdivmod(&c, &y).0;
            i += 1;
        }
        if c.degree() > 0 {
            // remaining part is a p-th power
            for (g, m) in self.squarefree_decomp(&self.pth_root(&c)) {
                out.push((g, m * self.p));
            }
        }
        // merge multiplicities of equal factors (can collide via the p-power branch)
        out.sort();
        let mut merged: Vec<(FqsPoly, u32)> = Vec::new();
        for (g, m) in out {
            if let Some(last) = merged.last_mut() {
                if last.0 == g {
                    last.1 += m;
                    continue;
                }
            }
            merged.push((g, m));
        }
        merged
    }

    /// Distinct-degree factorization of a monic squarefree polynomial:
    /// list of (product of irreducibles of degree d, d).
    pub fn ddf(&self, a: &FqsPoly) -> Vec<(FqsPoly, usize)> {
        let mut f = self.pmonic(a);
        let mut out = Vec::new();
        let mut h = self.pmod(&FqsPoly::monomial(1), &f);
        let mut d = 0usize;
        while f.degree() >= 2 * (d as i64 + 1) {
            d += 1;
            h = self.ppowmod(&h, self.q2() as u64, &f); // h = x^{Q^d} mod f
            let mut diff = self.psub(&h, &FqsPoly::monomial(1));
            diff = self.pmod(&diff, &f);
            let g = self.pgcd(&f, &diff);
            if g.degree() > 0 {
                out.push((g.clone(), d));
                f = self.pdivmod(&f, &g).0;
                h = self.pmod(&h, &f);
            }
        }
        if f.degree() > 0 {
            let d = f.degree() as usize;
            out.push((f, d));
        }
        out
    }

    /// Equal-degree splitting: factor a monic squarefree product of
    /// irreducibles all of degree d into the irreducibles (Cantor–Zassenhaus,
    /// with the trace construction in characteristic 2).
    pub fn edf(&self, a: &FqsPoly, d: usize) -> Vec<FqsPoly> {
        let deg = a.degree();
        if deg == d as i64 {
            return vec![self.pmonic(a)];
        }
        // deterministic splitter sweep: iterate candidate polynomials in a
        // fixed order so factorization results are reproducible
        let q2 = self.q2() as u64;
        let mut stack = vec![self.pmonic(a)];
        let mut done = Vec::new();
        let mut cand_idx = 0u64;
        while let Some(f) = stack.pop() {
            if f.degree() == d as i64 {
                done.push(f);
                continue;
            }
            loop {
                cand_idx += 1;
                let t = self.index_poly(cand_idx, 2 * d);
                if t.degree() < 1 {
                    continue;
                }
                let g = if self.p == 2 {
                    // trace map T(t) = t + t^2 + t^4 + … over F_2, m = n·2·d terms
                    let m = (self.n as usize) * 2 * d;
                    let mut acc = FqsPoly::zero();
                    let mut cur = self.pmod(&t, &f);
                    for _ in 0..m {
                        acc = self.pmod(&self.padd(&acc, &cur), &f);
                        cur = self.pmod(&self.pmul(&cur, &cur), &f);
                    }
                    self.pgcd(&f, &acc)
                } else {
                    let e = (q2.pow(d as u32) - 1) / 2;
                    let s = self.ppowmod(&t, e, &f);
                    self.pgcd(&f, &self.psub(&s, &FqsPoly::one()))
                };
                if g.degree() > 0 && g.degree() < f.degree() {
                    let h = self.pdivmod(&f, &g).0;
                    stack.push(g);
                    stack.push(h);
                    break;
                }
            }
        }
        done.sort();
        done
    }

    /// Deterministic enumeration of polynomials of degree < max_deg, used to
    /// drive the equal-degree splitter: digits of idx in base q².
    fn index_poly(&self, mut idx: u64, max_deg: usize) -> FqsPoly {
        let q2 = self.q2() as u64;
        let mut v = Vec::new();
        while idx > 0 && v.len() < max_deg {
            v.push(Fq2Elt((idx % q2) as u16));
            idx /= q2;
        }
        FqsPoly::from_coeffs(v)
    }

    /// Complete factorization into unit · ∏ monic irreducibles^mult.
    pub fn factorize(&self, a: &FqsPoly) -> Result<Factorization> {
        if a.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let unit = a.leading();
        let mut factors = Vec::new();
        for (g, m) in self.squarefree_decomp(a) {
            for (prod, d) in self.ddf(&g) {
                for irr in self.edf(&prod, d) {
                    factors.push((irr, m));
                }
            }
        }
        factors.sort();
        Ok(Factorization { unit, factors })
    }

    /// Re-multiply a factorization (used to verify and in tests).
    pub fn remultiply(&self, f: &Factorization) -> FqsPoly {
        let mut r = FqsPoly::constant(f.unit);
        for (g, m) in &f.factors {
            for _ in 0..*m {
                r = self.pmul(&r, g);
            }
        }
        r
    }

    /// True iff every irreducible factor has degree ≤ bound. Constants and
    /// units are vacuously smooth; zero is not. Avoids equal-degree splitting:
    /// the squarefree/distinct-degree stages already expose all degrees.
    pub fn is_smooth(&self, a: &FqsPoly, bound: usize) -> bool {
        if a.is_zero() {
            return false;
        }
        for (g, _) in self.squarefree_decomp(a) {
            for (_, d) in self.ddf(&g) {
                if d > bound {
                    return false;
                }
            }
        }
        true
    }

    /// The roots in F_{q²} of a 1-smooth polynomial, with multiplicity,
    /// as pairs (α, e) meaning (x + α)^e divides a.
    pub fn smooth_roots(&self, a: &FqsPoly) -> Result<Vec<(Fq2Elt, u32)>> {
        let fac = self.factorize(a)?;
        let mut out = Vec::new();
        for (g, m) in fac.factors {
            if g.degree() != 1 {
                return Err(Error::DegreeOutOfRange(g.degree() as usize));
            }
            out.push((g.0[0], m));
        }
        Ok(out)
    }
}


impl FieldTower {
    /// Human-readable form "c_d x^d + ... + c_0" with coefficients written
    /// as "u+v*g" over the basis {1, γ}.
    pub fn elt_string(&self, e: Fq2Elt) -> String {
        let (c0, c1) = self.coeffs(e);
        match (c0, c1) {
            (_, 0) => format!("{c0}"),
            (0, 1) => "g".to_string(),
            (0, _) => format!("{c1}*g"),
            (_, 1) => format!("{c0}+g"),
            _ => format!("{c0}+{c1}*g"),
        }
    }

    pub fn poly_string(&self, a: &FqsPoly) -> String {
        if a.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (i, &c) in a.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let cs = self.elt_string(c);
            let cs = if cs.contains('+') { format!("({cs})") } else { cs };
            parts.push(match i {
                0 => cs,
                1 if c == Fq2Elt::ONE => "x".to_string(),
                1 => format!("{cs} x"),
                _ if c == Fq2Elt::ONE => format!("x^{i}"),
                _ => format!("{cs} x^{i}"),
            });
        }
        parts.join(" + ")
    }
}

impl FieldTower {
    /// Parse an F_q element written in decimal.
    fn parse_fq(&self, s: &str) -> Result<u16> {
        let v: u32 = s
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad F_q coefficient {s:?}")))?;
        if v >= self.q {
            return Err(Error::Parse(format!("coefficient {v} out of range for q={}", self.q)));
        }
        Ok(v as u16)
    }

    /// Parse an F_{q²} element "u", "g", "v*g", or "u+v*g" (γ written g).
    pub fn parse_elt(&self, s: &str) -> Result<Fq2Elt> {
        let s = s.trim();
        let (mut c0, mut c1) = (0u16, 0u16);
        for part in s.split('+') {
            let part = part.trim();
            if part.is_empty() {
                return Err(Error::Parse(format!("empty term in {s:?}")));
            }
            if let Some(v) = part.strip_suffix('g') {
                let v = v.trim().strip_suffix('*').unwrap_or(v.trim()).trim();
                c1 = (c1 + if v.is_empty() { 1 } else { self.parse_fq(v)? }) % self.q as u16;
            } else {
                c0 = (c0 + self.parse_fq(part)?) % self.q as u16;
            }
        }
        Ok(self.elt(c0, c1))
    }

    /// Parse "c_d x^d + … + c_0" with coefficients as accepted by
    /// `parse_elt`, parenthesized when they contain '+'. Repeated powers
    /// accumulate, so a bare constant "u+v*g" also parses.
    pub fn parse_poly(&self, s: &str) -> Result<FqsPoly> {
        // split on '+' at paren depth 0
        let mut terms = Vec::new();
        let mut depth = 0usize;
        let mut cur = String::new();
        for ch in s.chars() {
            match ch {
                '(' => {
                    depth += 1;
                    cur.push(ch);
                }
                ')' => {
                    depth = depth
                        .checked_sub(1)
                        .ok_or_else(|| Error::Parse(format!("unbalanced parens in {s:?}")))?;
                    cur.push(ch);
                }
                '+' if depth == 0 => {
                    terms.push(std::mem::take(&mut cur));
                }
                _ => cur.push(ch),
            }
        }
        if depth != 0 {
            return Err(Error::Parse(format!("unbalanced parens in {s:?}")));
        }
        terms.push(cur);

        let mut coeffs: Vec<Fq2Elt> = Vec::new();
        let mut add_term = |deg: usize, c: Fq2Elt| {
            if coeffs.len() <= deg {
                coeffs.resize(deg + 1, Fq2Elt::ZERO);
            }
            coeffs[deg] = self.add(coeffs[deg], c);
        };
        for term in terms {
            let t = term.trim();
            if t.is_empty() {
                return Err(Error::Parse(format!("empty term in {s:?}")));
            }
            let (coeff_str, deg) = match t.find('x') {
                None => (t, 0usize),
                Some(ix) => {
                    let after = t[ix + 1..].trim();
                    let deg = if let Some(e) = after.strip_prefix('^') {
                        e.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::Parse(format!("bad exponent in {t:?}")))?
                    } else if after.is_empty() {
                        1
                    } else {
                        return Err(Error::Parse(format!("unexpected trailing {after:?} in {t:?}")));
                    };
                    (t[..ix].trim(), deg)
                }
            };
            let coeff_str = coeff_str.trim().trim_end_matches('*').trim();
            let c = if coeff_str.is_empty() {
                Fq2Elt::ONE
            } else {
                let inner = coeff_str
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .unwrap_or(coeff_str);
                self.parse_elt(inner)?
            };
            add_term(deg, c);
        }
        Ok(FqsPoly::from_coeffs(coeffs))
    }
}
