//! Univariate polynomials: dense over the rationals ([`QPoly`]) and over a
//! truncated series ring ([`SeriesPoly`]).

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::series::{format_rational, same_ring, Ring, Series};
use crate::{rat, Rational};

/// Dense polynomial with rational coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QPoly {
    coeffs: Vec<Rational>,
}

impl QPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| rat(x)).collect())
    }

    pub fn zero() -> Self {
        QPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        QPoly { coeffs: vec![Rational::one()] }
    }

    /// `x - a`
    pub fn linear(a: Rational) -> Self {
        QPoly::new(vec![-a, Rational::one()])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> Rational {
        self.coeffs.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn monic(&self) -> QPoly {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.lead();
        QPoly::new(self.coeffs.iter().map(|c| c / &l).collect())
    }

    pub fn scale(&self, c: &Rational) -> QPoly {
        QPoly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn add(&self, o: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        QPoly::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }

    pub fn sub(&self, o: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        QPoly::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }

    pub fn mul(&self, o: &QPoly) -> QPoly {
        if self.is_zero() || o.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        QPoly::new(out)
    }

    pub fn pow(&self, e: u32) -> QPoly {
        (0..e).fold(QPoly::one(), |acc, _| acc.mul(self))
    }

    pub fn derivative(&self) -> QPoly {
        QPoly::new(
            self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c * rat(i as i64)).collect(),
        )
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn divrem(&self, d: &QPoly) -> (QPoly, QPoly) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let dd = d.coeffs.len() - 1;
        let lead = d.lead();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (QPoly::zero(), self.clone());
        }
        let mut quot = vec![Rational::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] / &lead;
            if !c.is_zero() {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    rem[k + j] -= &c * dc;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (QPoly::new(quot), QPoly::new(rem))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &QPoly) -> QPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Returns `(g, s, t)` with `s*self + t*o = g`, `g` monic.
    pub fn ext_gcd(&self, o: &QPoly) -> (QPoly, QPoly, QPoly) {
        let (mut r0, mut r1) = (self.clone(), o.clone());
        let (mut s0, mut s1) = (QPoly::one(), QPoly::zero());
        let (mut t0, mut t1) = (QPoly::zero(), QPoly::one());
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1);
            let s2 = s0.sub(&q.mul(&s1));
            let t2 = t0.sub(&q.mul(&t1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s2;
            t0 = t1;
            t1 = t2;
        }
        if r0.is_zero() {
            return (r0, s0, t0);
        }
        let l = r0.lead().recip();
        (r0.scale(&l), s0.scale(&l), t0.scale(&l))
    }

    /// Yun's square-free decomposition: `self = c * prod f_i^i` with each
    /// returned `(f_i, i)` monic, square-free, pairwise coprime and non-constant.
    pub fn squarefree_decomposition(&self) -> Vec<(QPoly, u32)> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        let f = self.monic();
        let fp = f.derivative();
        let a0 = f.gcd(&fp);
        let mut b = f.divrem(&a0).0;
        let mut c = fp.divrem(&a0).0;
        let mut d = c.sub(&b.derivative());
        let mut i = 1;
        loop {
            let a = b.gcd(&d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.clone(), i));
            }
            b = b.divrem(&a).0;
            if b.degree().unwrap_or(0) == 0 {
                break;
            }
            c = d.divrem(&a).0;
            d = c.sub(&b.derivative());
            i += 1;
        }
        out
    }

    pub fn is_squarefree(&self) -> bool {
        self.squarefree_decomposition().iter().all(|(_, m)| *m == 1)
    }

    /// All distinct rational roots, in increasing order.
    pub fn rational_roots(&self) -> Vec<Rational> {
        let mut roots = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return roots;
        }
        // primitive integer polynomial
        let lcm = self.coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let mut ints: Vec<BigInt> = self.coeffs.iter().map(|c| (c * &lcm).to_integer()).collect();
        let mut shift = 0;
        while ints.first().is_some_and(|c| c.is_zero()) {
            ints.remove(0);
            shift += 1;
        }
        if shift > 0 {
            roots.push(Rational::zero());
        }
        if ints.len() > 1 {
            let a0 = ints[0].abs();
            let an = ints[ints.len() - 1].abs();
            let (Some(ps), Some(qs)) = (divisors(&a0), divisors(&an)) else {
                roots.sort();
                return roots;
            };
            let reduced = QPoly::new(ints.iter().map(|c| Rational::from_integer(c.clone())).collect());
            for p in &ps {
                for q in &qs {
                    for sign in [1i64, -1] {
                        let x = Rational::new(p * BigInt::from(sign), q.clone());
                        if !roots.contains(&x) && reduced.eval(&x).is_zero() {
                            roots.push(x);
                        }
                    }
                }
            }
        }
        roots.sort();
        roots
    }

    pub fn render(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let abs = c.abs();
            if s.is_empty() {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mono = match i {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{i}"),
            };
            if mono.is_empty() {
                s.push_str(&format_rational(&abs));
            } else if abs.is_one() {
                s.push_str(&mono);
            } else {
                s.push_str(&format!("{}*{}", format_rational(&abs), mono));
            }
        }
        s
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render("x"))
    }
}

/// Positive divisors of `n` by trial division; `None` when `n` is zero or too
/// large to factor this way.
fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    if n.is_zero() {
        return None;
    }
    let mut m = n.clone();
    let mut primes: Vec<(BigInt, u32)> = Vec::new();
    let mut p = BigInt::from(2);
    let mut steps = 0u64;
    while &p * &p <= m {
        steps += 1;
        if steps > 2_000_000 {
            return None;
        }
        let mut e = 0;
        while (&m % &p).is_zero() {
            m /= &p;
            e += 1;
        }
        if e > 0 {
            primes.push((p.clone(), e));
        }
        p += 1;
    }
    if m > BigInt::one() {
        primes.push((m, 1));
    }
    let mut divs = vec![BigInt::one()];
    for (p, e) in primes {
        let cur = divs.clone();
        let mut pk = BigInt::one();
        for _ in 0..e {
            pk *= &p;
            divs.extend(cur.iter().map(|d| d * &pk));
        }
    }
    divs.sort();
    Some(divs)
}

/// Polynomial in one variable with coefficients in a series ring, lowest
/// degree first. Trailing zero coefficients are trimmed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesPoly {
    ring: Ring,
    coeffs: Vec<Series>,
}

impl SeriesPoly {
    pub fn new(ring: &Ring, mut coeffs: Vec<Series>) -> Self {
        for c in &coeffs {
            assert!(same_ring(ring, c.ring()), "coefficient from a different ring");
        }
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        SeriesPoly { ring: ring.clone(), coeffs }
    }

    pub fn zero(ring: &Ring) -> Self {
        SeriesPoly { ring: ring.clone(), coeffs: Vec::new() }
    }

    pub fn one(ring: &Ring) -> Self {
        SeriesPoly::new(ring, vec![Series::one(ring)])
    }

    /// `x - a`
    pub fn linear(a: &Series) -> Self {
        let ring = a.ring();
        SeriesPoly::new(ring, vec![-a, Series::one(ring)])
    }

    /// Embeds a rational polynomial as constants.
    pub fn from_qpoly(ring: &Ring, p: &QPoly) -> Self {
        SeriesPoly::new(ring, p.coeffs().iter().map(|c| Series::constant(ring, c.clone())).collect())
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn coeffs(&self) -> &[Series] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Series {
        self.coeffs.get(i).cloned().unwrap_or_else(|| Series::zero(&self.ring))
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(|c| *c == Series::one(&self.ring))
    }

    pub fn add(&self, o: &SeriesPoly) -> SeriesPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        SeriesPoly::new(&self.ring, (0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }

    pub fn sub(&self, o: &SeriesPoly) -> SeriesPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        SeriesPoly::new(&self.ring, (0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }

    pub fn mul(&self, o: &SeriesPoly) -> SeriesPoly {
        if self.is_zero() || o.is_zero() {
            return SeriesPoly::zero(&self.ring);
        }
        let mut out = vec![Series::zero(&self.ring); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += &(a * b);
            }
        }
        SeriesPoly::new(&self.ring, out)
    }

    pub fn scale(&self, c: &Series) -> SeriesPoly {
        SeriesPoly::new(&self.ring, self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn pow(&self, e: u32) -> SeriesPoly {
        (0..e).fold(SeriesPoly::one(&self.ring), |acc, _| acc.mul(self))
    }

    pub fn derivative(&self) -> SeriesPoly {
        SeriesPoly::new(
            &self.ring,
            self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c.scale_int(i as i64)).collect(),
        )
    }

    /// Applies `f` to every coefficient.
    pub fn map_coeffs<F: Fn(&Series) -> Series>(&self, ring: &Ring, f: F) -> SeriesPoly {
        SeriesPoly::new(ring, self.coeffs.iter().map(f).collect())
    }

    pub fn eval(&self, x: &Series) -> Series {
        self.coeffs.iter().rev().fold(Series::zero(&self.ring), |acc, c| &(&acc * x) + c)
    }

    /// Division with remainder by a monic polynomial.
    pub fn divrem_monic(&self, d: &SeriesPoly) -> Result<(SeriesPoly, SeriesPoly)> {
        if !d.is_monic() {
            return Err(Error::Precondition("divisor is not monic".into()));
        }
        let dd = d.coeffs.len() - 1;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((SeriesPoly::zero(&self.ring), self.clone()));
        }
        let mut quot = vec![Series::zero(&self.ring); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = rem[k + dd].clone();
            if !c.is_zero() {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    rem[k + j] -= &(&c * dc);
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        Ok((SeriesPoly::new(&self.ring, quot), SeriesPoly::new(&self.ring, rem)))
    }

    /// Monic `R` with `R^k = self`, if one exists.
    pub fn monic_root(&self, k: u32) -> Option<SeriesPoly> {
        if k == 0 || !self.is_monic() {
            return None;
        }
        let n = self.degree()?;
        if n % k as usize != 0 {
            return None;
        }
        let m = n / k as usize;
        let kr = rat(k as i64).recip();
        let mut r = vec![Series::zero(&self.ring); m + 1];
        r[m] = Series::one(&self.ring);
        for j in 1..=m {
            let partial = SeriesPoly::new(&self.ring, r.clone()).pow(k);
            let diff = &self.coeff(n - j) - &partial.coeff(n - j);
            r[m - j] = diff.scale(&kr);
        }
        let root = SeriesPoly::new(&self.ring, r);
        (root.pow(k) == *self).then_some(root)
    }

    /// Canonical rendering with variable `var`.
    pub fn render(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mono = match i {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{i}"),
            };
            let cs = c.to_string();
            let one = Series::one(&self.ring);
            let term = if mono.is_empty() {
                if c.len() > 1 { format!("({cs})") } else { cs }
            } else if *c == one {
                mono
            } else if c.len() == 1 {
                format!("{cs}*{mono}")
            } else {
                format!("({cs})*{mono}")
            };
            parts.push(term);
        }
        parts.join(" + ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{SeriesRing, Variable};
    use proptest::prelude::*;

    #[test]
    fn gcd_and_ext_gcd() {
        let a = QPoly::from_ints(&[-1, 0, 1]); // x^2 - 1
        let b = QPoly::from_ints(&[1, 1]); // x + 1
        assert_eq!(a.gcd(&b), b);
        let c = QPoly::from_ints(&[2, 1]);
        let (g, s, t) = a.ext_gcd(&c);
        assert_eq!(g, QPoly::one());
        assert_eq!(s.mul(&a).add(&t.mul(&c)), g);
    }

    #[test]
    fn yun_decomposition() {
        let f = QPoly::linear(rat(-24)).pow(3).mul(&QPoly::linear(rat(256)));
        let sq = f.squarefree_decomposition();
        assert_eq!(sq, vec![(QPoly::linear(rat(256)), 1), (QPoly::linear(rat(-24)), 3)]);
        assert!(!f.is_squarefree());
        assert!(QPoly::from_ints(&[-256, 0, 0, 0, 1]).is_squarefree());
    }

    #[test]
    fn rational_roots_found() {
        let f = QPoly::from_ints(&[-256, 0, 0, 0, 1]);
        assert_eq!(f.rational_roots(), vec![rat(-4), rat(4)]);
        let g = QPoly::from_ints(&[0, -1, 2]); // x(2x - 1)
        assert_eq!(g.rational_roots(), vec![rat(0), crate::ratio(1, 2)]);
        assert!(QPoly::from_ints(&[-27, 0, 0, 1]).rational_roots() == vec![rat(3)]);
    }

    #[test]
    fn render_qpoly() {
        assert_eq!(QPoly::from_ints(&[-4, 0, 1]).render("l"), "l^2 - 4");
    }

    #[test]
    fn monic_root_of_cube() {
        let r = SeriesRing::new(vec![Variable::small("t", 0)], 3).unwrap();
        let t = Series::var(&r, "t").unwrap();
        let lin = SeriesPoly::linear(&(&t + &Series::from_int(&r, 24)));
        let cube = lin.pow(3);
        assert_eq!(cube.monic_root(3), Some(lin.clone()));
        let other = cube.add(&SeriesPoly::new(&r, vec![t.clone()]));
        assert_eq!(other.monic_root(3), None);
    }

    #[test]
    fn divrem_monic_exact() {
        let r = SeriesRing::new(vec![Variable::small("Q", 2)], 4).unwrap();
        let q = Series::var(&r, "Q").unwrap();
        let a = SeriesPoly::linear(&q);
        let b = SeriesPoly::linear(&q.scale_int(-3));
        let (quo, rem) = a.mul(&b).divrem_monic(&a).unwrap();
        assert_eq!(quo, b);
        assert!(rem.is_zero());
    }

    proptest! {
        #[test]
        fn divrem_reconstructs(a in proptest::collection::vec(-20i64..20, 1..7),
                               b in proptest::collection::vec(-20i64..20, 1..4)) {
            let a = QPoly::from_ints(&a);
            let b = QPoly::from_ints(&b);
            prop_assume!(!b.is_zero());
            let (q, r) = a.divrem(&b);
            prop_assert_eq!(q.mul(&b).add(&r), a);
            prop_assert!(r.degree().is_none_or(|d| d < b.degree().unwrap()));
        }
    }
}
