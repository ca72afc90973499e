//! Givental I-function of a degree-`k` hypersurface in `P^n` and the data read
//! off from it: the mirror map, the J-function, quantum powers of the
//! hyperplane class and two-point invariants.
//!
//! Cohomology is `Q[P]/(P^n)` with `\int P^{n-1} = k`; the Novikov variable
//! `Q` has degree `2(n+1-k)`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::series::{Ring, Series, SeriesRing, Variable};
use crate::targets::{CohomologyModel, Seed};
use crate::{rat, Rational};

/// Coefficients of `Q^q z^e`.
type Zq = BTreeMap<(u32, i32), Rational>;

/// A class `sum_a P^a f_a(Q, z)`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct CohZ {
    parts: Vec<Zq>,
}

impl CohZ {
    fn zero(m: usize) -> Self {
        CohZ { parts: vec![Zq::new(); m] }
    }

    fn one(m: usize) -> Self {
        let mut c = Self::zero(m);
        c.parts[0].insert((0, 0), Rational::one());
        c
    }

    fn add_term(&mut self, a: usize, q: u32, z: i32, c: Rational) {
        if a >= self.parts.len() || c.is_zero() {
            return;
        }
        let e = self.parts[a].entry((q, z)).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.parts[a].remove(&(q, z));
        }
    }

    fn mul(&self, o: &CohZ, qmax: u32) -> CohZ {
        let m = self.parts.len();
        let mut out = Self::zero(m);
        for (a, fa) in self.parts.iter().enumerate() {
            for (b, fb) in o.parts.iter().enumerate().take(m - a) {
                for ((q1, z1), c1) in fa {
                    for ((q2, z2), c2) in fb {
                        if q1 + q2 <= qmax {
                            out.add_term(a + b, q1 + q2, z1 + z2, c1 * c2);
                        }
                    }
                }
            }
        }
        out
    }

    fn add(&mut self, o: &CohZ) {
        for (a, f) in o.parts.iter().enumerate() {
            for (&(q, z), c) in f {
                self.add_term(a, q, z, c.clone());
            }
        }
    }

    /// `P * self + z Q d/dQ self`.
    fn qde_step(&self) -> CohZ {
        let m = self.parts.len();
        let mut out = Self::zero(m);
        for (a, f) in self.parts.iter().enumerate() {
            for (&(q, z), c) in f {
                out.add_term(a + 1, q, z, c.clone());
                if q > 0 {
                    out.add_term(a, q, z + 1, c * rat(q as i64));
                }
            }
        }
        out
    }
}

/// `1/(aP + mz) = sum_j (-a)^j P^j / (mz)^{j+1}` in `Q[P]/(P^m)`.
fn inverse_linear(m: usize, a: i64, mz: i64) -> CohZ {
    let mut out = CohZ::zero(m);
    let mut coeff = Rational::new(1.into(), mz.into());
    for j in 0..m {
        out.add_term(j, 0, -(j as i32) - 1, coeff.clone());
        coeff = coeff * rat(-a) / rat(mz);
    }
    out
}

fn linear(m: usize, a: i64, mz: i64) -> CohZ {
    let mut out = CohZ::zero(m);
    out.add_term(0, 0, 1, rat(mz));
    out.add_term(1, 0, 0, rat(a));
    out
}

#[derive(Clone, Debug)]
pub struct HypersurfaceMirror {
    pub n: u32,
    pub k: u32,
    q_order: u32,
    ring: Ring,
    i_function: CohZ,
    j_function: CohZ,
    /// `I = (1 + c(Q)/z + O(z^{-2}))` on the unit component.
    mirror_shift: BTreeMap<u32, Rational>,
}

impl HypersurfaceMirror {
    pub fn new(n: u32, k: u32, q_order: u32) -> Result<Self> {
        if n == 0 || k == 0 || k > n || (n, k) == (1, 1) {
            return Err(Error::Domain(format!(
                "no Fano hypersurface of degree {k} in P^{n} with positive dimension"
            )));
        }
        let m = n as usize;
        let index = (n + 1 - k) as i64;
        let ring = SeriesRing::new(vec![Variable::small("Q", 2 * index)], q_order)?;
        let mut i_function = CohZ::zero(m);
        let mut term = CohZ::one(m);
        for d in 0..=q_order {
            if d > 0 {
                // I_d = I_{d-1} * prod_{kd-k<j<=kd} (kP + jz) / (P + dz)^{n+1}
                for j in (k * (d - 1) + 1)..=(k * d) {
                    term = term.mul(&linear(m, k as i64, j as i64), q_order);
                }
                let inv = inverse_linear(m, 1, d as i64);
                for _ in 0..=n {
                    term = term.mul(&inv, q_order);
                }
            }
            let mut shifted = CohZ::zero(m);
            for (a, f) in term.parts.iter().enumerate() {
                for (&(_, z), c) in f {
                    shifted.add_term(a, d, z, c.clone());
                }
            }
            i_function.add(&shifted);
        }
        let mirror_shift: BTreeMap<u32, Rational> = i_function.parts[0]
            .iter()
            .filter(|(&(q, z), _)| z == -1 && q > 0)
            .map(|(&(q, _), c)| (q, c.clone()))
            .collect();
        let mut exp = CohZ::one(m);
        let mut power = CohZ::one(m);
        let mut neg_c = CohZ::zero(m);
        for (&q, c) in &mirror_shift {
            neg_c.add_term(0, q, -1, -c.clone());
        }
        for j in 1..=q_order {
            power = power.mul(&neg_c, q_order);
            let mut scaled = power.clone();
            for f in scaled.parts.iter_mut() {
                for c in f.values_mut() {
                    *c /= rat(factorial(j));
                }
            }
            exp.add(&scaled);
        }
        let j_function = exp.mul(&i_function, q_order);
        Ok(HypersurfaceMirror { n, k, q_order, ring, i_function, j_function, mirror_shift })
    }

    /// Number of basis classes `1, P, ..., P^{n-1}`.
    pub fn basis_len(&self) -> usize {
        self.n as usize
    }

    pub fn index(&self) -> u32 {
        self.n + 1 - self.k
    }

    pub fn dim_complex(&self) -> u32 {
        self.n - 1
    }

    pub fn q_order(&self) -> u32 {
        self.q_order
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    /// `(P^a, P^b)`.
    pub fn pairing(&self, a: usize, b: usize) -> Rational {
        if a + b + 1 == self.basis_len() {
            rat(self.k as i64)
        } else {
            Rational::zero()
        }
    }

    /// Coefficient of `P^a Q^q z^e` in the I-function.
    pub fn i_coefficient(&self, a: usize, q: u32, z: i32) -> Rational {
        self.i_function.parts.get(a).and_then(|f| f.get(&(q, z)).cloned()).unwrap_or_else(Rational::zero)
    }

    /// Coefficient of `P^a Q^q z^e` in the J-function at the origin.
    pub fn j_coefficient(&self, a: usize, q: u32, z: i32) -> Rational {
        self.j_function.parts.get(a).and_then(|f| f.get(&(q, z)).cloned()).unwrap_or_else(Rational::zero)
    }

    /// The series `c(Q)` with `J = e^{-c(Q)/z} I`.
    pub fn mirror_map(&self) -> Series {
        Series::from_terms(&self.ring, self.mirror_shift.iter().map(|(&q, c)| (vec![q as i32], c.clone())))
    }

    /// `<P^a psi^p>_{0,1,d}`, read off the `z^{-p-2}` coefficient of `J`.
    pub fn one_point(&self, a: usize, psi: u32, d: u32) -> Result<Rational> {
        if d > self.q_order {
            return Err(Error::InsufficientOrder(format!("degree {d} exceeds Q-order {}", self.q_order)));
        }
        let z = -(psi as i32) - 2;
        Ok((0..self.basis_len()).map(|b| self.j_coefficient(b, d, z) * self.pairing(b, a)).sum())
    }

    /// `P^{⋆j}` for `j = 0..=kmax`, each as coefficients of `1, P, ..., P^{n-1}`.
    pub fn quantum_powers(&self, kmax: u32) -> Result<Vec<Vec<Series>>> {
        let needed = (kmax / self.index()).max(1);
        if self.q_order < needed {
            return Err(Error::InsufficientOrder(format!(
                "P^{{*{kmax}}} needs Q-order {needed}, have {}",
                self.q_order
            )));
        }
        // W_0 = J and W_j = S^*(P^{⋆j}). The derivative D W_{j-1} equals
        // W_j + z S^*(Q d/dQ P^{⋆(j-1)}); the z^1 part identifies the second
        // term in the span of the previous W's and is removed.
        let m = self.basis_len();
        let mut ws: Vec<CohZ> = vec![self.j_function.clone()];
        let mut out: Vec<Vec<Series>> = Vec::new();
        for j in 0..=kmax as usize {
            if j > 0 {
                let mut w = ws[j - 1].qde_step();
                let mut u: Vec<Zq> = w.parts.iter().map(|f| z_slice(f, 1)).collect();
                let mut coeffs: Vec<Zq> = vec![Zq::new(); j];
                for b in (0..m).rev() {
                    if u[b].is_empty() {
                        continue;
                    }
                    if b >= j {
                        return Err(Error::validation(
                            "qde-positive-powers",
                            format!("z-positive part of P^{b} in the {j}-th derivative of J is not cancelled"),
                        ));
                    }
                    let c = u[b].clone();
                    for (a, part) in ws[b].parts.iter().enumerate() {
                        let prod = zq_mul(&c, &z_slice(part, 0), self.q_order);
                        for (key, v) in prod {
                            zq_add(&mut u[a], key, -v);
                        }
                    }
                    coeffs[b] = c;
                }
                for (b, c) in coeffs.iter().enumerate() {
                    if c.is_empty() {
                        continue;
                    }
                    let mut shifted = CohZ::zero(m);
                    for (&(q, _), v) in c {
                        shifted.add_term(0, q, 1, -v.clone());
                    }
                    w.add(&shifted.mul(&ws[b], self.q_order));
                }
                for (a, f) in w.parts.iter().enumerate() {
                    if let Some((&(q, z), _)) = f.iter().find(|(&(_, z), _)| z > 0) {
                        return Err(Error::validation(
                            "qde-positive-powers",
                            format!("z^{z} Q^{q} P^{a} survives in the {j}-th derivative of J"),
                        ));
                    }
                }
                ws.push(w);
            }
            out.push(
                ws[j]
                    .parts
                    .iter()
                    .map(|f| {
                        Series::from_terms(
                            &self.ring,
                            z_slice(f, 0).into_iter().map(|((q, _), c)| (vec![q as i32], c)),
                        )
                    })
                    .collect(),
            );
        }
        Ok(out)
    }

    /// Matrix of `P⋆` on `1, P, ..., P^{n-1}`: row `a` holds `P⋆P^a`.
    pub fn p_star_matrix(&self) -> Result<Vec<Vec<Series>>> {
        let m = self.basis_len();
        let powers = self.quantum_powers(m as u32)?;
        // P^{⋆a} = P^a + sum_{b<a} T_{ab} P^b, so
        // P⋆P^a = P^{⋆(a+1)} - sum_{b<a} T_{ab} P⋆P^b.
        let mut rows: Vec<Vec<Series>> = Vec::with_capacity(m);
        for a in 0..m {
            let mut row = powers[a + 1].clone();
            for b in 0..a {
                let t = &powers[a][b];
                if t.is_zero() {
                    continue;
                }
                for c in 0..m {
                    row[c] = &row[c] - &(t * &rows[b][c]);
                }
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Nonzero `<P^a, P^b>_{0,2,d}` with `1 <= a <= b` and `1 <= d <= q_order`,
    /// via `(P⋆P^a, P^b) = \int P^{a+b+1} + sum_d d <P^a, P^b>_d Q^d`.
    pub fn two_point_invariants(&self) -> Result<Vec<(usize, usize, u32, Rational)>> {
        let m = self.basis_len();
        let x = self.p_star_matrix()?;
        let mut out = Vec::new();
        for a in 1..m {
            for b in a..m {
                let mut s = Series::zero(&self.ring);
                for c in 0..m {
                    let g = self.pairing(c, b);
                    if !g.is_zero() {
                        s = &s + &x[a][c].scale(&g);
                    }
                }
                for d in 1..=self.q_order {
                    let v = s.coeff(&[d as i32]);
                    if !v.is_zero() {
                        out.push((a, b, d, v / rat(d as i64)));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Two-point seeds for `model`, whose basis must be `1, P, ..., P^{n-1}`.
    pub fn seeds_for(&self, model: &CohomologyModel) -> Result<Vec<Seed>> {
        let m = self.basis_len();
        let matches = model.len() == m
            && (0..m).all(|a| model.degree(a) == 2 * a as u32)
            && (0..m).all(|a| (0..m).all(|b| *model.pairing.get(a, b) == self.pairing(a, b)))
            && model.lattice.rank == 1;
        if !matches {
            return Err(Error::Config(format!(
                "target `{}` does not have the cohomology of a degree-{} hypersurface in P^{}",
                model.name, self.k, self.n
            )));
        }
        Ok(self
            .two_point_invariants()?
            .into_iter()
            .map(|(a, b, d, value)| Seed { degree: vec![d], insertions: vec![a, b], value })
            .collect())
    }

    /// The Q-order at which every two-point seed is visible.
    pub fn seed_order(n: u32, k: u32) -> u32 {
        let index = n + 1 - k;
        (n / index).max(1)
    }
}

/// The `z^e` part of `f`, keyed with `z = 0`.
fn z_slice(f: &Zq, e: i32) -> Zq {
    f.iter().filter(|(&(_, z), _)| z == e).map(|(&(q, _), c)| ((q, 0), c.clone())).collect()
}

fn zq_add(f: &mut Zq, key: (u32, i32), c: Rational) {
    let e = f.entry(key).or_insert_with(Rational::zero);
    *e += c;
    if e.is_zero() {
        f.remove(&key);
    }
}

fn zq_mul(a: &Zq, b: &Zq, qmax: u32) -> Zq {
    let mut out = Zq::new();
    for (&(q1, z1), c1) in a {
        for (&(q2, z2), c2) in b {
            if q1 + q2 <= qmax {
                zq_add(&mut out, (q1 + q2, z1 + z2), c1 * c2);
            }
        }
    }
    out
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;

    #[test]
    fn quartic_mirror_map_and_lines() {
        let m = HypersurfaceMirror::new(4, 4, 4).unwrap();
        assert_eq!(m.index(), 1);
        assert_eq!(m.mirror_map().coeff(&[1]), rat(24));
        let x = m.p_star_matrix().unwrap();
        // (P⋆P, P^2) = <P, P, P^2>_1 Q + ...
        assert_eq!(x[1][1].coeff(&[1]) * m.pairing(1, 2), rat(320));
    }

    #[test]
    fn p1_quantum_square() {
        let m = HypersurfaceMirror::new(2, 1, 2).unwrap();
        let p = m.quantum_powers(2).unwrap();
        assert!(p[2][1].is_zero());
        assert_eq!(p[2][0].to_string(), "Q");
        // <pt psi^{2d-2}>_d = 1/(d!)^2
        assert_eq!(m.one_point(1, 0, 1).unwrap(), rat(1));
        assert_eq!(m.one_point(1, 2, 2).unwrap(), ratio(1, 4));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(HypersurfaceMirror::new(4, 5, 2), Err(Error::Domain(_))));
        assert!(matches!(HypersurfaceMirror::new(1, 1, 2), Err(Error::Domain(_))));
        let m = HypersurfaceMirror::new(4, 4, 1).unwrap();
        assert!(matches!(m.quantum_powers(4), Err(Error::InsufficientOrder(_))));
    }

    #[test]
    fn p3_seed_is_one_line() {
        let m = HypersurfaceMirror::new(4, 1, HypersurfaceMirror::seed_order(4, 1)).unwrap();
        assert_eq!(m.two_point_invariants().unwrap(), vec![(3, 3, 1, rat(1))]);
    }
}
