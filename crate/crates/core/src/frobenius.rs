//! The big quantum product as a formal Frobenius manifold.
//!
//! Structure constants `c_{ijk} = sum_{d,n} Q^d/n! <phi_i, phi_j, phi_k, tau, ..., tau>_d`
//! live in one series ring whose variables are a Novikov variable per
//! effective generator followed by a coordinate `t{i}` per basis class. The
//! Novikov and coordinate exponents are capped separately.

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::gw::{factorial, multisets, sub_degrees, CorrelatorKey, GwStore, Insertion};
use crate::linalg::SeriesMatrix;
use crate::series::{Cap, Ring, Series, SeriesRing, Variable};
use crate::targets::CohomologyModel;
use crate::{rat, Rational};

/// The Novikov order at which the full structure tensor up to coordinate
/// order `tau_order` has no truncated terms.
pub fn full_q_order(model: &CohomologyModel, tau_order: u32) -> Result<u32> {
    let gens = model.c1_dot_generators();
    if gens.is_empty() {
        return Ok(0);
    }
    let min = *gens.iter().min().expect("nonempty");
    if min <= 0 {
        return Err(Error::Unsupported(format!(
            "`{}` has an effective class with non-positive c_1; give the Novikov order explicitly",
            model.name
        )));
    }
    let dim = model.dim_complex() as i64;
    let max_c1 = 2 * dim + tau_order as i64 * (dim - 1).max(0);
    Ok((max_c1 / min) as u32)
}

pub struct QuantumProduct {
    store: Arc<GwStore>,
    ring: Ring,
    q_order: u32,
    tau_order: u32,
    /// `c[i][j][k]`.
    structure: Vec<Vec<Vec<Series>>>,
    /// `(C_i)_{kj}` is the coefficient of `phi_k` in `phi_i ⋆ phi_j`.
    mats: Vec<SeriesMatrix>,
}

impl QuantumProduct {
    pub fn new(store: Arc<GwStore>, q_order: u32, tau_order: u32) -> Result<Self> {
        let model = store.model().clone();
        let ring = Self::make_ring(&model, q_order, tau_order)?;
        let n = model.len();
        let ngen = model.num_generators();
        let mut structure = vec![vec![vec![Series::zero(&ring); n]; n]; n];
        let degrees: Vec<Vec<u32>> = sub_degrees(&vec![q_order; ngen])
            .into_iter()
            .filter(|d| d.iter().sum::<u32>() <= q_order)
            .collect();
        for d in &degrees {
            let stable_only = d.iter().all(|&x| x == 0);
            for s in 0..=tau_order as usize {
                for bulk in multisets(n, s) {
                    let mut weight = Rational::one();
                    let mut mono = vec![0i32; ngen + n];
                    for (g, &x) in d.iter().enumerate() {
                        mono[g] = x as i32;
                    }
                    for &b in &bulk {
                        mono[ngen + b] += 1;
                    }
                    for &e in &mono[ngen..] {
                        weight /= Rational::from_integer(factorial(e as u32));
                    }
                    if !ring.admissible(&mono) {
                        continue;
                    }
                    for i in 0..n {
                        for j in i..n {
                            for k in j..n {
                                if stable_only && s == 0 {
                                    let v = model.triple(i, j, k);
                                    if !v.is_zero() {
                                        set_sym(&mut structure, i, j, k, &Series::monomial(&ring, mono.clone(), v));
                                    }
                                    continue;
                                }
                                let mut classes = vec![i, j, k];
                                classes.extend_from_slice(&bulk);
                                let key = CorrelatorKey::primary(d, &classes);
                                if !store.passes_dimension(&key) {
                                    continue;
                                }
                                let v = store.value_key(&key)?;
                                if v.is_zero() {
                                    continue;
                                }
                                let term = Series::monomial(&ring, mono.clone(), v * &weight);
                                set_sym(&mut structure, i, j, k, &term);
                            }
                        }
                    }
                }
            }
        }
        let mats = Self::matrices(&model, &ring, &structure);
        Ok(QuantumProduct { store, ring, q_order, tau_order, structure, mats })
    }

    fn matrices(model: &CohomologyModel, ring: &Ring, structure: &[Vec<Vec<Series>>]) -> Vec<SeriesMatrix> {
        let n = model.len();
        let mut mats = Vec::with_capacity(n);
        for i in 0..n {
            let mut m = SeriesMatrix::zeros(ring, n, n);
            for k in 0..n {
                for j in 0..n {
                    let mut acc = Series::zero(ring);
                    for l in 0..n {
                        let g = model.pairing_inv.get(k, l);
                        if !g.is_zero() && !structure[i][j][l].is_zero() {
                            acc += &structure[i][j][l].scale(g);
                        }
                    }
                    m.set(k, j, acc);
                }
            }
            mats.push(m);
        }
        mats
    }

    /// A copy with `term` added to `c_{ijk}` and its permutations. Used to
    /// check that the validators notice a broken tensor.
    pub fn perturbed(&self, i: usize, j: usize, k: usize, term: &Series) -> QuantumProduct {
        let mut structure = self.structure.clone();
        set_sym(&mut structure, i, j, k, term);
        let mats = Self::matrices(self.model(), &self.ring, &structure);
        QuantumProduct {
            store: self.store.clone(),
            ring: self.ring.clone(),
            q_order: self.q_order,
            tau_order: self.tau_order,
            structure,
            mats,
        }
    }

    fn make_ring(model: &CohomologyModel, q_order: u32, tau_order: u32) -> Result<Ring> {
        let gens = model.c1_dot_generators();
        let mut vars = Vec::new();
        for (g, &c) in gens.iter().enumerate() {
            let name = if gens.len() == 1 { "Q".to_string() } else { format!("Q_{}", model.lattice.effective_names[g]) };
            vars.push(Variable::small(&name, 2 * c));
        }
        for i in 0..model.len() {
            vars.push(Variable::small(&format!("t{i}"), 2 - model.degree(i) as i64));
        }
        let ngen = gens.len();
        let caps = vec![
            Cap { vars: (0..ngen).collect(), bound: q_order },
            Cap { vars: (ngen..ngen + model.len()).collect(), bound: tau_order },
        ];
        SeriesRing::with_caps(vars, q_order + tau_order, caps)
    }

    pub fn store(&self) -> &Arc<GwStore> {
        &self.store
    }

    pub fn model(&self) -> &Arc<CohomologyModel> {
        self.store.model()
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn q_order(&self) -> u32 {
        self.q_order
    }

    pub fn tau_order(&self) -> u32 {
        self.tau_order
    }

    pub fn dim(&self) -> usize {
        self.mats.len()
    }

    pub fn num_q_vars(&self) -> usize {
        self.model().num_generators()
    }

    /// Ring index of the coordinate dual to basis class `i`.
    pub fn tau_var(&self, i: usize) -> usize {
        self.num_q_vars() + i
    }

    pub fn tau_vars(&self) -> Vec<usize> {
        (0..self.dim()).map(|i| self.tau_var(i)).collect()
    }

    pub fn structure(&self, i: usize, j: usize, k: usize) -> &Series {
        &self.structure[i][j][k]
    }

    pub fn matrix(&self, i: usize) -> &SeriesMatrix {
        &self.mats[i]
    }

    /// Matrix of `v ⋆`.
    pub fn multiplication_matrix(&self, v: &[Series]) -> SeriesMatrix {
        let n = self.dim();
        let mut out = SeriesMatrix::zeros(&self.ring, n, n);
        for (i, c) in v.iter().enumerate() {
            if !c.is_zero() {
                out = out.add(&self.mats[i].scale(c));
            }
        }
        out
    }

    pub fn product(&self, a: &[Series], b: &[Series]) -> Vec<Series> {
        self.multiplication_matrix(a).mul_vec(b)
    }

    pub fn constant_class(&self, v: &[Rational]) -> Vec<Series> {
        v.iter().map(|c| Series::constant(&self.ring, c.clone())).collect()
    }

    pub fn basis_class(&self, i: usize) -> Vec<Series> {
        (0..self.dim()).map(|j| if i == j { Series::one(&self.ring) } else { Series::zero(&self.ring) }).collect()
    }

    /// `E = c_1 + sum_i (1 - deg_i / 2) t^i phi_i`.
    pub fn euler(&self) -> Vec<Series> {
        let model = self.model();
        (0..self.dim())
            .map(|i| {
                let c = Series::constant(&self.ring, model.c1[i].clone());
                let w = 1 - model.degree(i) as i64 / 2;
                if w == 0 {
                    c
                } else {
                    c + Series::var_index(&self.ring, self.tau_var(i)).scale_int(w)
                }
            })
            .collect()
    }

    pub fn euler_matrix(&self) -> SeriesMatrix {
        self.multiplication_matrix(&self.euler())
    }

    /// Grading operator eigenvalues `deg_i/2 - dim_C/2`.
    pub fn grading(&self) -> Vec<Rational> {
        let model = self.model();
        let half = Rational::new((model.dim_complex() as i64).into(), 2.into());
        (0..self.dim()).map(|i| rat(model.degree(i) as i64 / 2) - &half).collect()
    }

    /// Sets all coordinates `t^i` to zero.
    pub fn at_origin(&self, s: &Series) -> Series {
        s.kill(&self.tau_vars())
    }

    pub fn matrix_at_origin(&self, m: &SeriesMatrix) -> SeriesMatrix {
        m.map(&self.ring, |s| self.at_origin(s))
    }

    /// Drops terms of coordinate order `>= bound`.
    pub fn below_tau(&self, s: &Series, bound: u32) -> Series {
        let tv = self.tau_vars();
        s.filter(|m| tv.iter().map(|&i| m[i] as u32).sum::<u32>() < bound)
    }

    fn below_tau_matrix(&self, m: &SeriesMatrix, bound: u32) -> SeriesMatrix {
        m.map(&self.ring, |s| self.below_tau(s, bound))
    }

    pub fn check_frobenius_symmetry(&self) -> Result<()> {
        let model = self.model();
        let g = SeriesMatrix::from_qmatrix(&self.ring, &model.pairing);
        for (i, c) in self.mats.iter().enumerate() {
            if c.transpose().mul(&g) != g.mul(c) {
                return Err(Error::validation("frobenius-symmetry", format!("(phi_{i} ⋆ a, b) != (a, phi_{i} ⋆ b)")));
            }
        }
        Ok(())
    }

    pub fn check_unit(&self) -> Result<()> {
        if self.mats[0] != SeriesMatrix::identity(&self.ring, self.dim()) {
            return Err(Error::validation("unit", "phi_0 does not act as the identity"));
        }
        Ok(())
    }

    /// Commutativity, associativity and flatness of the structure constants.
    pub fn check_wdvv(&self) -> Result<()> {
        let n = self.dim();
        for i in 0..n {
            for j in i + 1..n {
                if self.mats[i].mul(&self.mats[j]) != self.mats[j].mul(&self.mats[i]) {
                    return Err(Error::validation("wdvv", format!("C_{i} and C_{j} do not commute")));
                }
                if self.tau_order > 0 {
                    let di = self.mats[j].map(&self.ring, |s| s.derivative(self.tau_var(i)));
                    let dj = self.mats[i].map(&self.ring, |s| s.derivative(self.tau_var(j)));
                    let bound = self.tau_order - 1;
                    if self.below_tau_matrix(&di, bound + 1) != self.below_tau_matrix(&dj, bound + 1) {
                        return Err(Error::validation("flatness", format!("d_{i} C_{j} != d_{j} C_{i}")));
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.structure[i][j][k] != self.structure[j][i][k] || self.structure[i][j][k] != self.structure[i][k][j] {
                        return Err(Error::validation("symmetry", format!("c_{{{i}{j}{k}}} is not symmetric")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `c_{ijk}` is homogeneous of degree `deg_i + deg_j + deg_k - 2 dim_C`.
    pub fn check_homogeneity(&self) -> Result<()> {
        let model = self.model();
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let deg = (model.degree(i) + model.degree(j) + model.degree(k)) as i64 - 2 * model.dim_complex() as i64;
                    if !self.structure[i][j][k].is_homogeneous(deg) {
                        return Err(Error::validation("grading", format!("c_{{{i}{j}{k}}} is not homogeneous of degree {deg}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// All structural checks.
    pub fn validate(&self) -> Result<()> {
        self.check_unit()?;
        self.check_frobenius_symmetry()?;
        self.check_wdvv()?;
        self.check_homogeneity()
    }
}

fn set_sym(structure: &mut [Vec<Vec<Series>>], i: usize, j: usize, k: usize, term: &Series) {
    let mut perms = vec![(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)];
    perms.sort();
    perms.dedup();
    for (a, b, c) in perms {
        structure[a][b][c] += term;
    }
}

/// `S_{ab} = (phi_a, phi_b) + sum Q^d / n! <phi_a, tau^n, phi_b psi^k>_d w^{k+1}`
/// with `w = 1/z`, over a copy of the product's ring extended by `w`.
pub struct FundamentalSolution {
    ring: Ring,
    w: usize,
    pub matrix: SeriesMatrix,
    mats: Vec<SeriesMatrix>,
    tau_offset: usize,
    tau_order: u32,
    pairing: SeriesMatrix,
    pairing_inv: SeriesMatrix,
}

impl FundamentalSolution {
    pub fn new(qp: &QuantumProduct) -> Result<Self> {
        let model = qp.model().clone();
        let store = qp.store();
        let mut vars = qp.ring().vars().to_vec();
        vars.push(Variable::power("w", -2));
        let w = vars.len() - 1;
        let ring = SeriesRing::with_caps(vars, qp.ring().order(), qp.ring().caps().to_vec())?;
        let n = model.len();
        let ngen = qp.num_q_vars();
        let mut matrix = SeriesMatrix::from_qmatrix(&ring, &model.pairing);
        let degrees: Vec<Vec<u32>> = sub_degrees(&vec![qp.q_order(); ngen])
            .into_iter()
            .filter(|d| d.iter().sum::<u32>() <= qp.q_order())
            .collect();
        for d in &degrees {
            let zero = d.iter().all(|&x| x == 0);
            for s in 0..=qp.tau_order() as usize {
                if zero && s == 0 {
                    continue;
                }
                for bulk in multisets(n, s) {
                    let mut mono = vec![0i32; ngen + n + 1];
                    for (g, &x) in d.iter().enumerate() {
                        mono[g] = x as i32;
                    }
                    for &b in &bulk {
                        mono[ngen + b] += 1;
                    }
                    let mut weight = Rational::one();
                    for &e in &mono[ngen..ngen + n] {
                        weight /= Rational::from_integer(factorial(e as u32));
                    }
                    for a in 0..n {
                        for b in 0..n {
                            // psi power fixed by the dimension constraint
                            let lhs: i64 = (model.degree(a) + model.degree(b)) as i64 / 2
                                + bulk.iter().map(|&c| model.degree(c) as i64 / 2).sum::<i64>();
                            let vdim = rat(model.dim_complex() as i64 + s as i64 - 1) + model.c1_dot(d);
                            let k = vdim - rat(lhs);
                            if !k.is_integer() || k < rat(0) {
                                continue;
                            }
                            let k = k.to_integer().try_into().unwrap_or(u32::MAX);
                            let mut ins: Vec<Insertion> = bulk.iter().map(|&c| Insertion::primary(c)).collect();
                            ins.push(Insertion::primary(a));
                            ins.push(Insertion::desc(b, k));
                            let v = store.value(d, &ins)?;
                            if v.is_zero() {
                                continue;
                            }
                            let mut m = mono.clone();
                            m[w] = k as i32 + 1;
                            *matrix.entry_mut(a, b) += &Series::monomial(&ring, m, v * &weight);
                        }
                    }
                }
            }
        }
        let mats = (0..n)
            .map(|i| qp.matrix(i).map(&ring, |s| s.reembed(&ring).expect("same variables")))
            .collect();
        let pairing = SeriesMatrix::from_qmatrix(&ring, &model.pairing);
        let pairing_inv = SeriesMatrix::from_qmatrix(&ring, &model.pairing_inv);
        Ok(FundamentalSolution {
            ring,
            w,
            matrix,
            mats,
            tau_offset: ngen,
            tau_order: qp.tau_order(),
            pairing,
            pairing_inv,
        })
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    /// Ring index of `w = 1/z`.
    pub fn w_var(&self) -> usize {
        self.w
    }

    /// `d_i S = w C_i^T S`, compared below the coordinate cap.
    pub fn check_qde(&self) -> Result<()> {
        if self.tau_order == 0 {
            return Ok(());
        }
        let wv = Series::var_index(&self.ring, self.w);
        let tv: Vec<usize> = (0..self.mats.len()).map(|i| self.tau_offset + i).collect();
        let cut = |m: &SeriesMatrix| {
            m.map(&self.ring, |s| s.filter(|mono| tv.iter().map(|&i| mono[i] as u32).sum::<u32>() < self.tau_order))
        };
        for (i, c) in self.mats.iter().enumerate() {
            let lhs = self.matrix.map(&self.ring, |s| s.derivative(self.tau_offset + i));
            let rhs = c.transpose().mul(&self.matrix).scale(&wv);
            if cut(&lhs) != cut(&rhs) {
                return Err(Error::validation("qde", format!("fundamental solution fails the equation in direction {i}")));
            }
        }
        Ok(())
    }

    /// `S(-z) G^{-1} S(z)^T = G`.
    pub fn check_unitarity(&self) -> Result<()> {
        let w = self.w;
        let flipped = self.matrix.map(&self.ring, |s| {
            s.map_into(&self.ring, |m| {
                let sign = if m[w] % 2 == 0 { rat(1) } else { rat(-1) };
                Some((m.to_vec(), sign))
            })
        });
        let prod = flipped.mul(&self.pairing_inv).mul(&self.matrix.transpose());
        if prod != self.pairing {
            return Err(Error::validation("unitarity", "S(-z)^* S(z) != 1"));
        }
        Ok(())
    }

    /// Coefficient of `w^{e}` in `S_{0 j}` at the origin, as a Novikov series
    /// in the same ring.
    pub fn j_component(&self, j: usize, e: i32) -> Series {
        let tv: Vec<usize> = (0..self.mats.len()).map(|i| self.tau_offset + i).collect();
        let w = self.w;
        self.matrix.get(0, j).filter(|m| m[w] == e && tv.iter().all(|&i| m[i] == 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mirror::HypersurfaceMirror;
    use crate::targets::{hypersurface_model, projective_space};

    fn qp(model: CohomologyModel, q: u32, tau: u32) -> QuantumProduct {
        let store = Arc::new(GwStore::new(Arc::new(model)).unwrap());
        QuantumProduct::new(store, q, tau).unwrap()
    }

    #[test]
    fn p2_small_product() {
        let p = qp(projective_space(2), full_q_order(&projective_space(2), 0).unwrap(), 0);
        // H ⋆ H^2 = Q
        assert_eq!(p.matrix(1).get(0, 2).to_string(), "Q");
        assert_eq!(p.matrix(1).get(2, 1).to_string(), "1");
        p.validate().unwrap();
    }

    #[test]
    fn p2_big_product_is_flat() {
        let m = projective_space(2);
        let q = full_q_order(&m, 2).unwrap();
        let p = qp(m, q, 2);
        p.validate().unwrap();
        let f = FundamentalSolution::new(&p).unwrap();
        f.check_qde().unwrap();
        f.check_unitarity().unwrap();
    }

    #[test]
    fn quartic_product_matches_mirror() {
        let mut m = hypersurface_model("quartic", 4, 3, 4, 1, "P");
        m.mirror = Some((4, 4));
        let p = qp(m, 6, 0);
        p.validate().unwrap();
        let mirror = HypersurfaceMirror::new(4, 4, 4).unwrap();
        let x = mirror.p_star_matrix().unwrap();
        for a in 0..4 {
            for c in 0..4 {
                let ours = p.matrix(1).get(c, a);
                for d in 0..=4 {
                    let mono = [d, 0, 0, 0, 0];
                    assert_eq!(ours.coeff(&mono), x[a][c].coeff(&[d]), "P⋆P^{a} at P^{c}, Q^{d}");
                }
            }
        }
    }

    #[test]
    fn j_function_agrees_with_mirror_on_p1() {
        let m = projective_space(1);
        let p = qp(m, 3, 0);
        let f = FundamentalSolution::new(&p).unwrap();
        f.check_unitarity().unwrap();
        let mirror = HypersurfaceMirror::new(2, 1, 3).unwrap();
        for d in 1..=3u32 {
            for b in 0..=4u32 {
                let s = f.j_component(1, b as i32 + 2);
                let mut mono = vec![0; f.ring().nvars()];
                mono[0] = d as i32;
                mono[f.w_var()] = b as i32 + 2;
                assert_eq!(s.coeff(&mono), mirror.one_point(1, b, d).unwrap(), "d = {d}, psi^{b}");
            }
        }
    }

    #[test]
    fn full_order_for_quartic() {
        let m = hypersurface_model("quartic", 4, 3, 4, 1, "P");
        assert_eq!(full_q_order(&m, 0).unwrap(), 6);
        assert_eq!(full_q_order(&m, 1).unwrap(), 8);
    }
}
