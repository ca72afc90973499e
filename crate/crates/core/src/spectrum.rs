//! Characteristic polynomials over series rings, certified factorizations
//! into eigenvalue groups, Newton-polygon valuations, and the spectral checks
//! built on them.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::frobenius::{full_q_order, QuantumProduct};
use crate::gw::GwStore;
use crate::linalg::{QMatrix, SeriesMatrix};
use crate::poly::{QPoly, SeriesPoly};
use crate::series::{Monomial, Ring, Series, SeriesRing, Variable};
use crate::targets::CohomologyModel;
use crate::{rat, Rational};

/// Characteristic polynomial `det(lambda - m)` by Faddeev–LeVerrier. The
/// result is checked against Cayley–Hamilton before it is returned.
pub fn char_poly(m: &SeriesMatrix) -> Result<SeriesPoly> {
    if m.rows != m.cols {
        return Err(Error::Structure("characteristic polynomial of a non-square matrix".into()));
    }
    let ring = m.ring().clone();
    let n = m.rows;
    let mut coeffs = vec![Series::zero(&ring); n + 1];
    coeffs[n] = Series::one(&ring);
    let mut mk = SeriesMatrix::zeros(&ring, n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I,  c_{n-k} = -tr(A M_k) / k
        let mut next = m.mul(&mk);
        for i in 0..n {
            *next.entry_mut(i, i) += &coeffs[n - k + 1];
        }
        mk = next;
        let tr = m.mul(&mk).trace();
        coeffs[n - k] = tr.scale(&rat(-(k as i64)).recip());
    }
    let p = SeriesPoly::new(&ring, coeffs);
    if !eval_matrix(&p, m).is_zero() {
        return Err(Error::validation("cayley-hamilton", "p(A) != 0 for the computed characteristic polynomial"));
    }
    Ok(p)
}

/// `p(A)` by Horner's rule.
pub fn eval_matrix(p: &SeriesPoly, a: &SeriesMatrix) -> SeriesMatrix {
    let ring = a.ring().clone();
    let n = a.rows;
    let mut acc = SeriesMatrix::zeros(&ring, n, n);
    for c in p.coeffs().iter().rev() {
        acc = acc.mul(a);
        for i in 0..n {
            *acc.entry_mut(i, i) += c;
        }
    }
    acc
}

pub fn char_poly_q(m: &QMatrix) -> Result<QPoly> {
    let ring = SeriesRing::new(Vec::new(), 0)?;
    let sm = SeriesMatrix::from_qmatrix(&ring, m);
    let p = char_poly(&sm)?;
    Ok(QPoly::new(p.coeffs().iter().map(|c| c.constant_term()).collect()))
}

/// Determinant by cofactor expansion along the first row.
pub fn det(m: &SeriesMatrix) -> Series {
    let n = m.rows;
    let ring = m.ring().clone();
    if n == 0 {
        return Series::one(&ring);
    }
    let rows: Vec<usize> = (0..n).collect();
    let cols: Vec<usize> = (0..n).collect();
    det_minor(m, &rows, &cols)
}

fn det_minor(m: &SeriesMatrix, rows: &[usize], cols: &[usize]) -> Series {
    if rows.len() == 1 {
        return m.get(rows[0], cols[0]).clone();
    }
    let mut acc = Series::zero(m.ring());
    for (k, &c) in cols.iter().enumerate() {
        let a = m.get(rows[0], c);
        if a.is_zero() {
            continue;
        }
        let sub: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let minor = det_minor(m, &rows[1..], &sub);
        let term = a * &minor;
        if k % 2 == 0 {
            acc += &term;
        } else {
            acc -= &term;
        }
    }
    acc
}

/// The minimal polynomial, when `m` has a cyclic vector among the basis
/// vectors (then it equals the characteristic polynomial).
pub fn minimal_polynomial(m: &SeriesMatrix) -> Result<SeriesPoly> {
    let n = m.rows;
    let ring = m.ring().clone();
    for start in 0..n {
        let mut v: Vec<Series> = (0..n).map(|i| if i == start { Series::one(&ring) } else { Series::zero(&ring) }).collect();
        let mut krylov = SeriesMatrix::zeros(&ring, n, n);
        for j in 0..n {
            for (i, x) in v.iter().enumerate() {
                krylov.set(i, j, x.clone());
            }
            v = m.mul_vec(&v);
        }
        if !det(&krylov).is_zero() {
            return char_poly(m);
        }
    }
    Err(Error::Unsupported("no basis vector is cyclic; minimal polynomial not computed".into()))
}

/// Checks that the coefficient of `lambda^{N-j}` is homogeneous of degree `j * lambda_weight`.
pub fn check_grading(p: &SeriesPoly, lambda_weight: i64) -> Result<()> {
    let n = p.degree().unwrap_or(0);
    for (i, c) in p.coeffs().iter().enumerate() {
        let deg = (n - i) as i64 * lambda_weight;
        if !c.is_homogeneous(deg) {
            return Err(Error::Grading(format!("coefficient of lambda^{i} is not homogeneous of degree {deg}")));
        }
    }
    Ok(())
}

/// Root valuations in variable `var` from the lower Newton polygon, sorted.
/// The valuation of a coefficient is the least exponent of `var` among its
/// terms.
pub fn newton_valuations(p: &SeriesPoly, var: usize) -> Result<Vec<Rational>> {
    let pts: Vec<(i64, i64)> = p
        .coeffs()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.valuation_in(var).map(|v| (i as i64, v as i64)))
        .collect();
    if pts.first().map(|p| p.0) != Some(0) {
        return Err(Error::Domain("zero is a root; its valuation is infinite".into()));
    }
    // lower convex hull
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // drop the middle point if it lies on or above the segment
            if (y2 - y1) * (pt.0 - x1) >= (pt.1 - y1) * (x2 - x1) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let mut out = Vec::new();
    for w in hull.windows(2) {
        let (x1, y1) = w[0];
        let (x2, y2) = w[1];
        let slope = Rational::new((y2 - y1).into(), (x2 - x1).into());
        for _ in 0..(x2 - x1) {
            out.push(-slope.clone());
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileFactor {
    pub poly: SeriesPoly,
    pub multiplicity: u32,
    /// Leading-order polynomial of `poly`, after dehomogenization.
    pub leading: QPoly,
    /// Common root valuation in the valuation variable, if all roots share one.
    pub valuation: Option<Rational>,
    /// False when `poly` lifts a non-squarefree leading factor that could not
    /// be written as an exact power; its eigenvalue multiplicities are then
    /// not certified.
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumProfile {
    pub factors: Vec<ProfileFactor>,
    pub valuation_var: Option<String>,
    /// Filtration order of the ring in which the factorization is exact.
    pub certified_order: u32,
}

impl SpectrumProfile {
    /// Eigenvalue multiplicities, one entry per distinct leading root cluster,
    /// largest first. Uncertified clusters count their full degree.
    pub fn multiplicities(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for f in &self.factors {
            let deg = f.poly.degree().unwrap_or(0) as u32;
            if f.certified {
                for _ in 0..deg {
                    out.push(f.multiplicity);
                }
            } else {
                out.push(deg * f.multiplicity);
            }
        }
        out.sort_by(|a, b| b.cmp(a));
        out
    }

    pub fn product(&self, ring: &Ring) -> SeriesPoly {
        let mut acc = SeriesPoly::one(ring);
        for f in &self.factors {
            acc = acc.mul(&f.poly.pow(f.multiplicity));
        }
        acc
    }

    pub fn is_certified(&self) -> bool {
        self.factors.iter().all(|f| f.certified)
    }
}

impl fmt::Display for SpectrumProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in &self.factors {
            let val = match (&x.valuation, &self.valuation_var) {
                (Some(v), _) => crate::series::format_rational(v),
                (None, Some(_)) => "mixed".into(),
                (None, None) => "-".into(),
            };
            writeln!(
                f,
                "({}; {}; {}; {}){}",
                x.leading.render("lambda"),
                x.multiplicity,
                val,
                self.certified_order,
                if x.certified { "" } else { " uncertified" }
            )?;
        }
        Ok(())
    }
}

/// Factors a monic characteristic polynomial by lifting the coprime split of
/// its leading-order polynomial. With `valuation_var`, the polynomial is first
/// dehomogenized by setting that variable to one; the remaining variables
/// must be small. Each lifted factor whose leading part is a power `g^m` is
/// certified by extracting an exact `m`-th root.
pub fn hensel_factor(p: &SeriesPoly, valuation_var: Option<usize>, lambda_weight: i64) -> Result<SpectrumProfile> {
    let ring = p.ring().clone();
    if !p.is_monic() {
        return Err(Error::Precondition("characteristic polynomial must be monic".into()));
    }
    if let Some(v) = valuation_var {
        check_grading(p, lambda_weight)?;
        if ring.vars()[v].weight == 0 {
            return Err(Error::Grading(format!("valuation variable `{}` has weight zero", ring.vars()[v].name)));
        }
    }
    let flat = match valuation_var {
        Some(v) => p.map_coeffs(&ring, |c| {
            c.map_into(&ring, |m| {
                let mut n = m.to_vec();
                n[v] = 0;
                Some((n, Rational::one()))
            })
        }),
        None => p.clone(),
    };
    for c in flat.coeffs() {
        for m in c.terms().keys() {
            if m.iter().enumerate().any(|(i, &e)| e != 0 && !ring.vars()[i].is_small()) {
                return Err(Error::Precondition(format!(
                    "variable `{}` is neither small nor the valuation variable",
                    ring.vars()[m.iter().position(|&e| e != 0).unwrap_or(0)].name
                )));
            }
        }
    }
    let leading = QPoly::new(flat.coeffs().iter().map(|c| c.constant_term()).collect());
    let groups = leading_groups(&leading);
    let mut lifted = Vec::new();
    let mut rest = flat.clone();
    let mut rest_lead = leading.clone();
    for (i, (g, m)) in groups.iter().enumerate() {
        let h = g.pow(*m);
        if i + 1 == groups.len() {
            lifted.push((rest.clone(), g.clone(), *m));
            break;
        }
        let (other, r) = rest_lead.divrem(&h);
        debug_assert!(r.is_zero());
        let (f, gg) = two_factor_lift(&rest, &h, &other)?;
        lifted.push((f, g.clone(), *m));
        rest = gg;
        rest_lead = other;
    }
    let mut factors = Vec::new();
    // factors whose roots involve fractional powers of the valuation variable
    let mut fractional: Option<(SeriesPoly, QPoly)> = None;
    for (h, g, m) in lifted {
        let (poly, multiplicity, certified) = if m == 1 {
            (h, 1, true)
        } else {
            match h.monic_root(m) {
                Some(root) => (root, m, true),
                None => (h, 1, false),
            }
        };
        let leading = if certified { g } else { g.pow(m) };
        let poly = match valuation_var {
            Some(v) => match rehomogenize(&poly, v, lambda_weight) {
                Ok(p) => p,
                Err(Error::Grading(_)) => {
                    let full = poly.pow(multiplicity);
                    let lead = leading.pow(multiplicity);
                    fractional = Some(match fractional {
                        None => (full, lead),
                        Some((a, b)) => (a.mul(&full), b.mul(&lead)),
                    });
                    continue;
                }
                Err(e) => return Err(e),
            },
            None => poly,
        };
        factors.push(ProfileFactor { poly, multiplicity, leading, valuation: None, certified });
    }
    if let (Some((poly, leading)), Some(v)) = (fractional, valuation_var) {
        // merged into one cluster; its eigenvalues are simple iff the
        // leading polynomial is squarefree
        let poly = rehomogenize(&poly, v, lambda_weight)?;
        let certified = leading.is_squarefree();
        factors.push(ProfileFactor { poly, multiplicity: 1, leading, valuation: None, certified });
    }
    if let Some(v) = valuation_var {
        for f in factors.iter_mut() {
            f.valuation = newton_valuations(&f.poly, v)
                .ok()
                .and_then(|vs| if vs.windows(2).all(|w| w[0] == w[1]) { vs.first().cloned() } else { None });
        }
    }
    let profile = SpectrumProfile {
        factors,
        valuation_var: valuation_var.map(|v| ring.vars()[v].name.clone()),
        certified_order: ring.order(),
    };
    if profile.product(&ring) != *p {
        return Err(Error::validation("hensel-remultiplication", "factors do not multiply back to the input"));
    }
    Ok(profile)
}

/// Pairwise coprime groups `g^m` of the leading polynomial: rational roots
/// first, ascending, then the remaining squarefree parts.
fn leading_groups(l: &QPoly) -> Vec<(QPoly, u32)> {
    let mut roots = Vec::new();
    let mut others = Vec::new();
    for (f, m) in l.squarefree_decomposition() {
        let mut rem = f.clone();
        for r in f.rational_roots() {
            let lin = QPoly::linear(r.clone());
            rem = rem.divrem(&lin).0;
            roots.push((r, lin, m));
        }
        if rem.degree().unwrap_or(0) > 0 {
            others.push((rem.monic(), m));
        }
    }
    roots.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(QPoly, u32)> = roots.into_iter().map(|(_, g, m)| (g, m)).collect();
    out.extend(others);
    out
}

/// Lifts `p ≡ f0 g0` (coprime, monic) to `p = F G` over the small variables.
fn two_factor_lift(p: &SeriesPoly, f0: &QPoly, g0: &QPoly) -> Result<(SeriesPoly, SeriesPoly)> {
    let ring = p.ring().clone();
    let (g, _s, t) = f0.ext_gcd(g0);
    if g != QPoly::one() {
        return Err(Error::NoCertifiedSplit("leading factors are not coprime".into()));
    }
    // t g0 ≡ 1 mod f0
    let mut big_f = SeriesPoly::from_qpoly(&ring, f0);
    let mut big_g = SeriesPoly::from_qpoly(&ring, g0);
    for k in 1..=ring.order() as i64 {
        let err = p.sub(&big_f.mul(&big_g));
        let mut by_mono: std::collections::BTreeMap<Monomial, Vec<Rational>> = Default::default();
        let len = err.coeffs().len();
        for (j, c) in err.coeffs().iter().enumerate() {
            for (m, v) in c.terms() {
                if ring.filtration(m) == k {
                    by_mono.entry(m.clone()).or_insert_with(|| vec![Rational::zero(); len])[j] = v.clone();
                }
            }
        }
        if by_mono.is_empty() {
            continue;
        }
        let mut df = Vec::new();
        let mut dg = Vec::new();
        for (m, e) in by_mono {
            let e = QPoly::new(e);
            let fm = t.mul(&e).divrem(f0).1;
            let (gm, r) = e.sub(&g0.mul(&fm)).divrem(f0);
            if !r.is_zero() {
                return Err(Error::NoCertifiedSplit("Hensel step left a remainder".into()));
            }
            df.push((m.clone(), fm));
            dg.push((m, gm));
        }
        big_f = big_f.add(&lift_terms(&ring, &df));
        big_g = big_g.add(&lift_terms(&ring, &dg));
    }
    if big_f.mul(&big_g) != *p {
        return Err(Error::validation("hensel-remultiplication", "lifted factors do not multiply back"));
    }
    Ok((big_f, big_g))
}

fn lift_terms(ring: &Ring, terms: &[(Monomial, QPoly)]) -> SeriesPoly {
    let len = terms.iter().map(|(_, q)| q.coeffs().len()).max().unwrap_or(0);
    let mut coeffs = vec![Series::zero(ring); len];
    for (m, q) in terms {
        for (j, c) in q.coeffs().iter().enumerate() {
            coeffs[j].add_term(m.clone(), c.clone());
        }
    }
    SeriesPoly::new(ring, coeffs)
}

/// Restores the valuation variable so that the coefficient of
/// `lambda^{k-j}` is homogeneous of degree `j * lambda_weight`.
fn rehomogenize(p: &SeriesPoly, v: usize, lambda_weight: i64) -> Result<SeriesPoly> {
    let ring = p.ring().clone();
    let w = ring.vars()[v].weight;
    let k = p.degree().unwrap_or(0);
    let mut coeffs = Vec::new();
    for (i, c) in p.coeffs().iter().enumerate() {
        let need = (k - i) as i64 * lambda_weight;
        let mut out = Series::zero(&ring);
        for (m, val) in c.terms() {
            let diff = need - ring.degree(m);
            if diff % w != 0 {
                return Err(Error::Grading(format!(
                    "factor needs a fractional power of `{}`",
                    ring.vars()[v].name
                )));
            }
            let mut n = m.clone();
            n[v] = (diff / w) as i32;
            if !ring.admissible(&n) {
                return Err(Error::Grading(format!(
                    "factor needs an inadmissible power of `{}`",
                    ring.vars()[v].name
                )));
            }
            out.add_term(n, val.clone());
        }
        coeffs.push(out);
    }
    Ok(SeriesPoly::new(&ring, coeffs))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Obstructed { witness: String, multiplicity: u32 },
    NotObstructed,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Obstructed { witness, multiplicity } => {
                write!(f, "obstructed (symplectically irrational): eigenvalue {witness} of multiplicity {multiplicity}")
            }
            Verdict::NotObstructed => write!(f, "not obstructed"),
        }
    }
}

/// For a six-dimensional target, an eigenvalue of multiplicity at least
/// three rules out rationality.
pub fn irrationality_obstruction(profile: &SpectrumProfile, dim: u32) -> Result<Verdict> {
    if dim != 6 {
        return Err(Error::Precondition(format!("obstruction applies in real dimension 6, not {dim}")));
    }
    if !profile.is_certified() {
        return Err(Error::NoCertifiedSplit("profile has uncertified clusters".into()));
    }
    let worst = profile.factors.iter().max_by_key(|f| f.multiplicity);
    match worst {
        Some(f) if f.multiplicity >= 3 => Ok(Verdict::Obstructed {
            witness: f.leading.render("lambda"),
            multiplicity: f.multiplicity,
        }),
        _ => Ok(Verdict::NotObstructed),
    }
}

/// Novikov base change from a blow-up, its base and its center into
/// `Q[[Q]]((u))`, `u = q^{-1/(r-1)}`.
pub struct ExtensionMap {
    pub r: u32,
    ring: Ring,
    push_to_base: Vec<Vec<i64>>,
    exceptional_dot: Vec<i64>,
    center_push: Vec<Vec<i64>>,
    normal_dot: Vec<i64>,
    base_gens: usize,
}

impl ExtensionMap {
    pub fn new(blowup: &CohomologyModel, q_order: u32) -> Result<Self> {
        let data = blowup
            .blowup
            .as_ref()
            .ok_or_else(|| Error::Structure(format!("`{}` carries no blow-up data", blowup.name)))?;
        if data.r < 2 {
            return Err(Error::Domain("blow-up centers need codimension r >= 2".into()));
        }
        let base = &data.base;
        let gens = base.c1_dot_generators();
        let mut vars = Vec::new();
        for (g, &c) in gens.iter().enumerate() {
            let name = if gens.len() == 1 { "Q".to_string() } else { format!("Q_{}", base.lattice.effective_names[g]) };
            vars.push(Variable::small(&name, 2 * c));
        }
        vars.push(Variable::laurent("u", -2, i32::MIN / 4));
        let ring = SeriesRing::new(vars, q_order)?;
        Ok(ExtensionMap {
            r: data.r,
            ring,
            push_to_base: data.push_to_base.clone(),
            exceptional_dot: data.exceptional_dot.clone(),
            center_push: data.center_push.clone(),
            normal_dot: data.normal_dot.clone(),
            base_gens: gens.len(),
        })
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn u_var(&self) -> usize {
        self.base_gens
    }

    fn image(&self, pushes: &[Vec<i64>], u_exps: &[i64], m: &[i32]) -> Option<(Monomial, Rational)> {
        let mut out = vec![0i32; self.base_gens + 1];
        for (g, &e) in m.iter().enumerate().take(pushes.len()) {
            if e == 0 {
                continue;
            }
            for (b, &x) in pushes[g].iter().enumerate() {
                out[b] += e * x as i32;
            }
            out[self.base_gens] += e * u_exps[g] as i32;
        }
        if m.iter().skip(pushes.len()).any(|&e| e != 0) {
            return None;
        }
        Some((out, Rational::one()))
    }

    /// `Q~^d ↦ Q^{phi_* d} u^{(r-1) [D].d}`; coordinates must already be zero.
    pub fn map_blowup(&self, s: &Series) -> Series {
        let u: Vec<i64> = self.exceptional_dot.iter().map(|&x| (self.r as i64 - 1) * x).collect();
        s.map_into(&self.ring, |m| self.image(&self.push_to_base, &u, m))
    }

    /// `Q^d ↦ Q^d`.
    pub fn map_base(&self, s: &Series) -> Series {
        let id: Vec<Vec<i64>> = (0..self.base_gens)
            .map(|g| (0..self.base_gens).map(|b| (g == b) as i64).collect())
            .collect();
        s.map_into(&self.ring, |m| self.image(&id, &vec![0; self.base_gens], m))
    }

    /// `Q_Z^d ↦ Q^{iota_* d} u^{c_1(N).d}`.
    pub fn map_center(&self, s: &Series) -> Series {
        s.map_into(&self.ring, |m| self.image(&self.center_push, &self.normal_dot, m))
    }

    pub fn map_poly(&self, p: &SeriesPoly, f: impl Fn(&Series) -> Series) -> SeriesPoly {
        p.map_coeffs(&self.ring, f)
    }
}

#[derive(Clone, Debug)]
pub struct DecompositionReport {
    pub blowup_rank: usize,
    pub base_rank: usize,
    pub center_rank: usize,
    pub r: u32,
    pub profile: SpectrumProfile,
    pub valuations: Vec<Rational>,
    /// `(degree, valuation)` of each valuation group, base group first.
    pub groups: Vec<(usize, Rational)>,
    pub base_leading_match: bool,
    pub center_leading_match: Vec<bool>,
    pub residual_zero: bool,
    pub blowup_char_poly: SeriesPoly,
    pub base_char_poly: SeriesPoly,
    pub center_char_poly: SeriesPoly,
}

impl DecompositionReport {
    pub fn passed(&self) -> bool {
        self.base_leading_match && self.center_leading_match.iter().all(|&b| b) && self.residual_zero
    }
}

/// Novikov order at which the characteristic polynomial of `c_1 ⋆` is exact.
pub fn char_poly_q_order(model: &CohomologyModel) -> Result<u32> {
    let gens = model.c1_dot_generators();
    let min = gens.iter().copied().min().unwrap_or(1).max(1) as u32;
    let n = model.len() as u32;
    Ok(full_q_order(model, 0)?.max(n.div_ceil(min)))
}

/// `c_1 ⋆` at the origin over a fresh store.
pub fn c1_matrix(model: &Arc<CohomologyModel>) -> Result<(SeriesMatrix, QuantumProduct)> {
    let store = Arc::new(GwStore::new(model.clone())?);
    let q = char_poly_q_order(model)?;
    let qp = QuantumProduct::new(store, q, 0)?;
    let m = qp.euler_matrix();
    Ok((m, qp))
}

/// Checks that the `c_1 ⋆` spectrum of a blow-up splits into a base block and
/// `r - 1` center blocks after the Novikov extension.
pub fn decomposition_check(blowup: &Arc<CohomologyModel>) -> Result<DecompositionReport> {
    let data = blowup
        .blowup
        .as_ref()
        .ok_or_else(|| Error::Structure(format!("`{}` carries no blow-up data", blowup.name)))?;
    let (base, center, r) = (data.base.clone(), data.center.clone(), data.r);
    if r < 2 {
        return Err(Error::Domain("blow-up centers need codimension r >= 2".into()));
    }
    if center.is_empty() {
        return Err(Error::Structure("empty center".into()));
    }
    if blowup.len() != base.len() + (r as usize - 1) * center.len() {
        return Err(Error::Structure(format!(
            "rank mismatch: {} != {} + {} * {}",
            blowup.len(),
            base.len(),
            r - 1,
            center.len()
        )));
    }
    let (mx, _) = c1_matrix(blowup)?;
    let (mb, _) = c1_matrix(&base)?;
    let (mz, _) = c1_matrix(&center)?;
    let px = char_poly(&mx)?;
    let pb = char_poly(&mb)?;
    let pz = char_poly(&mz)?;
    let q_order = px.coeffs().iter().flat_map(|c| c.terms().keys()).map(|m| m.iter().map(|&e| e.max(0) as u32).sum::<u32>()).max().unwrap_or(0);
    let ext = ExtensionMap::new(blowup, q_order.max(char_poly_q_order(&base)?))?;
    let p = ext.map_poly(&px, |s| ext.map_blowup(s));
    let p_base = ext.map_poly(&pb, |s| ext.map_base(s));
    let p_center = ext.map_poly(&pz, |s| ext.map_center(s));
    let u = ext.u_var();
    let valuations = newton_valuations(&p, u)?;
    let profile = hensel_factor(&p, Some(u), 2)?;

    let ring = ext.ring().clone();
    let base_val = newton_valuations(&p_base, u)?;
    let base_val = base_val.first().cloned().unwrap_or_else(Rational::zero);
    let mut base_part = SeriesPoly::one(&ring);
    let mut center_groups: Vec<(Rational, SeriesPoly)> = Vec::new();
    for f in &profile.factors {
        let val = f.valuation.clone().ok_or_else(|| Error::NoCertifiedSplit("factor with mixed valuations".into()))?;
        let full = f.poly.pow(f.multiplicity);
        if val == base_val {
            base_part = base_part.mul(&full);
        } else if let Some(g) = center_groups.iter_mut().find(|g| g.0 == val) {
            g.1 = g.1.mul(&full);
        } else {
            center_groups.push((val, full));
        }
    }
    center_groups.sort_by(|a, b| a.0.cmp(&b.0));
    let mut groups = vec![(base_part.degree().unwrap_or(0), base_val.clone())];
    groups.extend(center_groups.iter().map(|(v, g)| (g.degree().unwrap_or(0), v.clone())));

    let base_leading_match = base_part.degree() == p_base.degree()
        && initial_form(&base_part, u, &base_val) == initial_form(&p_base, u, &base_val);
    let mut center_leading_match = Vec::new();
    // the center blocks are compared after removing their mean eigenvalue
    let z_shifted = centered(&p_center);
    let z_val = newton_valuations(&z_shifted, u).ok().and_then(|v| v.first().cloned()).unwrap_or_else(Rational::zero);
    for (_, g) in &center_groups {
        let shifted = centered(g);
        let ok = g.degree() == p_center.degree()
            && initial_form(&shifted, u, &z_val) == initial_form(&z_shifted, u, &z_val);
        center_leading_match.push(ok);
    }
    if center_groups.len() != r as usize - 1 {
        center_leading_match.push(false);
    }
    let mut prod = base_part.clone();
    for (_, g) in &center_groups {
        prod = prod.mul(g);
    }
    let residual_zero = prod == p;
    Ok(DecompositionReport {
        blowup_rank: blowup.len(),
        base_rank: base.len(),
        center_rank: center.len(),
        r,
        profile,
        valuations,
        groups,
        base_leading_match,
        center_leading_match,
        residual_zero,
        blowup_char_poly: p,
        base_char_poly: p_base,
        center_char_poly: p_center,
    })
}

/// `f(lambda + s)` with `s` the mean root, so the roots sum to zero.
fn centered(f: &SeriesPoly) -> SeriesPoly {
    let ring = f.ring().clone();
    let n = match f.degree() {
        Some(n) if n > 0 => n,
        _ => return f.clone(),
    };
    let s = f.coeff(n - 1).scale(&rat(-(n as i64)).recip());
    let shift = SeriesPoly::linear(&-s);
    let mut acc = SeriesPoly::zero(&ring);
    let mut power = SeriesPoly::one(&ring);
    for c in f.coeffs() {
        acc = acc.add(&power.scale(c));
        power = power.mul(&shift);
    }
    acc
}

/// Keeps in the coefficient of `lambda^{n-j}` the terms whose exponent of `v`
/// equals `j * val`: the part that governs roots of valuation `val`.
fn initial_form(f: &SeriesPoly, v: usize, val: &Rational) -> Vec<Series> {
    let n = f.degree().unwrap_or(0);
    f.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let target = val * rat((n - i) as i64);
            c.filter(|m| rat(m[v] as i64) == target)
        })
        .collect()
}

/// Rescales `Q ↦ c Q` in a polynomial's coefficients.
pub fn rescale_var(p: &SeriesPoly, var: usize, c: &Rational) -> SeriesPoly {
    let ring = p.ring().clone();
    p.map_coeffs(&ring, |s| {
        s.map_into(&ring, |m| {
            let e = m[var];
            let k = if e >= 0 { num_traits::pow(c.clone(), e as usize) } else { num_traits::pow(c.recip(), (-e) as usize) };
            Some((m.to_vec(), k))
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::projective_space;
    use proptest::prelude::*;

    fn q_ring() -> Ring {
        SeriesRing::new(vec![Variable::small("Q", 2)], 8).unwrap()
    }

    fn lin(ring: &Ring, a: i64) -> SeriesPoly {
        // lambda - a Q
        SeriesPoly::linear(&Series::var(ring, "Q").unwrap().scale_int(a))
    }

    #[test]
    fn identity_char_poly() {
        let p = char_poly_q(&QMatrix::identity(3)).unwrap();
        assert_eq!(p, QPoly::linear(rat(1)).pow(3));
    }

    #[test]
    fn simple_split() {
        let r = q_ring();
        let p = lin(&r, 1).mul(&lin(&r, 2));
        let prof = hensel_factor(&p, Some(0), 2).unwrap();
        assert_eq!(prof.multiplicities(), vec![1, 1]);
        assert_eq!(prof.factors[0].poly, lin(&r, 1));
    }

    #[test]
    fn quartic_shape() {
        let r = q_ring();
        let p = lin(&r, -24).pow(3).mul(&lin(&r, 256));
        let prof = hensel_factor(&p, Some(0), 2).unwrap();
        assert_eq!(prof.multiplicities(), vec![3, 1]);
        assert_eq!(prof.factors[0].multiplicity, 3);
        assert_eq!(prof.factors[0].poly, lin(&r, -24));
        assert_eq!(irrationality_obstruction(&prof, 6).unwrap(), Verdict::Obstructed { witness: "lambda + 24".into(), multiplicity: 3 });
        assert!(matches!(irrationality_obstruction(&prof, 4), Err(Error::Precondition(_))));
    }

    #[test]
    fn newton_examples() {
        let r = q_ring();
        let q = Series::var(&r, "Q").unwrap();
        let p = SeriesPoly::new(&r, vec![-q.clone(), Series::zero(&r), Series::zero(&r), Series::one(&r)]);
        assert_eq!(newton_valuations(&p, 0).unwrap(), vec![Rational::new(1.into(), 3.into()); 3]);
        // lambda^2 - q lambda + q with u = 1/q
        let ru = SeriesRing::new(vec![Variable::laurent("u", -2, -10)], 0).unwrap();
        let inv = Series::var_pow(&ru, 0, -1);
        let p = SeriesPoly::new(&ru, vec![inv.clone(), -inv, Series::one(&ru)]);
        assert_eq!(newton_valuations(&p, 0).unwrap(), vec![rat(-1), rat(0)]);
    }

    #[test]
    fn projective_spectra_are_simple() {
        for n in 1..=4u32 {
            let m = Arc::new(projective_space(n));
            let (c1, _) = c1_matrix(&m).unwrap();
            let p = char_poly(&c1).unwrap();
            let prof = hensel_factor(&p, Some(0), 2).unwrap();
            assert!(prof.multiplicities().iter().all(|&k| k == 1));
            assert_eq!(prof.factors.len(), 1);
            assert_eq!(prof.factors[0].valuation, Some(Rational::new(1.into(), (n as i64 + 1).into())));
            let lead = prof.factors[0].leading.clone();
            let mut expected = vec![Rational::zero(); n as usize + 2];
            expected[n as usize + 1] = rat(1);
            expected[0] = -num_traits::pow(rat(n as i64 + 1), n as usize + 1);
            assert_eq!(lead, QPoly::new(expected));
            assert!(lead.is_squarefree());
        }
    }

    fn det_oracle(m: &QMatrix) -> Rational {
        // sum over permutations
        fn perms(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for i in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(i, n - 1);
                    out.push(q);
                }
            }
            out
        }
        let n = m.rows;
        let mut total = Rational::zero();
        for p in perms(n) {
            let mut inv = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if p[i] > p[j] {
                        inv += 1;
                    }
                }
            }
            let mut prod = if inv % 2 == 0 { rat(1) } else { rat(-1) };
            for (i, &j) in p.iter().enumerate() {
                prod *= m.get(i, j);
            }
            total += prod;
        }
        total
    }

    proptest! {
        #[test]
        fn char_poly_matches_cofactor_oracle(entries in proptest::collection::vec(-9i64..10, 16), x in -5i64..6) {
            let m = QMatrix::from_rows(entries.chunks(4).map(|r| r.iter().map(|&v| rat(v)).collect()).collect()).unwrap();
            let p = char_poly_q(&m).unwrap();
            let mut shifted = QMatrix::identity(4);
            for i in 0..4 {
                for j in 0..4 {
                    let d = if i == j { rat(x) } else { rat(0) };
                    shifted.set(i, j, d - m.get(i, j));
                }
            }
            prop_assert_eq!(p.eval(&rat(x)), det_oracle(&shifted));
        }

        #[test]
        fn hensel_remultiplies(a in -5i64..6, b in -5i64..6, c in -5i64..6) {
            let r = q_ring();
            let p = lin(&r, a).mul(&lin(&r, b)).mul(&lin(&r, c));
            let prof = hensel_factor(&p, Some(0), 2).unwrap();
            prop_assert_eq!(prof.product(&r), p.clone());
            let total: u32 = prof.factors.iter().map(|f| f.multiplicity * f.poly.degree().unwrap() as u32).sum();
            prop_assert_eq!(total, 3);
            let scaled = rescale_var(&p, 0, &rat(7));
            let prof2 = hensel_factor(&scaled, Some(0), 2).unwrap();
            prop_assert_eq!(prof.multiplicities(), prof2.multiplicities());
        }
    }
}
