//! F-manifold identities of the big quantum product and the eigenvalue ODE
//! along powers of the Euler field.
//!
//! Vector fields are written in the flat frame: `V = sum_i V^i d/dt^i`. Every
//! identity involves one derivative, so residuals are compared strictly
//! below the coordinate truncation.

use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::frobenius::QuantumProduct;
use crate::linalg::SeriesMatrix;
use crate::poly::SeriesPoly;
use crate::series::{same_ring, Series};
use crate::spectrum::{det, SpectrumProfile};

pub const DEFAULT_KMAX: u32 = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormalVectorField {
    pub components: Vec<Series>,
}

impl FormalVectorField {
    pub fn new(components: Vec<Series>) -> Self {
        FormalVectorField { components }
    }

    pub fn zero(qp: &QuantumProduct) -> Self {
        FormalVectorField { components: vec![Series::zero(qp.ring()); qp.dim()] }
    }

    /// The constant field `d/dt^i`.
    pub fn coordinate(qp: &QuantumProduct, i: usize) -> Self {
        FormalVectorField { components: qp.basis_class(i) }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Series::is_zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.components.iter().zip(&o.components).map(|(a, b)| a.clone() + b.clone()).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.components.iter().zip(&o.components).map(|(a, b)| a.clone() - b.clone()).collect())
    }

    pub fn scale_int(&self, c: i64) -> Self {
        Self::new(self.components.iter().map(|a| a.scale_int(c)).collect())
    }

    /// `V(f) = sum_j V^j d f / d t^j`.
    pub fn apply(&self, qp: &QuantumProduct, f: &Series) -> Series {
        let mut acc = Series::zero(qp.ring());
        for (j, vj) in self.components.iter().enumerate() {
            if vj.is_zero() {
                continue;
            }
            let d = f.derivative(qp.tau_var(j));
            if !d.is_zero() {
                acc += &(vj.clone() * d);
            }
        }
        acc
    }

    fn below_tau(&self, qp: &QuantumProduct, bound: u32) -> Self {
        Self::new(self.components.iter().map(|s| qp.below_tau(s, bound)).collect())
    }
}

impl fmt::Display for FormalVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .components
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("({c}) d/dt{i}"))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

fn require_tau(qp: &QuantumProduct) -> Result<()> {
    if qp.tau_order() == 0 {
        return Err(Error::InsufficientOrder("identities need the big product at coordinate order at least 1".into()));
    }
    Ok(())
}

/// `[V, W]^i = sum_j (V^j d_j W^i - W^j d_j V^i)`, exact below the
/// coordinate truncation.
pub fn lie_bracket(v: &FormalVectorField, w: &FormalVectorField, qp: &QuantumProduct) -> Result<FormalVectorField> {
    if qp.tau_order() == 0 {
        return Err(Error::InsufficientOrder("the bracket consumes one coordinate order".into()));
    }
    let comps = (0..qp.dim())
        .map(|i| {
            let s = v.apply(qp, &w.components[i]) - w.apply(qp, &v.components[i]);
            qp.below_tau(&s, qp.tau_order())
        })
        .collect();
    Ok(FormalVectorField::new(comps))
}

pub fn circ(qp: &QuantumProduct, v: &FormalVectorField, w: &FormalVectorField) -> FormalVectorField {
    FormalVectorField::new(qp.product(&v.components, &w.components))
}

/// `E^{⋆0}, ..., E^{⋆kmax}`, the first being the unit field.
pub fn euler_powers(qp: &QuantumProduct, kmax: u32) -> Vec<FormalVectorField> {
    let e = FormalVectorField::new(qp.euler());
    let mut out = vec![FormalVectorField::coordinate(qp, 0)];
    for k in 1..=kmax as usize {
        let next = circ(qp, &out[k - 1], &e);
        out.push(next);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Residual {
    pub label: String,
    pub components: Vec<Series>,
}

impl Residual {
    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Series::is_zero)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityReport {
    pub target: String,
    pub tau_order: u32,
    pub checks: Vec<Residual>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Residual::is_zero)
    }

    pub fn failures(&self) -> Vec<&Residual> {
        self.checks.iter().filter(|r| !r.is_zero()).collect()
    }

    pub fn extend(&mut self, o: IdentityReport) {
        self.checks.extend(o.checks);
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.checks {
            if r.is_zero() {
                writeln!(f, "{}: residual 0", r.label)?;
            } else {
                writeln!(f, "{}: FAILED", r.label)?;
                for (i, c) in r.components.iter().enumerate() {
                    if !c.is_zero() {
                        writeln!(f, "  [{i}] {c}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn report(qp: &QuantumProduct, checks: Vec<Residual>) -> IdentityReport {
    IdentityReport { target: qp.model().name.clone(), tau_order: qp.tau_order(), checks }
}

/// Residual of `[E^k, V∘W] = [E^k,V]∘W + V∘[E^k,W] + k E^{k-1}∘V∘W`.
pub fn check_derivation_identity(
    qp: &QuantumProduct,
    k: u32,
    v: &FormalVectorField,
    w: &FormalVectorField,
) -> Result<FormalVectorField> {
    require_tau(qp)?;
    let powers = euler_powers(qp, k);
    derivation_residual(qp, &powers, k, v, w)
}

fn derivation_residual(
    qp: &QuantumProduct,
    powers: &[FormalVectorField],
    k: u32,
    v: &FormalVectorField,
    w: &FormalVectorField,
) -> Result<FormalVectorField> {
    let ek = &powers[k as usize];
    let vw = circ(qp, v, w);
    let lhs = lie_bracket(ek, &vw, qp)?;
    let mut rhs = circ(qp, &lie_bracket(ek, v, qp)?, w).add(&circ(qp, v, &lie_bracket(ek, w, qp)?));
    if k > 0 {
        rhs = rhs.add(&circ(qp, &powers[k as usize - 1], &vw).scale_int(k as i64));
    }
    Ok(lhs.sub(&rhs).below_tau(qp, qp.tau_order()))
}

/// The derivation identity for `0 <= k <= kmax` on every pair of coordinate
/// fields and on `(E, E)`.
pub fn check_derivation_suite(qp: &QuantumProduct, kmax: u32) -> Result<IdentityReport> {
    require_tau(qp)?;
    let powers = euler_powers(qp, kmax.max(1));
    let n = qp.dim();
    let mut fields: Vec<(String, FormalVectorField)> =
        (0..n).map(|i| (format!("d{i}"), FormalVectorField::coordinate(qp, i))).collect();
    fields.push(("E".into(), powers[1].clone()));
    let mut checks = Vec::new();
    for k in 0..=kmax {
        for a in 0..fields.len() {
            for b in a..fields.len() {
                if (a == n) != (b == n) {
                    continue;
                }
                let r = derivation_residual(qp, &powers, k, &fields[a].1, &fields[b].1)?;
                checks.push(Residual {
                    label: format!("derivation k={k} V={} W={}", fields[a].0, fields[b].0),
                    components: r.components,
                });
            }
        }
    }
    Ok(report(qp, checks))
}

/// `[E^k, E^l] = (l - k) E^{k+l-1}` for `0 <= k, l <= kmax`.
pub fn check_power_commutators(qp: &QuantumProduct, kmax: u32) -> Result<IdentityReport> {
    require_tau(qp)?;
    let powers = euler_powers(qp, (2 * kmax).saturating_sub(1).max(1));
    let mut checks = Vec::new();
    for k in 0..=kmax {
        for l in 0..=kmax {
            let mut r = lie_bracket(&powers[k as usize], &powers[l as usize], qp)?;
            if k + l > 0 && k != l {
                let rhs = powers[(k + l - 1) as usize].scale_int(l as i64 - k as i64);
                r = r.sub(&rhs).below_tau(qp, qp.tau_order());
            }
            checks.push(Residual { label: format!("commutator k={k} l={l}"), components: r.components });
        }
    }
    Ok(report(qp, checks))
}

/// Checks `E^k(lambda_i) = lambda_i^k` for every eigenvalue branch of the
/// profile. For a factor `g` whose roots are the branches this holds iff
/// `E^k(g) + lambda^k g'` vanishes modulo `g`, since at a root
/// `E^k(g)(lambda_i) = -E^k(lambda_i) g'(lambda_i)`. Certified powers
/// `g^m` are tested on `g`; uncertified clusters are refused.
pub fn check_eigen_ode(qp: &QuantumProduct, profile: &SpectrumProfile, k: u32) -> Result<IdentityReport> {
    require_tau(qp)?;
    if !profile.is_certified() {
        return Err(Error::Precondition("eigenvalue branches need a certified profile".into()));
    }
    let ek = euler_powers(qp, k).pop().expect("k + 1 powers");
    let mut checks = Vec::new();
    for (idx, f) in profile.factors.iter().enumerate() {
        let g = &f.poly;
        if !same_ring(g.ring(), qp.ring()) {
            return Err(Error::Precondition("profile was not computed over the product's ring".into()));
        }
        let moved = g.map_coeffs(qp.ring(), |c| ek.apply(qp, c));
        let lam_k = SeriesPoly::new(
            qp.ring(),
            (0..=k).map(|i| if i == k { Series::one(qp.ring()) } else { Series::zero(qp.ring()) }).collect(),
        );
        let lhs = moved.add(&lam_k.mul(&g.derivative()));
        let (_, rem) = lhs.divrem_monic(g)?;
        let comps = rem.coeffs().iter().map(|c| qp.below_tau(c, qp.tau_order())).collect();
        checks.push(Residual {
            label: format!("eigen-ode k={k} branch {} ({})", idx, f.leading.render("lambda")),
            components: comps,
        });
    }
    Ok(report(qp, checks))
}

/// Determinant of the coordinate matrix of `1, E, ..., E^{kmax}`.
pub fn power_determinant(qp: &QuantumProduct, kmax: u32) -> Series {
    let powers = euler_powers(qp, kmax);
    let n = powers.len();
    let m = SeriesMatrix::from_fn(qp.ring(), n, n, |r, c| {
        powers[r].components.get(c).cloned().unwrap_or_else(|| Series::zero(qp.ring()))
    });
    det(&m)
}

/// True when `s` is a nonzero monomial times a series with nonzero constant
/// term.
pub fn is_unit_times_monomial(s: &Series) -> bool {
    let mut min: Option<Vec<i32>> = None;
    for m in s.terms().keys() {
        min = Some(match min {
            None => m.clone(),
            Some(x) => x.iter().zip(m).map(|(a, b)| (*a).min(*b)).collect(),
        });
    }
    match min {
        None => false,
        Some(m) => !s.coeff(&m).is_zero(),
    }
}
