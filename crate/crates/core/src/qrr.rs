//! The quantum Riemann–Roch operator symbol
//! `Delta = exp(sum_{l+m>=1} s_{l+m-1} B_m/m! ch_l(V) (-z)^{m-1})`
//! and the Euler-class specializations of the twisting parameters.
//!
//! Operator coefficients live in `H^*(X)` tensored with a ring in the twist
//! variables `s_k` (degree `-2k`) and a Laurent variable `z`. Only a window of
//! `z` exponents is kept.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::gw::factorial;
use crate::series::{Cap, Ring, Series, SeriesRing, Variable};
use crate::targets::{unit_vec, CohomologyModel};
use crate::{rat, Rational};

pub const DEFAULT_Z_WINDOW: (i32, i32) = (-1, 3);
pub const DEFAULT_S_MAX: usize = 3;

/// `B_0, ..., B_n` with `sum B_m x^m / m! = x / (e^x - 1)`, by inverting
/// `(e^x - 1)/x = sum x^j / (j+1)!`.
pub fn bernoulli_table(n: usize) -> Vec<Rational> {
    let a: Vec<Rational> = (0..=n).map(|j| Rational::from_integer(factorial(j as u32 + 1)).recip()).collect();
    let mut b = vec![Rational::one()];
    for k in 1..=n {
        let mut acc = Rational::zero();
        for j in 1..=k {
            acc -= &a[j] * &b[k - j];
        }
        b.push(acc);
    }
    b.iter().enumerate().map(|(m, c)| c * Rational::from_integer(factorial(m as u32))).collect()
}

pub fn bernoulli(m: usize) -> Rational {
    bernoulli_table(m).pop().expect("nonempty table")
}

/// Chern characters `ch_0(V), ..., ch_L(V)` as classes of a model.
#[derive(Clone, Debug)]
pub struct TwistData {
    pub model: Arc<CohomologyModel>,
    pub ch: Vec<Vec<Rational>>,
}

impl TwistData {
    pub fn new(model: Arc<CohomologyModel>, ch: Vec<Vec<Rational>>) -> Result<Self> {
        let n = model.len();
        if ch.is_empty() || ch.iter().any(|c| c.len() != n) {
            return Err(Error::Structure(format!("Chern characters must be classes with {n} coordinates")));
        }
        if ch[0].iter().skip(1).any(|c| !c.is_zero()) || !ch[0][0].is_integer() || ch[0][0] < Rational::zero() {
            return Err(Error::Structure("ch_0 must be a non-negative integer multiple of the unit".into()));
        }
        Ok(TwistData { model, ch })
    }

    /// The bundle with the given Chern roots: `ch_l = sum_i rho_i^l / l!` up
    /// to the nilpotency order of the model.
    pub fn from_roots(model: Arc<CohomologyModel>, roots: &[Vec<Rational>]) -> Result<Self> {
        let n = model.len();
        let top = model.dim_complex() as usize;
        let mut ch = vec![vec![Rational::zero(); n]; top + 1];
        ch[0][0] = rat(roots.len() as i64);
        for r in roots {
            if r.len() != n {
                return Err(Error::Structure(format!("a Chern root needs {n} coordinates")));
            }
            let mut p = unit_vec(n, 0);
            for (l, slot) in ch.iter_mut().enumerate().skip(1) {
                p = model.cup_vec(&p, r);
                let inv = Rational::from_integer(factorial(l as u32)).recip();
                for (s, c) in slot.iter_mut().zip(&p) {
                    *s += c * &inv;
                }
            }
        }
        TwistData::new(model, ch)
    }

    pub fn rank(&self) -> Rational {
        self.ch[0][0].clone()
    }

    /// Direct sum: Chern characters add.
    pub fn direct_sum(&self, o: &TwistData) -> Result<TwistData> {
        let len = self.ch.len().max(o.ch.len());
        let n = self.model.len();
        let get = |t: &TwistData, l: usize| t.ch.get(l).cloned().unwrap_or_else(|| vec![Rational::zero(); n]);
        let ch = (0..len).map(|l| get(self, l).iter().zip(get(o, l)).map(|(a, b)| a + b).collect()).collect();
        TwistData::new(self.model.clone(), ch)
    }

    /// True when each `ch_l` lies in `H^{2l}`.
    pub fn is_homogeneous(&self) -> bool {
        self.ch
            .iter()
            .enumerate()
            .all(|(l, c)| c.iter().enumerate().all(|(i, x)| x.is_zero() || self.model.degree(i) as usize == 2 * l))
    }
}

/// A class with series coefficients.
pub type ClassSeries = Vec<Series>;

pub fn class_mul(model: &CohomologyModel, a: &[Series], b: &[Series]) -> ClassSeries {
    let ring = a[0].ring().clone();
    let n = model.len();
    let mut out = vec![Series::zero(&ring); n];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            let xy = x.clone() * y.clone();
            for (k, c) in model.cup[i][j].iter().enumerate() {
                if !c.is_zero() {
                    out[k] += &xy.scale(c);
                }
            }
        }
    }
    out
}

fn class_unit(ring: &Ring, n: usize) -> ClassSeries {
    (0..n).map(|i| if i == 0 { Series::one(ring) } else { Series::zero(ring) }).collect()
}

fn class_add(a: &[Series], b: &[Series]) -> ClassSeries {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

/// `exp(x)` for a class whose coefficients have no constant term in the
/// ring's small variables, or which is nilpotent in cohomology; `terms`
/// bounds the series.
fn class_exp(model: &CohomologyModel, x: &[Series], terms: u32) -> ClassSeries {
    let ring = x[0].ring().clone();
    let n = model.len();
    let mut acc = class_unit(&ring, n);
    let mut power = class_unit(&ring, n);
    for k in 1..=terms {
        power = class_mul(model, &power, x);
        if power.iter().all(Series::is_zero) {
            break;
        }
        let inv = Rational::from_integer(factorial(k)).recip();
        let term: ClassSeries = power.iter().map(|s| s.scale(&inv)).collect();
        acc = class_add(&acc, &term);
    }
    acc
}

pub struct QRROperator {
    model: Arc<CohomologyModel>,
    ring: Ring,
    s_vars: Vec<usize>,
    z_var: usize,
    s_order: u32,
    window: (i32, i32),
    /// The individual summands of `log Delta`, kept for the factorwise path.
    terms: Vec<ClassSeries>,
    exponent: ClassSeries,
}

/// Builds `log Delta` for twist variables `s_0..s_{s_max}` to total
/// `s`-degree `s_order`. The window must hold every `z` exponent the
/// exponent can produce: `-1` from `m = 0` through `s_max` from the largest
/// Bernoulli index.
pub fn qrr_operator(t: &TwistData, s_max: usize, s_order: u32, window: (i32, i32)) -> Result<QRROperator> {
    let (lo, hi) = window;
    if lo > hi {
        return Err(Error::Window(format!("empty z window [{lo}, {hi}]")));
    }
    if lo > -1 || (hi as i64) < s_max as i64 {
        return Err(Error::Window(format!(
            "z window [{lo}, {hi}] cannot hold exponents -1..{s_max} needed by s_0..s_{s_max}"
        )));
    }
    let model = t.model.clone();
    let n = model.len();
    let mut vars: Vec<Variable> = (0..=s_max).map(|k| Variable::small(&format!("s{k}"), -2 * k as i64)).collect();
    // products of up to s_order summands reach z^{-s_order} and pass through
    // exponents up to hi + s_order before landing in the window
    vars.push(Variable::laurent("z", 2, -(s_order as i32).max(1)));
    let z_var = s_max + 1;
    let caps = vec![Cap { vars: vec![z_var], bound: (hi + s_order as i32) as u32 }];
    let ring = SeriesRing::with_caps(vars, s_order, caps)?;
    let bern = bernoulli_table(s_max + 1);
    let mut terms = Vec::new();
    for (l, ch) in t.ch.iter().enumerate() {
        if ch.iter().all(Rational::is_zero) {
            continue;
        }
        for (m, b) in bern.iter().enumerate() {
            if l + m == 0 || l + m - 1 > s_max || b.is_zero() {
                continue;
            }
            let e = m as i32 - 1;
            let sign = if e.rem_euclid(2) == 1 { -Rational::one() } else { Rational::one() };
            let coef = b / Rational::from_integer(factorial(m as u32)) * sign;
            let mut mono = vec![0; s_max + 2];
            mono[l + m - 1] = 1;
            mono[z_var] = e;
            let unit = Series::monomial(&ring, mono, coef);
            terms.push(ch.iter().map(|c| unit.scale(c)).collect::<ClassSeries>());
        }
    }
    let mut exponent = vec![Series::zero(&ring); n];
    for term in &terms {
        exponent = class_add(&exponent, term);
    }
    Ok(QRROperator { model, ring, s_vars: (0..=s_max).collect(), z_var, s_order, window, terms, exponent })
}

impl QRROperator {
    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn exponent(&self) -> &ClassSeries {
        &self.exponent
    }

    pub fn window(&self) -> (i32, i32) {
        self.window
    }

    fn in_window(&self, x: &[Series]) -> ClassSeries {
        let (lo, hi) = self.window;
        let z = self.z_var;
        x.iter().map(|s| s.filter(|m| m[z] >= lo && m[z] <= hi)).collect()
    }

    /// `Delta = exp(log Delta)`, within the window.
    pub fn delta(&self) -> ClassSeries {
        self.in_window(&class_exp(&self.model, &self.exponent, self.s_order))
    }

    /// `Delta` as the product of the exponentials of the individual summands.
    pub fn delta_by_factors(&self) -> ClassSeries {
        let mut acc = class_unit(&self.ring, self.model.len());
        for t in &self.terms {
            acc = class_mul(&self.model, &acc, &class_exp(&self.model, t, self.s_order));
        }
        self.in_window(&acc)
    }

    /// `Delta` with all `s_k = 0`.
    pub fn delta_at_zero(&self) -> ClassSeries {
        self.delta().iter().map(|s| s.kill(&self.s_vars)).collect()
    }

    pub fn is_identity_at_zero(&self) -> bool {
        self.delta_at_zero() == class_unit(&self.ring, self.model.len())
    }

    /// Every coefficient of class `phi_i` has degree `-deg phi_i`.
    pub fn exponent_has_degree_zero(&self) -> bool {
        self.exponent.iter().enumerate().all(|(i, s)| s.is_homogeneous(-(self.model.degree(i) as i64)))
    }
}

impl fmt::Display for QRROperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.exponent.iter().enumerate() {
            if !s.is_zero() {
                writeln!(f, "log Delta [{}] = {}", self.model.class_name(i), s)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EulerMode {
    /// `e_lambda(V) = sum c_i(V) lambda^{rank - i}`.
    Full,
    /// `e~_lambda(V) = sum c_i(V) lambda^{-i}`.
    Normalized,
}

/// Values of the twist parameters reproducing an Euler-type class:
/// `s_0` is `log lambda` (carried symbolically) or zero, and
/// `s_k = coefficients[k] * lambda^{-k}` for `k >= 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SAssignment {
    pub mode: EulerMode,
    pub s0_is_log_lambda: bool,
    pub coefficients: Vec<Rational>,
    pub lambda: Option<Rational>,
}

impl SAssignment {
    /// Numerical value of `s_k` for `k >= 1` when `lambda` is fixed.
    pub fn value(&self, k: usize) -> Option<Rational> {
        let lam = self.lambda.as_ref()?;
        let c = self.coefficients.get(k)?;
        Some(c / num_traits::pow::pow(lam.clone(), k))
    }
}

impl fmt::Display for SAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "s0 = {}", if self.s0_is_log_lambda { "log(lambda)" } else { "0" })?;
        for (k, c) in self.coefficients.iter().enumerate().skip(1) {
            writeln!(f, "s{k} = {}*lambda^-{k}", crate::series::format_rational(c))?;
        }
        Ok(())
    }
}

/// Matches `log(lambda + rho) = log lambda + sum_{k>=1} (-1)^{k-1} rho^k / (k lambda^k)`
/// against `sum s_k ch_k` with `ch_k = rho^k / k!`, giving
/// `s_k = (-1)^{k-1} (k-1)! / lambda^k`. The normalized class differs only in
/// dropping `log lambda`.
pub fn euler_specialize(mode: EulerMode, kmax: usize, lambda: Option<Rational>) -> Result<SAssignment> {
    if lambda.as_ref().is_some_and(Rational::is_zero) {
        return Err(Error::Domain("cannot specialize at lambda = 0".into()));
    }
    let mut coefficients = vec![Rational::zero()];
    for k in 1..=kmax {
        let c = Rational::from_integer(factorial(k as u32 - 1));
        coefficients.push(if k % 2 == 1 { c } else { -c });
    }
    Ok(SAssignment { mode, s0_is_log_lambda: mode == EulerMode::Full, coefficients, lambda })
}

fn lambda_ring(model: &CohomologyModel, rank: usize) -> Result<Ring> {
    let floor = -(model.dim_complex() as i32) - rank as i32;
    SeriesRing::new(vec![Variable::laurent("lambda", 2, floor)], 0)
}

/// `exp(sum_k s_k ch_k(V))` under the assignment, as a class with Laurent
/// coefficients in `lambda`. `exp(rank * log lambda)` is read as
/// `lambda^rank`.
pub fn reexpand(assign: &SAssignment, t: &TwistData) -> Result<ClassSeries> {
    let model = &t.model;
    let top = model.dim_complex() as usize;
    if assign.coefficients.len() <= top.min(t.ch.len().saturating_sub(1)) {
        return Err(Error::InsufficientOrder(format!("need s_k through k = {top} to reach the nilpotency order")));
    }
    let rank = t.rank().to_integer();
    let rank: usize = rank.try_into().map_err(|_| Error::Domain("rank too large".into()))?;
    let ring = lambda_ring(model, rank)?;
    let n = model.len();
    let mut x = vec![Series::zero(&ring); n];
    for (k, ch) in t.ch.iter().enumerate().skip(1) {
        let Some(c) = assign.coefficients.get(k) else { continue };
        let s = Series::monomial(&ring, vec![-(k as i32)], c.clone());
        for (i, v) in ch.iter().enumerate() {
            if !v.is_zero() {
                x[i] += &s.scale(v);
            }
        }
    }
    let mut out = class_exp(model, &x, top as u32);
    if assign.s0_is_log_lambda {
        let lam = Series::monomial(&ring, vec![rank as i32], Rational::one());
        out = out.iter().map(|s| s.clone() * lam.clone()).collect();
    }
    Ok(out)
}

/// `prod_i (lambda + rho_i)` or `prod_i (1 + rho_i / lambda)`.
pub fn euler_class(mode: EulerMode, model: &CohomologyModel, roots: &[Vec<Rational>]) -> Result<ClassSeries> {
    let ring = lambda_ring(model, roots.len())?;
    let n = model.len();
    let mut acc = class_unit(&ring, n);
    for r in roots {
        let (lead, shift) = match mode {
            EulerMode::Full => (Series::monomial(&ring, vec![1], Rational::one()), Series::one(&ring)),
            EulerMode::Normalized => (Series::one(&ring), Series::monomial(&ring, vec![-1], Rational::one())),
        };
        let factor: ClassSeries = (0..n)
            .map(|i| {
                let mut s = shift.scale(&r[i]);
                if i == 0 {
                    s += &lead;
                }
                s
            })
            .collect();
        acc = class_mul(model, &acc, &factor);
    }
    Ok(acc)
}

/// Re-expands the specialization for a bundle with the given roots and
/// compares it with the Euler-type class, through the nilpotency order of
/// the model.
pub fn verify_specialization(mode: EulerMode, model: &Arc<CohomologyModel>, roots: &[Vec<Rational>]) -> Result<bool> {
    let t = TwistData::from_roots(model.clone(), roots)?;
    let assign = euler_specialize(mode, model.dim_complex() as usize, None)?;
    Ok(reexpand(&assign, &t)? == euler_class(mode, model, roots)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;
    use crate::targets::projective_space;
    use proptest::prelude::*;

    fn p(n: u32) -> Arc<CohomologyModel> {
        Arc::new(projective_space(n))
    }

    fn h(model: &CohomologyModel, c: i64) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); model.len()];
        v[1] = rat(c);
        v
    }

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(0), rat(1));
        assert_eq!(bernoulli(1), ratio(-1, 2));
        assert_eq!(bernoulli(2), ratio(1, 6));
        assert_eq!(bernoulli(3), rat(0));
        assert_eq!(bernoulli(12), ratio(-691, 2730));
    }

    #[test]
    fn identity_at_zero_and_degree() {
        let m = p(3);
        let t = TwistData::from_roots(m.clone(), &[h(&m, 1), h(&m, 2)]).unwrap();
        let op = qrr_operator(&t, DEFAULT_S_MAX, 3, DEFAULT_Z_WINDOW).unwrap();
        assert!(op.is_identity_at_zero());
        assert!(op.exponent_has_degree_zero());
        assert_eq!(op.delta(), op.delta_by_factors());
    }

    #[test]
    fn rank_one_s0_only() {
        let m = p(2);
        let t = TwistData::from_roots(m.clone(), &[h(&m, 1)]).unwrap();
        let op = qrr_operator(&t, 0, 1, DEFAULT_Z_WINDOW).unwrap();
        // s0 (B_0 (-z)^{-1} rho + B_1 rank) = -s0 z^{-1} H - s0/2
        let e = op.exponent();
        assert_eq!(e[0].to_string(), "-1/2*s0");
        assert_eq!(e[1].to_string(), "-s0*z^-1");
        assert!(e[2].is_zero());
    }

    #[test]
    fn window_errors() {
        let m = p(1);
        let t = TwistData::from_roots(m.clone(), &[h(&m, 1)]).unwrap();
        assert!(matches!(qrr_operator(&t, 4, 2, (-1, 3)), Err(Error::Window(_))));
        assert!(matches!(qrr_operator(&t, 1, 2, (0, 3)), Err(Error::Window(_))));
        assert!(qrr_operator(&t, 3, 2, (-1, 3)).is_ok());
    }

    #[test]
    fn specialization_values() {
        let a = euler_specialize(EulerMode::Full, 4, None).unwrap();
        assert!(a.s0_is_log_lambda);
        assert_eq!(a.coefficients, vec![rat(0), rat(1), rat(-1), rat(2), rat(-6)]);
        let b = euler_specialize(EulerMode::Normalized, 2, Some(rat(2))).unwrap();
        assert!(!b.s0_is_log_lambda);
        assert_eq!(b.value(2), Some(ratio(-1, 4)));
        assert!(matches!(euler_specialize(EulerMode::Full, 2, Some(rat(0))), Err(Error::Domain(_))));
    }

    #[test]
    fn rank_one_reexpands() {
        let m = p(4);
        for c in [1, -3] {
            assert!(verify_specialization(EulerMode::Full, &m, &[h(&m, c)]).unwrap());
            assert!(verify_specialization(EulerMode::Normalized, &m, &[h(&m, c)]).unwrap());
        }
        let t = TwistData::from_roots(m.clone(), &[h(&m, 1)]).unwrap();
        let a = euler_specialize(EulerMode::Full, 4, None).unwrap();
        let r = reexpand(&a, &t).unwrap();
        assert_eq!(r[0].to_string(), "lambda");
        assert_eq!(r[1].to_string(), "1");
        assert!(r[2..].iter().all(Series::is_zero));
    }

    #[test]
    fn zero_roots_give_pure_power() {
        let m = p(2);
        let zero = vec![Rational::zero(); m.len()];
        let t = TwistData::from_roots(m.clone(), &[zero.clone(), zero.clone()]).unwrap();
        let a = euler_specialize(EulerMode::Full, 2, None).unwrap();
        let r = reexpand(&a, &t).unwrap();
        assert_eq!(r[0].to_string(), "lambda^2");
        assert!(verify_specialization(EulerMode::Full, &m, &[zero.clone(), zero]).unwrap());
    }

    proptest! {
        #[test]
        fn exponent_is_additive(a in -3i64..4, b in -3i64..4, c in -3i64..4) {
            let m = p(2);
            let v = TwistData::from_roots(m.clone(), &[h(&m, a)]).unwrap();
            let w = TwistData::from_roots(m.clone(), &[h(&m, b), h(&m, c)]).unwrap();
            let sum = v.direct_sum(&w).unwrap();
            let ev = qrr_operator(&v, 2, 2, DEFAULT_Z_WINDOW).unwrap();
            let ew = qrr_operator(&w, 2, 2, DEFAULT_Z_WINDOW).unwrap();
            let es = qrr_operator(&sum, 2, 2, DEFAULT_Z_WINDOW).unwrap();
            let added: Vec<String> = ev.exponent().iter().zip(ew.exponent()).map(|(x, y)| (x.clone() + y.clone()).to_string()).collect();
            let direct: Vec<String> = es.exponent().iter().map(|x| x.to_string()).collect();
            prop_assert_eq!(added, direct);
            prop_assert_eq!(es.delta(), es.delta_by_factors());
        }

        #[test]
        fn rank_two_reexpands(a in -3i64..4, b in -3i64..4) {
            let m = p(3);
            prop_assert!(verify_specialization(EulerMode::Full, &m, &[h(&m, a), h(&m, b)]).unwrap());
            prop_assert!(verify_specialization(EulerMode::Normalized, &m, &[h(&m, a), h(&m, b)]).unwrap());
        }
    }
}
