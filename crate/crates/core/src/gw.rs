//! Genus-zero descendant Gromov–Witten invariants.
//!
//! Values are reconstructed from a small set of seed invariants using the
//! string, dilaton and divisor equations, topological recursion, and WDVV
//! associativity. Every reduction strictly decreases the order described in
//! `docs/reconstruction.md`, so the memoized recursion cannot cycle.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::QMatrix;
use crate::mirror::HypersurfaceMirror;
use crate::series::format_rational;
use crate::targets::{parse_rational, unit_vec, CohomologyModel, Seed};
use crate::{rat, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Insertion {
    pub class: usize,
    pub psi: u32,
}

impl Insertion {
    pub fn primary(class: usize) -> Self {
        Insertion { class, psi: 0 }
    }

    pub fn desc(class: usize, psi: u32) -> Self {
        Insertion { class, psi }
    }
}

/// A correlator `<a_1 psi^{k_1}, ..., a_n psi^{k_n}>_{0,n,d}` with the
/// insertions sorted, so permuted inputs share one key.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CorrelatorKey {
    pub degree: Vec<u32>,
    pub insertions: Vec<Insertion>,
}

impl CorrelatorKey {
    pub fn new(degree: Vec<u32>, mut insertions: Vec<Insertion>) -> Self {
        insertions.sort();
        CorrelatorKey { degree, insertions }
    }

    pub fn primary(degree: &[u32], classes: &[usize]) -> Self {
        Self::new(degree.to_vec(), classes.iter().map(|&c| Insertion::primary(c)).collect())
    }

    pub fn n(&self) -> usize {
        self.insertions.len()
    }

    pub fn is_zero_degree(&self) -> bool {
        self.degree.iter().all(|&x| x == 0)
    }

    pub fn total_psi(&self) -> u32 {
        self.insertions.iter().map(|i| i.psi).sum()
    }

    pub fn render(&self, model: &CohomologyModel) -> String {
        let d: Vec<String> = self.degree.iter().map(|x| x.to_string()).collect();
        let ins: Vec<String> = self
            .insertions
            .iter()
            .map(|i| match i.psi {
                0 => model.class_name(i.class).to_string(),
                1 => format!("{}*psi", model.class_name(i.class)),
                k => format!("{}*psi^{k}", model.class_name(i.class)),
            })
            .collect();
        format!("({}; {})", d.join(","), ins.join(", "))
    }
}

/// How a key is reduced. The default reduction and the alternatives used by
/// [`GwStore::validate_store`] are all expressed in these terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Path {
    ClosedForm,
    Seed,
    String { pos: usize },
    Dilaton { pos: usize },
    Divisor { pos: usize },
    Trr { first: usize, second: usize, third: usize },
    /// WDVV on the points `(a, b, D, phi)` where `phi_t = sum D ∪ phi`;
    /// `partner` selects which of the two other cross-ratio splittings is used.
    Wdvv { t: usize, a: usize, b: usize, partner: bool },
    TwoPoint { pos: usize, divisor: usize },
    OnePoint { divisor: usize },
    /// `<>_{0,0,d} = -<1 psi>_{0,1,d} / 2`.
    ZeroPoint,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Path::ClosedForm => write!(f, "degree-zero"),
            Path::Seed => write!(f, "seed"),
            Path::String { pos } => write!(f, "string@{pos}"),
            Path::Dilaton { pos } => write!(f, "dilaton@{pos}"),
            Path::Divisor { pos } => write!(f, "divisor@{pos}"),
            Path::Trr { first, second, third } => write!(f, "trr({first};{second},{third})"),
            Path::Wdvv { t, a, b, partner } => {
                write!(f, "wdvv(t={t};{a},{b};{})", if *partner { "alt" } else { "std" })
            }
            Path::TwoPoint { pos, divisor } => write!(f, "two-point({pos};D={divisor})"),
            Path::OnePoint { divisor } => write!(f, "one-point(D={divisor})"),
            Path::ZeroPoint => write!(f, "zero-point"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bounds {
    /// Bound on each coordinate of the curve class.
    pub max_degree: Vec<u32>,
    pub max_insertions: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub key: String,
    pub stored: Rational,
    pub recomputed: Rational,
    pub path: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: stored {}, recomputed {} via {}",
            self.key,
            format_rational(&self.stored),
            format_rational(&self.recomputed),
            self.path
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub checked_keys: usize,
    pub checked_paths: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `(divisor index, gamma)` pairs.
type DivisorSplit = Vec<(usize, Vec<Rational>)>;

pub struct GwStore {
    model: Arc<CohomologyModel>,
    seeds: BTreeMap<CorrelatorKey, Rational>,
    memo: RwLock<BTreeMap<CorrelatorKey, Rational>>,
    /// For each class of degree >= 4: `phi_c = sum_a D_a ∪ gamma_a`.
    decomposition: Vec<Option<DivisorSplit>>,
    /// Sparse dual basis: `phi^e = sum_f g^{ef} phi_f`.
    dual: Vec<Vec<(usize, Rational)>>,
}

type Slot = (Vec<(usize, Rational)>, u32);

impl GwStore {
    /// A store seeded with the model's own seed list, plus the two-point
    /// invariants from the mirror theorem when the model is a hypersurface.
    pub fn new(model: Arc<CohomologyModel>) -> Result<Self> {
        let mut seeds = model.seeds.clone();
        if let Some((n, k)) = model.mirror {
            let mirror = HypersurfaceMirror::new(n, k, HypersurfaceMirror::seed_order(n, k))?;
            seeds.extend(mirror.seeds_for(&model)?);
        }
        Self::with_seeds(model, &seeds)
    }

    pub fn with_seeds(model: Arc<CohomologyModel>, seeds: &[Seed]) -> Result<Self> {
        let n = model.len();
        let mut dual = Vec::with_capacity(n);
        for e in 0..n {
            dual.push(
                (0..n)
                    .filter(|&f| !model.pairing_inv.get(e, f).is_zero())
                    .map(|f| (f, model.pairing_inv.get(e, f).clone()))
                    .collect(),
            );
        }
        let decomposition = (0..n).map(|c| decompose(&model, c)).collect();
        let mut store = GwStore {
            model,
            seeds: BTreeMap::new(),
            memo: RwLock::new(BTreeMap::new()),
            decomposition,
            dual,
        };
        for s in seeds {
            let key = CorrelatorKey::primary(&s.degree, &s.insertions);
            if key.is_zero_degree() && key.n() < 3 {
                return Err(Error::validation("seed-stability", "seeds must lie in the stable range"));
            }
            if !store.passes_dimension(&key) && !s.value.is_zero() {
                return Err(Error::validation(
                    "seed-dimension",
                    format!("seed {} violates the dimension constraint", key.render(&store.model)),
                ));
            }
            if let Some(old) = store.seeds.get(&key) {
                if *old != s.value {
                    return Err(Error::validation("seed-conflict", format!("conflicting seeds for {}", key.render(&store.model))));
                }
            }
            store.seeds.insert(key, s.value.clone());
        }
        Ok(store)
    }

    pub fn model(&self) -> &Arc<CohomologyModel> {
        &self.model
    }

    pub fn seeds(&self) -> &BTreeMap<CorrelatorKey, Rational> {
        &self.seeds
    }

    pub fn stored_len(&self) -> usize {
        self.memo.read().expect("memo lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.stored_len() == 0
    }

    /// Overwrites a stored value (used for import and fault injection).
    pub fn insert_value(&self, key: CorrelatorKey, value: Rational) {
        self.memo.write().expect("memo lock").insert(key, value);
    }

    pub fn stored(&self) -> BTreeMap<CorrelatorKey, Rational> {
        self.memo.read().expect("memo lock").clone()
    }

    /// The virtual-dimension constraint.
    pub fn passes_dimension(&self, key: &CorrelatorKey) -> bool {
        let lhs: i64 = key
            .insertions
            .iter()
            .map(|i| self.model.degree(i.class) as i64 / 2 + i.psi as i64)
            .sum();
        let rhs = rat(self.model.dim_complex() as i64 + key.n() as i64 - 3) + self.model.c1_dot(&key.degree);
        rat(lhs) == rhs
    }

    /// Value of a correlator given in any insertion order.
    pub fn value(&self, degree: &[u32], insertions: &[Insertion]) -> Result<Rational> {
        self.value_key(&CorrelatorKey::new(degree.to_vec(), insertions.to_vec()))
    }

    pub fn primary(&self, degree: &[u32], classes: &[usize]) -> Result<Rational> {
        self.value_key(&CorrelatorKey::primary(degree, classes))
    }

    pub fn value_key(&self, key: &CorrelatorKey) -> Result<Rational> {
        if key.is_zero_degree() && key.n() < 3 {
            return Err(Error::Domain(format!(
                "unstable correlator {} (n = {}, d = 0)",
                key.render(&self.model),
                key.n()
            )));
        }
        if !self.passes_dimension(key) {
            return Ok(Rational::zero());
        }
        if let Some(v) = self.seeds.get(key) {
            return Ok(v.clone());
        }
        if let Some(v) = self.memo.read().expect("memo lock").get(key) {
            return Ok(v.clone());
        }
        let path = self.default_path(key)?;
        let v = self.reduce(key, &path)?;
        if !key.is_zero_degree() || key.n() > 3 {
            self.memo.write().expect("memo lock").entry(key.clone()).or_insert_with(|| v.clone());
        }
        Ok(v)
    }

    /// Multilinear evaluation on general classes.
    fn value_slots(&self, degree: &[u32], slots: &[Slot]) -> Result<Rational> {
        if slots.iter().any(|s| s.0.is_empty()) {
            return Ok(Rational::zero());
        }
        let mut total = Rational::zero();
        let mut idx = vec![0usize; slots.len()];
        loop {
            let mut coeff = Rational::one();
            let mut ins = Vec::with_capacity(slots.len());
            for (s, &i) in slots.iter().zip(&idx) {
                let (c, x) = &s.0[i];
                coeff *= x;
                ins.push(Insertion::desc(*c, s.1));
            }
            let key = CorrelatorKey::new(degree.to_vec(), ins);
            if self.passes_dimension(&key) {
                let v = self.value_key(&key)?;
                if !v.is_zero() {
                    total += coeff * v;
                }
            }
            let mut p = 0;
            loop {
                if p == slots.len() {
                    return Ok(total);
                }
                idx[p] += 1;
                if idx[p] < slots[p].0.len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
    }

    fn basis_slot(&self, ins: Insertion) -> Slot {
        (vec![(ins.class, Rational::one())], ins.psi)
    }

    fn sparse(v: &[Rational]) -> Vec<(usize, Rational)> {
        v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (i, c.clone())).collect()
    }

    fn cup_classes(&self, a: usize, b: usize) -> Vec<(usize, Rational)> {
        Self::sparse(&self.model.cup[a][b])
    }

    fn first_divisor_for(&self, degree: &[u32]) -> Option<usize> {
        self.model.divisor_indices().into_iter().find(|&d| !self.model.divisor_dot(d, degree).is_zero())
    }

    pub fn default_path(&self, key: &CorrelatorKey) -> Result<Path> {
        let ins = &key.insertions;
        let n = ins.len();
        if key.is_zero_degree() {
            return Ok(Path::ClosedForm);
        }
        if let Some(pos) = ins.iter().position(|i| i.class == 0 && i.psi == 0) {
            return Ok(Path::String { pos });
        }
        if n >= 2 {
            if let Some(pos) = ins.iter().position(|i| i.class == 0 && i.psi == 1) {
                return Ok(Path::Dilaton { pos });
            }
        }
        match n {
            0 if self.seeds.contains_key(key) || self.first_divisor_for(&key.degree).is_none() => Ok(Path::Seed),
            0 => Ok(Path::ZeroPoint),
            1 => {
                let divisor = self.first_divisor_for(&key.degree).ok_or_else(|| self.gap(key))?;
                Ok(Path::OnePoint { divisor })
            }
            2 => {
                if let Some(pos) = ins.iter().position(|i| i.psi > 0) {
                    let divisor = self.first_divisor_for(&key.degree).ok_or_else(|| self.gap(key))?;
                    Ok(Path::TwoPoint { pos, divisor })
                } else {
                    Ok(Path::Seed)
                }
            }
            _ => {
                if let Some(pos) = ins.iter().position(|i| i.psi == 0 && self.model.is_divisor(i.class)) {
                    return Ok(Path::Divisor { pos });
                }
                if let Some(first) = ins.iter().position(|i| i.psi > 0) {
                    let others: Vec<usize> = (0..n).filter(|&p| p != first).collect();
                    return Ok(Path::Trr { first, second: others[0], third: others[1] });
                }
                let t = self.wdvv_target(key).ok_or_else(|| {
                    Error::UnsupportedTarget(format!(
                        "cannot reduce {}: cohomology is not generated by divisors",
                        key.render(&self.model)
                    ))
                })?;
                let others: Vec<usize> = (0..n).filter(|&p| p != t).collect();
                Ok(Path::Wdvv { t, a: others[0], b: others[1], partner: false })
            }
        }
    }

    /// Position of the lowest-degree insertion that is neither the unit nor a
    /// divisor, provided it can be written through divisors.
    fn wdvv_target(&self, key: &CorrelatorKey) -> Option<usize> {
        let t = key
            .insertions
            .iter()
            .enumerate()
            .filter(|(_, i)| self.model.degree(i.class) >= 4)
            .min_by_key(|(p, i)| (self.model.degree(i.class), *p))
            .map(|(p, _)| p)?;
        self.decomposition[key.insertions[t].class].as_ref().map(|_| t)
    }

    /// Every reduction applicable to `key`, default first.
    pub fn paths(&self, key: &CorrelatorKey) -> Vec<Path> {
        let mut out = Vec::new();
        if let Ok(p) = self.default_path(key) {
            out.push(p);
        }
        if key.is_zero_degree() {
            return out;
        }
        let ins = &key.insertions;
        let n = ins.len();
        let mut push = |p: Path| {
            if !out.contains(&p) {
                out.push(p);
            }
        };
        if n >= 3 {
            for (pos, i) in ins.iter().enumerate() {
                if i.psi == 0 && self.model.is_divisor(i.class) {
                    push(Path::Divisor { pos });
                }
            }
            for first in 0..n {
                if ins[first].psi == 0 {
                    continue;
                }
                let others: Vec<usize> = (0..n).filter(|&p| p != first).collect();
                for x in 0..others.len() {
                    for y in x + 1..others.len() {
                        push(Path::Trr { first, second: others[x], third: others[y] });
                    }
                }
            }
            if key.total_psi() == 0 {
                if let Some(t) = self.wdvv_target(key) {
                    let others: Vec<usize> = (0..n).filter(|&p| p != t).collect();
                    for &a in &others {
                        for &b in &others {
                            if a != b {
                                push(Path::Wdvv { t, a, b, partner: false });
                                push(Path::Wdvv { t, a, b, partner: true });
                            }
                        }
                    }
                }
            }
        }
        let divs: Vec<usize> = self
            .model
            .divisor_indices()
            .into_iter()
            .filter(|&d| !self.model.divisor_dot(d, &key.degree).is_zero())
            .collect();
        if n == 2 {
            for pos in 0..2 {
                if ins[pos].psi > 0 {
                    for &divisor in &divs {
                        push(Path::TwoPoint { pos, divisor });
                    }
                }
            }
        }
        if n == 1 {
            if ins[0].class == 0 && ins[0].psi == 1 {
                push(Path::Dilaton { pos: 0 });
            }
            for &divisor in &divs {
                push(Path::OnePoint { divisor });
            }
        }
        out
    }

    fn gap(&self, key: &CorrelatorKey) -> Error {
        Error::SeedGap(key.render(&self.model))
    }

    /// Evaluates `key` through one specific reduction.
    pub fn reduce(&self, key: &CorrelatorKey, path: &Path) -> Result<Rational> {
        let ins = &key.insertions;
        let d = &key.degree;
        let n = ins.len();
        match *path {
            Path::ClosedForm => self.degree_zero(key),
            Path::Seed => self.seeds.get(key).cloned().ok_or_else(|| self.gap(key)),
            Path::String { pos } => {
                let rest = remove(ins, pos);
                let mut total = Rational::zero();
                for j in 0..rest.len() {
                    if rest[j].psi > 0 {
                        let mut r = rest.clone();
                        r[j].psi -= 1;
                        total += self.value(d, &r)?;
                    }
                }
                Ok(total)
            }
            Path::Dilaton { pos } => {
                let rest = remove(ins, pos);
                let factor = rat(rest.len() as i64 - 2);
                if factor.is_zero() {
                    return Ok(factor);
                }
                Ok(factor * self.value(d, &rest)?)
            }
            Path::Divisor { pos } => {
                let dc = ins[pos].class;
                let rest = remove(ins, pos);
                let dot = self.model.divisor_dot(dc, d);
                let mut total = Rational::zero();
                if !dot.is_zero() {
                    total += dot * self.value(d, &rest)?;
                }
                for j in 0..rest.len() {
                    if rest[j].psi == 0 {
                        continue;
                    }
                    let mut slots: Vec<Slot> = rest.iter().map(|&i| self.basis_slot(i)).collect();
                    slots[j] = (self.cup_classes(rest[j].class, dc), rest[j].psi - 1);
                    total += self.value_slots(d, &slots)?;
                }
                Ok(total)
            }
            Path::Trr { first, second, third } => {
                if n < 3 {
                    return Err(Error::Domain("topological recursion needs three insertions".into()));
                }
                if ins[first].psi == 0 {
                    return Err(Error::Domain("topological recursion needs a psi class on the first insertion".into()));
                }
                let mut a1 = ins[first];
                a1.psi -= 1;
                let rest: Vec<Insertion> =
                    (0..n).filter(|&p| p != first && p != second && p != third).map(|p| ins[p]).collect();
                self.trr_sum(d, a1, ins[second], ins[third], &rest)
            }
            Path::Wdvv { t, a, b, partner } => self.wdvv(key, t, a, b, partner),
            Path::TwoPoint { pos, divisor } => self.two_point(key, pos, divisor),
            Path::OnePoint { divisor } => self.one_point(key, divisor),
            Path::ZeroPoint => Ok(self.value(d, &[Insertion::desc(0, 1)])? / rat(-2)),
        }
    }

    /// `<psi^{k_1} a_1, ..., psi^{k_n} a_n>_{0,n,0} = binom(n-3; k) \int prod a_i`.
    fn degree_zero(&self, key: &CorrelatorKey) -> Result<Rational> {
        let n = key.n();
        if n < 3 {
            return Err(Error::Domain(format!("unstable correlator {}", key.render(&self.model))));
        }
        let k: u32 = key.total_psi();
        if k as usize != n - 3 {
            return Ok(Rational::zero());
        }
        let classes: Vec<usize> = key.insertions.iter().map(|i| i.class).collect();
        let integral = self.model.integral_product(&classes);
        if integral.is_zero() {
            return Ok(integral);
        }
        let mut mult = factorial(n as u32 - 3);
        for i in &key.insertions {
            mult /= factorial(i.psi);
        }
        Ok(integral * Rational::from_integer(mult))
    }

    /// Topological recursion with `psi` already removed from `a1`.
    fn trr_sum(&self, d: &[u32], a1: Insertion, a2: Insertion, a3: Insertion, rest: &[Insertion]) -> Result<Rational> {
        let mut total = Rational::zero();
        for d1 in sub_degrees(d) {
            let d2: Vec<u32> = d.iter().zip(&d1).map(|(a, b)| a - b).collect();
            let d1_zero = d1.iter().all(|&x| x == 0);
            for (s1, s2, w) in split_multiset(rest) {
                if d1_zero && s1.is_empty() {
                    continue;
                }
                for e in 0..self.model.len() {
                    let mut left: Vec<Insertion> = s1.clone();
                    left.push(a1);
                    left.push(Insertion::primary(e));
                    let lk = CorrelatorKey::new(d1.clone(), left);
                    if !self.passes_dimension(&lk) {
                        continue;
                    }
                    let lv = self.value_key(&lk)?;
                    if lv.is_zero() {
                        continue;
                    }
                    let mut slots: Vec<Slot> = vec![self.basis_slot(a2), self.basis_slot(a3)];
                    slots.extend(s2.iter().map(|&i| self.basis_slot(i)));
                    slots.push((self.dual[e].clone(), 0));
                    let rv = self.value_slots(&d2, &slots)?;
                    if !rv.is_zero() {
                        total += &w * lv * rv;
                    }
                }
            }
        }
        Ok(total)
    }

    /// `sum_{d1+d2=d, S1⊔S2=S} <x, y, S1, phi_e>_{d1} <phi^e, u, v, S2>_{d2}`,
    /// optionally skipping the single term `(d1, S1) = (d, S)`.
    fn split_sum(
        &self,
        d: &[u32],
        left_fixed: [Slot; 2],
        right_fixed: [Slot; 2],
        s: &[Insertion],
        skip_full_left: bool,
    ) -> Result<Rational> {
        let mut total = Rational::zero();
        for d1 in sub_degrees(d) {
            let d2: Vec<u32> = d.iter().zip(&d1).map(|(a, b)| a - b).collect();
            for (s1, s2, w) in split_multiset(s) {
                if skip_full_left && d1 == d && s2.is_empty() {
                    continue;
                }
                for e in 0..self.model.len() {
                    let mut lslots: Vec<Slot> = left_fixed.to_vec();
                    lslots.extend(s1.iter().map(|&i| self.basis_slot(i)));
                    lslots.push((vec![(e, Rational::one())], 0));
                    let lv = self.value_slots(&d1, &lslots)?;
                    if lv.is_zero() {
                        continue;
                    }
                    let mut rslots: Vec<Slot> = right_fixed.to_vec();
                    rslots.extend(s2.iter().map(|&i| self.basis_slot(i)));
                    rslots.push((self.dual[e].clone(), 0));
                    let rv = self.value_slots(&d2, &rslots)?;
                    if !rv.is_zero() {
                        total += &w * lv * rv;
                    }
                }
            }
        }
        Ok(total)
    }

    fn wdvv(&self, key: &CorrelatorKey, t: usize, a: usize, b: usize, partner: bool) -> Result<Rational> {
        let ins = &key.insertions;
        let n = ins.len();
        if n < 3 || key.total_psi() != 0 {
            return Err(Error::Domain("WDVV reconstruction applies to primary correlators with n >= 3".into()));
        }
        let decomposition = self.decomposition[ins[t].class].clone().ok_or_else(|| {
            Error::UnsupportedTarget(format!("class `{}` is not a combination of divisor products", self.model.class_name(ins[t].class)))
        })?;
        let s: Vec<Insertion> = (0..n).filter(|&p| p != t && p != a && p != b).map(|p| ins[p]).collect();
        let d = &key.degree;
        let sa = self.basis_slot(ins[a]);
        let sb = self.basis_slot(ins[b]);
        let mut total = Rational::zero();
        for (dc, gamma) in &decomposition {
            let sd: Slot = (vec![(*dc, Rational::one())], 0);
            let sphi: Slot = (Self::sparse(gamma), 0);
            // (A B | D phi) contains the target at d2 = 0
            let lhs = self.split_sum(d, [sa.clone(), sb.clone()], [sd.clone(), sphi.clone()], &s, true)?;
            let rhs = if partner {
                self.split_sum(d, [sa.clone(), sphi.clone()], [sb.clone(), sd.clone()], &s, false)?
            } else {
                self.split_sum(d, [sa.clone(), sd.clone()], [sb.clone(), sphi.clone()], &s, false)?
            };
            total += rhs - lhs;
        }
        Ok(total)
    }

    /// `(d.D) <a psi^k, b psi^l> = sum_{d' != 0} <a psi^{k-1}, phi_e>_{d'} <phi^e, b psi^l, D>_{d-d'}
    ///   - <(a∪D) psi^{k-1}, b psi^l> - <a psi^k, (b∪D) psi^{l-1}>`.
    fn two_point(&self, key: &CorrelatorKey, pos: usize, divisor: usize) -> Result<Rational> {
        let d = &key.degree;
        let alpha = key.insertions[pos];
        let beta = key.insertions[1 - pos];
        if alpha.psi == 0 {
            return Err(Error::Domain("two-point recursion needs a psi class".into()));
        }
        let dot = self.model.divisor_dot(divisor, d);
        if dot.is_zero() {
            return Err(Error::Domain("chosen divisor pairs to zero with the degree".into()));
        }
        let mut a1 = alpha;
        a1.psi -= 1;
        let mut total = Rational::zero();
        for d1 in sub_degrees(d) {
            if d1.iter().all(|&x| x == 0) {
                continue;
            }
            let d2: Vec<u32> = d.iter().zip(&d1).map(|(x, y)| x - y).collect();
            for e in 0..self.model.len() {
                let lk = CorrelatorKey::new(d1.clone(), vec![a1, Insertion::primary(e)]);
                if !self.passes_dimension(&lk) {
                    continue;
                }
                let lv = self.value_key(&lk)?;
                if lv.is_zero() {
                    continue;
                }
                let slots: Vec<Slot> =
                    vec![(self.dual[e].clone(), 0), self.basis_slot(beta), self.basis_slot(Insertion::primary(divisor))];
                let rv = self.value_slots(&d2, &slots)?;
                total += lv * rv;
            }
        }
        total -= self.value_slots(d, &[(self.cup_classes(alpha.class, divisor), alpha.psi - 1), self.basis_slot(beta)])?;
        if beta.psi > 0 {
            total -= self.value_slots(d, &[self.basis_slot(alpha), (self.cup_classes(beta.class, divisor), beta.psi - 1)])?;
        }
        Ok(total / dot)
    }

    /// `(d.D) <a psi^k> = <a psi^k, D> - <(a∪D) psi^{k-1}>`.
    fn one_point(&self, key: &CorrelatorKey, divisor: usize) -> Result<Rational> {
        let d = &key.degree;
        let alpha = key.insertions[0];
        let dot = self.model.divisor_dot(divisor, d);
        if dot.is_zero() {
            return Err(Error::Domain("chosen divisor pairs to zero with the degree".into()));
        }
        let mut total = self.value(d, &[alpha, Insertion::primary(divisor)])?;
        if alpha.psi > 0 {
            total -= self.value_slots(d, &[(self.cup_classes(alpha.class, divisor), alpha.psi - 1)])?;
        }
        Ok(total / dot)
    }

    /// Computes every primary invariant with `3 <= n <= max_insertions`
    /// insertions and degree within `max_degree`. Returns the number of
    /// nonzero values.
    pub fn wdvv_reconstruct(&self, bounds: &Bounds) -> Result<usize> {
        if !self.model.generated_by_divisors() {
            return Err(Error::UnsupportedTarget(format!(
                "cohomology of `{}` is not generated by degree-2 classes",
                self.model.name
            )));
        }
        let mut nonzero = 0;
        for d in sub_degrees(&bounds.max_degree) {
            if d.iter().all(|&x| x == 0) {
                continue;
            }
            for n in 2..=bounds.max_insertions {
                for classes in multisets(self.model.len(), n) {
                    let key = CorrelatorKey::primary(&d, &classes);
                    if !self.passes_dimension(&key) {
                        continue;
                    }
                    if !self.value_key(&key)?.is_zero() {
                        nonzero += 1;
                    }
                }
            }
        }
        Ok(nonzero)
    }

    /// Re-derives stored values through every alternative reduction and
    /// reports disagreements. With `sample = Some((k, seed))` only `k`
    /// randomly chosen keys are checked.
    pub fn validate_store(&self, sample: Option<(usize, u64)>) -> Result<ValidationReport> {
        let stored = self.stored();
        let mut keys: Vec<CorrelatorKey> = stored.keys().cloned().collect();
        if let Some((k, seed)) = sample {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            keys.shuffle(&mut rng);
            keys.truncate(k);
            keys.sort();
        }
        let mut report = ValidationReport::default();
        // seeds that the axioms could have produced must agree with them
        for (key, value) in &self.seeds {
            let path = match self.default_path(key) {
                Ok(Path::Seed) | Err(_) => continue,
                Ok(p) => p,
            };
            let alt = match self.reduce(key, &path) {
                Ok(v) => v,
                Err(Error::SeedGap(_)) | Err(Error::Domain(_)) => continue,
                Err(e) => return Err(e),
            };
            report.checked_paths += 1;
            if alt != *value {
                report.violations.push(Violation {
                    key: key.render(&self.model),
                    stored: value.clone(),
                    recomputed: alt,
                    path: path.to_string(),
                });
            }
        }
        for key in keys {
            let value = stored[&key].clone();
            report.checked_keys += 1;
            for path in self.paths(&key) {
                let alt = match self.reduce(&key, &path) {
                    Ok(v) => v,
                    Err(Error::SeedGap(_)) | Err(Error::Domain(_)) => continue,
                    Err(e) => return Err(e),
                };
                report.checked_paths += 1;
                if alt != value {
                    report.violations.push(Violation {
                        key: key.render(&self.model),
                        stored: value.clone(),
                        recomputed: alt,
                        path: path.to_string(),
                    });
                }
            }
        }
        Ok(report)
    }

    /// Sorted text table of stored values, one `(d; insertions) = p/q` per line.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.stored() {
            out.push_str(&format!("{} = {}\n", k.render(&self.model), format_rational(&v)));
        }
        out
    }

    /// Reads a table produced by [`GwStore::export`] into the memo.
    pub fn import(&self, text: &str) -> Result<usize> {
        let mut count = 0;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (lhs, rhs) = line
                .rsplit_once('=')
                .ok_or_else(|| Error::Config(format!("malformed store line `{line}`")))?;
            let lhs = lhs.trim();
            let inner = lhs
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| Error::Config(format!("malformed key `{lhs}`")))?;
            let (deg, ins) = inner.split_once(';').ok_or_else(|| Error::Config(format!("malformed key `{lhs}`")))?;
            let degree = deg
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<u32>().map_err(|_| Error::Config(format!("bad degree in `{lhs}`"))))
                .collect::<Result<Vec<_>>>()?;
            let mut insertions = Vec::new();
            for item in ins.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (name, psi) = match item.split_once("*psi") {
                    Some((name, rest)) => {
                        let psi = match rest.strip_prefix('^') {
                            Some(p) => p.parse().map_err(|_| Error::Config(format!("bad psi power in `{item}`")))?,
                            None => 1,
                        };
                        (name, psi)
                    }
                    None => (item, 0),
                };
                let class = self
                    .model
                    .index_of(name)
                    .ok_or_else(|| Error::Config(format!("unknown class `{name}`")))?;
                insertions.push(Insertion::desc(class, psi));
            }
            let key = CorrelatorKey::new(degree, insertions);
            self.insert_value(key, parse_rational(rhs)?);
            count += 1;
        }
        Ok(count)
    }
}

fn remove(ins: &[Insertion], pos: usize) -> Vec<Insertion> {
    ins.iter().enumerate().filter(|(p, _)| *p != pos).map(|(_, i)| *i).collect()
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// All classes `d'` with `0 <= d' <= d` componentwise.
pub fn sub_degrees(d: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &x in d {
        let mut next = Vec::with_capacity(out.len() * (x as usize + 1));
        for prefix in &out {
            for v in 0..=x {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Splittings of a sorted multiset into two parts, with the number of
/// labelled splittings each represents.
fn split_multiset(s: &[Insertion]) -> Vec<(Vec<Insertion>, Vec<Insertion>, Rational)> {
    let mut groups: Vec<(Insertion, u32)> = Vec::new();
    for &i in s {
        match groups.last_mut() {
            Some((g, c)) if *g == i => *c += 1,
            _ => groups.push((i, 1)),
        }
    }
    let mut out = vec![(Vec::new(), Vec::new(), Rational::one())];
    for (g, c) in groups {
        let mut next = Vec::new();
        for (l, r, w) in &out {
            for k in 0..=c {
                let mut l2 = l.clone();
                let mut r2 = r.clone();
                l2.extend(std::iter::repeat_n(g, k as usize));
                r2.extend(std::iter::repeat_n(g, (c - k) as usize));
                next.push((l2, r2, w * Rational::from_integer(binomial(c, k))));
            }
        }
        out = next;
    }
    out
}

/// Multisets of size `n` drawn from `0..m`, as sorted vectors.
pub fn multisets(m: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, n: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for c in start..m {
            cur.push(c);
            rec(m, n, c, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, n, 0, &mut Vec::new(), &mut out);
    out
}

/// Writes basis class `c` (degree >= 4) as `sum_a D_a ∪ gamma_a`.
fn decompose(model: &CohomologyModel, c: usize) -> Option<Vec<(usize, Vec<Rational>)>> {
    let deg = model.degree(c);
    if deg < 4 {
        return None;
    }
    let divs = model.divisor_indices();
    let lower: Vec<usize> = (0..model.len()).filter(|&i| model.degree(i) == deg - 2).collect();
    let n = model.len();
    let unknowns: Vec<(usize, usize)> =
        divs.iter().flat_map(|&dv| lower.iter().map(move |&l| (dv, l))).collect();
    if unknowns.is_empty() {
        return None;
    }
    let rows: Vec<Vec<Rational>> = (0..n)
        .map(|k| unknowns.iter().map(|&(dv, l)| model.cup[dv][l][k].clone()).collect())
        .collect();
    let a = QMatrix::from_rows(rows).ok()?;
    let x = a.solve(&unit_vec(n, c))?;
    let mut out: Vec<(usize, Vec<Rational>)> = Vec::new();
    for (&(dv, l), coeff) in unknowns.iter().zip(x) {
        if coeff.is_zero() {
            continue;
        }
        match out.iter_mut().find(|(d, _)| *d == dv) {
            Some((_, g)) => g[l] += coeff,
            None => {
                let mut g = vec![Rational::zero(); n];
                g[l] = coeff;
                out.push((dv, g));
            }
        }
    }
    Some(out)
}

/// Convenience: integer value of a rational known to be integral.
pub fn as_i64(r: &Rational) -> Option<i64> {
    if r.is_integer() {
        r.to_integer().to_i64()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{load_target_str, projective_space};
    use std::path::Path as FsPath;

    fn p2_store() -> GwStore {
        let mut m = projective_space(2);
        m.seeds = vec![Seed { degree: vec![1], insertions: vec![2, 2], value: rat(1) }];
        GwStore::new(Arc::new(m)).unwrap()
    }

    fn pts(n: usize) -> Vec<usize> {
        vec![2; n]
    }

    #[test]
    fn kontsevich_numbers() {
        let s = p2_store();
        let expected = [1, 1, 12, 620];
        for (d, &nd) in (1..=4u32).zip(&expected) {
            assert_eq!(s.primary(&[d], &pts(3 * d as usize - 1)).unwrap(), rat(nd), "N_{d}");
        }
    }

    #[test]
    fn axiom_examples() {
        let p1 = Arc::new(projective_space(1));
        let s = GwStore::new(p1).unwrap();
        assert_eq!(s.primary(&[0], &[1, 1, 0]).unwrap(), rat(0));
        let p2 = p2_store();
        // divisor equation
        assert_eq!(p2.primary(&[1], &[2, 2, 1]).unwrap(), rat(1));
        assert_eq!(p2.reduce(&CorrelatorKey::primary(&[1], &[1, 2, 2]), &Path::Divisor { pos: 0 }).unwrap(), rat(1));
        // dilaton with three remaining insertions
        let key = CorrelatorKey::new(
            vec![1],
            vec![Insertion::desc(0, 1), Insertion::primary(2), Insertion::primary(2), Insertion::primary(1)],
        );
        assert_eq!(p2.value_key(&key).unwrap(), rat(1));
        // unstable range
        assert!(matches!(p2.primary(&[0], &[1, 1]), Err(Error::Domain(_))));
    }

    #[test]
    fn trr_requires_psi_and_three_points() {
        let p2 = p2_store();
        let key = CorrelatorKey::primary(&[1], &[2, 2, 1]);
        assert!(matches!(p2.reduce(&key, &Path::Trr { first: 0, second: 1, third: 2 }), Err(Error::Domain(_))));
        let key = CorrelatorKey::new(vec![1], vec![Insertion::desc(1, 1), Insertion::primary(2), Insertion::primary(2)]);
        let v = p2.reduce(&key, &Path::Trr { first: 0, second: 1, third: 2 }).unwrap();
        // agrees with the divisor-free alternative paths
        assert_eq!(v, p2.value_key(&key).unwrap());
    }

    #[test]
    fn p1_small_descendants() {
        // one-point descendants of P^1: <pt psi^{2d-2}>_d = 1/(d!)^2
        let s = GwStore::new(Arc::new(projective_space(1))).unwrap();
        for d in 1..=3u32 {
            let v = s.value(&[d], &[Insertion::desc(1, 2 * d - 2)]).unwrap();
            let f = Rational::from_integer(factorial(d));
            assert_eq!(v, (&f * &f).recip(), "d = {d}");
        }
    }

    #[test]
    fn permutation_invariance() {
        let s = p2_store();
        let a = s.value(&[2], &[Insertion::primary(2), Insertion::desc(1, 1), Insertion::primary(2), Insertion::primary(2)]).unwrap();
        let b = s.value(&[2], &[Insertion::desc(1, 1), Insertion::primary(2), Insertion::primary(2), Insertion::primary(2)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validation_flags_perturbation() {
        let s = p2_store();
        assert!(s.validate_store(None).unwrap().violations.is_empty());
        s.wdvv_reconstruct(&Bounds { max_degree: vec![3], max_insertions: 8 }).unwrap();
        let report = s.validate_store(None).unwrap();
        assert!(report.passed(), "{:?}", report.violations);
        assert!(report.checked_paths > report.checked_keys);
        let key = CorrelatorKey::primary(&[3], &pts(8));
        let v = s.value_key(&key).unwrap();
        s.insert_value(key, v + rat(1));
        assert!(!s.validate_store(None).unwrap().passed());
    }

    #[test]
    fn redundant_seed_is_checked() {
        let mut m = projective_space(2);
        m.seeds.push(Seed { degree: vec![2], insertions: vec![2; 5], value: rat(2) });
        let s = GwStore::new(Arc::new(m)).unwrap();
        let r = s.validate_store(None).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].to_string().starts_with("(2; H^2, H^2, H^2, H^2, H^2): stored 2, recomputed 1"));
    }

    #[test]
    fn missing_seed_is_named() {
        let s = GwStore::with_seeds(Arc::new(projective_space(2)), &[]).unwrap();
        match s.primary(&[1], &pts(2)) {
            Err(Error::SeedGap(k)) => assert_eq!(k, "(1; H^2, H^2)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn export_import_roundtrip() {
        let s = p2_store();
        s.primary(&[2], &pts(5)).unwrap();
        let text = s.export();
        let t = p2_store();
        assert_eq!(t.import(&text).unwrap(), s.stored_len());
        assert_eq!(t.export(), text);
    }

    #[test]
    fn unsupported_target_is_refused() {
        // H^4 class not a product of divisors (no divisors at all)
        let doc = r#"{
            "basis": [{"name":"1","degree":0},{"name":"a","degree":4},{"name":"pt","degree":8}],
            "pairing": [[0,0,1],[0,1,0],[1,0,0]],
            "cup": {"a*a":{"pt":1}},
            "c1": [0,0,0],
            "h2": {"rank":0,"effective":[],"degree_pairing":[]}
        }"#;
        let m = load_target_str(doc, FsPath::new("."), "x").unwrap();
        let s = GwStore::new(Arc::new(m)).unwrap();
        assert!(matches!(
            s.wdvv_reconstruct(&Bounds { max_degree: vec![], max_insertions: 3 }),
            Err(Error::UnsupportedTarget(_))
        ));
    }
}
