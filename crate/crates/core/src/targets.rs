//! Cohomology models of targets: loading, validation, and the blow-up builder.
//!
//! Only even-degree cohomology is represented. Degrees are real degrees, so a
//! divisor class has degree 2 and the top class has degree `dim`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::QMatrix;
use crate::{rat, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisClass {
    pub name: String,
    pub degree: u32,
}

/// Curve classes are recorded in coordinates of the effective generators; the
/// effective monoid is treated as freely generated by them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveLattice {
    pub rank: usize,
    pub effective_names: Vec<String>,
    /// Generator classes in the H_2 basis.
    pub effective_classes: Vec<Vec<i64>>,
    /// Rows are the degree-2 basis classes (in basis order), columns the H_2 basis.
    pub degree_pairing: Vec<Vec<Rational>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Seed {
    pub degree: Vec<u32>,
    pub insertions: Vec<usize>,
    pub value: Rational,
}

/// Data relating a blow-up to its base and center, kept for the Novikov
/// extension map.
#[derive(Clone, Debug)]
pub struct BlowupData {
    pub base: Arc<CohomologyModel>,
    pub center: Arc<CohomologyModel>,
    pub r: u32,
    /// `phi_*` of each effective generator of the blow-up, in base effective coordinates.
    pub push_to_base: Vec<Vec<i64>>,
    /// `[D] . d` for each effective generator of the blow-up.
    pub exceptional_dot: Vec<i64>,
    /// `iota_*` of each effective generator of the center, in base effective coordinates.
    pub center_push: Vec<Vec<i64>>,
    /// `c_1(N) . d` for each effective generator of the center.
    pub normal_dot: Vec<i64>,
    /// Basis index of the exceptional divisor class.
    pub exceptional_index: usize,
}

#[derive(Clone, Debug)]
pub struct CohomologyModel {
    pub name: String,
    pub basis: Vec<BasisClass>,
    pub pairing: QMatrix,
    pub pairing_inv: QMatrix,
    /// `cup[i][j][k]`: coefficient of basis class k in `phi_i ∪ phi_j`.
    pub cup: Vec<Vec<Vec<Rational>>>,
    pub c1: Vec<Rational>,
    pub lattice: CurveLattice,
    pub seeds: Vec<Seed>,
    /// `(n, k)` when the target is a degree-k hypersurface in P^n whose seeds
    /// come from the mirror computation.
    pub mirror: Option<(u32, u32)>,
    pub blowup: Option<BlowupData>,
    /// Real dimension.
    pub dim: u32,
    /// `divisor_dot[i][g]`: pairing of basis class i with effective generator g
    /// (zero for classes not of degree 2).
    divisor_dot: Vec<Vec<Rational>>,
    c1_dot: Vec<Rational>,
}

impl CohomologyModel {
    /// Assembles and validates a model from raw tables.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        basis: Vec<BasisClass>,
        pairing: QMatrix,
        cup: Vec<Vec<Vec<Rational>>>,
        c1: Vec<Rational>,
        lattice: CurveLattice,
        seeds: Vec<Seed>,
        mirror: Option<(u32, u32)>,
    ) -> Result<Self> {
        let n = basis.len();
        if n == 0 {
            return Err(Error::validation("nonempty-basis", "basis is empty"));
        }
        for (i, b) in basis.iter().enumerate() {
            if b.degree % 2 != 0 {
                return Err(Error::validation(
                    "even-degree",
                    format!("class `{}` has odd degree {}", b.name, b.degree),
                ));
            }
            if basis[..i].iter().any(|c| c.name == b.name) {
                return Err(Error::validation("unique-names", format!("duplicate class `{}`", b.name)));
            }
        }
        if basis[0].degree != 0 {
            return Err(Error::validation("unit", "first basis class must have degree 0"));
        }
        let dim = basis.iter().map(|b| b.degree).max().unwrap_or(0);
        let model = CohomologyModel {
            name: name.to_string(),
            basis,
            pairing_inv: QMatrix::identity(n),
            pairing,
            cup,
            c1,
            lattice,
            seeds,
            mirror,
            blowup: None,
            dim,
            divisor_dot: Vec::new(),
            c1_dot: Vec::new(),
        };
        model.finish()
    }

    fn finish(mut self) -> Result<Self> {
        self.validate()?;
        self.pairing_inv = self.pairing.inverse().ok_or_else(|| {
            Error::validation("pairing-nondegenerate", "pairing matrix is singular")
        })?;
        let gens = self.lattice.effective_classes.len();
        let mut row = 0;
        self.divisor_dot = vec![vec![Rational::zero(); gens]; self.basis.len()];
        for i in 0..self.basis.len() {
            if self.basis[i].degree == 2 {
                for g in 0..gens {
                    self.divisor_dot[i][g] = self.lattice.degree_pairing[row]
                        .iter()
                        .zip(&self.lattice.effective_classes[g])
                        .map(|(a, &b)| a * rat(b))
                        .sum();
                }
                row += 1;
            }
        }
        self.c1_dot = (0..gens)
            .map(|g| (0..self.basis.len()).map(|i| &self.c1[i] * &self.divisor_dot[i][g]).sum())
            .collect();
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let n = self.basis.len();
        let deg = |i: usize| self.basis[i].degree;
        if self.pairing.rows != n || self.pairing.cols != n {
            return Err(Error::validation("pairing-shape", format!("pairing must be {n}x{n}")));
        }
        if !self.pairing.is_symmetric() {
            return Err(Error::validation("pairing-symmetric", "pairing matrix is not symmetric"));
        }
        for i in 0..n {
            for j in 0..n {
                if !self.pairing.get(i, j).is_zero() && deg(i) + deg(j) != self.dim {
                    return Err(Error::validation(
                        "pairing-degree",
                        format!(
                            "({}, {}) is nonzero but degrees do not sum to {}",
                            self.basis[i].name, self.basis[j].name, self.dim
                        ),
                    ));
                }
            }
        }
        if self.pairing.det().is_zero() {
            return Err(Error::validation("pairing-nondegenerate", "pairing matrix is singular"));
        }
        if self.cup.len() != n || self.cup.iter().any(|r| r.len() != n || r.iter().any(|v| v.len() != n)) {
            return Err(Error::validation("cup-shape", "cup table has the wrong shape"));
        }
        for i in 0..n {
            let mut e = vec![Rational::zero(); n];
            e[i] = Rational::one();
            if self.cup[0][i] != e || self.cup[i][0] != e {
                return Err(Error::validation(
                    "unit",
                    format!("first class is not a unit for `{}`", self.basis[i].name),
                ));
            }
            for j in 0..n {
                if self.cup[i][j] != self.cup[j][i] {
                    return Err(Error::validation(
                        "cup-commutative",
                        format!("{}*{} != {}*{}", self.basis[i].name, self.basis[j].name, self.basis[j].name, self.basis[i].name),
                    ));
                }
                for k in 0..n {
                    if !self.cup[i][j][k].is_zero() && deg(k) != deg(i) + deg(j) {
                        return Err(Error::validation(
                            "cup-degree",
                            format!(
                                "{}*{} has a component along `{}`",
                                self.basis[i].name, self.basis[j].name, self.basis[k].name
                            ),
                        ));
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let left = self.cup_vec(&self.cup[i][j], &unit_vec(n, k));
                    let right = self.cup_vec(&unit_vec(n, i), &self.cup[j][k]);
                    if left != right {
                        return Err(Error::validation(
                            "cup-associative",
                            format!(
                                "({a}*{b})*{c} != {a}*({b}*{c})",
                                a = self.basis[i].name,
                                b = self.basis[j].name,
                                c = self.basis[k].name
                            ),
                        ));
                    }
                    if self.triple(i, j, k) != self.triple(j, k, i) {
                        return Err(Error::validation(
                            "frobenius-symmetry",
                            format!(
                                "({}*{}, {}) is not symmetric",
                                self.basis[i].name, self.basis[j].name, self.basis[k].name
                            ),
                        ));
                    }
                }
            }
        }
        if self.c1.len() != n {
            return Err(Error::validation("c1-shape", format!("c1 must have {n} entries")));
        }
        if (0..n).any(|i| !self.c1[i].is_zero() && deg(i) != 2) {
            return Err(Error::validation("c1-degree", "c1 has components outside degree 2"));
        }
        let h2_count = (0..n).filter(|&i| deg(i) == 2).count();
        let lat = &self.lattice;
        if lat.degree_pairing.len() != h2_count
            || lat.degree_pairing.iter().any(|r| r.len() != lat.rank)
        {
            return Err(Error::validation(
                "degree-pairing-shape",
                format!("degree_pairing must be {h2_count}x{}", lat.rank),
            ));
        }
        if lat.effective_classes.iter().any(|c| c.len() != lat.rank)
            || lat.effective_names.len() != lat.effective_classes.len()
        {
            return Err(Error::validation("effective-shape", "effective classes must have rank entries"));
        }
        let gens = lat.effective_classes.len();
        for s in &self.seeds {
            if s.degree.len() != gens || s.insertions.iter().any(|&i| i >= n) {
                return Err(Error::validation("seed-shape", "seed degree or insertion out of range"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.basis[i].degree
    }

    pub fn dim_complex(&self) -> u32 {
        self.dim / 2
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.basis.iter().position(|b| b.name == name)
    }

    pub fn num_generators(&self) -> usize {
        self.lattice.effective_classes.len()
    }

    pub fn is_divisor(&self, i: usize) -> bool {
        self.basis[i].degree == 2
    }

    pub fn divisor_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_divisor(i)).collect()
    }

    /// `phi_i . d` for a divisor basis class and a class in generator coordinates.
    pub fn divisor_dot(&self, i: usize, d: &[u32]) -> Rational {
        self.divisor_dot[i].iter().zip(d).map(|(a, &b)| a * rat(b as i64)).sum()
    }

    pub fn class_dot(&self, v: &[Rational], d: &[u32]) -> Rational {
        v.iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| c * self.divisor_dot(i, d))
            .sum()
    }

    pub fn c1_dot(&self, d: &[u32]) -> Rational {
        self.c1_dot.iter().zip(d).map(|(a, &b)| a * rat(b as i64)).sum()
    }

    /// `c_1 . e_g` for each effective generator, as an integer.
    pub fn c1_dot_generators(&self) -> Vec<i64> {
        self.c1_dot.iter().map(|c| c.to_integer().to_i64().unwrap_or(0)).collect()
    }

    pub fn cup_vec(&self, a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        let n = self.len();
        let mut out = vec![Rational::zero(); n];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                let xy = x * y;
                for (k, c) in self.cup[i][j].iter().enumerate() {
                    if !c.is_zero() {
                        out[k] += &xy * c;
                    }
                }
            }
        }
        out
    }

    pub fn integral(&self, v: &[Rational]) -> Rational {
        v.iter().enumerate().map(|(i, c)| c * self.pairing.get(i, 0)).sum()
    }

    pub fn pair(&self, a: &[Rational], b: &[Rational]) -> Rational {
        let mut s = Rational::zero();
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if !y.is_zero() {
                    s += x * y * self.pairing.get(i, j);
                }
            }
        }
        s
    }

    /// `(phi_i ∪ phi_j, phi_k)`.
    pub fn triple(&self, i: usize, j: usize, k: usize) -> Rational {
        self.cup[i][j].iter().enumerate().map(|(l, c)| c * self.pairing.get(l, k)).sum()
    }

    /// Integral of a product of basis classes.
    pub fn integral_product(&self, classes: &[usize]) -> Rational {
        let n = self.len();
        let mut acc = unit_vec(n, 0);
        for &c in classes {
            acc = self.cup_vec(&acc, &unit_vec(n, c));
        }
        self.integral(&acc)
    }

    /// True when the subalgebra generated by degree-2 classes is everything.
    pub fn generated_by_divisors(&self) -> bool {
        let n = self.len();
        let mut span: Vec<Vec<Rational>> = vec![unit_vec(n, 0)];
        let divs = self.divisor_indices();
        let mut frontier = span.clone();
        for _ in 0..=self.dim {
            let mut next = Vec::new();
            for v in &frontier {
                for &d in &divs {
                    let w = self.cup_vec(v, &unit_vec(n, d));
                    if w.iter().any(|x| !x.is_zero()) {
                        next.push(w);
                    }
                }
            }
            span.extend(next.iter().cloned());
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
        QMatrix::from_rows(span).map(|m| m.rank() == n).unwrap_or(false)
    }

    pub fn class_name(&self, i: usize) -> &str {
        &self.basis[i].name
    }
}

pub fn unit_vec(n: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); n];
    v[i] = Rational::one();
    v
}

// ---------------------------------------------------------------------------
// Config documents

#[derive(Deserialize, Clone, Debug)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Str(String),
}

impl Num {
    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            Num::Int(i) => Ok(rat(*i)),
            Num::Str(s) => parse_rational(s),
        }
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Config(format!("cannot parse `{s}` as a rational number"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct BasisEntry {
    name: String,
    degree: i64,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct EffectiveEntry {
    name: String,
    class: Vec<i64>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct H2Entry {
    rank: usize,
    #[serde(default)]
    effective: Vec<EffectiveEntry>,
    #[serde(default)]
    degree_pairing: Vec<Vec<Num>>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct SeedEntry {
    degree: Vec<u32>,
    insertions: Vec<String>,
    value: Num,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct MirrorEntry {
    n: u32,
    k: u32,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct BlowupEntry {
    base: String,
    center: String,
    r: u32,
    normal_chern: Vec<Vec<Num>>,
    restriction: Vec<Vec<Num>>,
    #[serde(default)]
    pushforward: Vec<Vec<i64>>,
    effective: Vec<EffectiveEntry>,
    #[serde(default)]
    exceptional_divisor: Option<String>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct TargetDoc {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    basis: Vec<BasisEntry>,
    #[serde(default)]
    pairing: Vec<Vec<Num>>,
    #[serde(default)]
    cup: BTreeMap<String, BTreeMap<String, Num>>,
    #[serde(default)]
    c1: Vec<Num>,
    #[serde(default)]
    h2: Option<H2Entry>,
    #[serde(default)]
    gw_seeds: Vec<SeedEntry>,
    #[serde(default)]
    mirror: Option<MirrorEntry>,
    #[serde(default)]
    blowup: Option<BlowupEntry>,
}

/// Loads a target description file. Paths inside blow-up documents are
/// resolved relative to the file's directory.
pub fn load_target(path: &Path) -> Result<CohomologyModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("target");
    load_target_str(&text, &dir, stem)
}

pub fn load_target_str(text: &str, dir: &Path, default_name: &str) -> Result<CohomologyModel> {
    let doc: TargetDoc =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed target document: {e}")))?;
    let _ = &doc.description;
    let name = doc.name.clone().unwrap_or_else(|| default_name.to_string());
    if let Some(b) = &doc.blowup {
        let base = load_target(&dir.join(&b.base))?;
        let center = load_target(&dir.join(&b.center))?;
        let input = BlowupInput {
            name: name.clone(),
            base,
            center,
            r: b.r,
            normal_chern: parse_matrix(&b.normal_chern)?,
            restriction: parse_matrix(&b.restriction)?,
            pushforward: b.pushforward.clone(),
            effective: b.effective.iter().map(|e| (e.name.clone(), e.class.clone())).collect(),
            exceptional_name: b.exceptional_divisor.clone(),
        };
        let model = blowup_model(&input)?;
        let seeds = parse_seeds(&doc.gw_seeds, &model)?;
        let mut model = model;
        model.seeds = seeds;
        model.validate()?;
        return Ok(model);
    }
    let n = doc.basis.len();
    let mut basis = Vec::with_capacity(n);
    for b in &doc.basis {
        if b.degree < 0 {
            return Err(Error::validation("even-degree", format!("class `{}` has negative degree", b.name)));
        }
        basis.push(BasisClass { name: b.name.clone(), degree: b.degree as u32 });
    }
    let pairing = QMatrix::from_rows(parse_matrix(&doc.pairing)?)
        .map_err(|_| Error::validation("pairing-shape", "pairing rows have different lengths"))?;
    let index = |s: &str| {
        basis
            .iter()
            .position(|b: &BasisClass| b.name == s.trim())
            .ok_or_else(|| Error::validation("cup-names", format!("unknown class `{s}`")))
    };
    let mut cup = vec![vec![vec![Rational::zero(); n]; n]; n];
    let mut given = vec![vec![false; n]; n];
    for i in 0..n {
        cup[0][i][i] = Rational::one();
        cup[i][0][i] = Rational::one();
    }
    for (key, prod) in &doc.cup {
        let (a, b) = key
            .split_once('*')
            .ok_or_else(|| Error::Config(format!("cup key `{key}` is not of the form a*b")))?;
        let (i, j) = (index(a)?, index(b)?);
        let mut v = vec![Rational::zero(); n];
        for (c, x) in prod {
            v[index(c)?] += x.to_rational()?;
        }
        for (p, q) in [(i, j), (j, i)] {
            if given[p][q] && cup[p][q] != v {
                return Err(Error::validation(
                    "cup-commutative",
                    format!("conflicting entries for {}*{}", basis[p].name, basis[q].name),
                ));
            }
            if (p == 0 || q == 0) && cup[p][q] != v {
                return Err(Error::validation("unit", format!("entry `{key}` contradicts the unit")));
            }
            given[p][q] = true;
            cup[p][q] = v.clone();
        }
    }
    let c1 = doc.c1.iter().map(Num::to_rational).collect::<Result<Vec<_>>>()?;
    let h2 = doc.h2.as_ref().ok_or_else(|| Error::Config("missing `h2` section".into()))?;
    let lattice = CurveLattice {
        rank: h2.rank,
        effective_names: h2.effective.iter().map(|e| e.name.clone()).collect(),
        effective_classes: h2.effective.iter().map(|e| e.class.clone()).collect(),
        degree_pairing: parse_matrix(&h2.degree_pairing)?,
    };
    let mirror = doc.mirror.as_ref().map(|m| (m.n, m.k));
    let mut model = CohomologyModel::new(&name, basis, pairing, cup, c1, lattice, Vec::new(), mirror)?;
    model.seeds = parse_seeds(&doc.gw_seeds, &model)?;
    model.validate()?;
    Ok(model)
}

fn parse_matrix(rows: &[Vec<Num>]) -> Result<Vec<Vec<Rational>>> {
    rows.iter().map(|r| r.iter().map(Num::to_rational).collect()).collect()
}

fn parse_seeds(entries: &[SeedEntry], model: &CohomologyModel) -> Result<Vec<Seed>> {
    entries
        .iter()
        .map(|s| {
            let insertions = s
                .insertions
                .iter()
                .map(|name| {
                    model
                        .index_of(name)
                        .ok_or_else(|| Error::validation("seed-shape", format!("unknown class `{name}` in seed")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Seed { degree: s.degree.clone(), insertions, value: s.value.to_rational()? })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Blow-ups

#[derive(Clone, Debug)]
pub struct BlowupInput {
    pub name: String,
    pub base: CohomologyModel,
    pub center: CohomologyModel,
    /// Half the real codimension of the center.
    pub r: u32,
    /// `c_1(N), ..., c_r(N)` in the center's basis.
    pub normal_chern: Vec<Vec<Rational>>,
    /// Restriction `iota^*` of each base class, in the center's basis.
    pub restriction: Vec<Vec<Rational>>,
    /// `iota_*` on H_2: one row per center H_2 basis vector, in base H_2 coordinates.
    pub pushforward: Vec<Vec<i64>>,
    /// Effective generators of the blow-up in coordinates (base H_2 basis, fiber line).
    pub effective: Vec<(String, Vec<i64>)>,
    pub exceptional_name: Option<String>,
}

/// Classes on the exceptional divisor: `coeffs[k]` is the center class
/// multiplying `p^k`, for `k < r`.
type DClass = Vec<Vec<Rational>>;

struct BlowupCtx<'a> {
    x: &'a CohomologyModel,
    z: &'a CohomologyModel,
    r: usize,
    chern: Vec<Vec<Rational>>,
    restriction: &'a [Vec<Rational>],
    /// Basis layout: index of A_alpha and of B_{k,beta}.
    a_index: Vec<usize>,
    b_index: Vec<Vec<usize>>,
    n: usize,
}

impl BlowupCtx<'_> {
    fn zero_d(&self) -> DClass {
        vec![vec![Rational::zero(); self.z.len()]; self.r]
    }

    fn restrict_to_center(&self, alpha: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.z.len()];
        for (i, c) in alpha.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (j, v) in self.restriction[i].iter().enumerate() {
                out[j] += c * v;
            }
        }
        out
    }

    /// `iota_* x` via duality: `(iota_* x, y)_X = \int_Z x ∪ iota^* y`.
    fn push_center(&self, x: &[Rational]) -> Vec<Rational> {
        let nx = self.x.len();
        let functional: Vec<Rational> = (0..nx)
            .map(|j| self.z.integral(&self.z.cup_vec(x, &self.restriction[j])))
            .collect();
        self.x.pairing_inv.mul_vec(&functional)
    }

    /// Product in H^*(D) = H^*(Z)[p] / (p^r + c_1 p^{r-1} + ... + c_r).
    fn d_mul(&self, a: &DClass, b: &DClass) -> DClass {
        let r = self.r;
        let mut wide = vec![vec![Rational::zero(); self.z.len()]; 2 * r];
        for i in 0..r {
            for j in 0..r {
                if a[i].iter().all(Zero::is_zero) || b[j].iter().all(Zero::is_zero) {
                    continue;
                }
                let prod = self.z.cup_vec(&a[i], &b[j]);
                for (k, v) in prod.into_iter().enumerate() {
                    wide[i + j][k] += v;
                }
            }
        }
        for top in (r..2 * r).rev() {
            let x = std::mem::replace(&mut wide[top], vec![Rational::zero(); self.z.len()]);
            if x.iter().all(Zero::is_zero) {
                continue;
            }
            // p^top x = -sum_{i=1}^{r} p^{top-i} c_i x
            for i in 1..=r {
                let cx = self.z.cup_vec(&self.chern[i - 1], &x);
                for (k, v) in cx.into_iter().enumerate() {
                    wide[top - i][k] -= v;
                }
            }
        }
        wide.truncate(r);
        wide
    }

    /// `j^*` of a class of the blow-up.
    fn restrict_to_d(&self, v: &[Rational]) -> DClass {
        let mut out = self.zero_d();
        for (a, &ia) in self.a_index.iter().enumerate() {
            let c = &v[ia];
            if c.is_zero() {
                continue;
            }
            let res = self.restrict_to_center(&unit_vec(self.x.len(), a));
            for (k, x) in res.into_iter().enumerate() {
                out[0][k] += c * x;
            }
        }
        let mut shifted = self.zero_d();
        for (k, row) in self.b_index.iter().enumerate() {
            for (beta, &ib) in row.iter().enumerate() {
                if !v[ib].is_zero() {
                    shifted[k + 1][beta] -= &v[ib];
                }
            }
        }
        // entries at p^r cannot occur since k + 1 <= r - 1
        for k in 0..self.r {
            for b in 0..self.z.len() {
                let s = shifted[k][b].clone();
                out[k][b] += s;
            }
        }
        out
    }

    /// `j_*` of a class on the exceptional divisor.
    fn push_d(&self, y: &DClass) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.n];
        let r = self.r;
        for k in 0..r - 1 {
            for (beta, c) in y[k].iter().enumerate() {
                if !c.is_zero() {
                    out[self.b_index[k][beta]] += c;
                }
            }
        }
        let x = &y[r - 1];
        if x.iter().any(|c| !c.is_zero()) {
            let pushed = self.push_center(x);
            for (a, c) in pushed.into_iter().enumerate() {
                out[self.a_index[a]] += c;
            }
            for i in 1..r {
                let cx = self.z.cup_vec(&self.chern[i - 1], x);
                for (beta, c) in cx.into_iter().enumerate() {
                    if !c.is_zero() {
                        out[self.b_index[r - 1 - i][beta]] -= c;
                    }
                }
            }
        }
        out
    }

    fn as_d(&self, v: &[Rational]) -> DClass {
        let mut y = self.zero_d();
        for (k, row) in self.b_index.iter().enumerate() {
            for (beta, &ib) in row.iter().enumerate() {
                y[k][beta] = v[ib].clone();
            }
        }
        y
    }

    fn cup(&self, u: &[Rational], v: &[Rational]) -> Vec<Rational> {
        // split u = A-part + j_* y_u
        let mut out = vec![Rational::zero(); self.n];
        let ua: Vec<Rational> = self.a_index.iter().map(|&i| u[i].clone()).collect();
        let va: Vec<Rational> = self.a_index.iter().map(|&i| v[i].clone()).collect();
        let aa = self.x.cup_vec(&ua, &va);
        for (a, c) in aa.into_iter().enumerate() {
            out[self.a_index[a]] += c;
        }
        let yu = self.as_d(u);
        let yv = self.as_d(v);
        // A_u ∪ j_* y_v + j_* y_u ∪ (A_v + j_* y_v)
        let mut a_only_u = vec![Rational::zero(); self.n];
        for &i in &self.a_index {
            a_only_u[i] = u[i].clone();
        }
        let t1 = self.d_mul(&self.restrict_to_d(&a_only_u), &yv);
        let t2 = self.d_mul(&yu, &self.restrict_to_d(v));
        let mut sum = t1;
        for k in 0..self.r {
            for b in 0..self.z.len() {
                let s = t2[k][b].clone();
                sum[k][b] += s;
            }
        }
        for (i, c) in self.push_d(&sum).into_iter().enumerate() {
            out[i] += c;
        }
        out
    }
}

/// Builds the cohomology model of the blow-up of `base` along `center`.
pub fn blowup_model(input: &BlowupInput) -> Result<CohomologyModel> {
    let x = &input.base;
    let z = &input.center;
    if z.is_empty() {
        return Err(Error::validation("center-nonempty", "center has an empty basis"));
    }
    if input.r < 2 {
        return Err(Error::validation("codimension", format!("r = {} but a blow-up needs r >= 2", input.r)));
    }
    let r = input.r as usize;
    if x.dim < z.dim || x.dim - z.dim != 2 * input.r {
        return Err(Error::validation(
            "codimension",
            format!("dim X - dim Z = {} but 2r = {}", x.dim as i64 - z.dim as i64, 2 * r),
        ));
    }
    if input.normal_chern.len() != r || input.normal_chern.iter().any(|c| c.len() != z.len()) {
        return Err(Error::validation("normal-chern", format!("expected {r} Chern classes in the center basis")));
    }
    for (i, c) in input.normal_chern.iter().enumerate() {
        if c.iter().enumerate().any(|(j, v)| !v.is_zero() && z.degree(j) != 2 * (i as u32 + 1)) {
            return Err(Error::validation("normal-chern", format!("c_{} has components of the wrong degree", i + 1)));
        }
    }
    if input.restriction.len() != x.len() || input.restriction.iter().any(|c| c.len() != z.len()) {
        return Err(Error::validation("restriction", "restriction must map every base class to the center basis"));
    }
    for (i, row) in input.restriction.iter().enumerate() {
        if row.iter().enumerate().any(|(j, v)| !v.is_zero() && z.degree(j) != x.degree(i)) {
            return Err(Error::validation("restriction", format!("restriction of `{}` changes degree", x.class_name(i))));
        }
    }
    if input.restriction[0] != unit_vec(z.len(), 0) {
        return Err(Error::validation("restriction", "restriction of the unit is not the unit"));
    }
    for i in 0..x.len() {
        for j in 0..x.len() {
            let lhs: Vec<Rational> = {
                let prod = &x.cup[i][j];
                let mut out = vec![Rational::zero(); z.len()];
                for (k, c) in prod.iter().enumerate() {
                    for (m, v) in input.restriction[k].iter().enumerate() {
                        out[m] += c * v;
                    }
                }
                out
            };
            if lhs != z.cup_vec(&input.restriction[i], &input.restriction[j]) {
                return Err(Error::validation("restriction", "restriction is not multiplicative"));
            }
        }
    }

    // basis layout: A classes, then B_{k,beta}; sorted by degree afterwards
    let mut raw: Vec<BasisClass> = x.basis.clone();
    let mut a_index: Vec<usize> = (0..x.len()).collect();
    let mut b_index = vec![vec![0; z.len()]; r - 1];
    for (k, row) in b_index.iter_mut().enumerate() {
        for (beta, slot) in row.iter_mut().enumerate() {
            let name = if k == 0 && beta == 0 {
                input.exceptional_name.clone().unwrap_or_else(|| "E".to_string())
            } else {
                format!("e{k}.{}", z.class_name(beta))
            };
            *slot = raw.len();
            raw.push(BasisClass { name, degree: z.degree(beta) + 2 * k as u32 + 2 });
        }
    }
    let n = raw.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| raw[i].degree);
    let mut pos = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        pos[old] = new;
    }
    let basis: Vec<BasisClass> = order.iter().map(|&i| raw[i].clone()).collect();
    for a in a_index.iter_mut() {
        *a = pos[*a];
    }
    for row in b_index.iter_mut() {
        for b in row.iter_mut() {
            *b = pos[*b];
        }
    }
    let ctx = BlowupCtx {
        x,
        z,
        r,
        chern: input.normal_chern.clone(),
        restriction: &input.restriction,
        a_index: a_index.clone(),
        b_index: b_index.clone(),
        n,
    };
    let mut cup = vec![vec![vec![Rational::zero(); n]; n]; n];
    for (i, row) in cup.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = ctx.cup(&unit_vec(n, i), &unit_vec(n, j));
        }
    }
    let top = |v: &[Rational]| -> Rational {
        a_index.iter().enumerate().map(|(a, &i)| &v[i] * x.pairing.get(a, 0)).sum()
    };
    let mut pairing = QMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            pairing.set(i, j, top(&cup[i][j]));
        }
    }
    let mut c1 = vec![Rational::zero(); n];
    for (a, c) in x.c1.iter().enumerate() {
        c1[a_index[a]] = c.clone();
    }
    let exc = b_index[0][0];
    c1[exc] = -rat(r as i64 - 1);

    // curve lattice: base H_2 basis lifted away from D, plus the fiber line
    let rank = x.lattice.rank + 1;
    let mut degree_pairing = Vec::new();
    let mut base_rows = x.lattice.degree_pairing.iter();
    for (i, b) in basis.iter().enumerate() {
        if b.degree != 2 {
            continue;
        }
        if let Some(a) = a_index.iter().position(|&ai| ai == i) {
            let _ = a;
            let row = base_rows.next().ok_or_else(|| {
                Error::validation("degree-pairing-shape", "base degree pairing is too short")
            })?;
            let mut v = row.clone();
            v.push(Rational::zero());
            degree_pairing.push(v);
        } else if i == exc {
            let mut v = vec![Rational::zero(); rank];
            v[rank - 1] = -Rational::one();
            degree_pairing.push(v);
        } else {
            degree_pairing.push(vec![Rational::zero(); rank]);
        }
    }
    // base rows are listed in base-basis order; the A classes keep that order
    let lattice = CurveLattice {
        rank,
        effective_names: input.effective.iter().map(|e| e.0.clone()).collect(),
        effective_classes: input.effective.iter().map(|e| e.1.clone()).collect(),
        degree_pairing,
    };
    let mut model = CohomologyModel::new(&input.name, basis, pairing, cup, c1, lattice, Vec::new(), None)?;
    if model.len() != x.len() + (r - 1) * z.len() {
        return Err(Error::Structure("blow-up rank identity failed".into()));
    }

    // extension data for the Novikov map
    let solve_base = |v: &[i64]| -> Result<Vec<i64>> { express_in_generators(x, v) };
    let mut push_to_base = Vec::new();
    let mut exceptional_dot = Vec::new();
    for (name, class) in &input.effective {
        if class.len() != rank {
            return Err(Error::validation("effective-shape", format!("generator `{name}` needs {rank} entries")));
        }
        push_to_base.push(solve_base(&class[..rank - 1])?);
        exceptional_dot.push(-class[rank - 1]);
    }
    let mut center_push = Vec::new();
    let mut normal_dot = Vec::new();
    for (g, class) in z.lattice.effective_classes.iter().enumerate() {
        let mut img = vec![0i64; x.lattice.rank];
        for (c, &m) in class.iter().enumerate() {
            let row = input.pushforward.get(c).ok_or_else(|| {
                Error::validation("pushforward", "pushforward must have one row per center H_2 basis vector")
            })?;
            for (t, &v) in row.iter().enumerate() {
                img[t] += m * v;
            }
        }
        center_push.push(solve_base(&img)?);
        let d: Vec<u32> = (0..z.num_generators()).map(|h| (h == g) as u32).collect();
        let dot = z.class_dot(&input.normal_chern[0], &d);
        normal_dot.push(dot.to_integer().to_i64().unwrap_or(0));
    }
    model.blowup = Some(BlowupData {
        base: Arc::new(x.clone()),
        center: Arc::new(z.clone()),
        r: input.r,
        push_to_base,
        exceptional_dot,
        center_push,
        normal_dot,
        exceptional_index: exc,
    });
    Ok(model)
}

/// Coordinates of an H_2 class in terms of the effective generators.
fn express_in_generators(m: &CohomologyModel, v: &[i64]) -> Result<Vec<i64>> {
    let gens = &m.lattice.effective_classes;
    if v.iter().all(|&x| x == 0) {
        return Ok(vec![0; gens.len()]);
    }
    let a = QMatrix::from_rows(
        (0..m.lattice.rank).map(|row| gens.iter().map(|g| rat(g[row])).collect()).collect(),
    )?;
    let sol = a
        .solve(&v.iter().map(|&x| rat(x)).collect::<Vec<_>>())
        .ok_or_else(|| Error::validation("effective-span", "class is not in the span of the effective generators"))?;
    sol.iter()
        .map(|c| {
            if c.is_integer() && !c.is_negative() {
                Ok(c.to_integer().to_i64().unwrap_or(0))
            } else {
                Err(Error::validation("effective-span", "class is not a non-negative combination of generators"))
            }
        })
        .collect()
}

/// Cohomology of complex projective space P^n with hyperplane class `H`.
/// `P^n` with its single two-point seed: one line through two points.
pub fn projective_space(n: u32) -> CohomologyModel {
    let mut m = hypersurface_model(&format!("P{n}"), n + 1, n, 1, n + 1, "H");
    if n > 0 {
        let pt = n as usize;
        m.seeds = vec![Seed { degree: vec![1], insertions: vec![pt, pt], value: Rational::one() }];
    }
    m
}

/// Ambient part of the cohomology of a hypersurface: basis `1, h, ..., h^{m-1}`
/// of a variety of complex dimension `m - 1`, `\int h^{m-1} = top`, `c_1 = c1 h`.
pub fn hypersurface_model(name: &str, m: u32, dim_c: u32, top: i64, c1: u32, h: &str) -> CohomologyModel {
    let n = m as usize;
    let basis: Vec<BasisClass> = (0..m)
        .map(|l| BasisClass {
            name: match l {
                0 => "1".to_string(),
                1 => h.to_string(),
                _ => format!("{h}^{l}"),
            },
            degree: 2 * l,
        })
        .collect();
    let mut pairing = QMatrix::zeros(n, n);
    for a in 0..n {
        pairing.set(a, n - 1 - a, rat(top));
    }
    let mut cup = vec![vec![vec![Rational::zero(); n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a + b < n {
                cup[a][b][a + b] = Rational::one();
            }
        }
    }
    let mut c1v = vec![Rational::zero(); n];
    if n > 1 {
        c1v[1] = rat(c1 as i64);
    }
    let _ = dim_c;
    let lattice = CurveLattice {
        rank: 1,
        effective_names: vec!["L".into()],
        effective_classes: vec![vec![1]],
        degree_pairing: if n > 1 { vec![vec![Rational::one()]] } else { Vec::new() },
    };
    CohomologyModel::new(name, basis, pairing, cup, c1v, lattice, Vec::new(), None)
        .expect("hypersurface model is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    const P3: &str = r#"{
        "name": "p3",
        "basis": [{"name":"1","degree":0},{"name":"P","degree":2},{"name":"P2","degree":4},{"name":"P3","degree":6}],
        "pairing": [[0,0,0,1],[0,0,1,0],[0,1,0,0],[1,0,0,0]],
        "cup": {"P*P":{"P2":1},"P*P2":{"P3":1}},
        "c1": [0,4,0,0],
        "h2": {"rank":1,"effective":[{"name":"L","class":[1]}],"degree_pairing":[[1]]},
        "gw_seeds": [{"degree":[1],"insertions":["P3","P3"],"value":1}]
    }"#;

    fn load(s: &str) -> Result<CohomologyModel> {
        load_target_str(s, Path::new("."), "test")
    }

    #[test]
    fn loads_p3() {
        let m = load(P3).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(m.dim, 6);
        assert_eq!(m.c1_dot(&[1]), rat(4));
        assert_eq!(m.integral_product(&[1, 1, 1]), rat(1));
        assert!(m.generated_by_divisors());
        assert_eq!(m.seeds.len(), 1);
    }

    #[test]
    fn loads_quartic() {
        let q = P3.replace("[[0,0,0,1],[0,0,1,0],[0,1,0,0],[1,0,0,0]]", "[[0,0,0,4],[0,0,4,0],[0,4,0,0],[4,0,0,0]]")
            .replace("\"c1\": [0,4,0,0]", "\"c1\": [0,1,0,0]");
        let m = load(&q).unwrap();
        assert_eq!(m.integral_product(&[1, 1, 1]), rat(4));
        assert_eq!(m.c1_dot(&[1]), rat(1));
    }

    #[test]
    fn rejects_invariant_violations() {
        let asym = P3.replace("[[0,0,0,1],[0,0,1,0]", "[[0,0,0,1],[0,0,2,0]");
        assert!(matches!(load(&asym), Err(Error::Validation { invariant, .. }) if invariant == "pairing-symmetric"));
        let odd = P3.replace("{\"name\":\"P\",\"degree\":2}", "{\"name\":\"P\",\"degree\":3}");
        assert!(matches!(load(&odd), Err(Error::Validation { invariant, .. }) if invariant == "even-degree"));
        let nonassoc = P3.replace("\"P*P2\":{\"P3\":1}", "\"P*P2\":{\"P3\":2}");
        assert!(matches!(load(&nonassoc), Err(Error::Validation { .. })));
        let degenerate = P3.replace("[1,0,0,0]]", "[0,0,0,0]]").replace("[[0,0,0,1]", "[[0,0,0,0]");
        assert!(matches!(load(&degenerate), Err(Error::Validation { .. })));
        assert!(matches!(load("{not json"), Err(Error::Config(_))));
    }

    fn point() -> CohomologyModel {
        CohomologyModel::new(
            "pt",
            vec![BasisClass { name: "1".into(), degree: 0 }],
            QMatrix::identity(1),
            vec![vec![vec![rat(1)]]],
            vec![rat(0)],
            CurveLattice { rank: 0, effective_names: vec![], effective_classes: vec![], degree_pairing: vec![] },
            vec![],
            None,
        )
        .unwrap()
    }

    fn blpt_input() -> BlowupInput {
        BlowupInput {
            name: "blpt".into(),
            base: projective_space(2),
            center: point(),
            r: 2,
            normal_chern: vec![vec![rat(0)], vec![rat(0)]],
            restriction: vec![vec![rat(1)], vec![rat(0)], vec![rat(0)]],
            pushforward: vec![],
            effective: vec![("e".into(), vec![0, 1]), ("f".into(), vec![1, -1])],
            exceptional_name: None,
        }
    }

    #[test]
    fn blowup_of_plane_at_point() {
        let m = blowup_model(&blpt_input()).unwrap();
        let names: Vec<&str> = m.basis.iter().map(|b| b.name.as_str()).collect();
        assert_eq!(names, vec!["1", "H", "E", "H^2"]);
        let e = m.index_of("E").unwrap();
        let h = m.index_of("H").unwrap();
        assert_eq!(m.integral_product(&[e, e]), rat(-1));
        assert_eq!(m.integral_product(&[h, h]), rat(1));
        assert_eq!(m.integral_product(&[h, e]), rat(0));
        assert_eq!(m.lattice.rank, 2);
        // c1 = 3H - E pairs to 1 with e and 2 with f
        assert_eq!(m.c1_dot(&[1, 0]), rat(1));
        assert_eq!(m.c1_dot(&[0, 1]), rat(2));
        let bd = m.blowup.as_ref().unwrap();
        assert_eq!(bd.push_to_base, vec![vec![0], vec![1]]);
        assert_eq!(bd.exceptional_dot, vec![-1, 1]);
    }

    #[test]
    fn blowup_of_p3_at_point_rank_and_products() {
        let mut input = blpt_input();
        input.base = projective_space(3);
        input.r = 3;
        input.normal_chern = vec![vec![rat(0)]; 3];
        input.restriction = vec![vec![rat(1)], vec![rat(0)], vec![rat(0)], vec![rat(0)]];
        let m = blowup_model(&input).unwrap();
        assert_eq!(m.len(), 4 + 2);
        let e = m.index_of("E").unwrap();
        assert_eq!(m.integral_product(&[e, e, e]), rat(1));
        assert_eq!(m.c1.iter().filter(|c| !c.is_zero()).count(), 2);
    }

    #[test]
    fn blowup_of_p3_along_line() {
        // Z = P^1 with normal bundle O(1)+O(1): c1(N) = 2pt
        let line = projective_space(1);
        let mut input = blpt_input();
        input.base = projective_space(3);
        input.center = line;
        input.r = 2;
        input.normal_chern = vec![vec![rat(0), rat(2)], vec![rat(0), rat(0)]];
        input.restriction = vec![
            vec![rat(1), rat(0)],
            vec![rat(0), rat(1)],
            vec![rat(0), rat(0)],
            vec![rat(0), rat(0)],
        ];
        input.pushforward = vec![vec![1]];
        input.effective = vec![("e".into(), vec![0, 1]), ("f".into(), vec![1, -1])];
        let m = blowup_model(&input).unwrap();
        assert_eq!(m.len(), 4 + 2);
        let e = m.index_of("E").unwrap();
        let h = m.index_of("H").unwrap();
        // E^3 = -deg N + ... : for the blow-up of P^3 along a line, E^3 = -2, H E^2 = -1
        assert_eq!(m.integral_product(&[e, e, e]), rat(-2));
        assert_eq!(m.integral_product(&[h, e, e]), rat(-1));
        assert_eq!(m.integral_product(&[h, h, e]), rat(0));
    }

    #[test]
    fn blowup_rejections() {
        let mut input = blpt_input();
        input.r = 1;
        assert!(blowup_model(&input).is_err());
        let mut input = blpt_input();
        input.center.basis.clear();
        assert!(matches!(blowup_model(&input), Err(Error::Validation { .. })));
        let mut input = blpt_input();
        input.normal_chern = vec![vec![rat(0)]];
        assert!(blowup_model(&input).is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("-3/6").unwrap(), crate::ratio(-1, 2));
        assert!(parse_rational("1/0").is_err());
    }
}
