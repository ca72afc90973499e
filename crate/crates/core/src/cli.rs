//! Command-line front end.
//!
//! Exit status: 0 when every check passes, 1 when a mathematical check
//! fails, 2 for configuration or seed-data problems.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::frobenius::{full_q_order, FundamentalSolution, QuantumProduct};
use crate::gw::GwStore;
use crate::identities::{check_derivation_suite, check_eigen_ode, check_power_commutators, DEFAULT_KMAX};
use crate::linalg::SeriesMatrix;
use crate::mirror::HypersurfaceMirror;
use crate::qrr::{bernoulli_table, qrr_operator, verify_specialization, EulerMode, TwistData, DEFAULT_Z_WINDOW};
use crate::report::Report;
use crate::series::format_rational;
use crate::spectrum::{
    char_poly, decomposition_check, hensel_factor, irrationality_obstruction, minimal_polynomial, SpectrumProfile,
};
use crate::targets::{load_target, CohomologyModel};

/// Environment variable naming the directory of target descriptions.
pub const SEEDS_ENV: &str = "QCOH_SEEDS";

#[derive(Parser, Debug, Clone)]
#[command(name = "qcoh", version, about = "Exact genus-zero quantum cohomology checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Characteristic polynomial and eigenvalue profile of the Euler field.
    Spectrum,
    /// Reconstruct Gromov–Witten invariants and list the essential ones.
    Reconstruct,
    /// Small quantum product of a hypersurface from its mirror.
    Mirror,
    /// F-manifold identities and the eigenvalue ODE on the big product.
    Identities,
    /// Spectral decomposition of a blow-up against its base and center.
    Decompose,
    /// Quantum Riemann–Roch operator symbol and Euler specializations.
    Qrr,
    /// Every applicable check.
    VerifyAll,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Reconstruct => "reconstruct",
            Command::Mirror => "mirror",
            Command::Identities => "identities",
            Command::Decompose => "decompose",
            Command::Qrr => "qrr",
            Command::VerifyAll => "verify-all",
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct Options {
    /// Target description: a path, or a name looked up in the seed directory.
    #[arg(long = "target", global = true)]
    pub targets: Vec<String>,
    /// Novikov truncation order.
    #[arg(long, global = true)]
    pub q_order: Option<u32>,
    /// Truncation order in the bulk coordinates.
    #[arg(long, global = true)]
    pub tau_order: Option<u32>,
    /// Largest Euler power used by the identity checks.
    #[arg(long, global = true)]
    pub kmax: Option<u32>,
    /// Largest z exponent kept by the QRR operator.
    #[arg(long, global = true)]
    pub z_depth: Option<u32>,
    /// Directory for report files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Directory holding target descriptions.
    #[arg(long, global = true)]
    pub seeds: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command, writes the
/// human reports to `stdout` and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match execute(&cli) {
        Ok(reports) => {
            let mut ok = true;
            for r in &reports {
                let _ = write!(stdout, "{}", r.human());
                if let Some(dir) = &cli.opts.out {
                    if let Err(e) = r.write(dir) {
                        let _ = writeln!(stderr, "error: {e}");
                        return 2;
                    }
                }
                ok &= r.passed();
            }
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

pub fn main_with_args() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn seeds_dir(opts: &Options) -> PathBuf {
    if let Some(d) = &opts.seeds {
        return d.clone();
    }
    if let Some(d) = std::env::var_os(SEEDS_ENV) {
        return PathBuf::from(d);
    }
    let local = PathBuf::from("targets");
    if local.is_dir() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../targets")
}

/// A path if it names an existing file, otherwise `<seeds>/<name>.json`.
pub fn resolve_target(spec: &str, opts: &Options) -> Result<PathBuf> {
    let p = PathBuf::from(spec);
    if p.is_file() {
        return Ok(p);
    }
    let dir = seeds_dir(opts);
    let candidate = dir.join(format!("{spec}.json"));
    if candidate.is_file() {
        return Ok(candidate);
    }
    Err(Error::Config(format!("target `{spec}` not found (looked for {} and {})", p.display(), candidate.display())))
}

fn all_targets(opts: &Options) -> Result<Vec<String>> {
    let dir = seeds_dir(opts);
    let entries = std::fs::read_dir(&dir).map_err(|e| Error::Config(format!("cannot list {}: {e}", dir.display())))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter_map(|p| p.file_stem().and_then(|s| s.to_str()).map(String::from))
        .collect();
    names.sort();
    Ok(names)
}

pub fn execute(cli: &Cli) -> Result<Vec<Report>> {
    let opts = &cli.opts;
    let names = if opts.targets.is_empty() {
        if cli.command == Command::VerifyAll {
            all_targets(opts)?
        } else {
            return Err(Error::Config("no --target given".into()));
        }
    } else {
        opts.targets.clone()
    };
    let mut out = Vec::new();
    for name in &names {
        let path = resolve_target(name, opts)?;
        let model = Arc::new(load_target(&path)?);
        let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or(name).to_string();
        let mut report = Report::new(cli.command.name(), &label);
        match cli.command {
            Command::Spectrum => spectrum(&model, opts, &mut report)?,
            Command::Reconstruct => reconstruct(&model, opts, &mut report)?,
            Command::Mirror => mirror(&model, opts, &mut report)?,
            Command::Identities => identities(&model, opts, &mut report)?,
            Command::Decompose => decompose(&model, &mut report)?,
            Command::Qrr => qrr(&model, opts, &mut report)?,
            Command::VerifyAll => verify_all(&model, opts, &mut report)?,
        }
        out.push(report);
    }
    Ok(out)
}

fn q_order_for(model: &CohomologyModel, opts: &Options, tau: u32) -> Result<u32> {
    match opts.q_order {
        Some(q) => Ok(q),
        None => full_q_order(model, tau).map_err(|e| match e {
            Error::Unsupported(m) => Error::Config(m),
            other => other,
        }),
    }
}

fn product(model: &Arc<CohomologyModel>, opts: &Options, default_tau: u32) -> Result<QuantumProduct> {
    let tau = opts.tau_order.unwrap_or(default_tau);
    let q = q_order_for(model, opts, tau)?;
    let store = Arc::new(GwStore::new(model.clone())?);
    QuantumProduct::new(store, q, tau)
}

fn valuation_var(qp: &QuantumProduct) -> Option<usize> {
    (qp.num_q_vars() == 1).then_some(0)
}

fn profile_text(p: &SpectrumProfile) -> String {
    p.to_string()
}

fn add_profile(model: &CohomologyModel, qp: &QuantumProduct, report: &mut Report) -> Result<Option<SpectrumProfile>> {
    let m = qp.euler_matrix();
    let cp = match char_poly(&m) {
        Ok(cp) => {
            report.check("cayley-hamilton", true, "");
            cp
        }
        Err(e @ Error::Validation { .. }) => {
            report.check("cayley-hamilton", false, e.to_string());
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    report.field("char_poly", cp.render("lambda"));
    if qp.tau_order() == 0 {
        report.field("minimal_poly", minimal_polynomial(&m)?.render("lambda"));
    }
    match hensel_factor(&cp, valuation_var(qp), 2) {
        Ok(profile) => {
            report.check("hensel-remultiplication", true, "");
            report.field("multiplicities", format!("{:?}", profile.multiplicities()));
            report.text(profile_text(&profile));
            for f in &profile.factors {
                report.field("factor", format!("({})^{}", f.poly.render("lambda"), f.multiplicity));
            }
            if model.dim == 6 && profile.is_certified() {
                report.field("verdict", irrationality_obstruction(&profile, 6)?);
            } else {
                report.field("verdict", "n/a");
            }
            Ok(Some(profile))
        }
        Err(e @ Error::Validation { .. }) => {
            report.check("hensel-remultiplication", false, e.to_string());
            Ok(None)
        }
        Err(e) if e.is_config() => Err(e),
        Err(e) => {
            report.field("profile", format!("not available: {e}"));
            Ok(None)
        }
    }
}

fn spectrum(model: &Arc<CohomologyModel>, opts: &Options, report: &mut Report) -> Result<()> {
    let qp = product(model, opts, 0)?;
    report.field("q_order", qp.q_order());
    report.field("tau_order", qp.tau_order());
    report.heading("Spectrum");
    add_profile(model, &qp, report)?;
    Ok(())
}

/// Multisets of classes of real degree at least 4 whose codimensions
/// `deg/2 - 1` add up to `target`, with at most `max_len` entries.
fn essential_insertions(model: &CohomologyModel, target: i64, max_len: usize) -> Vec<Vec<usize>> {
    let classes: Vec<usize> = (0..model.len()).filter(|&i| model.degree(i) >= 4).collect();
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn go(
        model: &CohomologyModel,
        classes: &[usize],
        start: usize,
        left: i64,
        max_len: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        if cur.len() == max_len {
            return;
        }
        for (pos, &c) in classes.iter().enumerate().skip(start) {
            let w = model.degree(c) as i64 / 2 - 1;
            if w <= left {
                cur.push(c);
                go(model, classes, pos, left - w, max_len, cur, out);
                cur.pop();
            }
        }
    }
    if target >= 0 {
        go(model, &classes, 0, target, max_len, &mut cur, &mut out);
    }
    out
}

const MAX_RECONSTRUCT_INSERTIONS: usize = 12;

fn reconstruct(model: &Arc<CohomologyModel>, opts: &Options, report: &mut Report) -> Result<()> {
    let q = q_order_for(model, opts, 0)?;
    let store = GwStore::new(model.clone())?;
    report.field("q_order", q);
    report.heading("Invariants");
    let ngen = model.num_generators();
    let dim = model.dim_complex() as i64;
    let mut degrees: Vec<Vec<u32>> = crate::gw::sub_degrees(&vec![q; ngen])
        .into_iter()
        .filter(|d| d.iter().sum::<u32>() <= q && d.iter().any(|&x| x > 0))
        .collect();
    degrees.sort_by_key(|d| (d.iter().sum::<u32>(), d.clone()));
    for d in &degrees {
        let c1 = model.c1_dot(d);
        if !c1.is_integer() {
            continue;
        }
        let target = dim - 3 + c1.to_integer().try_into().unwrap_or(i64::MAX);
        for classes in essential_insertions(model, target, MAX_RECONSTRUCT_INSERTIONS) {
            let v = store.primary(d, &classes)?;
            if v.is_zero() {
                continue;
            }
            let key = crate::gw::CorrelatorKey::primary(d, &classes);
            report.text(format!("{} = {}", key.render(model), format_rational(&v)));
        }
    }
    report.field("stored_invariants", store.stored_len());
    let validation = store.validate_store(Some((400, 0)))?;
    let detail: Vec<String> = validation.violations.iter().map(|v| v.to_string()).collect();
    report.check("store-consistency", validation.passed(), detail.join("\n"));
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(format!("{}.gw", report.basename()));
        std::fs::write(&path, store.export()).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn mirror(model: &Arc<CohomologyModel>, opts: &Options, report: &mut Report) -> Result<()> {
    let (n, k) = model
        .mirror
        .ok_or_else(|| Error::Config(format!("`{}` has no mirror description", model.name)))?;
    let q = q_order_for(model, opts, 0)?;
    let mirror = HypersurfaceMirror::new(n, k, q)?;
    report.field("ambient", format!("P^{}", n - 1));
    report.field("degree", k);
    report.field("q_order", q);
    report.field("mirror_map", mirror.mirror_map());
    let rows = mirror.p_star_matrix()?;
    let len = rows.len();
    let m = SeriesMatrix::from_fn(mirror.ring(), len, len, |r, c| rows[c][r].clone());
    report.heading("Hyperplane product");
    for (a, row) in rows.iter().enumerate() {
        let terms: Vec<String> =
            row.iter().enumerate().filter(|(_, s)| !s.is_zero()).map(|(c, s)| format!("({s}) P^{c}")).collect();
        report.text(format!("P * P^{a} = {}", terms.join(" + ")));
    }
    let cp = char_poly(&m)?;
    let mp = minimal_polynomial(&m)?;
    report.field("char_poly", cp.render("lambda"));
    report.field("minimal_poly", mp.render("lambda"));
    report.heading("Two-point invariants");
    for (a, b, d, v) in mirror.two_point_invariants()? {
        report.text(format!("<P^{a}, P^{b}>_{d} = {}", format_rational(&v)));
    }
    // the same product from the reconstructed invariants
    let store = Arc::new(GwStore::new(model.clone())?);
    let qp = QuantumProduct::new(store, q, 0)?;
    let idx = (0..model.len()).find(|&i| model.degree(i) == 2).ok_or_else(|| {
        Error::Config(format!("`{}` has no degree-2 class", model.name))
    })?;
    let mut agree = true;
    for (a, row) in rows.iter().enumerate() {
        for (c, s) in row.iter().enumerate() {
            let ours = qp.matrix(idx).get(c, a);
            for d in 0..=q as i32 {
                let mut mono = vec![0; qp.ring().nvars()];
                mono[0] = d;
                agree &= ours.coeff(&mono) == s.coeff(&[d]);
            }
        }
    }
    report.check("mirror-matches-reconstruction", agree, "hyperplane product differs from the WDVV product");
    Ok(())
}

fn identity_checks(model: &CohomologyModel, qp: &QuantumProduct, kmax: u32, report: &mut Report) -> Result<()> {
    let d = check_derivation_suite(qp, kmax)?;
    report.check("derivation-identity", d.passed(), d.to_string());
    let c = check_power_commutators(qp, kmax)?;
    report.check("power-commutators", c.passed(), c.to_string());
    report.heading("Eigenvalue ODE");
    match add_profile(model, qp, report)? {
        Some(profile) if profile.is_certified() => {
            for k in 0..=kmax {
                let r = check_eigen_ode(qp, &profile, k)?;
                report.check(&format!("eigen-ode-k{k}"), r.passed(), r.to_string());
            }
        }
        _ => report.field("eigen_ode", "skipped: no certified profile"),
    }
    Ok(())
}

fn identities(model: &Arc<CohomologyModel>, opts: &Options, report: &mut Report) -> Result<()> {
    let qp = product(model, opts, 1)?;
    if qp.tau_order() == 0 {
        return Err(Error::Config("identities need --tau-order at least 1".into()));
    }
    report.field("q_order", qp.q_order());
    report.field("tau_order", qp.tau_order());
    identity_checks(model, &qp, opts.kmax.unwrap_or(DEFAULT_KMAX), report)
}

fn decompose(model: &Arc<CohomologyModel>, report: &mut Report) -> Result<()> {
    let data = model
        .blowup
        .as_ref()
        .ok_or_else(|| Error::Config(format!("`{}` is not a blow-up", model.name)))?;
    let d = decomposition_check(model)?;
    report.field("base", &data.base.name);
    report.field("center", &data.center.name);
    report.field("r", d.r);
    report.field("ranks", format!("{} = {} + {} * {}", d.blowup_rank, d.base_rank, d.r - 1, d.center_rank));
    report.check("rank-identity", d.blowup_rank == d.base_rank + (d.r as usize - 1) * d.center_rank, "");
    report.field("blowup_char_poly", d.blowup_char_poly.render("lambda"));
    report.field("base_char_poly", d.base_char_poly.render("lambda"));
    report.field("center_char_poly", d.center_char_poly.render("lambda"));
    let vals: Vec<String> = d.valuations.iter().map(format_rational).collect();
    report.field("valuations", vals.join(", "));
    let groups: Vec<String> = d.groups.iter().map(|(n, v)| format!("{n} at {}", format_rational(v))).collect();
    report.field("groups", groups.join("; "));
    report.text(profile_text(&d.profile));
    let mut sizes: Vec<usize> = d.groups.iter().map(|g| g.0).collect();
    let mut expected = vec![d.base_rank];
    expected.extend(std::iter::repeat_n(d.center_rank, d.r as usize - 1));
    sizes.sort();
    expected.sort();
    report.check("valuation-split", sizes == expected, format!("groups {sizes:?}, expected {expected:?}"));
    report.check("base-leading-match", d.base_leading_match, "");
    report.check("center-leading-match", d.center_leading_match.iter().all(|&b| b), format!("{:?}", d.center_leading_match));
    report.check("factor-residual", d.residual_zero, "product of factors differs from the characteristic polynomial");
    Ok(())
}

fn qrr(model: &Arc<CohomologyModel>, opts: &Options, report: &mut Report) -> Result<()> {
    let hi = opts.z_depth.map(|z| z as i32).unwrap_or(DEFAULT_Z_WINDOW.1);
    let s_max = hi.max(0) as usize;
    let s_order = 2;
    let n = model.len();
    let root = match (0..n).find(|&i| model.degree(i) == 2) {
        Some(i) => crate::targets::unit_vec(n, i),
        None => vec![crate::Rational::zero(); n],
    };
    let t = TwistData::from_roots(model.clone(), std::slice::from_ref(&root))?;
    let op = qrr_operator(&t, s_max, s_order, (DEFAULT_Z_WINDOW.0, hi))?;
    report.field("window", format!("[{}, {hi}]", DEFAULT_Z_WINDOW.0));
    report.field("s_vars", format!("s0..s{s_max}"));
    report.field("s_order", s_order);
    let table: Vec<String> = bernoulli_table(12).iter().map(format_rational).collect();
    report.field("bernoulli", table.join(", "));
    report.heading("Operator");
    report.text(op.to_string());
    report.check("identity-at-zero", op.is_identity_at_zero(), "");
    report.check("degree-zero", op.exponent_has_degree_zero(), "");
    report.check("two-path-exp", op.delta() == op.delta_by_factors(), "");
    for (mode, name) in [(EulerMode::Full, "e_lambda"), (EulerMode::Normalized, "e~_lambda")] {
        report.check(&format!("specialization-{name}"), verify_specialization(mode, model, std::slice::from_ref(&root))?, "");
    }
    Ok(())
}

fn verify_all(model: &Arc<CohomologyModel>, opts: &Options, report: &mut Report) -> Result<()> {
    let tau = opts.tau_order.unwrap_or(1);
    let q = q_order_for(model, opts, tau)?;
    report.field("q_order", q);
    report.field("tau_order", tau);
    let store = Arc::new(GwStore::new(model.clone())?);
    let qp = QuantumProduct::new(store.clone(), q, tau)?;
    report.heading("Frobenius axioms");
    for (name, r) in [
        ("unit", qp.check_unit()),
        ("frobenius-symmetry", qp.check_frobenius_symmetry()),
        ("wdvv", qp.check_wdvv()),
        ("grading", qp.check_homogeneity()),
    ] {
        report.check(name, r.is_ok(), r.err().map(|e| e.to_string()).unwrap_or_default());
    }
    let fs = FundamentalSolution::new(&qp)?;
    for (name, r) in [("qde", fs.check_qde()), ("unitarity", fs.check_unitarity())] {
        report.check(name, r.is_ok(), r.err().map(|e| e.to_string()).unwrap_or_default());
    }
    let validation = store.validate_store(Some((400, 0)))?;
    let detail: Vec<String> = validation.violations.iter().map(|v| v.to_string()).collect();
    report.check("store-consistency", validation.passed(), detail.join("\n"));
    report.heading("Identities");
    if tau > 0 {
        identity_checks(model, &qp, opts.kmax.unwrap_or(DEFAULT_KMAX), report)?;
    } else {
        report.heading("Spectrum");
        add_profile(model, &qp, report)?;
    }
    if model.mirror.is_some() {
        report.heading("Mirror");
        mirror(model, &Options { q_order: None, ..opts.clone() }, report)?;
    }
    if model.blowup.is_some() {
        report.heading("Decomposition");
        decompose(model, report)?;
    }
    report.heading("QRR");
    qrr(model, opts, report)?;
    Ok(())
}
