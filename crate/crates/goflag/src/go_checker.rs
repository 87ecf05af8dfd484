//! Geodesic-orbit checks.
//!
//! A vector `X ∈ m_Θ` is geodesic when some `Z ∈ k_Θ` solves
//! `[Z + X, AX] = 0`. Since `A` commutes with the isotropy action, the
//! `k_Θ`-component of `[X, AX]` vanishes, so the condition is the linear
//! system `L z = -[X, AX]_m` with `L z = [Z, AX]_m`. The numeric route
//! sweeps many `X`; the closed-form route evaluates the classification
//! equations of each case; the obstruction scan looks for eigenvalue
//! equalities forced by brackets between eigenspaces.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::flag_manifold::{build_decomposition, CaseKind, Decomposition, Target, ThetaSpec};
use crate::invariant_metric::{
    build_metric, check_algebra_invariance, param_schema, MetricOperator, MetricParams, ParamKind,
};
use crate::matrix::{least_squares, solve_consistent, Mat};
use crate::scalar::{Exact, Field, Mode, Num};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "GO")]
    Go,
    #[serde(rename = "NOT_GO")]
    NotGo,
    #[serde(rename = "UNDECIDED")]
    Undecided,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Go => "GO",
            Verdict::NotGo => "NOT_GO",
            Verdict::Undecided => "UNDECIDED",
        })
    }
}

/// Float-mode thresholds, relative to `1 + |AX|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub pass: f64,
    pub fail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pass: 1e-9,
            fail: 1e-6,
        }
    }
}

impl Tolerances {
    /// Pass threshold `tol`; the fail threshold keeps the default gap of
    /// three orders of magnitude.
    pub fn with_pass(tol: f64) -> Self {
        Tolerances {
            pass: tol,
            fail: (tol * 1e3).max(tol),
        }
    }
}

/// Geodesic residual of one vector `X`.
#[derive(Clone, Debug)]
pub struct GoSampleResult<F: Field> {
    /// Position in the sweep.
    pub index: usize,
    /// `X` in adapted coordinates.
    pub x: Vec<F>,
    /// `min_Z |[Z + X, AX]|^2`.
    pub residual_sq: F,
    /// `sqrt(residual_sq)` in floating point.
    pub residual: f64,
    /// A minimizing `Z` in `k_Θ` coordinates (exact solutions only).
    pub witness_z: Option<Vec<F>>,
    /// `|[X, AX]_{k_Θ}|^2`, zero for invariant metrics.
    pub k_component_sq: F,
    pub ax_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SampleStatus {
    Zero,
    Gray,
    Positive,
}

/// Closed-form outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    /// `None` when the case has no closed form.
    pub go: Option<bool>,
    pub reason: String,
}

impl Classification {
    fn yes(reason: impl Into<String>) -> Self {
        Classification {
            go: Some(true),
            reason: reason.into(),
        }
    }
    fn no(reason: impl Into<String>) -> Self {
        Classification {
            go: Some(false),
            reason: reason.into(),
        }
    }
}

/// Result of the numeric sweep, optionally compared with the closed form.
#[derive(Clone, Debug)]
pub struct GoReport<F: Field> {
    pub verdict: Verdict,
    pub mode: Mode,
    pub samples: Vec<GoSampleResult<F>>,
    pub max_residual: f64,
    pub failing_witness: Option<GoSampleResult<F>>,
    pub classified: Option<Classification>,
    /// Numeric verdict and closed form agree (vacuously true without a
    /// closed form).
    pub agreement: bool,
    /// GO backed by the closed form as well as by the sweep.
    pub certified: bool,
}

impl<F: Field> GoReport<F> {
    /// Attaches the closed-form outcome and derives agreement and
    /// certification.
    pub fn with_classification(mut self, c: Classification) -> Self {
        self.agreement = match (c.go, self.verdict) {
            (Some(true), Verdict::Go) | (Some(false), Verdict::NotGo) | (None, _) => true,
            (Some(_), _) => false,
        };
        self.certified = self.verdict == Verdict::Go && c.go == Some(true);
        self.classified = Some(c);
        self
    }

    /// 0 for certified GO, 1 for NOT_GO, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Go if self.certified => 0,
            Verdict::NotGo if self.agreement => 1,
            _ => 2,
        }
    }

    pub fn to_json(&self, dec: &Decomposition<F>) -> serde_json::Value {
        let witness = self.failing_witness.as_ref().map(|w| sample_json(dec, w));
        json!({
            "verdict": self.verdict,
            "certificate": match self.mode { Mode::Exact => "exact", Mode::Float => "float" },
            "certified": self.certified,
            "samples_evaluated": self.samples.len(),
            "max_residual": self.max_residual,
            "failing_witness": witness,
            "classified": self.classified,
            "agreement": self.agreement,
        })
    }
}

/// JSON form of one sample, with `X` written in the adapted basis.
pub fn sample_json<F: Field>(dec: &Decomposition<F>, s: &GoSampleResult<F>) -> serde_json::Value {
    json!({
        "index": s.index,
        "x": s.x.iter().map(Field::to_json).collect::<Vec<_>>(),
        "x_expr": combination(&dec.m_labels, &s.x),
        "residual_sq": s.residual_sq.to_json(),
        "residual": s.residual,
        "witness_z": s.witness_z.as_ref().map(|z| {
            let labels: Vec<String> = dec.k_theta.iter().map(|&c| dec.algebra.label(c).to_string()).collect();
            combination(&labels, z)
        }),
    })
}

fn combination<F: Field>(labels: &[String], coeffs: &[F]) -> String {
    let mut parts = Vec::new();
    for (l, c) in labels.iter().zip(coeffs) {
        if c.is_zero() {
            continue;
        }
        let cs = match c.to_json() {
            serde_json::Value::String(s) => s,
            v => v.to_string(),
        };
        let term = if cs == "1" {
            format!("[{l}]")
        } else {
            format!("({cs})[{l}]")
        };
        parts.push(term);
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

/// Residual engine bound to one invariant metric.
pub struct GoChecker<'o, 'a, F: Field> {
    op: &'o MetricOperator<'a, F>,
    tol: Tolerances,
    std_norms: Vec<F>,
}

impl<'o, 'a, F: Field> GoChecker<'o, 'a, F> {
    /// Refuses metrics that do not commute with `ad(k_Θ)`.
    pub fn new(op: &'o MetricOperator<'a, F>, tol: Tolerances) -> Result<Self> {
        let (_, failures) = check_algebra_invariance(op);
        if !failures.is_empty() {
            return Err(Error::NotInvariant(format!(
                "A does not commute with {}",
                failures.join(", ")
            )));
        }
        let std_norms = op
            .dec
            .m_std
            .iter()
            .map(|&c| op.dec.algebra.norm_sq(c))
            .collect();
        Ok(GoChecker { op, tol, std_norms })
    }

    /// Minimizes `|[Z + X, AX]|` over `Z ∈ k_Θ` for `X` in adapted coordinates.
    pub fn residual(&self, x: &[F]) -> Result<GoSampleResult<F>> {
        let dec = self.op.dec;
        let alg = &dec.algebra;
        let ax = self.op.apply(x);
        let xk = dec.m_to_k(x);
        let axk = dec.m_to_k(&ax);
        let c = alg.bracket_coords(&xk, &axk);
        let mut k_component_sq = F::zero();
        for &i in &dec.k_theta {
            if !c[i].is_zero() {
                k_component_sq += alg.norm_sq::<F>(i) * c[i].clone() * c[i].clone();
            }
        }
        let ax_norm = alg.inner_coords(&axk, &axk).to_f64().max(0.0).sqrt();
        let kc_tol = self.tol.pass * (1.0 + ax_norm);
        if !k_component_sq.negligible(kc_tol * kc_tol) {
            return Err(Error::NotInvariant(format!(
                "k_Θ component of [X, AX] has squared norm {}",
                k_component_sq.to_f64()
            )));
        }
        let cm: Vec<F> = dec.m_std.iter().map(|&i| c[i].clone()).collect();
        let nk = dec.k_theta.len();
        let zero_sample = |z: Vec<F>| GoSampleResult {
            index: 0,
            x: x.to_vec(),
            residual_sq: F::zero(),
            residual: 0.0,
            witness_z: Some(z),
            k_component_sq: k_component_sq.clone(),
            ax_norm,
        };
        if cm.iter().all(Field::is_zero) {
            return Ok(zero_sample(vec![F::zero(); nk]));
        }
        // Columns of L: [e_w, AX] restricted to the m_Θ coordinates.
        let pos: BTreeMap<usize, usize> =
            dec.m_std.iter().enumerate().map(|(r, &c)| (c, r)).collect();
        let mut l: Mat<F> = Mat::zeros(cm.len(), nk);
        for (j, &w) in dec.k_theta.iter().enumerate() {
            for (b, axb) in axk.iter().enumerate() {
                if axb.is_zero() {
                    continue;
                }
                for &(t, k) in alg.structure(w, b) {
                    if let Some(&row) = pos.get(&t) {
                        let v = l.get(row, j).clone() + axb.clone() * F::from_i64(k);
                        l.set(row, j, v);
                    }
                }
            }
        }
        let neg_c: Vec<F> = cm.iter().map(|v| -v.clone()).collect();
        match F::MODE {
            Mode::Exact => {
                if let Some(z) = solve_consistent(&l, &neg_c, 0.0) {
                    return Ok(zero_sample(z));
                }
                // Weighted normal equations are always consistent.
                let wl = Mat::from_fn(l.rows(), nk, |i, j| {
                    self.std_norms[i].clone() * l.get(i, j).clone()
                });
                let lt = l.transpose();
                let m = lt.mul(&wl)?;
                let wc: Vec<F> = neg_c
                    .iter()
                    .zip(&self.std_norms)
                    .map(|(a, w)| a.clone() * w.clone())
                    .collect();
                let rhs = lt.mul_vec(&wc);
                let z = solve_consistent(&m, &rhs, 0.0).expect("normal equations are consistent");
                let lz = l.mul_vec(&z);
                let mut res = F::zero();
                for ((a, b), w) in lz.iter().zip(&cm).zip(&self.std_norms) {
                    let r = a.clone() + b.clone();
                    res += w.clone() * r.clone() * r;
                }
                Ok(GoSampleResult {
                    index: 0,
                    x: x.to_vec(),
                    residual: res.to_f64().max(0.0).sqrt(),
                    residual_sq: res,
                    witness_z: None,
                    k_component_sq,
                    ax_norm,
                })
            }
            Mode::Float => {
                let sw: Vec<f64> = self.std_norms.iter().map(|w| w.to_f64().sqrt()).collect();
                let lf = Mat::from_fn(l.rows(), nk, |i, j| sw[i] * l.get(i, j).to_f64());
                let bf: Vec<f64> = neg_c.iter().zip(&sw).map(|(v, s)| s * v.to_f64()).collect();
                let z = least_squares(&lf, &bf);
                let lz = lf.mul_vec(&z);
                let res: f64 = lz.iter().zip(&bf).map(|(a, b)| (a - b) * (a - b)).sum();
                let zf: Vec<F> = z
                    .iter()
                    .map(|v| F::from_f64(*v).expect("float mode"))
                    .collect();
                Ok(GoSampleResult {
                    index: 0,
                    x: x.to_vec(),
                    residual_sq: F::from_f64(res).expect("float mode"),
                    residual: res.sqrt(),
                    witness_z: Some(zf),
                    k_component_sq,
                    ax_norm,
                })
            }
        }
    }

    fn status(&self, s: &GoSampleResult<F>) -> SampleStatus {
        match F::MODE {
            Mode::Exact => {
                if s.residual_sq.is_zero() {
                    SampleStatus::Zero
                } else {
                    SampleStatus::Positive
                }
            }
            Mode::Float => {
                let scale = 1.0 + s.ax_norm;
                if s.residual <= self.tol.pass * scale {
                    SampleStatus::Zero
                } else if s.residual > self.tol.fail * scale {
                    SampleStatus::Positive
                } else {
                    SampleStatus::Gray
                }
            }
        }
    }
}

/// `min_Z |[Z + X, AX]|` for one vector.
pub fn geodesic_residual<F: Field>(op: &MetricOperator<F>, x: &[F]) -> Result<GoSampleResult<F>> {
    GoChecker::new(op, Tolerances::default())?.residual(x)
}

/// The sweep of test vectors: basis vectors, pairwise sums, then `n_random`
/// integer vectors with entries in `[-3, 3]`.
pub fn sample_plan<F: Field>(
    dim: usize,
    n_random: usize,
    seed: u64,
) -> impl Iterator<Item = Vec<F>> {
    let unit = move |i: usize| {
        let mut v = vec![F::zero(); dim];
        v[i] = F::one();
        v
    };
    let basis = (0..dim).map(unit);
    let pairs = (0..dim).flat_map(move |i| {
        (i + 1..dim).map(move |j| {
            let mut v = vec![F::zero(); dim];
            v[i] = F::one();
            v[j] = F::one();
            v
        })
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random = (0..n_random).map(move |_| {
        (0..dim)
            .map(|_| F::from_i64(rng.gen_range(-3..=3)))
            .collect::<Vec<F>>()
    });
    basis.chain(pairs).chain(random)
}

/// Numeric g.o. test: evaluates the sweep and stops at the first vector
/// that is certainly not geodesic.
pub fn is_go_numeric<F: Field>(
    op: &MetricOperator<F>,
    n_samples: usize,
    seed: u64,
    tol: Tolerances,
) -> Result<GoReport<F>> {
    let checker = GoChecker::new(op, tol)?;
    let mut samples = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut gray = false;
    let mut failing = None;
    for (index, x) in sample_plan::<F>(op.dim(), n_samples, seed).enumerate() {
        let mut s = checker.residual(&x)?;
        s.index = index;
        max_residual = max_residual.max(s.residual);
        let st = checker.status(&s);
        samples.push(s);
        match st {
            SampleStatus::Zero => {}
            SampleStatus::Gray => gray = true,
            SampleStatus::Positive => {
                failing = samples.last().cloned();
                break;
            }
        }
    }
    let verdict = if failing.is_some() {
        Verdict::NotGo
    } else if gray {
        Verdict::Undecided
    } else {
        Verdict::Go
    };
    Ok(GoReport {
        verdict,
        mode: F::MODE,
        samples,
        max_residual,
        failing_witness: failing,
        classified: None,
        agreement: true,
        certified: false,
    })
}

/// Numeric sweep plus closed form.
pub fn check_go<F: Field>(
    op: &MetricOperator<F>,
    n_samples: usize,
    seed: u64,
    tol: Tolerances,
) -> Result<GoReport<F>> {
    let report = is_go_numeric(op, n_samples, seed, tol)?;
    let c = match &op.params {
        Some(p) => is_go_classified(&op.dec.theta, p),
        None => Classification {
            go: None,
            reason: "hand-built matrix; no parameter record".into(),
        },
    };
    Ok(report.with_classification(c))
}

/// Parameter values in one field, with lookups by name and by indexed
/// family (`mu[1]`, `mu[2]`, ... share the family `mu`).
struct Vals<F: Field> {
    map: BTreeMap<String, F>,
}

impl<F: Field> Vals<F> {
    fn get(&self, name: &str) -> Option<F> {
        self.map.get(name).cloned()
    }

    fn family(&self, prefix: &str) -> Vec<(String, F)> {
        let key = format!("{prefix}[");
        self.map
            .iter()
            .filter(|(k, _)| k.starts_with(&key))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    fn family_where(&self, prefix: &str, keep: impl Fn(&[usize]) -> bool) -> Vec<(String, F)> {
        self.family(prefix)
            .into_iter()
            .filter(|(k, _)| keep(&indices(k)))
            .collect()
    }
}

fn indices(name: &str) -> Vec<usize> {
    name.split_once('[')
        .map(|(_, rest)| {
            rest.trim_end_matches(']')
                .split(',')
                .filter_map(|s| s.trim().parse().ok())
                .collect()
        })
        .unwrap_or_default()
}

fn approx_eq<F: Field>(a: &F, b: &F) -> bool {
    let scale = 1.0 + a.to_f64().abs() + b.to_f64().abs();
    (a.clone() - b.clone()).negligible(1e-9 * scale)
}

/// Common value of a list: `Ok(None)` when empty, `Err(name pair)` when
/// two entries differ.
fn common<F: Field>(vs: &[(String, F)]) -> std::result::Result<Option<F>, String> {
    let Some((n0, v0)) = vs.first() else {
        return Ok(None);
    };
    for (n, v) in &vs[1..] {
        if !approx_eq(v, v0) {
            return Err(format!("{n} != {n0}"));
        }
    }
    Ok(Some(v0.clone()))
}

fn kind_of(name: &str) -> ParamKind {
    if name.starts_with('b') || name.starts_with("a[") {
        ParamKind::Coupling
    } else {
        ParamKind::Diagonal
    }
}

macro_rules! require {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(why) => return Classification::no(why),
        }
    };
}

/// Evaluates the closed-form g.o. conditions for the parameters.
pub fn is_go_classified(theta: &ThetaSpec, params: &MetricParams) -> Classification {
    if params.is_exact() {
        classify_in::<Exact>(theta, params)
    } else {
        classify_in::<f64>(theta, params)
    }
}

fn classify_in<F: Field>(theta: &ThetaSpec, params: &MetricParams) -> Classification {
    let mut map = BTreeMap::new();
    for (k, v) in &params.values {
        match v.to_field::<F>() {
            Ok(x) => {
                map.insert(k.clone(), x);
            }
            Err(e) => {
                return Classification {
                    go: None,
                    reason: e.to_string(),
                }
            }
        }
    }
    let vals = Vals { map };
    let diag: Vec<(String, F)> = vals
        .map
        .iter()
        .filter(|(k, _)| kind_of(k) == ParamKind::Diagonal)
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let couplings_zero = vals
        .map
        .iter()
        .filter(|(k, _)| kind_of(k) == ParamKind::Coupling)
        .all(|(_, v)| approx_eq(v, &F::zero()));
    if couplings_zero && common(&diag).is_ok() {
        return Classification::yes("normal metric");
    }
    let sq = |x: &F| x.clone() * x.clone();
    let case = theta.case();
    match case {
        CaseKind::Degenerate => Classification::yes("the flag is a point"),
        CaseKind::AGeneric => Classification::no(
            "type A flags outside the A_3 exceptions are g.o. only for normal metrics",
        ),
        CaseKind::A3Irreducible | CaseKind::A3Alpha13 => {
            Classification::yes("every invariant metric of this A_3 flag is g.o.")
        }
        CaseKind::A3Empty => {
            require!(common(&diag));
            let b: Vec<F> = (1..=3)
                .map(|i| vals.get(&format!("b[{i}]")).unwrap_or_else(F::zero))
                .collect();
            if approx_eq(&b[0], &-b[1].clone()) && approx_eq(&b[0], &b[2]) {
                Classification::yes("common μ and b_1 = -b_2 = b_3")
            } else {
                Classification::no("couplings violate b_1 = -b_2 = b_3")
            }
        }
        CaseKind::A3Alpha(_) => {
            let (Some(mu1), Some(m21), Some(m22), Some(b)) = (
                vals.get("mu1"),
                vals.get("mu21"),
                vals.get("mu22"),
                vals.get("b"),
            ) else {
                return Classification {
                    go: None,
                    reason: "missing A_3 parameters".into(),
                };
            };
            if !approx_eq(&m21, &m22) {
                return Classification::no("mu21 != mu22");
            }
            let target = m21.clone() * (m21.clone() - mu1);
            if approx_eq(&sq(&b), &target) {
                Classification::yes("b^2 = μ_2 (μ_2 - μ_1)")
            } else {
                Classification::no("b^2 != μ_2 (μ_2 - μ_1)")
            }
        }
        CaseKind::BNoAlphaL => {
            let mu = require!(common(&vals.family("mu"))).expect("V_i always present");
            let mut lam = vals.family("lambda1");
            lam.extend(vals.family("lambda2"));
            let lam = require!(common(&lam));
            let b = require!(common(&vals.family("b")));
            let gamma = require!(common(&vals.family("gamma")));
            match (lam, b) {
                (Some(lam), Some(b)) => {
                    if !approx_eq(&(mu.clone() - lam.clone()), &b) {
                        return Classification::no("μ - λ != b");
                    }
                    if let Some(g) = gamma {
                        let want = (sq(&lam) - sq(&b)).div(&lam).expect("λ > 0");
                        if !approx_eq(&g, &want) {
                            return Classification::no("γ != (λ^2 - b^2)/λ");
                        }
                    }
                    Classification::yes("μ - λ = b and γ = (λ^2 - b^2)/λ")
                }
                _ => single_block_b(),
            }
        }
        CaseKind::BAlphaL => {
            let mu = require!(common(&vals.family("mu"))).expect("(V_i)_2 present");
            let rho = require!(common(&vals.family("rho"))).expect("(V_i)_1 present");
            let mut lam = vals.family("lambda1");
            lam.extend(vals.family("lambda2"));
            paired_family(mu, rho, &lam, &vals.family("b"), &vals.family("gamma"))
        }
        CaseKind::C4Empty | CaseKind::C4Alpha(_) => Classification {
            go: None,
            reason: "C_4 flag with extra equivalences: decided numerically only".into(),
        },
        CaseKind::CNoAlphaL | CaseKind::CAlphaL => classify_c(theta, &vals),
        CaseKind::DNoAlphaL | CaseKind::DAlphaLOnly => {
            let mut lam = vals.family("lambda1");
            lam.extend(vals.family("lambda2"));
            let lam = require!(common(&lam));
            let b = require!(common(&vals.family("b")));
            let gamma = require!(common(&vals.family("gamma")));
            if let (Some(lam), Some(g)) = (lam, gamma) {
                let b = b.unwrap_or_else(F::zero);
                let want = (sq(&lam) - sq(&b)).div(&lam).expect("λ > 0");
                if !approx_eq(&g, &want) {
                    return Classification::no("γ != (λ^2 - b^2)/λ");
                }
            }
            Classification::yes("common λ, b, γ with γ = (λ^2 - b^2)/λ")
        }
        CaseKind::DBoth => {
            // The two halves of each M_rn play the parts of (V_i)_2 and (V_i)_1.
            let r = theta.r();
            let last = |ix: &[usize]| ix.first() == Some(&r);
            let mu = require!(common(&vals.family_where("lambda2", last))).expect("M_rn present");
            let rho = require!(common(&vals.family_where("lambda1", last))).expect("M_rn present");
            let mut lam = vals.family_where("lambda1", |ix| !last(ix));
            lam.extend(vals.family_where("lambda2", |ix| !last(ix)));
            paired_family(mu, rho, &lam, &vals.family("b"), &vals.family("gamma"))
        }
    }
}

/// Conditions `μ - λ = b = λ - ρ` and `γ = (λ^2 - b^2)/λ = 2μρ/(μ+ρ)`,
/// shared by B with `α_l ∈ Θ` and by D with `α_(l-1), α_l ∈ Θ`. Without
/// coupled pairs `λ` and `b` are read off from `μ` and `ρ`.
fn paired_family<F: Field>(
    mu: F,
    rho: F,
    lam: &[(String, F)],
    b: &[(String, F)],
    gamma: &[(String, F)],
) -> Classification {
    let sq = |x: &F| x.clone() * x.clone();
    let lam = require!(common(lam));
    let b = require!(common(b));
    let gamma = require!(common(gamma));
    let two = F::from_i64(2);
    let (lam, b) = match (lam, b) {
        (Some(l), Some(b)) => (l, b),
        _ => (
            (mu.clone() + rho.clone()).div(&two).expect("2"),
            (mu.clone() - rho.clone()).div(&two).expect("2"),
        ),
    };
    if !approx_eq(&(mu.clone() - lam.clone()), &b) || !approx_eq(&(lam.clone() - rho.clone()), &b) {
        return Classification::no("μ - λ = b = λ - ρ fails");
    }
    if let Some(g) = gamma {
        let want = (sq(&lam) - sq(&b)).div(&lam).expect("λ > 0");
        if !approx_eq(&g, &want) {
            return Classification::no("γ != (λ^2 - b^2)/λ = 2μρ/(μ+ρ)");
        }
    }
    Classification::yes("μ - λ = b = λ - ρ and γ = 2μρ/(μ+ρ)")
}

/// B with a single block has no coupled pairs, and every metric on
/// `V_1 ⊕ U_1` is g.o.: the equations tying `γ` to `λ` and `b` only arise
/// from brackets with `M_mn`.
fn single_block_b() -> Classification {
    Classification::yes("single block: no coupled pairs constrain μ and γ")
}

/// Type C: `A` on `M_0` must be `μ I + c v v^T` with `v_j = sqrt(l_j)`, where
/// `μ` is shared by every other summand and all `W`/`U` couplings vanish.
fn classify_c<F: Field>(theta: &ThetaSpec, vals: &Vals<F>) -> Classification {
    let r = theta.r();
    let top = if theta.alpha_l { r - 1 } else { r };
    let l: Vec<i64> = theta.partition.iter().map(|&p| p as i64).collect();
    let mut mus = vals.family("mu1");
    mus.extend(vals.family("mu2"));
    mus.extend(vals.family("mu"));
    let mu = require!(common(&mus));
    if let Err(why) = common(&vals.family("b")).and_then(|b| match b {
        Some(v) if !approx_eq(&v, &F::zero()) => Err("b_mn != 0".to_string()),
        _ => Ok(()),
    }) {
        return Classification::no(why);
    }
    let Some(mu) = mu else {
        return Classification::yes("a single trace direction: any value is g.o.");
    };
    let mu0: Vec<F> = (1..=top)
        .map(|i| vals.get(&format!("mu0[{i}]")).unwrap_or_else(|| mu.clone()))
        .collect();
    let c = (mu0[0].clone() - mu.clone())
        .div(&F::from_i64(l[0]))
        .expect("l_1 > 0");
    for i in 0..top {
        let want = mu.clone() + c.clone() * F::from_i64(l[i]);
        if !approx_eq(&mu0[i], &want) {
            return Classification::no(format!(
                "mu0[{}] breaks the form μ + c l_i, c sqrt(l_m l_n)",
                i + 1
            ));
        }
    }
    for (name, a) in vals.family_where("a", |ix| ix.len() == 2) {
        let ix = indices(&name);
        let want = c.clone()
            * F::from_i64(l[ix[0] - 1] * l[ix[1] - 1])
                .sqrt()
                .expect("positive");
        if !approx_eq(&a, &want) {
            return Classification::no(format!(
                "{name} breaks the form μ + c l_i, c sqrt(l_m l_n)"
            ));
        }
    }
    Classification::yes("M_0 block of the form μ I + c v v^T")
}

fn to_num<F: Field>(x: &F) -> Num {
    match F::MODE {
        Mode::Exact => match x.to_json() {
            serde_json::Value::String(s) => Num::Exact(s.parse().expect("canonical exact value")),
            _ => unreachable!("exact values serialize as strings"),
        },
        Mode::Float => Num::Float(x.to_f64()),
    }
}

/// Builds parameters inside the g.o. family of the flag from free values.
/// Recognized keys (defaults in brackets): `lambda` [2], `b` [1 for B and
/// the A_3 empty flag, 0 for D], `mu` [2 for the A_3 empty flag, else 1],
/// `c` [1], `mu1` [3], `mu2` [4].
pub fn go_family(theta: &ThetaSpec, free: &BTreeMap<String, Num>) -> Result<MetricParams> {
    let dec = build_decomposition::<Exact>(theta)?;
    if free.values().all(|v| matches!(v, Num::Exact(_))) {
        go_family_in::<Exact>(&dec, free)
    } else {
        let fdec = build_decomposition::<f64>(theta)?;
        go_family_in::<f64>(&fdec, free)
    }
}

fn go_family_in<F: Field>(
    dec: &Decomposition<F>,
    free: &BTreeMap<String, Num>,
) -> Result<MetricParams> {
    let get = |k: &str, d: i64| -> Result<F> {
        match free.get(k) {
            Some(v) => v.to_field(),
            None => Ok(F::from_i64(d)),
        }
    };
    let schema = param_schema(dec)?;
    let theta = &dec.theta;
    let case = dec.case;
    let b_default = if matches!(
        case,
        CaseKind::DNoAlphaL | CaseKind::DAlphaLOnly | CaseKind::DBoth
    ) {
        0
    } else {
        1
    };
    let mut out: BTreeMap<String, F> = BTreeMap::new();
    let prefix = |n: &str| n.split('[').next().unwrap_or(n).to_string();
    match case {
        CaseKind::Degenerate => {}
        CaseKind::C4Empty | CaseKind::C4Alpha(_) => {
            return Err(Error::Infeasible(
                "C_4 flags with extra equivalences have no closed-form family".into(),
            ))
        }
        CaseKind::AGeneric | CaseKind::A3Irreducible => {
            let mu = get("mu", 1)?;
            for p in &schema.params {
                let v = if p.kind == ParamKind::Diagonal {
                    mu.clone()
                } else {
                    F::zero()
                };
                out.insert(p.name.clone(), v);
            }
        }
        CaseKind::A3Alpha13 => {
            out.insert("mu1".into(), get("mu1", 1)?);
            out.insert("mu2".into(), get("mu2", 2)?);
        }
        CaseKind::A3Empty => {
            let (mu, b) = (get("mu", 2)?, get("b", b_default)?);
            for i in 1..=3 {
                out.insert(format!("mu1[{i}]"), mu.clone());
                out.insert(format!("mu2[{i}]"), mu.clone());
                out.insert(
                    format!("b[{i}]"),
                    if i == 2 { -b.clone() } else { b.clone() },
                );
            }
        }
        CaseKind::A3Alpha(_) => {
            let (mu1, mu2) = (get("mu1", 3)?, get("mu2", 4)?);
            let b = (mu2.clone() * (mu2.clone() - mu1.clone())).sqrt().ok_or_else(|| {
                Error::Infeasible("μ_2 (μ_2 - μ_1) must be a nonnegative value with a square root in this mode".into())
            })?;
            out.insert("mu1".into(), mu1);
            out.insert("mu21".into(), mu2.clone());
            out.insert("mu22".into(), mu2);
            out.insert("b".into(), b);
        }
        CaseKind::BNoAlphaL
        | CaseKind::BAlphaL
        | CaseKind::DNoAlphaL
        | CaseKind::DAlphaLOnly
        | CaseKind::DBoth => {
            let (lam, b) = (get("lambda", 2)?, get("b", b_default)?);
            let gamma = (lam.clone() * lam.clone() - b.clone() * b.clone())
                .div(&lam)
                .ok_or_else(|| Error::Infeasible("λ must be nonzero".into()))?;
            if lam.signum() <= 0 || gamma.signum() <= 0 {
                return Err(Error::Infeasible(
                    "need λ > 0 and |b| < λ so that γ = (λ^2 - b^2)/λ > 0".into(),
                ));
            }
            let mu = lam.clone() + b.clone();
            let rho = lam.clone() - b.clone();
            let r = theta.r();
            for p in &schema.params {
                let on_last = case == CaseKind::DBoth && indices(&p.name).first() == Some(&r);
                let v = match prefix(&p.name).as_str() {
                    "lambda2" if on_last => mu.clone(),
                    "lambda1" if on_last => rho.clone(),
                    "mu" => mu.clone(),
                    "rho" => rho.clone(),
                    "lambda1" | "lambda2" => lam.clone(),
                    "b" => b.clone(),
                    "gamma" => gamma.clone(),
                    other => unreachable!("unexpected parameter family {other}"),
                };
                out.insert(p.name.clone(), v);
            }
        }
        CaseKind::CNoAlphaL | CaseKind::CAlphaL => {
            let (mu, c) = (get("mu", 1)?, get("c", 1)?);
            let l: Vec<i64> = theta.partition.iter().map(|&p| p as i64).collect();
            for p in &schema.params {
                let ix = indices(&p.name);
                let v = match prefix(&p.name).as_str() {
                    "mu0" => mu.clone() + c.clone() * F::from_i64(l[ix[0] - 1]),
                    "a" => {
                        c.clone()
                            * F::from_i64(l[ix[0] - 1] * l[ix[1] - 1])
                                .sqrt()
                                .expect("positive")
                    }
                    "b" => F::zero(),
                    _ => mu.clone(),
                };
                out.insert(p.name.clone(), v);
            }
        }
    }
    let mut params = MetricParams::new(schema.case.clone());
    for (k, v) in &out {
        params.values.insert(k.clone(), to_num(v));
    }
    build_metric(dec, &params)
        .map_err(|e| Error::Infeasible(format!("g.o. family member is not a metric: {e}")))?;
    Ok(params)
}

/// Dimension of the g.o. family built by [`go_family`]: the numeric rank of
/// its Jacobian with respect to the free values, at a generic point. `None`
/// for flags without a closed-form family.
pub fn family_dimension(theta: &ThetaSpec) -> Result<Option<usize>> {
    if theta.case().is_special() {
        return Ok(None);
    }
    let dec = build_decomposition::<f64>(theta)?;
    let base: BTreeMap<String, f64> = [
        ("lambda", 2.0),
        ("b", 0.5),
        ("mu", 1.0),
        ("c", 0.5),
        ("mu1", 3.0),
        ("mu2", 4.0),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let eval = |vals: &BTreeMap<String, f64>| -> Result<Vec<f64>> {
        let free = vals
            .iter()
            .map(|(k, v)| (k.clone(), Num::Float(*v)))
            .collect();
        let p = go_family_in(&dec, &free)?;
        Ok(p.values.values().map(Num::to_f64).collect())
    };
    let y0 = eval(&base)?;
    let h = 1e-4;
    let mut cols = Vec::new();
    for k in base.keys() {
        let mut moved = base.clone();
        *moved.get_mut(k).expect("key") += h;
        let y = eval(&moved)?;
        cols.push(
            y.iter()
                .zip(&y0)
                .map(|(a, b)| (a - b) / h)
                .collect::<Vec<f64>>(),
        );
    }
    if y0.is_empty() {
        return Ok(Some(0));
    }
    let jac = Mat::from_fn(y0.len(), cols.len(), |i, j| cols[j][i]);
    Ok(Some(crate::matrix::rank(&jac, 1e-6)))
}

/// Random member of the g.o. family of the flag, drawn from small rational
/// free values. Draws that fail positivity are retried.
pub fn random_go_params(dec: &Decomposition<Exact>, rng: &mut impl Rng) -> Result<MetricParams> {
    let half = |rng: &mut dyn rand::RngCore, lo: i64, hi: i64| {
        Num::Exact(Exact::ratio(rng.gen_range(lo..=hi), 2))
    };
    let mut last = None;
    for _ in 0..32 {
        let mut free = BTreeMap::new();
        match dec.case {
            CaseKind::C4Empty | CaseKind::C4Alpha(_) => return go_family_in(dec, &free),
            CaseKind::A3Alpha(_) => {
                let mu2 = rng.gen_range(1..=6i64);
                let b = Exact::ratio(rng.gen_range(0..2 * mu2), 2);
                let mu1 = Exact::from_i64(mu2) - b.clone() * b * Exact::ratio(1, mu2);
                free.insert("mu1".to_string(), Num::Exact(mu1));
                free.insert("mu2".to_string(), Num::from(mu2));
            }
            CaseKind::A3Alpha13 => {
                free.insert("mu1".to_string(), half(rng, 1, 12));
                free.insert("mu2".to_string(), half(rng, 1, 12));
            }
            CaseKind::A3Empty => {
                let mu = rng.gen_range(2..=12i64);
                free.insert("mu".to_string(), Num::Exact(Exact::ratio(mu, 2)));
                free.insert(
                    "b".to_string(),
                    Num::Exact(Exact::ratio(rng.gen_range(-mu + 1..mu), 4)),
                );
            }
            CaseKind::BNoAlphaL
            | CaseKind::BAlphaL
            | CaseKind::DNoAlphaL
            | CaseKind::DAlphaLOnly
            | CaseKind::DBoth => {
                let lam = rng.gen_range(2..=8i64);
                free.insert("lambda".to_string(), Num::Exact(Exact::ratio(lam, 2)));
                free.insert(
                    "b".to_string(),
                    Num::Exact(Exact::ratio(rng.gen_range(-lam + 1..lam), 2)),
                );
            }
            CaseKind::CNoAlphaL | CaseKind::CAlphaL => {
                free.insert("mu".to_string(), half(rng, 1, 8));
                free.insert(
                    "c".to_string(),
                    Num::Exact(Exact::ratio(rng.gen_range(-2..=4), 4)),
                );
            }
            CaseKind::AGeneric | CaseKind::A3Irreducible | CaseKind::Degenerate => {
                free.insert("mu".to_string(), half(rng, 1, 8));
            }
        }
        match go_family_in(dec, &free) {
            Ok(p) => return Ok(p),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Moves one randomly chosen parameter by `±k/10`, `k ∈ 1..=3`, keeping the
/// metric positive definite.
pub fn perturbed_params(
    dec: &Decomposition<Exact>,
    base: &MetricParams,
    rng: &mut impl Rng,
) -> Result<MetricParams> {
    let names: Vec<String> = base.values.keys().cloned().collect();
    if names.is_empty() {
        return Ok(base.clone());
    }
    for _ in 0..32 {
        let name = &names[rng.gen_range(0..names.len())];
        let step = Exact::ratio(
            rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 },
            10,
        );
        let old = base
            .exact(name)
            .ok_or_else(|| Error::Params(format!("{name} is not exact")))?;
        let mut p = base.clone();
        p.set(name, old + step);
        if build_metric(dec, &p).is_ok() {
            return Ok(p);
        }
    }
    Ok(base.clone())
}

/// An eigenvalue equality forced by a nonzero bracket projection.
#[derive(Clone, Debug, Serialize)]
pub struct ObstructionFact {
    /// `pair` (projection onto the complement of both pieces) or `triple`
    /// (projection onto a third piece).
    pub kind: &'static str,
    pub pieces: Vec<String>,
    pub eigenvalues: Vec<f64>,
    /// Largest projection norm found.
    pub strength: f64,
}

impl fmt::Display for ObstructionFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .pieces
            .iter()
            .zip(&self.eigenvalues)
            .map(|(p, e)| format!("λ({p})={e:.6}"))
            .collect();
        write!(
            f,
            "{} must all be equal ({} bracket, projection {:.3e})",
            parts.join(", "),
            self.kind,
            self.strength
        )
    }
}

struct Piece {
    name: String,
    eigenvalue: f64,
    /// Orthonormal basis in `k`-coordinates.
    basis: Vec<Vec<f64>>,
}

/// Splits every isotypical summand into eigenspaces of `A`. Each piece is
/// invariant, and pieces are mutually orthogonal.
fn eigen_pieces<F: Field>(op: &MetricOperator<F>) -> Vec<Piece> {
    let dec = op.dec;
    let sym = op.symmetrized_f64();
    let norms: Vec<f64> = dec.m_norms.iter().map(|x| x.to_f64()).collect();
    let mfd: Decomposition<f64> =
        crate::flag_manifold::build_decomposition(&dec.theta).expect("already built");
    let mut pieces = Vec::new();
    for s in &dec.summands {
        let idx: Vec<usize> = s
            .members
            .iter()
            .flat_map(|&m| dec.submodules[m].range())
            .collect();
        let n = idx.len();
        let block = DMatrix::from_fn(n, n, |i, j| *sym.get(idx[i], idx[j]));
        let eig = block.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let scale = 1.0 + eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut k = 0;
        let mut cluster = 0;
        while k < n {
            let lam = eig.eigenvalues[order[k]];
            let mut basis = Vec::new();
            while k < n && (eig.eigenvalues[order[k]] - lam).abs() <= 1e-9 * scale {
                let col = eig.eigenvectors.column(order[k]);
                let mut y = vec![0.0; dec.dim_m()];
                for (t, &i) in idx.iter().enumerate() {
                    y[i] = col[t] / norms[i].sqrt();
                }
                basis.push(mfd.m_to_k(&y));
                k += 1;
            }
            pieces.push(Piece {
                name: format!("{}#{cluster}", s.name),
                eigenvalue: lam,
                basis,
            });
            cluster += 1;
        }
    }
    pieces
}

/// Eigenvalue equalities that every g.o. metric would have to satisfy,
/// found through nonzero bracket projections between eigenspace pieces.
/// Since pieces of distinct eigenvalue are compared, every emitted fact is
/// violated by `A`.
pub fn obstruction_scan<F: Field>(op: &MetricOperator<F>) -> Vec<ObstructionFact> {
    let dec = op.dec;
    let alg = &dec.algebra;
    let pieces = eigen_pieces(op);
    let fdec: Decomposition<f64> = build_decomposition(&dec.theta).expect("already built");
    let scale = 1.0 + pieces.iter().fold(0.0f64, |a, p| a.max(p.eigenvalue.abs()));
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-9 * scale;
    let ip = |x: &[f64], y: &[f64]| alg.inner_coords(x, y);
    let mut facts = Vec::new();
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            let (pi, pj) = (&pieces[i], &pieces[j]);
            let brackets: Vec<Vec<f64>> = pi
                .basis
                .iter()
                .flat_map(|x| pj.basis.iter().map(move |y| (x, y)))
                .map(|(x, y)| {
                    let z = alg.bracket_coords(x, y);
                    fdec.m_to_k(&fdec.project(&z, Target::MTheta))
                })
                .collect();
            if !same(pi.eigenvalue, pj.eigenvalue) {
                let mut strength: f64 = 0.0;
                for z in &brackets {
                    let mut rest = z.clone();
                    for e in pi.basis.iter().chain(&pj.basis) {
                        let c = ip(z, e);
                        for (r, ev) in rest.iter_mut().zip(e) {
                            *r -= c * ev;
                        }
                    }
                    strength = strength.max(ip(&rest, &rest).max(0.0).sqrt());
                }
                if strength > 1e-8 {
                    facts.push(ObstructionFact {
                        kind: "pair",
                        pieces: vec![pi.name.clone(), pj.name.clone()],
                        eigenvalues: vec![pi.eigenvalue, pj.eigenvalue],
                        strength,
                    });
                }
            }
            for (k, pk) in pieces.iter().enumerate() {
                if k == i
                    || k == j
                    || (same(pi.eigenvalue, pk.eigenvalue) && same(pj.eigenvalue, pk.eigenvalue))
                {
                    continue;
                }
                let mut strength: f64 = 0.0;
                for z in &brackets {
                    let s: f64 = pk.basis.iter().map(|e| ip(z, e).powi(2)).sum();
                    strength = strength.max(s.sqrt());
                }
                if strength > 1e-8 {
                    facts.push(ObstructionFact {
                        kind: "triple",
                        pieces: vec![pi.name.clone(), pj.name.clone(), pk.name.clone()],
                        eigenvalues: vec![pi.eigenvalue, pj.eigenvalue, pk.eigenvalue],
                        strength,
                    });
                }
            }
        }
    }
    facts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flag_manifold::build_decomposition;
    use crate::invariant_metric::normal_params;
    use crate::lie_algebra::{Family, Label, LieTypeSpec};

    fn theta(f: Family, l: usize, p: &[usize], al: bool) -> ThetaSpec {
        ThetaSpec::new(LieTypeSpec::new(f, l).unwrap(), p.to_vec(), al, None).unwrap()
    }

    fn e(s: &str) -> Exact {
        s.parse().unwrap()
    }

    #[test]
    fn normal_metric_has_zero_residuals() {
        let t = theta(Family::B, 5, &[2, 3], false);
        let d = build_decomposition::<Exact>(&t).unwrap();
        let op = build_metric(&d, &normal_params(&d, 3).unwrap()).unwrap();
        let rep = is_go_numeric(&op, 4, 1, Tolerances::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Go);
        assert!(rep.samples.iter().all(|s| s.residual_sq.is_zero()));
    }

    #[test]
    fn a2_hand_built_metric_fails_with_w31() {
        let t = theta(Family::A, 2, &[1, 1, 1], false);
        let d = build_decomposition::<Exact>(&t).unwrap();
        let op = MetricOperator::from_matrix(
            &d,
            Mat::diagonal(&[Exact::from_i64(1), Exact::from_i64(1), Exact::from_i64(2)]),
        )
        .unwrap();
        let alg = &d.algebra;
        let mut x = vec![Exact::zero(); 3];
        for (i, v) in d.m_basis.iter().enumerate() {
            if v[alg.index_of(Label::W(2, 1)).unwrap()] == Exact::from_i64(1)
                || v[alg.index_of(Label::W(3, 2)).unwrap()] == Exact::from_i64(1)
            {
                x[i] = Exact::from_i64(1);
            }
        }
        let s = geodesic_residual(&op, &x).unwrap();
        assert_eq!(
            s.residual_sq,
            alg.norm_sq::<Exact>(alg.index_of(Label::W(3, 1)).unwrap())
        );
    }

    #[test]
    fn b7_instance_is_go_and_perturbation_is_not() {
        let t = theta(Family::B, 5, &[2, 3], false);
        let d = build_decomposition::<Exact>(&t).unwrap();
        let free: BTreeMap<String, Num> = [
            ("lambda".to_string(), Num::from(2)),
            ("b".to_string(), Num::from(1)),
        ]
        .into_iter()
        .collect();
        let p = go_family(&t, &free).unwrap();
        assert_eq!(p.exact("mu[1]"), Some(e("3")));
        assert_eq!(p.exact("gamma[1]"), Some(e("3/2")));
        let rep = check_go(&build_metric(&d, &p).unwrap(), 8, 1, Tolerances::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Go);
        assert!(rep.certified);
        let mut q = p.clone();
        q.set("gamma[1]", 2);
        q.set("gamma[2]", 2);
        let rep = check_go(&build_metric(&d, &q).unwrap(), 8, 1, Tolerances::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::NotGo);
        assert!(rep.agreement);
        assert!(rep.failing_witness.is_some());
    }

    #[test]
    fn normal_metric_has_no_obstructions() {
        let t = theta(Family::A, 4, &[1, 1, 1, 1, 1], false);
        let d = build_decomposition::<Exact>(&t).unwrap();
        let op = build_metric(&d, &normal_params(&d, 1).unwrap()).unwrap();
        assert!(obstruction_scan(&op).is_empty());
        let mut p = normal_params(&d, 1).unwrap();
        p.set("mu[3,1]", 2);
        let op = build_metric(&d, &p).unwrap();
        let facts = obstruction_scan(&op);
        assert!(facts
            .iter()
            .any(|f| f.pieces.iter().any(|s| s.starts_with("M21"))
                && f.pieces.iter().any(|s| s.starts_with("M31"))));
    }

    fn a3_alpha1(mu21: i64, mu22: i64, b: i64) -> MetricParams {
        MetricParams::new("A3_alpha1")
            .with("mu1", 3)
            .with("mu21", mu21)
            .with("mu22", mu22)
            .with("b", b)
    }

    fn x_of(d: &Decomposition<Exact>, terms: &[(usize, usize, i64)]) -> Vec<Exact> {
        let mut k = vec![Exact::zero(); d.algebra.dim()];
        for &(i, j, c) in terms {
            k[d.algebra.index_of(Label::W(i, j)).unwrap()] = Exact::from_i64(c);
        }
        d.project(&k, Target::MTheta)
    }

    #[test]
    fn a3_alpha1_proof_vectors() {
        let t = theta(Family::A, 3, &[2, 1, 1], false);
        let d = build_decomposition::<Exact>(&t).unwrap();
        let go = build_metric(&d, &a3_alpha1(4, 4, 2)).unwrap();
        let s = geodesic_residual(&go, &x_of(&d, &[(4, 3, 1), (3, 1, 1)])).unwrap();
        assert!(s.residual_sq.is_zero());
        assert_eq!(s.witness_z, Some(vec![e("1/2")]));
        let x = x_of(&d, &[(4, 3, 1), (3, 2, 1), (4, 1, 2)]);
        assert!(geodesic_residual(&go, &x).unwrap().residual_sq.is_zero());
        let off = build_metric(&d, &a3_alpha1(4, 4, 1)).unwrap();
        assert!(!geodesic_residual(&off, &x).unwrap().residual_sq.is_zero());
        let x = x_of(&d, &[(3, 1, 1), (3, 2, 1), (4, 2, 1), (4, 1, 1)]);
        assert!(geodesic_residual(&go, &x).unwrap().residual_sq.is_zero());
        let split = build_metric(&d, &a3_alpha1(4, 5, 0)).unwrap();
        assert!(!geodesic_residual(&split, &x).unwrap().residual_sq.is_zero());
    }

    #[test]
    fn d_alpha_l_gamma_of_last_piece_must_match() {
        let t = theta(Family::D, 5, &[1, 1, 1, 1, 1], true);
        let d = build_decomposition::<Exact>(&t).unwrap();
        let free: BTreeMap<String, Num> = [("b".to_string(), Num::from(1))].into_iter().collect();
        let mut p = go_family(&t, &free).unwrap();
        assert_eq!(p.exact("gamma[4]"), Some(e("3/2")));
        p.set("gamma[4]", Num::Exact(e("7/4")));
        let rep = check_go(&build_metric(&d, &p).unwrap(), 8, 1, Tolerances::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::NotGo);
        assert!(rep.agreement);
    }

    #[test]
    fn d_both_split_family_is_go() {
        let t = theta(Family::D, 5, &[1, 1, 1, 2], true);
        let d = build_decomposition::<Exact>(&t).unwrap();
        let free: BTreeMap<String, Num> = [("b".to_string(), Num::from(1))].into_iter().collect();
        let p = go_family(&t, &free).unwrap();
        assert_eq!(p.exact("lambda2[4,1]"), Some(e("3")));
        assert_eq!(p.exact("lambda1[4,1]"), Some(e("1")));
        let rep = check_go(&build_metric(&d, &p).unwrap(), 8, 1, Tolerances::default()).unwrap();
        assert!(rep.certified);
    }

    #[test]
    fn float_mode_detects_small_coupling_error() {
        let t = theta(Family::A, 3, &[2, 1, 1], false);
        let d = build_decomposition::<f64>(&t).unwrap();
        let p = MetricParams::new("A3_alpha1")
            .with("mu1", 3.0)
            .with("mu21", 4.0)
            .with("mu22", 4.0)
            .with("b", 2.01);
        let rep = check_go(&build_metric(&d, &p).unwrap(), 16, 1, Tolerances::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::NotGo);
        assert!(rep.failing_witness.as_ref().unwrap().residual > 1e-6);
        assert_eq!(rep.exit_code(), 1);
    }
}
