//! Invariant metric operators on `m_Θ`.
//!
//! A metric is stored as the matrix of its operator `A` in the adapted basis
//! of the [`Decomposition`], so `g(X, Y) = (AX, Y)`. Each case has a
//! parameter schema and a template that places every parameter at fixed
//! matrix positions with a sign. Couplings only ever join basis vectors of
//! equal norm, so the templates are symmetric and self-adjoint at once.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::json;

use crate::error::{Error, Result};
use crate::flag_manifold::{random_isotropy_element, CaseKind, Decomposition};
use crate::lie_algebra::Family;
use crate::matrix::{leading_minors_until_nonpositive, symmetric_eigenvalues, Mat};
use crate::scalar::{Exact, Field, Mode, Num};

/// Named parameter values for one case.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricParams {
    pub case: String,
    pub values: BTreeMap<String, Num>,
}

impl MetricParams {
    pub fn new(case: impl Into<String>) -> Self {
        MetricParams {
            case: case.into(),
            values: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, v: impl Into<Num>) -> Self {
        self.values.insert(name.to_string(), v.into());
        self
    }

    pub fn set(&mut self, name: &str, v: impl Into<Num>) {
        self.values.insert(name.to_string(), v.into());
    }

    pub fn get(&self, name: &str) -> Option<&Num> {
        self.values.get(name)
    }

    /// Exact value of a parameter, when present and exact.
    pub fn exact(&self, name: &str) -> Option<Exact> {
        match self.values.get(name)? {
            Num::Exact(e) => Some(e.clone()),
            Num::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.values.values().all(|v| matches!(v, Num::Exact(_)))
    }

    /// Every value multiplied by `c`.
    pub fn scaled(&self, c: &Exact) -> MetricParams {
        let values = self
            .values
            .iter()
            .map(|(k, v)| {
                let nv = match v {
                    Num::Exact(e) => Num::Exact(e.clone() * c.clone()),
                    Num::Float(x) => Num::Float(x * c.to_f64()),
                };
                (k.clone(), nv)
            })
            .collect();
        MetricParams {
            case: self.case.clone(),
            values,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let values: serde_json::Map<String, serde_json::Value> = self
            .values
            .iter()
            .map(|(k, v)| (k.clone(), v.to_json()))
            .collect();
        json!({"case": self.case, "values": values})
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let case = v
            .get("case")
            .and_then(|c| c.as_str())
            .ok_or_else(|| Error::Parse("parameter file needs a string field `case`".into()))?;
        let obj = v
            .get("values")
            .and_then(|c| c.as_object())
            .ok_or_else(|| Error::Parse("parameter file needs an object field `values`".into()))?;
        let mut out = MetricParams::new(case);
        for (k, val) in obj {
            out.values.insert(k.clone(), Num::from_json(val)?);
        }
        Ok(out)
    }
}

impl fmt::Display for MetricParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

impl Serialize for MetricParams {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for MetricParams {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        MetricParams::from_json(&v).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    /// Eigenvalue-type parameter on the diagonal; must be positive.
    Diagonal,
    /// Off-diagonal coupling between equivalent submodules; any sign.
    Coupling,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    /// Number of diagonal entries (or coupled pairs) the parameter fills.
    pub multiplicity: usize,
}

/// One nonzero position of a metric template: `A[row][col] = sign * param`
/// (and the symmetric entry).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TemplateEntry {
    pub row: usize,
    pub col: usize,
    pub param: usize,
    pub sign: i64,
}

/// Free parameters of the invariant metrics of a flag and their positions.
#[derive(Clone, Debug)]
pub struct Schema {
    pub case: String,
    pub dim: usize,
    pub params: Vec<ParamSpec>,
    pub entries: Vec<TemplateEntry>,
}

impl Schema {
    pub fn count(&self) -> usize {
        self.params.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "case": self.case,
            "dim_m_theta": self.dim,
            "count": self.count(),
            "params": self.params.iter().map(|p| json!({
                "name": p.name,
                "kind": p.kind,
                "multiplicity": p.multiplicity,
                "constraint": match p.kind { ParamKind::Diagonal => "> 0", ParamKind::Coupling => "real" },
            })).collect::<Vec<_>>(),
        })
    }

    /// Matrix with every parameter set to the given values.
    fn assemble<F: Field>(&self, vals: &[F]) -> Mat<F> {
        let mut m = Mat::zeros(self.dim, self.dim);
        for e in &self.entries {
            let v = if e.sign < 0 {
                -vals[e.param].clone()
            } else {
                vals[e.param].clone()
            };
            m.set(e.row, e.col, v.clone());
            if e.row != e.col {
                m.set(e.col, e.row, v);
            }
        }
        m
    }
}

struct SchemaBuilder<'a, F: Field> {
    dec: &'a Decomposition<F>,
    params: Vec<ParamSpec>,
    entries: Vec<TemplateEntry>,
}

impl<'a, F: Field> SchemaBuilder<'a, F> {
    fn range(&self, sub: &str) -> std::ops::Range<usize> {
        let i = self
            .dec
            .submodule_index(sub)
            .unwrap_or_else(|| panic!("submodule {sub} missing in case {}", self.dec.case));
        self.dec.submodules[i].range()
    }

    fn param(&mut self, name: String, kind: ParamKind) -> usize {
        self.params.push(ParamSpec {
            name,
            kind,
            multiplicity: 0,
        });
        self.params.len() - 1
    }

    fn put(&mut self, p: usize, row: usize, col: usize, sign: i64) {
        self.params[p].multiplicity += 1;
        self.entries.push(TemplateEntry {
            row,
            col,
            param: p,
            sign,
        });
    }

    /// `name * I` on the listed submodules.
    fn scalar(&mut self, name: String, subs: &[&str]) {
        let p = self.param(name, ParamKind::Diagonal);
        for s in subs {
            for i in self.range(s) {
                self.put(p, i, i, 1);
            }
        }
    }

    /// `name * diag(signs)` between two equally sized index ranges.
    fn couple_ranges(
        &mut self,
        name: String,
        a: std::ops::Range<usize>,
        b: std::ops::Range<usize>,
        signs: &[i64],
    ) {
        assert_eq!(a.len(), b.len(), "coupled ranges must match");
        let p = self.param(name, ParamKind::Coupling);
        for (k, (i, j)) in a.zip(b).enumerate() {
            let sign = if signs.is_empty() { 1 } else { signs[k] };
            self.put(p, i, j, sign);
        }
    }

    fn couple(&mut self, name: String, a: &str, b: &str) {
        let (ra, rb) = (self.range(a), self.range(b));
        self.couple_ranges(name, ra, rb, &[]);
    }

    fn has(&self, sub: &str) -> bool {
        self.dec.submodule_index(sub).is_some()
    }

    /// `[[λ1 I, b I], [b I, λ2 I]]` on `W{mn} ⊕ U{mn}`.
    fn wu(&mut self, prefix: (&str, &str, &str), m: usize, n: usize) {
        let (w, u) = (format!("W{m}{n}"), format!("U{m}{n}"));
        self.scalar(format!("{}[{m},{n}]", prefix.0), &[&w]);
        self.scalar(format!("{}[{m},{n}]", prefix.1), &[&u]);
        self.couple(format!("{}[{m},{n}]", prefix.2), &w, &u);
    }

    /// Symmetric block on the one-dimensional `V1, ..., V{top}` (type C).
    fn m0(&mut self, top: usize) {
        for i in 1..=top {
            self.scalar(format!("mu0[{i}]"), &[&format!("V{i}")]);
        }
        for m in 1..=top {
            for n in 1..m {
                self.couple(format!("a[{m},{n}]"), &format!("V{m}"), &format!("V{n}"));
            }
        }
    }

    fn u_blocks(&mut self, name: &str, top: usize) {
        for i in 1..=top {
            let s = format!("U{i}");
            if self.has(&s) {
                self.scalar(format!("{name}[{i}]"), &[&s]);
            }
        }
    }

    fn pairs(top: usize) -> Vec<(usize, usize)> {
        (1..=top)
            .flat_map(|m| (1..m).map(move |n| (m, n)))
            .collect()
    }
}

/// Parameter schema and template for a decomposition.
pub fn param_schema<F: Field>(dec: &Decomposition<F>) -> Result<Schema> {
    let mut b = SchemaBuilder {
        dec,
        params: Vec::new(),
        entries: Vec::new(),
    };
    let r = dec.theta.r();
    match dec.case {
        CaseKind::Degenerate => {}
        CaseKind::AGeneric => {
            for (m, n) in SchemaBuilder::<F>::pairs(r) {
                b.scalar(format!("mu[{m},{n}]"), &[&format!("M{m}{n}")]);
            }
        }
        CaseKind::A3Empty => {
            for (i, (x, y)) in [("m21", "m43"), ("m31", "m42"), ("m32", "m41")]
                .into_iter()
                .enumerate()
            {
                let i = i + 1;
                b.scalar(format!("mu1[{i}]"), &[x]);
                b.scalar(format!("mu2[{i}]"), &[y]);
                b.couple(format!("b[{i}]"), x, y);
            }
        }
        CaseKind::A3Alpha(_) => {
            let single = dec.submodules[0].name.clone();
            let (s1, s2) = (
                dec.submodules[1].name.clone(),
                dec.submodules[2].name.clone(),
            );
            b.scalar("mu1".into(), &[&single]);
            b.scalar("mu21".into(), &[&s1]);
            b.scalar("mu22".into(), &[&s2]);
            let (r1, r2) = (b.range(&s1), b.range(&s2));
            b.couple_ranges("b".into(), r1, r2, &[1, -1]);
        }
        CaseKind::A3Alpha13 => {
            b.scalar("mu1".into(), &["M1"]);
            b.scalar("mu2".into(), &["M2"]);
        }
        CaseKind::A3Irreducible => b.scalar("mu".into(), &["M"]),
        CaseKind::BNoAlphaL => {
            for i in 1..=r {
                b.scalar(format!("mu[{i}]"), &[&format!("V{i}")]);
            }
            for (m, n) in SchemaBuilder::<F>::pairs(r) {
                b.wu(("lambda1", "lambda2", "b"), m, n);
            }
            b.u_blocks("gamma", r);
        }
        CaseKind::BAlphaL => {
            for i in 1..r {
                b.scalar(format!("rho[{i}]"), &[&format!("(V{i})_1")]);
                b.scalar(format!("mu[{i}]"), &[&format!("(V{i})_2")]);
            }
            for (m, n) in SchemaBuilder::<F>::pairs(r - 1) {
                b.wu(("lambda1", "lambda2", "b"), m, n);
            }
            b.u_blocks("gamma", r - 1);
        }
        CaseKind::CNoAlphaL | CaseKind::CAlphaL => {
            let top = if dec.theta.alpha_l { r - 1 } else { r };
            b.m0(top);
            for (m, n) in SchemaBuilder::<F>::pairs(top) {
                b.wu(("mu1", "mu2", "b"), m, n);
            }
            b.u_blocks("mu", top);
            if dec.theta.alpha_l {
                for n in 1..r {
                    b.scalar(format!("mu[{r},{n}]"), &[&format!("M{r}{n}")]);
                }
            }
        }
        CaseKind::C4Empty => {
            b.m0(4);
            for (k, (x, y)) in [((2, 1), (4, 3)), ((3, 1), (4, 2)), ((3, 2), (4, 1))]
                .into_iter()
                .enumerate()
            {
                let k = k + 1;
                let (wx, wy) = (format!("W{}{}", x.0, x.1), format!("W{}{}", y.0, y.1));
                let (ux, uy) = (format!("U{}{}", x.0, x.1), format!("U{}{}", y.0, y.1));
                b.scalar(format!("mu1[{k}]"), &[&wx]);
                b.scalar(format!("mu2[{k}]"), &[&wy]);
                b.scalar(format!("mu3[{k}]"), &[&ux]);
                b.scalar(format!("mu4[{k}]"), &[&uy]);
                b.couple(format!("b1[{k}]"), &wx, &ux);
                b.couple(format!("b2[{k}]"), &wy, &uy);
            }
        }
        CaseKind::C4Alpha(i) => {
            b.m0(3);
            b.scalar(format!("mu[{i}]"), &[&format!("U{i}")]);
            let msum = dec
                .summands
                .iter()
                .find(|s| s.name == "M")
                .expect("summand M");
            let (w, u) = (
                dec.submodules[msum.members[0]].name.clone(),
                dec.submodules[msum.members[1]].name.clone(),
            );
            b.scalar("muM1".into(), &[&w]);
            b.scalar("muM2".into(), &[&u]);
            b.couple("bM".into(), &w, &u);
            let nsum = dec
                .summands
                .iter()
                .find(|s| s.name == "N")
                .expect("summand N");
            let names: Vec<String> = nsum
                .members
                .iter()
                .map(|&m| dec.submodules[m].name.clone())
                .collect();
            for (k, name) in names.iter().enumerate() {
                b.scalar(format!("muN{}", k + 1), &[name]);
            }
            b.couple("bN1".into(), &names[0], &names[2]);
            b.couple("bN2".into(), &names[1], &names[3]);
        }
        CaseKind::DNoAlphaL | CaseKind::DBoth => {
            let top = if dec.theta.alpha_l { r - 1 } else { r };
            for (m, n) in SchemaBuilder::<F>::pairs(top) {
                b.wu(("lambda1", "lambda2", "b"), m, n);
            }
            b.u_blocks("gamma", top);
            if dec.theta.alpha_l {
                for n in 1..r {
                    b.scalar(format!("lambda1[{r},{n}]"), &[&format!("(M{r}{n})_1")]);
                    b.scalar(format!("lambda2[{r},{n}]"), &[&format!("(M{r}{n})_2")]);
                }
            }
        }
        CaseKind::DAlphaLOnly => {
            let p = r - 1;
            for (m, n) in SchemaBuilder::<F>::pairs(r.saturating_sub(2)) {
                b.wu(("lambda1", "lambda2", "b"), m, n);
            }
            b.u_blocks("gamma", p - 1);
            for n in 1..p {
                let (ms, ns) = (format!("M{n}"), format!("N{n}"));
                b.scalar(format!("lambda1[{p},{n}]"), &[&ms]);
                b.scalar(format!("lambda2[{p},{n}]"), &[&ns]);
                // The rotation generated by u(l, .) inside k_Θ carries the
                // w/u pairs of block r-1 onto the pairs through index l, so a
                // single coupling serves both parts of S_n.
                b.couple(format!("b[{p},{n}]"), &ms, &ns);
            }
            b.scalar(format!("gamma[{p}]"), &[&format!("V{p}")]);
        }
    }
    Ok(Schema {
        case: dec.case.tag(),
        dim: dec.dim_m(),
        params: b.params,
        entries: b.entries,
    })
}

/// A metric operator in the adapted basis of `m_Θ`.
#[derive(Clone, Debug)]
pub struct MetricOperator<'a, F: Field> {
    pub dec: &'a Decomposition<F>,
    pub matrix: Mat<F>,
    pub params: Option<MetricParams>,
}

impl<'a, F: Field> MetricOperator<'a, F> {
    /// Wraps an arbitrary matrix (for example a hand-built candidate that
    /// is not in any schema); checks shape, self-adjointness and positivity.
    pub fn from_matrix(dec: &'a Decomposition<F>, matrix: Mat<F>) -> Result<Self> {
        let n = dec.dim_m();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::Shape(format!(
                "metric matrix is {}x{}, m_Θ has dimension {n}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let op = MetricOperator {
            dec,
            matrix,
            params: None,
        };
        if !op.is_self_adjoint() {
            return Err(Error::Params("metric matrix is not self-adjoint".into()));
        }
        op.check_positive()?;
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Gram-weighted matrix `N A` with `N` the diagonal of basis norms.
    pub fn gram(&self) -> Mat<F> {
        Mat::from_fn(self.dim(), self.dim(), |i, j| {
            self.dec.m_norms[i].clone() * self.matrix.get(i, j).clone()
        })
    }

    pub fn is_self_adjoint(&self) -> bool {
        let g = self.gram();
        let tol = 1e-12 * (1.0 + g.max_abs());
        (0..self.dim())
            .all(|i| (0..i).all(|j| (g.get(i, j).clone() - g.get(j, i).clone()).negligible(tol)))
    }

    /// `A y` in adapted coordinates.
    pub fn apply(&self, y: &[F]) -> Vec<F> {
        self.matrix.mul_vec(y)
    }

    /// Eigenvalues of `A` (ascending, float), via the symmetric matrix
    /// `N^{1/2} A N^{-1/2}`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.symmetrized_f64())
    }

    pub(crate) fn symmetrized_f64(&self) -> Mat<f64> {
        let n: Vec<f64> = self.dec.m_norms.iter().map(|x| x.to_f64().sqrt()).collect();
        Mat::from_fn(self.dim(), self.dim(), |i, j| {
            n[i] * self.matrix.get(i, j).to_f64() / n[j]
        })
    }

    fn check_positive(&self) -> Result<()> {
        match F::MODE {
            Mode::Exact => {
                let minors = leading_minors_until_nonpositive(&self.gram());
                if let Some(last) = minors.last() {
                    if last.signum() <= 0 {
                        return Err(Error::Positivity(format!(
                            "leading principal minor of order {} is {} (not positive)",
                            minors.len(),
                            serde_json::to_string(&last.to_json()).unwrap_or_default()
                        )));
                    }
                }
                Ok(())
            }
            Mode::Float => {
                if self.dim() == 0 {
                    return Ok(());
                }
                let min = self.eigenvalues()[0];
                if min <= 1e-10 {
                    return Err(Error::Positivity(format!(
                        "smallest eigenvalue {min:e} is below 1e-10"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Index of the isotypical summand containing each adapted basis vector.
    pub fn summand_of_index(&self) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for (k, s) in self.dec.summands.iter().enumerate() {
            for &m in &s.members {
                for i in self.dec.submodules[m].range() {
                    out[i] = k;
                }
            }
        }
        out
    }

    /// No entries couple different isotypical summands.
    pub fn is_block_diagonal(&self) -> bool {
        let cls = self.summand_of_index();
        (0..self.dim())
            .all(|i| (0..self.dim()).all(|j| cls[i] == cls[j] || self.matrix.get(i, j).is_zero()))
    }

    pub fn is_normal(&self) -> bool {
        let Some(first) = (self.dim() > 0).then(|| self.matrix.get(0, 0).clone()) else {
            return true;
        };
        let scaled = Mat::<F>::identity(self.dim()).scale(&first);
        let tol = 1e-12 * (1.0 + self.matrix.max_abs());
        self.matrix
            .sub(&scaled)
            .map(|d| d.max_abs() <= tol)
            .unwrap_or(false)
            && (F::MODE == Mode::Float
                || self
                    .matrix
                    .sub(&scaled)
                    .map(|d| d.is_zero())
                    .unwrap_or(false))
    }
}

/// Assembles the metric operator for the given parameter values.
pub fn build_metric<'a, F: Field>(
    dec: &'a Decomposition<F>,
    params: &MetricParams,
) -> Result<MetricOperator<'a, F>> {
    let schema = param_schema(dec)?;
    if params.case != schema.case {
        return Err(Error::Params(format!(
            "parameters are for case `{}` but the flag {} is case `{}`",
            params.case, dec.theta, schema.case
        )));
    }
    let mut vals = Vec::with_capacity(schema.count());
    for p in &schema.params {
        let v = params.get(&p.name).ok_or_else(|| {
            Error::Params(format!(
                "missing parameter `{}` for case `{}`",
                p.name, schema.case
            ))
        })?;
        let v: F = v.to_field()?;
        if p.kind == ParamKind::Diagonal && v.signum() <= 0 {
            return Err(Error::Params(format!(
                "parameter `{}` must be positive",
                p.name
            )));
        }
        vals.push(v);
    }
    if let Some(extra) = params.values.keys().find(|k| schema.index_of(k).is_none()) {
        return Err(Error::Params(format!(
            "unknown parameter `{extra}` for case `{}`; expected {}",
            schema.case,
            schema.names().join(", ")
        )));
    }
    let op = MetricOperator {
        dec,
        matrix: schema.assemble(&vals),
        params: Some(params.clone()),
    };
    op.check_positive()?;
    Ok(op)
}

/// The normal metric `μ I` expressed through the case schema.
pub fn normal_params(dec: &Decomposition<impl Field>, mu: impl Into<Num>) -> Result<MetricParams> {
    let schema = param_schema(dec)?;
    let mu = mu.into();
    let mut p = MetricParams::new(schema.case.clone());
    for s in &schema.params {
        let v = match s.kind {
            ParamKind::Diagonal => mu.clone(),
            ParamKind::Coupling => Num::Exact(Exact::zero()),
        };
        p.values.insert(s.name.clone(), v);
    }
    Ok(p)
}

/// Outcome of [`check_invariance`].
#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub passed: bool,
    /// Largest entry of `[ad(W)|m, A]` over the `k_Θ` basis.
    pub algebra_residual: f64,
    /// Largest entry of `[Ad(k)|m, A]` over generators and samples.
    pub group_residual: f64,
    /// Names of basis elements or group elements that failed.
    pub failures: Vec<String>,
}

/// Matrix of `ad(e_w)` restricted to `m_Θ` in adapted coordinates.
pub fn ad_matrix<F: Field>(dec: &Decomposition<F>, w: usize) -> Mat<F> {
    dec.ad_restricted(w)
}

/// Matrix of `Ad(k)` restricted to `m_Θ` in adapted coordinates.
pub fn ad_group_matrix<F: Field>(dec: &Decomposition<F>, k: &Mat<F>) -> Result<Mat<F>> {
    dec.ad_group_restricted(k)
}

fn commutator_residual<F: Field>(d: &Mat<F>, a: &Mat<F>) -> f64 {
    d.commutator(a)
        .map(|c| c.max_abs())
        .unwrap_or(f64::INFINITY)
}

fn commutes<F: Field>(d: &Mat<F>, a: &Mat<F>, tol: f64) -> bool {
    match F::MODE {
        Mode::Exact => d.commutator(a).map(|c| c.is_zero()).unwrap_or(false),
        Mode::Float => commutator_residual(d, a) <= tol,
    }
}

/// Checks `[ad(W)|m, A] = 0` for the `k_Θ` basis only.
pub fn check_algebra_invariance<F: Field>(op: &MetricOperator<F>) -> (f64, Vec<String>) {
    let tol = 1e-9 * (1.0 + op.matrix.max_abs());
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (&w, d) in op.dec.k_theta.iter().zip(op.dec.ad_k_theta()) {
        worst = worst.max(commutator_residual(d, &op.matrix));
        if !commutes(d, &op.matrix, tol) {
            failures.push(format!("ad({})", op.dec.algebra.label(w)));
        }
    }
    (worst, failures)
}

/// Verifies that `A` commutes with the isotropy representation: with
/// `ad(W)` for the `k_Θ` basis and with `Ad(k)` for every discrete
/// generator plus `samples` random elements of the identity component.
pub fn check_invariance<F: Field>(
    op: &MetricOperator<F>,
    samples: usize,
    seed: u64,
) -> InvarianceReport {
    let (algebra_residual, mut failures) = check_algebra_invariance(op);
    let tol = 1e-9 * (1.0 + op.matrix.max_abs());
    let mut group_residual: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampled: Vec<(String, Mat<F>)> = (0..samples)
        .map(|i| {
            (
                format!("random[{i}]"),
                random_isotropy_element(op.dec, &mut rng),
            )
        })
        .collect();
    let gens = op
        .dec
        .discrete_generators
        .iter()
        .map(|g| (g.name.clone(), g.matrix.clone()));
    for (name, k) in gens.chain(sampled) {
        match ad_group_matrix(op.dec, &k) {
            Ok(d) => {
                group_residual = group_residual.max(commutator_residual(&d, &op.matrix));
                if !commutes(&d, &op.matrix, tol) {
                    failures.push(name);
                }
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    InvarianceReport {
        passed: failures.is_empty(),
        algebra_residual,
        group_residual,
        failures,
    }
}

/// Deterministic random parameters: diagonal values in `[1, 5]`, couplings
/// in `[-1, 1]`, with couplings scaled down until every row of the matrix
/// is strictly diagonally dominant.
pub fn random_invariant_metric<F: Field>(
    dec: &Decomposition<F>,
    seed: u64,
) -> Result<MetricParams> {
    let schema = param_schema(dec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals: Vec<Exact> = schema
        .params
        .iter()
        .map(|p| match p.kind {
            ParamKind::Diagonal => Exact::ratio(rng.gen_range(4..=20), 4),
            ParamKind::Coupling => Exact::ratio(rng.gen_range(-4..=4), 4),
        })
        .collect();
    dominate(&schema, &mut vals);
    let mut out = MetricParams::new(schema.case.clone());
    for (p, v) in schema.params.iter().zip(vals) {
        out.values.insert(p.name.clone(), Num::Exact(v));
    }
    Ok(out)
}

/// Halves all couplings until each row's diagonal exceeds the sum of its
/// off-diagonal magnitudes.
fn dominate(schema: &Schema, vals: &mut [Exact]) {
    loop {
        let mut diag = vec![Exact::zero(); schema.dim];
        let mut off = vec![Exact::zero(); schema.dim];
        for e in &schema.entries {
            let v = vals[e.param].clone();
            if e.row == e.col {
                diag[e.row] = v;
            } else {
                let a = Field::abs(&v);
                off[e.row] += a.clone();
                off[e.col] += a;
            }
        }
        if diag
            .iter()
            .zip(&off)
            .all(|(d, o)| d.clone() - o.clone() > Exact::zero())
        {
            return;
        }
        for (p, v) in schema.params.iter().zip(vals.iter_mut()) {
            if p.kind == ParamKind::Coupling {
                *v = v.clone() * Exact::ratio(1, 2);
            }
        }
    }
}

/// Uniform random draw for every schema parameter, without any dominance
/// adjustment; used to explore the parameter space around constrained
/// families. Positivity is not guaranteed.
pub fn raw_random_params(schema: &Schema, rng: &mut impl Rng) -> MetricParams {
    let mut out = MetricParams::new(schema.case.clone());
    for p in &schema.params {
        let v = match p.kind {
            ParamKind::Diagonal => Exact::ratio(rng.gen_range(4..=20), 4),
            ParamKind::Coupling => Exact::ratio(rng.gen_range(-4..=4), 4),
        };
        out.values.insert(p.name.clone(), Num::Exact(v));
    }
    out
}

/// Whether a family is covered by the case tables at all.
pub fn is_covered(family: Family, rank: usize) -> bool {
    rank >= family.min_rank()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flag_manifold::{build_decomposition, enumerate_thetas, ThetaSpec};
    use crate::lie_algebra::LieTypeSpec;

    fn theta(f: Family, l: usize, p: &[usize], al: bool) -> ThetaSpec {
        ThetaSpec::new(LieTypeSpec::new(f, l).unwrap(), p.to_vec(), al, None).unwrap()
    }

    fn q(s: &str) -> Num {
        Num::Exact(s.parse().unwrap())
    }

    #[test]
    fn schema_counts() {
        let d =
            build_decomposition::<Exact>(&theta(Family::A, 4, &[1, 1, 1, 1, 1], false)).unwrap();
        assert_eq!(param_schema(&d).unwrap().count(), 10);
        let d = build_decomposition::<Exact>(&theta(Family::B, 5, &[2, 3], false)).unwrap();
        let s = param_schema(&d).unwrap();
        assert_eq!(s.count(), 7, "{:?}", s.names());
        let d = build_decomposition::<Exact>(&theta(Family::A, 3, &[3, 1], false)).unwrap();
        assert_eq!(param_schema(&d).unwrap().names(), vec!["mu"]);
    }

    #[test]
    fn normal_metric_is_identity() {
        let d = build_decomposition::<Exact>(&theta(Family::A, 3, &[1, 1, 1, 1], false)).unwrap();
        let p = normal_params(&d, 1).unwrap();
        let op = build_metric(&d, &p).unwrap();
        assert_eq!(op.matrix, Mat::identity(6));
    }

    #[test]
    fn indefinite_coupling_rejected() {
        let d = build_decomposition::<Exact>(&theta(Family::B, 5, &[2, 3], false)).unwrap();
        let mut p = normal_params(&d, 2).unwrap();
        p.set("b[2,1]", 3);
        assert!(matches!(build_metric(&d, &p), Err(Error::Positivity(_))));
    }

    #[test]
    fn a3_alpha1_display() {
        let d = build_decomposition::<Exact>(&theta(Family::A, 3, &[2, 1, 1], false)).unwrap();
        let p = MetricParams::new("A3_alpha1")
            .with("mu1", 3)
            .with("mu21", 4)
            .with("mu22", 4)
            .with("b", 2);
        let op = build_metric(&d, &p).unwrap();
        assert_eq!(op.matrix.get(1, 3), &Exact::from_i64(2));
        assert_eq!(op.matrix.get(2, 4), &Exact::from_i64(-2));
        assert!(check_invariance(&op, 2, 1).passed);
    }

    #[test]
    fn random_metrics_are_invariant_everywhere() {
        for (f, l) in [
            (Family::A, 3),
            (Family::A, 4),
            (Family::B, 5),
            (Family::C, 3),
            (Family::C, 4),
            (Family::D, 5),
        ] {
            for t in enumerate_thetas(&LieTypeSpec::new(f, l).unwrap()) {
                let d = build_decomposition::<Exact>(&t).unwrap();
                let p = random_invariant_metric(&d, 11).unwrap();
                let op = build_metric(&d, &p).unwrap();
                assert!(op.is_block_diagonal(), "{t}");
                assert!(op.is_self_adjoint(), "{t}");
                let rep = check_invariance(&op, 1, 3);
                assert!(rep.passed, "{t} {:?}", rep.failures);
            }
        }
    }

    #[test]
    fn params_json_round_trip() {
        let p = MetricParams::new("A3_alpha1")
            .with("mu1", q("3/2"))
            .with("b", Num::Float(0.25));
        let s = serde_json::to_string(&p).unwrap();
        let back: MetricParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(s.contains("\"3/2\""));
    }

    #[test]
    fn random_params_are_deterministic() {
        let d = build_decomposition::<Exact>(&theta(Family::C, 3, &[1, 1, 1], false)).unwrap();
        assert_eq!(
            random_invariant_metric(&d, 5).unwrap(),
            random_invariant_metric(&d, 5).unwrap()
        );
    }
}
