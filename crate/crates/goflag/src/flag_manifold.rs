//! Flags `K/K_Θ`: encodings of `Θ`, the reductive split `k = k_Θ ⊕ m_Θ`,
//! irreducible submodules, isotypical summands and isotropy generators.
//!
//! `Θ` is stored as a partition `(l_1, ..., l_r)` of the index set plus
//! flags for the last simple root(s). Indices `i` and `i+1` share a block
//! exactly when `α_i ∈ Θ`.
//!
//! All bases are built in exact arithmetic and then converted to the
//! requested [`Field`].

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::lie_algebra::{conjugate, Family, Label, LieAlgebra, LieTypeSpec};
use crate::matrix::{cayley, Mat};
use crate::scalar::{Exact, Field};

/// A subset `Θ` of simple roots, encoded by a partition and last-root flags.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThetaSpec {
    pub lie_type: LieTypeSpec,
    pub partition: Vec<usize>,
    /// `α_l ∈ Θ` (types B, C, D).
    pub alpha_l: bool,
    /// `α_{l-1} ∈ Θ`; determined by the partition (`l_r >= 2`) and stored for
    /// reporting.
    pub alpha_lm1: bool,
}

/// Which family of decompositions and metric forms applies to a flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseKind {
    /// `Θ = Σ`: the flag is a point.
    Degenerate,
    AGeneric,
    A3Empty,
    /// `Θ = {α_i}`, `i ∈ {1, 2, 3}`.
    A3Alpha(u8),
    A3Alpha13,
    /// `Θ = {α_1, α_2}` or `{α_2, α_3}`.
    A3Irreducible,
    BNoAlphaL,
    BAlphaL,
    CNoAlphaL,
    CAlphaL,
    C4Empty,
    /// `Θ = {α_i}` on C_4, `i ∈ {1, 2, 3}`.
    C4Alpha(u8),
    DNoAlphaL,
    DBoth,
    DAlphaLOnly,
}

impl CaseKind {
    /// Tag used in parameter files.
    pub fn tag(&self) -> String {
        match self {
            CaseKind::Degenerate => "degenerate".into(),
            CaseKind::AGeneric => "A_generic".into(),
            CaseKind::A3Empty => "A3_empty".into(),
            CaseKind::A3Alpha(i) => format!("A3_alpha{i}"),
            CaseKind::A3Alpha13 => "A3_alpha1_alpha3".into(),
            CaseKind::A3Irreducible => "A3_irreducible".into(),
            CaseKind::BNoAlphaL => "B_no_alpha_l".into(),
            CaseKind::BAlphaL => "B_alpha_l".into(),
            CaseKind::CNoAlphaL => "C_no_alpha_l".into(),
            CaseKind::CAlphaL => "C_alpha_l".into(),
            CaseKind::C4Empty => "C4_empty".into(),
            CaseKind::C4Alpha(i) => format!("C4_alpha{i}"),
            CaseKind::DNoAlphaL => "D_no_alpha_l".into(),
            CaseKind::DBoth => "D_both".into(),
            CaseKind::DAlphaLOnly => "D_alpha_l_only".into(),
        }
    }

    /// Flags whose equivalences go beyond the generic description of the
    /// family (the four C_4 table cases).
    pub fn is_special(&self) -> bool {
        matches!(self, CaseKind::C4Empty | CaseKind::C4Alpha(_))
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl ThetaSpec {
    /// Validates a partition and flags. `alpha_lm1`, when given, must agree
    /// with the partition.
    pub fn new(
        lie_type: LieTypeSpec,
        partition: Vec<usize>,
        alpha_l: bool,
        alpha_lm1: Option<bool>,
    ) -> Result<Self> {
        let l = lie_type.rank;
        let total = match lie_type.family {
            Family::A => l + 1,
            _ => l,
        };
        if partition.is_empty() || partition.contains(&0) {
            return Err(Error::Theta("partition parts must be positive".into()));
        }
        let sum: usize = partition.iter().sum();
        if sum != total {
            return Err(Error::Theta(format!(
                "partition {partition:?} sums to {sum}, expected {total} for {lie_type}"
            )));
        }
        let last = *partition.last().expect("nonempty");
        let derived_lm1 = match lie_type.family {
            Family::A => {
                if alpha_l || alpha_lm1 == Some(true) {
                    return Err(Error::Theta(
                        "last-root flags apply to types B, C and D; for type A the partition encodes every root"
                            .into(),
                    ));
                }
                false
            }
            _ => last >= 2,
        };
        if let Some(v) = alpha_lm1 {
            if lie_type.family != Family::A && v != derived_lm1 {
                return Err(Error::Theta(format!(
                    "alpha_(l-1) {} Θ contradicts the last block size l_r = {last}",
                    if v { "∈" } else { "∉" }
                )));
            }
        }
        Ok(ThetaSpec {
            lie_type,
            partition,
            alpha_l,
            alpha_lm1: derived_lm1,
        })
    }

    /// Builds a `ThetaSpec` from the set of simple-root indices in `Θ` (1-based).
    pub fn from_roots(lie_type: LieTypeSpec, roots: &BTreeSet<usize>) -> Result<Self> {
        let l = lie_type.rank;
        if let Some(&bad) = roots.iter().find(|&&i| i == 0 || i > l) {
            return Err(Error::Theta(format!(
                "simple root α_{bad} does not exist for {lie_type}"
            )));
        }
        let n = match lie_type.family {
            Family::A => l + 1,
            _ => l,
        };
        let mut partition = Vec::new();
        let mut size = 1;
        for i in 1..n {
            if roots.contains(&i) {
                size += 1;
            } else {
                partition.push(size);
                size = 1;
            }
        }
        partition.push(size);
        let alpha_l = lie_type.family != Family::A && roots.contains(&l);
        ThetaSpec::new(lie_type, partition, alpha_l, None)
    }

    /// Indices of the simple roots in `Θ`, ascending.
    pub fn roots(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut idx = 0;
        for &p in &self.partition {
            for s in 1..p {
                out.push(idx + s);
            }
            idx += p;
        }
        if self.lie_type.family != Family::A && self.alpha_l {
            out.push(self.lie_type.rank);
        }
        out
    }

    /// `Θ` written as a set, e.g. `{a1,a3}`.
    pub fn theta_label(&self) -> String {
        let parts: Vec<String> = self.roots().iter().map(|i| format!("a{i}")).collect();
        format!("{{{}}}", parts.join(","))
    }

    pub fn r(&self) -> usize {
        self.partition.len()
    }

    /// `(offset, size)` of every block; block `b` holds indices
    /// `offset+1 ..= offset+size`.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        let mut off = 0;
        self.partition
            .iter()
            .map(|&p| {
                let b = (off, p);
                off += p;
                b
            })
            .collect()
    }

    pub fn is_degenerate(&self) -> bool {
        self.r() == 1 && (self.lie_type.family == Family::A || self.alpha_l)
    }

    pub fn case(&self) -> CaseKind {
        if self.is_degenerate() {
            return CaseKind::Degenerate;
        }
        let roots = self.roots();
        let l = self.lie_type.rank;
        match self.lie_type.family {
            Family::A if l == 3 => match roots.as_slice() {
                [] => CaseKind::A3Empty,
                [i] => CaseKind::A3Alpha(*i as u8),
                [1, 3] => CaseKind::A3Alpha13,
                _ => CaseKind::A3Irreducible,
            },
            Family::A => CaseKind::AGeneric,
            Family::B if self.alpha_l => CaseKind::BAlphaL,
            Family::B => CaseKind::BNoAlphaL,
            Family::C if l == 4 && !self.alpha_l && roots.len() <= 1 => match roots.as_slice() {
                [] => CaseKind::C4Empty,
                [i] => CaseKind::C4Alpha(*i as u8),
                _ => unreachable!(),
            },
            Family::C if self.alpha_l => CaseKind::CAlphaL,
            Family::C => CaseKind::CNoAlphaL,
            Family::D if !self.alpha_l => CaseKind::DNoAlphaL,
            Family::D if self.alpha_lm1 => CaseKind::DBoth,
            Family::D => CaseKind::DAlphaLOnly,
        }
    }

    /// Diagonal `Λ_Θ` of the characteristic element: constant on blocks,
    /// distinct across blocks, and annihilated exactly by the roots in `Θ`.
    pub fn lambda(&self) -> Vec<i64> {
        let r = self.r() as i64;
        let mut out = Vec::new();
        let d_alpha_only = self.lie_type.family == Family::D && self.alpha_l && !self.alpha_lm1;
        for (b, &p) in self.partition.iter().enumerate() {
            let b = b as i64 + 1;
            let c = match self.lie_type.family {
                Family::A => r - b + 1,
                _ if d_alpha_only => {
                    if b == r {
                        -2
                    } else {
                        r - b + 1
                    }
                }
                _ if self.alpha_l => r - b,
                _ => r - b + 1,
            };
            out.extend(std::iter::repeat_n(c, p));
        }
        out
    }

    /// Characteristic element `H_Θ` as an ambient diagonal matrix.
    pub fn h_theta<F: Field>(&self) -> Mat<F> {
        let lam = self.lambda();
        let diag: Vec<i64> = match self.lie_type.family {
            Family::A => lam,
            Family::B => std::iter::once(0)
                .chain(lam.iter().copied())
                .chain(lam.iter().map(|x| -x))
                .collect(),
            Family::C | Family::D => lam.iter().copied().chain(lam.iter().map(|x| -x)).collect(),
        };
        let d: Vec<F> = diag.into_iter().map(F::from_i64).collect();
        Mat::diagonal(&d)
    }
}

impl fmt::Display for ThetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.partition.iter().map(|p| p.to_string()).collect();
        write!(f, "{} ({})", self.lie_type, parts.join(","))?;
        if self.lie_type.family != Family::A {
            write!(f, " alpha_l={}", if self.alpha_l { "in" } else { "out" })?;
        }
        Ok(())
    }
}

/// All `Θ ⊆ Σ` ordered by size and then lexicographically, including the
/// degenerate `Θ = Σ`.
pub fn enumerate_thetas(spec: &LieTypeSpec) -> Vec<ThetaSpec> {
    let l = spec.rank;
    let mut subsets: Vec<BTreeSet<usize>> = (0u64..(1u64 << l))
        .map(|mask| (1..=l).filter(|i| mask & (1 << (i - 1)) != 0).collect())
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.iter().cmp(b.iter())));
    subsets
        .iter()
        .map(|s| ThetaSpec::from_roots(*spec, s).expect("valid root subset"))
        .collect()
}

/// An irreducible `K_Θ`-submodule of `m_Θ`.
#[derive(Clone, Debug)]
pub struct Submodule<F: Field> {
    pub name: String,
    /// Equivalence class; equal classes lie in the same isotypical summand.
    pub class: usize,
    /// Position of the first basis vector inside the adapted basis of `m_Θ`.
    pub offset: usize,
    /// Basis vectors as coordinates in the distinguished basis of `k`.
    pub basis: Vec<Vec<F>>,
}

impl<F: Field> Submodule<F> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.dim()
    }
}

/// An isotypical summand: the submodules of one equivalence class.
#[derive(Clone, Debug, Serialize)]
pub struct Summand {
    pub name: String,
    pub class: usize,
    /// Indices into [`Decomposition::submodules`].
    pub members: Vec<usize>,
}

/// An element of `K_Θ` used for invariance checks.
#[derive(Clone, Debug)]
pub struct Generator<F: Field> {
    pub name: String,
    pub matrix: Mat<F>,
}

/// Target of [`Decomposition::project`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    KTheta,
    MTheta,
    Submodule(usize),
}

/// The reductive decomposition of a flag with its adapted basis.
#[derive(Clone, Debug)]
pub struct Decomposition<F: Field> {
    pub theta: ThetaSpec,
    pub case: CaseKind,
    pub algebra: Arc<LieAlgebra>,
    /// Distinguished basis elements spanning `k_Θ`.
    pub k_theta: Vec<usize>,
    /// Distinguished basis elements spanning `m_Θ`.
    pub m_std: Vec<usize>,
    /// Adapted basis of `m_Θ` in `k`-coordinates: the submodule bases
    /// concatenated in order.
    pub m_basis: Vec<Vec<F>>,
    pub m_labels: Vec<String>,
    /// Squared norms `(b, b)` of the adapted basis vectors.
    pub m_norms: Vec<F>,
    pub submodules: Vec<Submodule<F>>,
    pub summands: Vec<Summand>,
    pub discrete_generators: Vec<Generator<F>>,
    ad_cache: OnceLock<Vec<Mat<F>>>,
}

impl<F: Field> Decomposition<F> {
    /// Matrix of `ad(e_w)` restricted to `m_Θ`, in adapted coordinates, for
    /// the distinguished basis element `w` of `k`.
    pub fn ad_restricted(&self, w: usize) -> Mat<F> {
        let n = self.dim_m();
        let mut wv = vec![F::zero(); self.algebra.dim()];
        wv[w] = F::one();
        let mut out = Mat::zeros(n, n);
        for j in 0..n {
            let img = self.algebra.bracket_coords(&wv, &self.m_basis[j]);
            for (i, c) in self.project(&img, Target::MTheta).into_iter().enumerate() {
                out.set(i, j, c);
            }
        }
        out
    }

    /// [`Self::ad_restricted`] for every `k_Θ` basis element, computed once.
    pub fn ad_k_theta(&self) -> &[Mat<F>] {
        self.ad_cache.get_or_init(|| {
            self.k_theta
                .iter()
                .map(|&w| self.ad_restricted(w))
                .collect()
        })
    }

    /// Matrix of `Ad(k)` restricted to `m_Θ`, in adapted coordinates.
    pub fn ad_group_restricted(&self, k: &Mat<F>) -> Result<Mat<F>> {
        let n = self.dim_m();
        let mut out = Mat::zeros(n, n);
        for (j, b) in self.m_basis_matrices().iter().enumerate() {
            let img = self.algebra.expand(&conjugate(k, b)?)?;
            for (i, c) in self.project(&img, Target::MTheta).into_iter().enumerate() {
                out.set(i, j, c);
            }
        }
        Ok(out)
    }

    pub fn dim_m(&self) -> usize {
        self.m_basis.len()
    }

    pub fn dim_k_theta(&self) -> usize {
        self.k_theta.len()
    }

    pub fn k_theta_matrices(&self) -> Vec<Mat<F>> {
        self.k_theta
            .iter()
            .map(|&c| self.algebra.element(c))
            .collect()
    }

    pub fn m_basis_matrices(&self) -> Vec<Mat<F>> {
        self.m_basis
            .iter()
            .map(|v| self.algebra.matrix_of(v))
            .collect()
    }

    pub fn submodule_index(&self, name: &str) -> Option<usize> {
        self.submodules.iter().position(|s| s.name == name)
    }

    /// `k`-coordinates of the vector with adapted coordinates `y`.
    pub fn m_to_k(&self, y: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.algebra.dim()];
        for (b, yb) in y.iter().enumerate() {
            if yb.is_zero() {
                continue;
            }
            for (c, v) in self.m_basis[b].iter().enumerate() {
                if !v.is_zero() {
                    out[c] += yb.clone() * v.clone();
                }
            }
        }
        out
    }

    /// Coordinates of the orthogonal projection of `x` (given in
    /// `k`-coordinates) onto the target, in the target's ordered basis.
    pub fn project(&self, x: &[F], target: Target) -> Vec<F> {
        match target {
            Target::KTheta => self.k_theta.iter().map(|&c| x[c].clone()).collect(),
            Target::MTheta => (0..self.dim_m()).map(|b| self.coefficient(x, b)).collect(),
            Target::Submodule(s) => self.submodules[s]
                .range()
                .map(|b| self.coefficient(x, b))
                .collect(),
        }
    }

    /// `(x, b) / (b, b)` for the adapted basis vector `b`.
    fn coefficient(&self, x: &[F], b: usize) -> F {
        let num = self.algebra.inner_coords(x, &self.m_basis[b]);
        num.div(&self.m_norms[b])
            .expect("basis vectors are nonzero")
    }

    /// Stable JSON summary: names, dimensions, classes and basis labels.
    pub fn summary_json(&self) -> serde_json::Value {
        let subs: Vec<serde_json::Value> = self
            .submodules
            .iter()
            .map(|s| {
                json!({
                    "name": s.name,
                    "dim": s.dim(),
                    "class": s.class,
                    "basis": self.m_labels[s.range()].to_vec(),
                })
            })
            .collect();
        let sums: Vec<serde_json::Value> = self
            .summands
            .iter()
            .map(|s| {
                let dim: usize = s.members.iter().map(|&m| self.submodules[m].dim()).sum();
                let names: Vec<&str> = s
                    .members
                    .iter()
                    .map(|&m| self.submodules[m].name.as_str())
                    .collect();
                json!({"name": s.name, "class": s.class, "dim": dim, "members": names})
            })
            .collect();
        let k_labels: Vec<String> = self
            .k_theta
            .iter()
            .map(|&c| self.algebra.label(c).to_string())
            .collect();
        json!({
            "type": self.theta.lie_type.to_string(),
            "partition": self.theta.partition,
            "alpha_l": self.theta.alpha_l,
            "alpha_lm1": self.theta.alpha_lm1,
            "theta": self.theta.theta_label(),
            "case": self.case.tag(),
            "special": self.case.is_special(),
            "degenerate": self.case == CaseKind::Degenerate,
            "dim_k": self.algebra.dim(),
            "dim_k_theta": self.dim_k_theta(),
            "dim_m_theta": self.dim_m(),
            "k_theta": k_labels,
            "submodules": subs,
            "summands": sums,
            "discrete_generators": self.discrete_generators.iter().map(|g| g.name.clone()).collect::<Vec<_>>(),
        })
    }
}

/// Distinguished basis elements commuting with `H_Θ`. Each basis matrix is
/// supported on entries `(p, q)` where `[H, E_pq] = (h_p - h_q) E_pq`, so it
/// commutes with `H` exactly when `h_p = h_q` on its support.
pub fn k_theta_indices(theta: &ThetaSpec, alg: &LieAlgebra) -> Vec<usize> {
    let h: Mat<Exact> = theta.h_theta();
    (0..alg.dim())
        .filter(|&c| {
            alg.entries(c)
                .iter()
                .all(|&(p, q, _)| h.get(p, p) == h.get(q, q))
        })
        .collect()
}

fn format_combo(alg: &LieAlgebra, v: &[Exact]) -> String {
    let mut out = String::new();
    for (c, x) in v.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        let label = alg.label(c).to_string();
        let one = Exact::from_i64(1);
        let term = if *x == one {
            format!("+{label}")
        } else if *x == -one.clone() {
            format!("-{label}")
        } else {
            let s = x.to_string();
            if s.contains(['+', '-']) && !(s.starts_with('-') && !s[1..].contains(['+', '-'])) {
                format!("+({s})*{label}")
            } else if let Some(rest) = s.strip_prefix('-') {
                format!("-{rest}*{label}")
            } else {
                format!("+{s}*{label}")
            }
        };
        out.push_str(&term);
    }
    match out.strip_prefix('+') {
        Some(rest) => rest.to_string(),
        None if out.is_empty() => "0".into(),
        None => out,
    }
}

struct Builder<'a> {
    alg: &'a LieAlgebra,
    theta: &'a ThetaSpec,
    blocks: Vec<(usize, usize)>,
    subs: Vec<(String, Vec<Vec<Exact>>)>,
    summands: Vec<(String, Vec<usize>)>,
}

impl<'a> Builder<'a> {
    fn new(alg: &'a LieAlgebra, theta: &'a ThetaSpec) -> Self {
        Builder {
            alg,
            theta,
            blocks: theta.blocks(),
            subs: Vec::new(),
            summands: Vec::new(),
        }
    }

    fn vec(&self, terms: &[(Label, Exact)]) -> Vec<Exact> {
        let mut v = vec![Exact::zero(); self.alg.dim()];
        for (label, c) in terms {
            let idx = self
                .alg
                .index_of(*label)
                .unwrap_or_else(|| panic!("{label} not in {}", self.alg.spec()));
            v[idx] += c.clone();
        }
        v
    }

    fn unit(&self, label: Label) -> Vec<Exact> {
        self.vec(&[(label, Exact::from_i64(1))])
    }

    fn sub(&mut self, name: impl Into<String>, basis: Vec<Vec<Exact>>) -> usize {
        self.subs.push((name.into(), basis));
        self.subs.len() - 1
    }

    fn summand(&mut self, name: impl Into<String>, members: Vec<usize>) {
        self.summands.push((name.into(), members));
    }

    /// Sub + singleton summand of the same name.
    fn irreducible(&mut self, name: &str, basis: Vec<Vec<Exact>>) {
        let s = self.sub(name, basis);
        self.summand(name, vec![s]);
    }

    /// Indices of block `b` (1-based block number), 1-based.
    fn idx(&self, b: usize) -> std::ops::RangeInclusive<usize> {
        let (off, p) = self.blocks[b - 1];
        off + 1..=off + p
    }

    /// Labels `f(i, j)` for `i` in block `m`, `j` in block `n`, row-major.
    fn cross(&self, m: usize, n: usize, f: impl Fn(usize, usize) -> Label) -> Vec<Vec<Exact>> {
        let mut out = Vec::new();
        for i in self.idx(m) {
            for j in self.idx(n) {
                out.push(self.unit(f(i, j)));
            }
        }
        out
    }

    /// `u(i, j)` with `j < i` inside block `b`.
    fn inner_u(&self, b: usize) -> Vec<Vec<Exact>> {
        let mut out = Vec::new();
        for i in self.idx(b) {
            for j in self.idx(b) {
                if j < i {
                    out.push(self.unit(Label::U(i, j)));
                }
            }
        }
        out
    }

    /// Block-normalized trace direction `(1/sqrt(l_b)) Σ udiag(k)` (type C).
    fn trace_vector(&self, b: usize) -> Vec<Exact> {
        let p = self.blocks[b - 1].1 as u64;
        let c = Exact::sqrt_int(p).inverse().expect("nonzero");
        let terms: Vec<(Label, Exact)> =
            self.idx(b).map(|k| (Label::UDiag(k), c.clone())).collect();
        self.vec(&terms)
    }

    /// Trace-free diagonal directions followed by `u(i, j)`, `j < i`, of
    /// block `b` (type C).
    fn c_block_u(&self, b: usize) -> Vec<Vec<Exact>> {
        let idx: Vec<usize> = self.idx(b).collect();
        let mut out = Vec::new();
        for s in 1..idx.len() {
            let mut terms: Vec<(Label, Exact)> = idx[..s]
                .iter()
                .map(|&k| (Label::UDiag(k), Exact::ratio(1, s as i64)))
                .collect();
            terms.push((Label::UDiag(idx[s]), Exact::from_i64(-1)));
            out.push(self.vec(&terms));
        }
        out.extend(self.inner_u(b));
        out
    }

    fn pairs(lo: usize, hi: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for m in lo..=hi {
            for n in lo..m {
                out.push((m, n));
            }
        }
        out
    }

    /// `W_mn ⊕ U_mn` summands for `1 <= n < m <= top`.
    fn wu_summands(&mut self, top: usize) {
        for (m, n) in Self::pairs(1, top) {
            let w = self.cross(m, n, Label::W);
            let u = self.cross(m, n, Label::U);
            let sw = self.sub(format!("W{m}{n}"), w);
            let su = self.sub(format!("U{m}{n}"), u);
            self.summand(format!("M{m}{n}"), vec![sw, su]);
        }
    }

    /// Irreducible `W_mn ⊕ U_mn` blocks against the last block.
    fn last_block_pairs(&mut self) {
        let r = self.theta.r();
        for n in 1..r {
            let mut basis = self.cross(r, n, Label::W);
            basis.extend(self.cross(r, n, Label::U));
            self.irreducible(&format!("M{r}{n}"), basis);
        }
    }

    fn a_generic(&mut self) {
        let r = self.theta.r();
        for (m, n) in Self::pairs(1, r) {
            let basis = self.cross(m, n, Label::W);
            self.irreducible(&format!("M{m}{n}"), basis);
        }
    }

    fn a3(&mut self, case: CaseKind) {
        let w = |i, j| Label::W(i, j);
        let one = || Exact::from_i64(1);
        let neg = || Exact::from_i64(-1);
        match case {
            CaseKind::A3Empty => {
                for (k, (a, b)) in [((2, 1), (4, 3)), ((3, 1), (4, 2)), ((3, 2), (4, 1))]
                    .into_iter()
                    .enumerate()
                {
                    let s1 = self.sub(format!("m{}{}", a.0, a.1), vec![self.unit(w(a.0, a.1))]);
                    let s2 = self.sub(format!("m{}{}", b.0, b.1), vec![self.unit(w(b.0, b.1))]);
                    self.summand(format!("M{}", k + 1), vec![s1, s2]);
                }
            }
            CaseKind::A3Alpha(i) => {
                let (single, first, second) = match i {
                    1 => ((4, 3), [(3, 1), (3, 2)], [(4, 2), (4, 1)]),
                    2 => ((4, 1), [(2, 1), (3, 1)], [(4, 3), (4, 2)]),
                    _ => ((2, 1), [(3, 1), (4, 1)], [(4, 2), (3, 2)]),
                };
                let name =
                    |p: [(usize, usize); 2]| format!("m{}{}+m{}{}", p[0].0, p[0].1, p[1].0, p[1].1);
                self.irreducible(
                    &format!("m{}{}", single.0, single.1),
                    vec![self.unit(w(single.0, single.1))],
                );
                let b1: Vec<_> = first.iter().map(|&(a, b)| self.unit(w(a, b))).collect();
                let b2: Vec<_> = second.iter().map(|&(a, b)| self.unit(w(a, b))).collect();
                let s1 = self.sub(name(first), b1);
                let s2 = self.sub(name(second), b2);
                self.summand("M2", vec![s1, s2]);
                self.summands[0].0 = "M1".into();
            }
            CaseKind::A3Alpha13 => {
                let m1 = vec![
                    self.vec(&[(w(3, 1), one()), (w(4, 2), neg())]),
                    self.vec(&[(w(4, 1), one()), (w(3, 2), one())]),
                ];
                let m2 = vec![
                    self.vec(&[(w(3, 1), one()), (w(4, 2), one())]),
                    self.vec(&[(w(4, 1), one()), (w(3, 2), neg())]),
                ];
                self.irreducible("M1", m1);
                self.irreducible("M2", m2);
            }
            CaseKind::A3Irreducible => {
                let labels = if self.theta.partition == [3, 1] {
                    [(4, 1), (4, 2), (4, 3)]
                } else {
                    [(2, 1), (3, 1), (4, 1)]
                };
                let basis = labels.iter().map(|&(a, b)| self.unit(w(a, b))).collect();
                self.irreducible("M", basis);
            }
            _ => unreachable!("not an A_3 case"),
        }
    }

    fn b_no_alpha(&mut self) {
        let r = self.theta.r();
        for i in 1..=r {
            let basis = self.idx(i).map(|k| self.unit(Label::V(k))).collect();
            self.irreducible(&format!("V{i}"), basis);
        }
        self.wu_summands(r);
        for i in 1..=r {
            if self.blocks[i - 1].1 > 1 {
                let basis = self.inner_u(i);
                self.irreducible(&format!("U{i}"), basis);
            }
        }
    }

    fn b_alpha(&mut self) {
        let r = self.theta.r();
        let one = || Exact::from_i64(1);
        for i in 1..r {
            let mut minus = Vec::new();
            let mut plus: Vec<Vec<Exact>> = self.idx(i).map(|k| self.unit(Label::V(k))).collect();
            for s in self.idx(r) {
                for t in self.idx(i) {
                    minus.push(self.vec(&[(Label::W(s, t), one()), (Label::U(s, t), -one())]));
                    plus.push(self.vec(&[(Label::W(s, t), one()), (Label::U(s, t), one())]));
                }
            }
            self.irreducible(&format!("(V{i})_1"), minus);
            self.irreducible(&format!("(V{i})_2"), plus);
        }
        self.wu_summands(r - 1);
        for i in 1..r {
            if self.blocks[i - 1].1 > 1 {
                let basis = self.inner_u(i);
                self.irreducible(&format!("U{i}"), basis);
            }
        }
    }

    fn c_generic(&mut self) {
        let r = self.theta.r();
        let top = if self.theta.alpha_l { r - 1 } else { r };
        let vs: Vec<usize> = (1..=top)
            .map(|i| {
                let v = self.trace_vector(i);
                self.sub(format!("V{i}"), vec![v])
            })
            .collect();
        self.summand("M0", vs);
        self.wu_summands(top);
        for i in 1..=top {
            if self.blocks[i - 1].1 > 1 {
                let basis = self.c_block_u(i);
                self.irreducible(&format!("U{i}"), basis);
            }
        }
        if self.theta.alpha_l {
            self.last_block_pairs();
        }
    }

    fn c4(&mut self, case: CaseKind) {
        let vs: Vec<usize> = (1..=self.theta.r())
            .map(|i| {
                let v = self.trace_vector(i);
                self.sub(format!("V{i}"), vec![v])
            })
            .collect();
        self.summand("M0", vs);
        match case {
            CaseKind::C4Empty => {
                for (k, ((a, b), (c, d))) in [((2, 1), (4, 3)), ((3, 1), (4, 2)), ((3, 2), (4, 1))]
                    .into_iter()
                    .enumerate()
                {
                    let s = [
                        self.sub(format!("W{a}{b}"), vec![self.unit(Label::W(a, b))]),
                        self.sub(format!("W{c}{d}"), vec![self.unit(Label::W(c, d))]),
                        self.sub(format!("U{a}{b}"), vec![self.unit(Label::U(a, b))]),
                        self.sub(format!("U{c}{d}"), vec![self.unit(Label::U(c, d))]),
                    ];
                    self.summand(format!("N{}", k + 1), s.to_vec());
                }
            }
            CaseKind::C4Alpha(i) => {
                let i = i as usize;
                let basis = self.c_block_u(i);
                self.irreducible(&format!("U{i}"), basis);
                let (pm, pn) = match i {
                    1 => ((3, 2), [(2, 1), (3, 1)]),
                    2 => ((3, 1), [(2, 1), (3, 2)]),
                    _ => ((2, 1), [(3, 1), (3, 2)]),
                };
                let w = self.cross(pm.0, pm.1, Label::W);
                let u = self.cross(pm.0, pm.1, Label::U);
                let sw = self.sub(format!("W{}{}", pm.0, pm.1), w);
                let su = self.sub(format!("U{}{}", pm.0, pm.1), u);
                self.summand("M", vec![sw, su]);
                let mut members = Vec::new();
                for f in [Label::W as fn(usize, usize) -> Label, Label::U] {
                    for &(m, n) in &pn {
                        let basis = self.cross(m, n, f);
                        let prefix = if matches!(f(2, 1), Label::W(..)) {
                            "W"
                        } else {
                            "U"
                        };
                        members.push(self.sub(format!("{prefix}{m}{n}"), basis));
                    }
                }
                self.summand("N", members);
                // Summand order M0, U_i, M, N.
                let u = self.summands.remove(1);
                self.summands.insert(1, u);
            }
            _ => unreachable!("not a C_4 table case"),
        }
    }

    fn d_generic(&mut self) {
        let r = self.theta.r();
        let top = if self.theta.alpha_l { r - 1 } else { r };
        self.wu_summands(top);
        for i in 1..=top {
            if self.blocks[i - 1].1 > 1 {
                let basis = self.inner_u(i);
                self.irreducible(&format!("U{i}"), basis);
            }
        }
        if self.theta.alpha_l {
            self.d_last_block_split();
        }
    }

    /// With both last roots in `Θ` the last block carries
    /// `SO(l_r) x SO(l_r)`, which acts on `w - u` and `w + u` through
    /// different factors; each half is its own irreducible summand.
    fn d_last_block_split(&mut self) {
        let r = self.theta.r();
        let one = || Exact::from_i64(1);
        for n in 1..r {
            let mut minus = Vec::new();
            let mut plus = Vec::new();
            for s in self.idx(r) {
                for t in self.idx(n) {
                    minus.push(self.vec(&[(Label::W(s, t), one()), (Label::U(s, t), -one())]));
                    plus.push(self.vec(&[(Label::W(s, t), one()), (Label::U(s, t), one())]));
                }
            }
            self.irreducible(&format!("(M{r}{n})_1"), minus);
            self.irreducible(&format!("(M{r}{n})_2"), plus);
        }
    }

    fn d_alpha_only(&mut self) {
        let r = self.theta.r();
        let l = self.theta.lie_type.rank;
        let p = r - 1;
        self.wu_summands(r.saturating_sub(2));
        for i in 1..p {
            if self.blocks[i - 1].1 > 1 {
                let basis = self.inner_u(i);
                self.irreducible(&format!("U{i}"), basis);
            }
        }
        for n in 1..p {
            let mut mb = self.cross(p, n, Label::W);
            mb.extend(self.idx(n).map(|t| self.unit(Label::U(l, t))));
            let mut nb = self.cross(p, n, Label::U);
            nb.extend(self.idx(n).map(|t| self.unit(Label::W(l, t))));
            let sm = self.sub(format!("M{n}"), mb);
            let sn = self.sub(format!("N{n}"), nb);
            self.summand(format!("S{n}"), vec![sm, sn]);
        }
        let mut v = self.inner_u(p);
        v.extend(self.idx(p).map(|t| self.unit(Label::W(l, t))));
        self.irreducible(&format!("V{p}"), v);
    }
}

/// Builds the decomposition of `k` for the flag.
pub fn build_decomposition<F: Field>(theta: &ThetaSpec) -> Result<Decomposition<F>> {
    let exact = build_exact(theta)?;
    Ok(convert(&exact))
}

fn convert<F: Field>(d: &Decomposition<Exact>) -> Decomposition<F> {
    let cv = |v: &Vec<Exact>| v.iter().map(F::from_exact).collect::<Vec<F>>();
    Decomposition {
        theta: d.theta.clone(),
        case: d.case,
        algebra: d.algebra.clone(),
        k_theta: d.k_theta.clone(),
        m_std: d.m_std.clone(),
        m_basis: d.m_basis.iter().map(cv).collect(),
        m_labels: d.m_labels.clone(),
        m_norms: d.m_norms.iter().map(F::from_exact).collect(),
        submodules: d
            .submodules
            .iter()
            .map(|s| Submodule {
                name: s.name.clone(),
                class: s.class,
                offset: s.offset,
                basis: s.basis.iter().map(cv).collect(),
            })
            .collect(),
        summands: d.summands.clone(),
        discrete_generators: d
            .discrete_generators
            .iter()
            .map(|g| Generator {
                name: g.name.clone(),
                matrix: g.matrix.map(F::from_exact),
            })
            .collect(),
        ad_cache: OnceLock::new(),
    }
}

fn build_exact(theta: &ThetaSpec) -> Result<Decomposition<Exact>> {
    let alg = Arc::new(LieAlgebra::new(theta.lie_type));
    let case = theta.case();
    let k_theta = k_theta_indices(theta, &alg);
    let m_std: Vec<usize> = (0..alg.dim()).filter(|c| !k_theta.contains(c)).collect();
    let mut b = Builder::new(&alg, theta);
    match case {
        CaseKind::Degenerate => {}
        CaseKind::AGeneric => b.a_generic(),
        CaseKind::A3Empty
        | CaseKind::A3Alpha(_)
        | CaseKind::A3Alpha13
        | CaseKind::A3Irreducible => b.a3(case),
        CaseKind::BNoAlphaL => b.b_no_alpha(),
        CaseKind::BAlphaL => b.b_alpha(),
        CaseKind::CNoAlphaL | CaseKind::CAlphaL => b.c_generic(),
        CaseKind::C4Empty | CaseKind::C4Alpha(_) => b.c4(case),
        CaseKind::DNoAlphaL | CaseKind::DBoth => b.d_generic(),
        CaseKind::DAlphaLOnly => b.d_alpha_only(),
    }
    let Builder { subs, summands, .. } = b;
    // Reorder submodules so that each summand's members are contiguous and
    // summands appear in their construction order.
    let mut order = Vec::new();
    let mut final_summands = Vec::new();
    for (class, (name, members)) in summands.into_iter().enumerate() {
        let start = order.len();
        order.extend(members.iter().copied());
        final_summands.push(Summand {
            name,
            class,
            members: (start..order.len()).collect(),
        });
    }
    let mut submodules = Vec::new();
    let mut offset = 0;
    for (class, s) in final_summands.iter().enumerate() {
        for &m in &s.members {
            let (name, basis) = &subs[order[m]];
            submodules.push(Submodule {
                name: name.clone(),
                class,
                offset,
                basis: basis.clone(),
            });
            offset += basis.len();
        }
    }
    let m_basis: Vec<Vec<Exact>> = submodules
        .iter()
        .flat_map(|s| s.basis.iter().cloned())
        .collect();
    let m_labels = m_basis.iter().map(|v| format_combo(&alg, v)).collect();
    let m_norms = m_basis.iter().map(|v| alg.inner_coords(v, v)).collect();
    let discrete_generators = discrete_generators_exact(theta, &alg, &k_theta, GENERATOR_SEED);
    Ok(Decomposition {
        theta: theta.clone(),
        case,
        algebra: alg,
        k_theta,
        m_std,
        m_basis,
        m_labels,
        m_norms,
        submodules,
        summands: final_summands,
        discrete_generators,
        ad_cache: OnceLock::new(),
    })
}

const GENERATOR_SEED: u64 = 0x6f_6c_66_67;

/// Lifts `(P, Q)` acting on the index space to the ambient group. For type B
/// the element is `diag(1, M)`, for C and D it is `M`, where
/// `M = [[(P+Q)/2, (P-Q)/2], [(P-Q)/2, (P+Q)/2]]`; type C requires `P = Q`.
/// Type A uses `P` directly.
pub fn embed(family: Family, p: &Mat<Exact>, q: Option<&Mat<Exact>>) -> Mat<Exact> {
    if family == Family::A {
        return p.clone();
    }
    let l = p.rows();
    let q = q.unwrap_or(p);
    let half = Exact::ratio(1, 2);
    let plus = p.add(q).expect("square").scale(&half);
    let minus = p.sub(q).expect("square").scale(&half);
    let off = usize::from(family == Family::B);
    let n = 2 * l + off;
    let mut k = Mat::zeros(n, n);
    if off == 1 {
        k.set(0, 0, Exact::from_i64(1));
    }
    for i in 0..l {
        for j in 0..l {
            k.set(off + i, off + j, plus.get(i, j).clone());
            k.set(off + l + i, off + l + j, plus.get(i, j).clone());
            k.set(off + i, off + l + j, minus.get(i, j).clone());
            k.set(off + l + i, off + j, minus.get(i, j).clone());
        }
    }
    k
}

fn sign_matrix(n: usize, flips: &[usize]) -> Mat<Exact> {
    let d: Vec<Exact> = (1..=n)
        .map(|i| Exact::from_i64(if flips.contains(&i) { -1 } else { 1 }))
        .collect();
    Mat::diagonal(&d)
}

/// Rotation by 45 degrees in the plane of indices `(i, i+1)` (1-based),
/// `[[r, s], [t, u]]` with `r = t = u = -s = 1/sqrt(2)`.
fn rotation45(n: usize, i: usize) -> Mat<Exact> {
    let c = Exact::ratio(1, 2).sqrt().expect("1/2 has a square root");
    let mut m = Mat::identity(n);
    m.set(i - 1, i - 1, c.clone());
    m.set(i - 1, i, -c.clone());
    m.set(i, i - 1, c.clone());
    m.set(i, i, c);
    m
}

/// Discrete isotropy elements and sampled elements of the identity
/// component, built with the default seed.
pub fn discrete_isotropy_generators(theta: &ThetaSpec) -> Vec<Generator<Exact>> {
    let alg = LieAlgebra::new(theta.lie_type);
    let k_theta = k_theta_indices(theta, &alg);
    discrete_generators_exact(theta, &alg, &k_theta, GENERATOR_SEED)
}

fn discrete_generators_exact(
    theta: &ThetaSpec,
    alg: &LieAlgebra,
    k_theta: &[usize],
    seed: u64,
) -> Vec<Generator<Exact>> {
    let family = theta.lie_type.family;
    let l = theta.lie_type.rank;
    let n = if family == Family::A { l + 1 } else { l };
    let blocks = theta.blocks();
    let mut out = Vec::new();
    let mut push = |name: String, m: Mat<Exact>| out.push(Generator { name, matrix: m });

    // Sign diagonals. Types A, B and D use determinant-one sign patterns
    // (generated by pair flips); type C allows single flips.
    if family == Family::C {
        for i in 1..=n {
            push(
                format!("flip({i})"),
                embed(family, &sign_matrix(n, &[i]), None),
            );
        }
    } else {
        for i in 2..=n {
            push(
                format!("flip(1,{i})"),
                embed(family, &sign_matrix(n, &[1, i]), None),
            );
        }
    }
    let (last_off, last_size) = *blocks.last().expect("nonempty");
    let last_zero = theta.alpha_l
        && matches!(family, Family::B | Family::D)
        && (family == Family::B || theta.alpha_lm1);
    if last_zero && last_size >= 2 {
        let p = sign_matrix(n, &[last_off + 1, last_off + 2]);
        push(
            format!("flip_p({},{})", last_off + 1, last_off + 2),
            embed(family, &p, Some(&Mat::identity(n))),
        );
    }
    for &(off, size) in &blocks {
        if size >= 2 {
            push(
                format!("rot45({},{})", off + 1, off + 2),
                embed(family, &rotation45(n, off + 1), None),
            );
        }
    }
    if family == Family::D && theta.alpha_l && !theta.alpha_lm1 {
        let (poff, _) = blocks[blocks.len() - 2];
        let j = poff + 1;
        let mut p = Mat::identity(n);
        p.set(j - 1, j - 1, Exact::zero());
        p.set(l - 1, l - 1, Exact::zero());
        p.set(l - 1, j - 1, Exact::from_i64(1));
        p.set(j - 1, l - 1, Exact::from_i64(-1));
        let s = sign_matrix(n, &[l]);
        let q = s.mul(&p).expect("square").mul(&s).expect("square");
        push(format!("mix({j},{l})"), embed(family, &p, Some(&q)));
    }

    // Three sampled elements of the identity component per connected piece
    // of k_Θ, through the Cayley transform of random rational elements.
    let mut rng = ChaCha8Rng::seed_from_u64(
        seed ^ (l as u64).wrapping_mul(0x9e37_79b9) ^ theta.roots().len() as u64,
    );
    for (ci, comp) in k_theta_components(alg, k_theta).iter().enumerate() {
        for sample in 0..3 {
            let z: Vec<Exact> = (0..alg.dim())
                .map(|c| {
                    if comp.contains(&c) {
                        Exact::from_i64(rng.gen_range(-2..=2))
                    } else {
                        Exact::zero()
                    }
                })
                .collect();
            if z.iter().all(Exact::is_zero) {
                continue;
            }
            let k = cayley(&alg.matrix_of(&z)).expect("I + Z is invertible for skew Z");
            push(format!("cayley[{ci}.{sample}]"), k);
        }
    }
    out
}

/// Groups `k_Θ` basis elements into pieces sharing ambient indices.
fn k_theta_components(alg: &LieAlgebra, k_theta: &[usize]) -> Vec<Vec<usize>> {
    let support = |c: usize| -> BTreeSet<usize> {
        let n = alg.spec().ambient_dim();
        let half = if alg.spec().family == Family::B {
            (n - 1) / 2
        } else {
            n / 2
        };
        alg.entries(c)
            .iter()
            .flat_map(|&(p, q, _)| [p, q])
            .map(|p| match alg.spec().family {
                Family::A => p,
                Family::B if p == 0 => 0,
                Family::B => (p - 1) % half + 1,
                _ => p % half,
            })
            .collect()
    };
    let mut comps: Vec<(BTreeSet<usize>, Vec<usize>)> = Vec::new();
    for &c in k_theta {
        let s = support(c);
        let mut merged = (s, vec![c]);
        let mut rest = Vec::new();
        for comp in comps {
            if comp.0.intersection(&merged.0).next().is_some() {
                merged.0.extend(comp.0);
                merged.1.extend(comp.1);
            } else {
                rest.push(comp);
            }
        }
        rest.push(merged);
        comps = rest;
    }
    let mut out: Vec<Vec<usize>> = comps
        .into_iter()
        .map(|(_, mut v)| {
            v.sort_unstable();
            v
        })
        .collect();
    out.sort();
    out
}

/// A random element of the identity component of `K_Θ`: the Cayley
/// transform of a random rational element of `k_Θ`.
pub fn random_isotropy_element<F: Field>(dec: &Decomposition<F>, rng: &mut impl Rng) -> Mat<F> {
    let alg = &dec.algebra;
    let z: Vec<Exact> = (0..alg.dim())
        .map(|c| {
            if dec.k_theta.contains(&c) {
                Exact::ratio(rng.gen_range(-3..=3), rng.gen_range(1..=3))
            } else {
                Exact::zero()
            }
        })
        .collect();
    let k = cayley(&alg.matrix_of(&z)).expect("I + Z is invertible for skew Z");
    k.map(F::from_exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_algebra::bracket;
    use crate::matrix::rank;

    fn spec(f: Family, l: usize) -> LieTypeSpec {
        LieTypeSpec::new(f, l).unwrap()
    }

    #[test]
    fn a3_enumeration() {
        let thetas = enumerate_thetas(&spec(Family::A, 3));
        let parts: Vec<Vec<usize>> = thetas.iter().map(|t| t.partition.clone()).collect();
        assert_eq!(parts.len(), 8);
        for p in [
            vec![1, 1, 1, 1],
            vec![2, 1, 1],
            vec![1, 2, 1],
            vec![1, 1, 2],
            vec![3, 1],
            vec![1, 3],
            vec![2, 2],
            vec![4],
        ] {
            assert!(parts.contains(&p), "{p:?}");
        }
        assert_eq!(thetas.iter().filter(|t| t.is_degenerate()).count(), 1);
    }

    #[test]
    fn d5_alpha_l_only_has_singleton_last_block() {
        for t in enumerate_thetas(&spec(Family::D, 5)) {
            if t.alpha_l && !t.alpha_lm1 {
                assert_eq!(*t.partition.last().unwrap(), 1);
            }
        }
        assert_eq!(enumerate_thetas(&spec(Family::D, 5)).len(), 32);
    }

    #[test]
    fn lambda_annihilated_exactly_by_theta() {
        for f in [Family::A, Family::B, Family::C, Family::D] {
            let s = spec(f, 5);
            for t in enumerate_thetas(&s) {
                let lam = t.lambda();
                let roots = t.roots();
                for i in 1..=5 {
                    let val = match (f, i) {
                        (Family::A, _) => lam[i - 1] - lam[i],
                        (_, i) if i < 5 => lam[i - 1] - lam[i],
                        (Family::B, _) => lam[4],
                        (Family::C, _) => 2 * lam[4],
                        _ => lam[3] + lam[4],
                    };
                    assert_eq!(val == 0, roots.contains(&i), "{t} α_{i}");
                }
            }
        }
    }

    #[test]
    fn dimensions_add_up() {
        for (f, l) in [
            (Family::A, 2),
            (Family::A, 3),
            (Family::A, 4),
            (Family::B, 5),
            (Family::C, 3),
            (Family::C, 4),
            (Family::D, 5),
        ] {
            for t in enumerate_thetas(&spec(f, l)) {
                let d = build_decomposition::<Exact>(&t).unwrap();
                assert_eq!(d.dim_m() + d.dim_k_theta(), d.algebra.dim(), "{t}");
                let mat = Mat::from_rows(d.m_basis.clone()).unwrap_or_else(|_| Mat::zeros(0, 0));
                assert_eq!(rank(&mat, 0.0), d.dim_m(), "{t}");
                for v in &d.m_basis {
                    for &c in &d.k_theta {
                        assert!(v[c].is_zero(), "{t}");
                    }
                }
            }
        }
    }

    #[test]
    fn a_dimension_formula() {
        for t in enumerate_thetas(&spec(Family::A, 4)) {
            let d = build_decomposition::<Exact>(&t).unwrap();
            let p = &t.partition;
            let expect: usize = (0..p.len())
                .flat_map(|m| (0..m).map(move |n| p[m] * p[n]))
                .sum();
            assert_eq!(d.dim_m(), expect);
        }
    }

    #[test]
    fn k_theta_is_a_subalgebra_and_commutant() {
        let t = ThetaSpec::new(spec(Family::D, 5), vec![2, 2, 1], true, None).unwrap();
        let d = build_decomposition::<Exact>(&t).unwrap();
        let h: Mat<Exact> = t.h_theta();
        for m in d.k_theta_matrices() {
            assert!(bracket(&h, &m).unwrap().is_zero());
        }
        // The images of the remaining basis elements under ad(H) are
        // independent, so nothing outside the span commutes with H.
        let rows: Vec<Vec<Exact>> = d
            .m_std
            .iter()
            .map(|&c| {
                let img = bracket(&h, &d.algebra.element::<Exact>(c)).unwrap();
                (0..img.rows())
                    .flat_map(|i| (0..img.cols()).map(move |j| (i, j)))
                    .map(|(i, j)| img.get(i, j).clone())
                    .collect()
            })
            .collect();
        assert_eq!(rank(&Mat::from_rows(rows).unwrap(), 0.0), d.m_std.len());
    }

    #[test]
    fn generators_are_orthogonal_and_in_k_theta_normalizer() {
        for t in [
            ThetaSpec::new(spec(Family::A, 3), vec![2, 1, 1], false, None).unwrap(),
            ThetaSpec::new(spec(Family::B, 5), vec![2, 3], true, None).unwrap(),
            ThetaSpec::new(spec(Family::D, 5), vec![3, 1, 1], true, None).unwrap(),
        ] {
            let d = build_decomposition::<Exact>(&t).unwrap();
            for g in &d.discrete_generators {
                crate::lie_algebra::check_orthogonal(&g.matrix).unwrap();
                for w in d.k_theta_matrices() {
                    let c = crate::lie_algebra::conjugate(&g.matrix, &w).unwrap();
                    let x = d.algebra.expand(&c).unwrap();
                    for &m in &d.m_std {
                        assert!(x[m].is_zero(), "{t} {}", g.name);
                    }
                }
            }
        }
    }
}
