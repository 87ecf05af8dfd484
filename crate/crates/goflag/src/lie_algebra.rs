//! Compact Lie algebras of the split classical groups as skew-symmetric
//! matrices.
//!
//! For a split real form of type A, B, C or D the maximal compact subalgebra
//! `k` is realized inside `so(n)`:
//!
//! * A_l: all of `so(l+1)`.
//! * B_l: matrices `[[0,-a,-a],[a^T,A,B],[a^T,B,A]]` of order `2l+1` with
//!   `A`, `B` skew.
//! * C_l: matrices `[[A,-B],[B,A]]` of order `2l` with `A` skew and `B`
//!   symmetric (a copy of `u(l)`).
//! * D_l: matrices `[[A,B],[B,A]]` of order `2l` with `A`, `B` skew.
//!
//! Every distinguished basis element has entries in `{-1, 0, 1}` and owns an
//! *anchor* entry where it is `+1` and every other basis element vanishes, so
//! coordinates of an element of `k` are read off directly.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::{Exact, Field, Mode};

/// Classical Lie type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
    D,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Family::A),
            "B" | "b" => Ok(Family::B),
            "C" | "c" => Ok(Family::C),
            "D" | "d" => Ok(Family::D),
            other => Err(Error::Parse(format!(
                "unknown family `{other}` (expected A, B, C or D)"
            ))),
        }
    }
}

impl Family {
    /// Smallest supported rank.
    pub fn min_rank(self) -> usize {
        match self {
            Family::A => 1,
            Family::B => 5,
            Family::C => 3,
            Family::D => 5,
        }
    }
}

/// A classical type together with its rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LieTypeSpec {
    pub family: Family,
    pub rank: usize,
}

impl LieTypeSpec {
    /// Validates the rank against the supported range of the family.
    pub fn new(family: Family, rank: usize) -> Result<Self> {
        let min = family.min_rank();
        if rank < min {
            return Err(Error::Range(format!(
                "{family}_{rank} is outside the supported range: type {family} requires rank l >= {min}"
            )));
        }
        Ok(LieTypeSpec { family, rank })
    }

    /// Order of the ambient square matrices.
    pub fn ambient_dim(&self) -> usize {
        let l = self.rank;
        match self.family {
            Family::A => l + 1,
            Family::B => 2 * l + 1,
            Family::C | Family::D => 2 * l,
        }
    }

    /// Dimension of `k`.
    pub fn dim(&self) -> usize {
        let l = self.rank;
        match self.family {
            Family::A => (l + 1) * l / 2,
            Family::B | Family::C => l * l,
            Family::D => l * (l - 1),
        }
    }
}

impl fmt::Display for LieTypeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.family, self.rank)
    }
}

/// Name of a distinguished basis element. Indices are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    W(usize, usize),
    U(usize, usize),
    V(usize),
    UDiag(usize),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::W(i, j) => write!(f, "w({i},{j})"),
            Label::U(i, j) => write!(f, "u({i},{j})"),
            Label::V(k) => write!(f, "v({k})"),
            Label::UDiag(k) => write!(f, "udiag({k})"),
        }
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed basis label `{s}`"));
        let t = s.trim();
        let open = t.find('(').ok_or_else(bad)?;
        let head = &t[..open];
        let body = t[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let nums: Vec<usize> = body
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match (head, nums.as_slice()) {
            ("w", [i, j]) => Ok(Label::W(*i, *j)),
            ("u", [i, j]) => Ok(Label::U(*i, *j)),
            ("v", [k]) => Ok(Label::V(*k)),
            ("udiag", [k]) => Ok(Label::UDiag(*k)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A labelled basis matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisElement<F: Field> {
    pub label: Label,
    pub matrix: Mat<F>,
}

/// Sparse entry list `(row, col, value)` with 0-based positions.
type Sparse = Vec<(usize, usize, i64)>;

fn labels_and_entries(spec: &LieTypeSpec) -> Vec<(Label, Sparse)> {
    let l = spec.rank;
    let mut out = Vec::with_capacity(spec.dim());
    let lower_pairs = |n: usize| (1..=n).flat_map(move |i| (1..i).map(move |j| (i, j)));
    match spec.family {
        Family::A => {
            for (i, j) in lower_pairs(l + 1) {
                out.push((Label::W(i, j), vec![(i - 1, j - 1, 1), (j - 1, i - 1, -1)]));
            }
        }
        Family::B => {
            for k in 1..=l {
                out.push((
                    Label::V(k),
                    vec![(k, 0, 1), (0, k, -1), (l + k, 0, 1), (0, l + k, -1)],
                ));
            }
            for (i, j) in lower_pairs(l) {
                out.push((
                    Label::W(i, j),
                    vec![(i, j, 1), (j, i, -1), (l + i, l + j, 1), (l + j, l + i, -1)],
                ));
            }
            for (i, j) in lower_pairs(l) {
                out.push((
                    Label::U(i, j),
                    vec![(l + i, j, 1), (l + j, i, -1), (i, l + j, 1), (j, l + i, -1)],
                ));
            }
        }
        Family::C => {
            for k in 1..=l {
                out.push((
                    Label::UDiag(k),
                    vec![(l + k - 1, k - 1, 1), (k - 1, l + k - 1, -1)],
                ));
            }
            for (i, j) in lower_pairs(l) {
                out.push((
                    Label::W(i, j),
                    vec![
                        (i - 1, j - 1, 1),
                        (j - 1, i - 1, -1),
                        (l + i - 1, l + j - 1, 1),
                        (l + j - 1, l + i - 1, -1),
                    ],
                ));
            }
            for (i, j) in lower_pairs(l) {
                out.push((
                    Label::U(i, j),
                    vec![
                        (l + i - 1, j - 1, 1),
                        (l + j - 1, i - 1, 1),
                        (i - 1, l + j - 1, -1),
                        (j - 1, l + i - 1, -1),
                    ],
                ));
            }
        }
        Family::D => {
            for (i, j) in lower_pairs(l) {
                out.push((
                    Label::W(i, j),
                    vec![
                        (i - 1, j - 1, 1),
                        (j - 1, i - 1, -1),
                        (l + i - 1, l + j - 1, 1),
                        (l + j - 1, l + i - 1, -1),
                    ],
                ));
            }
            for (i, j) in lower_pairs(l) {
                out.push((
                    Label::U(i, j),
                    vec![
                        (l + i - 1, j - 1, 1),
                        (l + j - 1, i - 1, -1),
                        (i - 1, l + j - 1, 1),
                        (j - 1, l + i - 1, -1),
                    ],
                ));
            }
        }
    }
    out
}

fn dense<F: Field>(n: usize, entries: &Sparse) -> Mat<F> {
    let mut m = Mat::<F>::zeros(n, n);
    for &(i, j, v) in entries {
        let cur = m.get(i, j).clone();
        m.set(i, j, cur + F::from_i64(v));
    }
    m
}

/// Ordered distinguished basis of `k`.
pub fn build_basis<F: Field>(spec: &LieTypeSpec) -> Vec<BasisElement<F>> {
    let n = spec.ambient_dim();
    labels_and_entries(spec)
        .into_iter()
        .map(|(label, e)| BasisElement {
            label,
            matrix: dense(n, &e),
        })
        .collect()
}

fn check_shape<F: Field>(m: &Mat<F>, spec: &LieTypeSpec, what: &str) -> Result<()> {
    let n = spec.ambient_dim();
    if m.rows() != n || m.cols() != n {
        return Err(Error::Shape(format!(
            "{what} is {}x{}, expected {n}x{n} for {spec}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// `Tr(PQ)` where `P` is the `l x l` block of `x` at `(r0, c0)` and `Q` the
/// block of `y` at `(s0, d0)`.
fn block_trace<F: Field>(
    x: &Mat<F>,
    (r0, c0): (usize, usize),
    y: &Mat<F>,
    (s0, d0): (usize, usize),
    l: usize,
) -> F {
    let mut t = F::zero();
    for i in 0..l {
        for j in 0..l {
            let a = x.get(r0 + i, c0 + j);
            let b = y.get(s0 + j, d0 + i);
            if !a.is_zero() && !b.is_zero() {
                t += a.clone() * b.clone();
            }
        }
    }
    t
}

/// The invariant inner product of the family, evaluated by its closed form.
///
/// * A_l: `-(l-1) Tr(XY)`, the negative Killing form of `so(l+1)`; for
///   `l = 1` the Killing form vanishes and `-Tr(XY)` is used instead.
/// * B_l: `a c^T - (Tr(BD) + Tr(AC))/2`.
/// * C_l: `(Tr(BD) - Tr(AC))/2`.
/// * D_l: `-(Tr(AC) + Tr(BD))/2`.
pub fn inner<F: Field>(x: &Mat<F>, y: &Mat<F>, spec: &LieTypeSpec) -> Result<F> {
    check_shape(x, spec, "left operand")?;
    check_shape(y, spec, "right operand")?;
    let l = spec.rank;
    let half = F::from_ratio(1, 2);
    Ok(match spec.family {
        Family::A => {
            let scale = F::from_i64(l.saturating_sub(1).max(1) as i64);
            -(scale * block_trace(x, (0, 0), y, (0, 0), l + 1))
        }
        Family::B => {
            let mut ac = F::zero();
            for k in 1..=l {
                ac += x.get(k, 0).clone() * y.get(k, 0).clone();
            }
            let tr_ac = block_trace(x, (1, 1), y, (1, 1), l);
            let tr_bd = block_trace(x, (1, l + 1), y, (1, l + 1), l);
            ac - half * (tr_bd + tr_ac)
        }
        Family::C => {
            let tr_ac = block_trace(x, (0, 0), y, (0, 0), l);
            let tr_bd = block_trace(x, (l, 0), y, (l, 0), l);
            half * (tr_bd - tr_ac)
        }
        Family::D => {
            let tr_ac = block_trace(x, (0, 0), y, (0, 0), l);
            let tr_bd = block_trace(x, (0, l), y, (0, l), l);
            -(half * (tr_ac + tr_bd))
        }
    })
}

/// Matrix commutator `XY - YX`.
pub fn bracket<F: Field>(x: &Mat<F>, y: &Mat<F>) -> Result<Mat<F>> {
    x.commutator(y)
}

/// Checks `k^T k = I`: exactly in exact mode, entrywise within `1e-10` in
/// float mode.
pub fn check_orthogonal<F: Field>(k: &Mat<F>) -> Result<()> {
    if !k.is_square() {
        return Err(Error::NotOrthogonal(format!(
            "{}x{} is not square",
            k.rows(),
            k.cols()
        )));
    }
    let gram = k.transpose().mul(k)?;
    let dev = gram.sub(&Mat::identity(k.rows()))?;
    let ok = match F::MODE {
        Mode::Exact => dev.is_zero(),
        Mode::Float => dev.max_abs() <= 1e-10,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::NotOrthogonal(format!(
            "max |k^T k - I| = {:e}",
            dev.max_abs()
        )))
    }
}

/// `k X k^T`, the adjoint action of an orthogonal matrix.
pub fn conjugate<F: Field>(k: &Mat<F>, x: &Mat<F>) -> Result<Mat<F>> {
    check_orthogonal(k)?;
    k.mul(x)?.mul(&k.transpose())
}

/// Precomputed data for one algebra: labels, sparse matrices, anchors,
/// basis norms and structure constants.
#[derive(Clone, Debug)]
pub struct LieAlgebra {
    spec: LieTypeSpec,
    labels: Vec<Label>,
    entries: Vec<Sparse>,
    anchors: Vec<(usize, usize)>,
    index: HashMap<Label, usize>,
    norms: Vec<Exact>,
    /// `structure[a * dim + b]` lists `(c, k)` with `[e_a, e_b] = sum k e_c`.
    structure: Vec<Vec<(usize, i64)>>,
}

impl LieAlgebra {
    pub fn new(spec: LieTypeSpec) -> Self {
        let n = spec.ambient_dim();
        let raw = labels_and_entries(&spec);
        let labels: Vec<Label> = raw.iter().map(|(l, _)| *l).collect();
        let entries: Vec<Sparse> = raw.into_iter().map(|(_, e)| e).collect();
        let anchors: Vec<(usize, usize)> = entries
            .iter()
            .map(|e| {
                let &(i, j, _) = e
                    .iter()
                    .find(|&&(_, _, v)| v == 1)
                    .expect("basis element has a +1 entry");
                (i, j)
            })
            .collect();
        let anchor_index: HashMap<(usize, usize), usize> =
            anchors.iter().enumerate().map(|(c, &p)| (p, c)).collect();
        let index = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let norms = entries
            .iter()
            .map(|e| {
                let m: Mat<Exact> = dense(n, e);
                inner(&m, &m, &spec).expect("shapes agree")
            })
            .collect();
        let dim = labels.len();
        let mut structure = vec![Vec::new(); dim * dim];
        for a in 0..dim {
            for b in (a + 1)..dim {
                let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
                for &(i, j, s) in &entries[a] {
                    for &(j2, k, t) in &entries[b] {
                        if j == j2 {
                            *acc.entry((i, k)).or_insert(0) += s * t;
                        }
                    }
                }
                for &(i, j, s) in &entries[b] {
                    for &(j2, k, t) in &entries[a] {
                        if j == j2 {
                            *acc.entry((i, k)).or_insert(0) -= s * t;
                        }
                    }
                }
                let mut coeffs: Vec<(usize, i64)> = acc
                    .iter()
                    .filter(|(_, &v)| v != 0)
                    .filter_map(|(p, &v)| anchor_index.get(p).map(|&c| (c, v)))
                    .collect();
                coeffs.sort_unstable();
                structure[b * dim + a] = coeffs.iter().map(|&(c, v)| (c, -v)).collect();
                structure[a * dim + b] = coeffs;
            }
        }
        LieAlgebra {
            spec,
            labels,
            entries,
            anchors,
            index,
            norms,
            structure,
        }
    }

    pub fn spec(&self) -> &LieTypeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, c: usize) -> Label {
        self.labels[c]
    }

    /// Position of a label in the ordered basis.
    pub fn index_of(&self, label: Label) -> Option<usize> {
        self.index.get(&label).copied()
    }

    /// Squared norm `(e_c, e_c)` of a basis element.
    pub fn norm_sq<F: Field>(&self, c: usize) -> F {
        F::from_exact(&self.norms[c])
    }

    pub fn norms_sq<F: Field>(&self) -> Vec<F> {
        self.norms.iter().map(F::from_exact).collect()
    }

    /// `(X, Y)` computed from coordinates in the orthogonal basis.
    pub fn inner_coords<F: Field>(&self, x: &[F], y: &[F]) -> F {
        let mut acc = F::zero();
        for c in 0..self.dim() {
            if !x[c].is_zero() && !y[c].is_zero() {
                acc += F::from_exact(&self.norms[c]) * x[c].clone() * y[c].clone();
            }
        }
        acc
    }

    /// Nonzero entries `(row, col, value)` of a basis matrix, 0-based.
    pub fn entries(&self, c: usize) -> &[(usize, usize, i64)] {
        &self.entries[c]
    }

    pub fn element<F: Field>(&self, c: usize) -> Mat<F> {
        dense(self.spec.ambient_dim(), &self.entries[c])
    }

    /// Dense matrix of the element with the given coordinates.
    pub fn matrix_of<F: Field>(&self, x: &[F]) -> Mat<F> {
        let n = self.spec.ambient_dim();
        let mut m = Mat::<F>::zeros(n, n);
        for (c, xc) in x.iter().enumerate() {
            if xc.is_zero() {
                continue;
            }
            for &(i, j, v) in &self.entries[c] {
                let cur = m.get(i, j).clone();
                m.set(i, j, cur + xc.clone() * F::from_i64(v));
            }
        }
        m
    }

    /// Coordinates of a matrix assumed to lie in `k`, read from the anchors.
    pub fn coords_of<F: Field>(&self, m: &Mat<F>) -> Vec<F> {
        self.anchors
            .iter()
            .map(|&(i, j)| m.get(i, j).clone())
            .collect()
    }

    /// Coordinates of `m`, failing when `m` is not in `k`.
    pub fn expand<F: Field>(&self, m: &Mat<F>) -> Result<Vec<F>> {
        let x = self.coords_of(m);
        let back = self.matrix_of(&x);
        let dev = back.sub(m)?;
        let ok = match F::MODE {
            Mode::Exact => dev.is_zero(),
            Mode::Float => dev.max_abs() <= 1e-9 * (1.0 + m.max_abs()),
        };
        if ok {
            Ok(x)
        } else {
            Err(Error::Shape(format!(
                "matrix does not lie in k for {}",
                self.spec
            )))
        }
    }

    /// Structure constants of `[e_a, e_b]` as `(c, coefficient)` pairs.
    pub fn structure(&self, a: usize, b: usize) -> &[(usize, i64)] {
        &self.structure[a * self.dim() + b]
    }

    /// Bracket in coordinates.
    pub fn bracket_coords<F: Field>(&self, x: &[F], y: &[F]) -> Vec<F> {
        let dim = self.dim();
        let mut out = vec![F::zero(); dim];
        for (a, xa) in x.iter().enumerate().take(dim) {
            if xa.is_zero() {
                continue;
            }
            for (b, yb) in y.iter().enumerate().take(dim) {
                if yb.is_zero() {
                    continue;
                }
                let xy = xa.clone() * yb.clone();
                for &(c, k) in self.structure(a, b) {
                    out[c] += xy.clone() * F::from_i64(k);
                }
            }
        }
        out
    }
}
