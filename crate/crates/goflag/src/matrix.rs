//! Dense matrices over a [`Field`] and the elimination routines built on them.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{Field, Mode};

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Mat<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Field> fmt::Debug for Mat<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| format!("{:?}", self.get(i, j).to_f64()))
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl<F: Field> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn diagonal(entries: &[F]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m.set(i, i, e.clone());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut F {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Mat<G> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    fn same_shape(&self, o: &Self, what: &str) -> Result<()> {
        if self.rows != o.rows || self.cols != o.cols {
            return Err(Error::Shape(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.same_shape(o, "add")?;
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.same_shape(o, "sub")?;
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        })
    }

    pub fn scale(&self, c: &F) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.clone() * c.clone()).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        if self.cols != o.rows {
            return Err(Error::Shape(format!(
                "product: {}x{} times {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let v = out.get(i, j).clone() + a.clone() * b.clone();
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// `self * o - o * self`.
    pub fn commutator(&self, o: &Self) -> Result<Self> {
        if !self.is_square() || self.rows != o.rows || !o.is_square() {
            return Err(Error::Shape(format!(
                "bracket: {}x{} with {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        self.mul(o)?.sub(&o.mul(self)?)
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(v.len(), self.cols, "vector length");
        (0..self.rows)
            .map(|i| {
                let mut acc = F::zero();
                for (a, x) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !x.is_zero() {
                        acc += a.clone() * x.clone();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn trace(&self) -> F {
        let mut t = F::zero();
        for i in 0..self.rows.min(self.cols) {
            t += self.get(i, i).clone();
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Field::is_zero)
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.to_f64().abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Submatrix `[r0, r0+nr) x [c0, c0+nc)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self::from_fn(nr, nc, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    /// Matrix inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Option<Self> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, F::one());
        }
        let pivots = rref(&mut aug, n, 1e-12 * (1.0 + self.max_abs()));
        if pivots.len() < n {
            return None;
        }
        Some(aug.block(0, n, n, n))
    }
}

/// Reduced row echelon form computed in place over the first `pivot_cols`
/// columns. Returns the pivot columns. Exact mode pivots on the first nonzero
/// entry; float mode uses partial pivoting and treats entries of magnitude at
/// most `tol` as zero.
pub fn rref<F: Field>(m: &mut Mat<F>, pivot_cols: usize, tol: f64) -> Vec<usize> {
    let (rows, cols) = (m.rows, m.cols);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..pivot_cols {
        if r == rows {
            break;
        }
        let pick = match F::MODE {
            Mode::Exact => (r..rows).find(|&i| !m.get(i, c).is_zero()),
            Mode::Float => {
                let best = (r..rows).max_by(|&a, &b| {
                    m.get(a, c)
                        .to_f64()
                        .abs()
                        .total_cmp(&m.get(b, c).to_f64().abs())
                });
                best.filter(|&i| m.get(i, c).to_f64().abs() > tol)
            }
        };
        let Some(p) = pick else { continue };
        if p != r {
            for j in 0..cols {
                m.data.swap(p * cols + j, r * cols + j);
            }
        }
        let inv = m.get(r, c).inv().expect("pivot is nonzero");
        for j in c..cols {
            let v = m.get(r, j).clone() * inv.clone();
            m.set(r, j, v);
        }
        for i in 0..rows {
            if i == r {
                continue;
            }
            let f = m.get(i, c).clone();
            if f.is_zero() {
                continue;
            }
            for j in c..cols {
                let pj = m.get(r, j).clone();
                if pj.is_zero() {
                    continue;
                }
                let v = m.get(i, j).clone() - f.clone() * pj;
                m.set(i, j, v);
            }
            if F::MODE == Mode::Float {
                m.set(i, c, F::zero());
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Rank of a matrix (exact in exact mode, tolerance-based in float mode).
pub fn rank<F: Field>(m: &Mat<F>, tol: f64) -> usize {
    let mut w = m.clone();
    let cols = w.cols();
    rref(&mut w, cols, tol).len()
}

/// Solves `a z = b` when the system is consistent, returning one solution
/// (free variables set to zero). Returns `None` for an inconsistent system.
pub fn solve_consistent<F: Field>(a: &Mat<F>, b: &[F], tol: f64) -> Option<Vec<F>> {
    assert_eq!(a.rows(), b.len(), "right-hand side length");
    let (rows, cols) = (a.rows(), a.cols());
    let mut aug = Mat::zeros(rows, cols + 1);
    for (i, bi) in b.iter().enumerate() {
        for j in 0..cols {
            aug.set(i, j, a.get(i, j).clone());
        }
        aug.set(i, cols, bi.clone());
    }
    let pivots = rref(&mut aug, cols, tol);
    for i in pivots.len()..rows {
        if !aug.get(i, cols).negligible(tol) {
            return None;
        }
    }
    let mut z = vec![F::zero(); cols];
    for (i, &c) in pivots.iter().enumerate() {
        z[c] = aug.get(i, cols).clone();
    }
    Some(z)
}

/// Leading principal minors `D_1, ..., D_k` of a symmetric matrix, computed by
/// symmetric elimination without pivoting. Stops after the first minor that is
/// not positive, which is then the last entry of the result.
pub fn leading_minors_until_nonpositive<F: Field>(m: &Mat<F>) -> Vec<F> {
    let n = m.rows();
    let mut w = m.clone();
    let mut minors = Vec::with_capacity(n);
    let mut det = F::one();
    for k in 0..n {
        let piv = w.get(k, k).clone();
        det = det * piv.clone();
        minors.push(det.clone());
        if det.signum() <= 0 {
            break;
        }
        let inv = piv.inv().expect("positive pivot");
        for i in k + 1..n {
            let f = w.get(i, k).clone() * inv.clone();
            if f.is_zero() {
                continue;
            }
            for j in k + 1..n {
                let v = w.get(i, j).clone() - f.clone() * w.get(k, j).clone();
                w.set(i, j, v);
            }
        }
    }
    minors
}

/// Eigenvalues of a symmetric float matrix, ascending.
pub fn symmetric_eigenvalues(m: &Mat<f64>) -> Vec<f64> {
    let n = m.rows();
    let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| *m.get(i, j));
    let mut ev: Vec<f64> = dm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Minimum-norm least-squares solution of `a z = b` in float mode, via SVD.
pub fn least_squares(a: &Mat<f64>, b: &[f64]) -> Vec<f64> {
    let (rows, cols) = (a.rows(), a.cols());
    if cols == 0 {
        return Vec::new();
    }
    let dm = nalgebra::DMatrix::from_fn(rows, cols, |i, j| *a.get(i, j));
    let rhs = nalgebra::DVector::from_column_slice(b);
    let svd = dm.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(1.0);
    match svd.solve(&rhs, eps) {
        Ok(z) => z.iter().copied().collect(),
        Err(_) => vec![0.0; cols],
    }
}

/// Cayley transform `(I - Z)(I + Z)^{-1}`, an orthogonal matrix for skew `Z`.
pub fn cayley<F: Field>(z: &Mat<F>) -> Option<Mat<F>> {
    let n = z.rows();
    let id = Mat::identity(n);
    let plus = id.add(z).ok()?.inverse()?;
    id.sub(z).ok()?.mul(&plus).ok()
}
