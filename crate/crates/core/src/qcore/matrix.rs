use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};

/// Dense complex matrix stored row-major.
///
/// Serializes as `{"rows": n, "cols": m, "re": [...], "im": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Wire form of [`ComplexMatrix`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        if m.re.len() != m.im.len() {
            return Err(Error::Shape(format!(
                "re has {} entries but im has {}",
                m.re.len(),
                m.im.len()
            )));
        }
        let data =
            m.re.iter()
                .zip(&m.im)
                .map(|(&re, &im)| C64::new(re, im))
                .collect();
        ComplexMatrix::new(m.rows, m.cols, data)
    }
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        MatrixJson {
            rows: m.rows,
            cols: m.cols,
            re: m.data.iter().map(|z| z.re).collect(),
            im: m.data.iter().map(|z| z.im).collect(),
        }
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix has an empty dimension"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite(i));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Builds a matrix from an entry function `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix dimension");
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| C64::new(0.0, 0.0))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, dim, |r, c| {
            if r == c {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |r, c| {
            if r == c {
                entries[r]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Column vector from amplitudes.
    pub fn column(amps: &[C64]) -> Self {
        Self::from_fn(amps.len(), 1, |r, _| amps[r])
    }

    /// `|a><b|`
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c].conj())
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn col(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, k: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        self.scale(C64::new(k, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Checked product; errors when inner dimensions disagree.
    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(dim_mismatch("matrix product", self.cols, other.rows));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.rows * other.cols];
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: other.cols,
            data: out,
        })
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(dim_mismatch("matrix-vector product", self.cols, v.len()));
        }
        Ok((0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `M - M†`; infinite for non-square input.
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }

    /// Largest entrywise modulus of `M†M - I`; infinite for non-square input.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = self.dagger().matmul(self).expect("square");
        prod.max_abs_diff(&ComplexMatrix::identity(self.rows))
    }

    /// Kronecker product with `self` as the slow (leftmost) factor.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        kron(self, other)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r},{c}) out of bounds"
        );
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r},{c}) out of bounds"
        );
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on incompatible shapes; use [`ComplexMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("incompatible matrix shapes")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Kronecker product `a ⊗ b`; `a` indexes the slow (leftmost) factor.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows, a.cols, b.rows, b.cols);
    ComplexMatrix::from_fn(ar * br, ac * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

/// Kronecker product of plain vectors, `a` slow.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Row-major strides for a list of factor dimensions (factor 0 slowest).
pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

fn check_dims(dims: &[usize], total: usize, context: &str) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::Shape(format!(
            "{context}: factor dimensions must be positive"
        )));
    }
    let prod: usize = dims.iter().product();
    if prod != total {
        return Err(dim_mismatch(context, total, prod));
    }
    Ok(())
}

/// Reduces `m` onto the factors listed in `keep`.
///
/// Factors are indexed left to right (0 = slowest). The result orders the kept
/// factors by ascending index regardless of the order in `keep`.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "partial trace of a {}x{} matrix",
            m.rows, m.cols
        )));
    }
    check_dims(dims, m.rows, "partial trace")?;
    if keep.is_empty() {
        return Err(Error::InvalidArgument(
            "partial trace must keep at least one factor".into(),
        ));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::IndexOutOfRange {
            context: "partial trace factor".into(),
            index: bad,
            len: dims.len(),
        });
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
    let st = strides(dims);
    let kdims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
    let tdims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let kd: usize = kdims.iter().product();
    let td: usize = tdims.iter().product();

    // full index offset for a multi-index over a factor subset
    let offsets = |factors: &[usize], fdims: &[usize], count: usize| -> Vec<usize> {
        let fst = strides(fdims);
        (0..count)
            .map(|flat| {
                factors
                    .iter()
                    .enumerate()
                    .map(|(j, &f)| ((flat / fst[j]) % fdims[j]) * st[f])
                    .sum()
            })
            .collect()
    };
    let koff = offsets(&kept, &kdims, kd);
    let toff = if traced.is_empty() {
        vec![0]
    } else {
        offsets(&traced, &tdims, td)
    };

    let mut out = ComplexMatrix::zeros(kd, kd);
    for (r, &kr) in koff.iter().enumerate() {
        for (c, &kc) in koff.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &toff {
                acc += m[(kr + t, kc + t)];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Applies `op` to the listed factors of a state vector.
///
/// `targets` gives the factors `op` acts on, the first being its slow index.
pub fn apply_on_factors(
    state: &[C64],
    dims: &[usize],
    targets: &[usize],
    op: &ComplexMatrix,
) -> Result<Vec<C64>> {
    check_dims(dims, state.len(), "apply on factors")?;
    let tdims: Vec<usize> = targets
        .iter()
        .map(|&t| {
            dims.get(t).copied().ok_or_else(|| Error::IndexOutOfRange {
                context: "target factor".into(),
                index: t,
                len: dims.len(),
            })
        })
        .collect::<Result<_>>()?;
    let sub: usize = tdims.iter().product();
    if !op.is_square() || op.rows() != sub {
        return Err(dim_mismatch("operator on target factors", sub, op.rows()));
    }
    let st = strides(dims);
    let tst = strides(&tdims);
    let sub_off: Vec<usize> = (0..sub)
        .map(|flat| {
            targets
                .iter()
                .enumerate()
                .map(|(j, &f)| ((flat / tst[j]) % tdims[j]) * st[f])
                .sum()
        })
        .collect();
    let rest: Vec<usize> = (0..dims.len()).filter(|i| !targets.contains(i)).collect();
    let rdims: Vec<usize> = rest.iter().map(|&i| dims[i]).collect();
    let rst = strides(&rdims);
    let rcount: usize = rdims.iter().product();

    let mut out = vec![C64::new(0.0, 0.0); state.len()];
    let mut buf = vec![C64::new(0.0, 0.0); sub];
    for flat in 0..rcount.max(1) {
        let base: usize = rest
            .iter()
            .enumerate()
            .map(|(j, &f)| ((flat / rst[j]) % rdims[j]) * st[f])
            .sum();
        for (b, &o) in buf.iter_mut().zip(&sub_off) {
            *b = state[base + o];
        }
        for (r, &o) in sub_off.iter().enumerate() {
            out[base + o] = (0..sub).map(|c| op[(r, c)] * buf[c]).sum();
        }
    }
    Ok(out)
}

/// Contracts factor `factor` of a state vector with the bra `<bra|`.
pub fn contract_factor(
    state: &[C64],
    dims: &[usize],
    factor: usize,
    bra: &[C64],
) -> Result<Vec<C64>> {
    check_dims(dims, state.len(), "factor contraction")?;
    if factor >= dims.len() {
        return Err(Error::IndexOutOfRange {
            context: "contracted factor".into(),
            index: factor,
            len: dims.len(),
        });
    }
    if bra.len() != dims[factor] {
        return Err(dim_mismatch("contraction bra", dims[factor], bra.len()));
    }
    let st = strides(dims);
    let outer: usize = dims[..factor].iter().product();
    let inner = st[factor];
    let d = dims[factor];
    let mut out = Vec::with_capacity(outer * inner);
    for o in 0..outer {
        for i in 0..inner {
            let base = o * d * inner + i;
            out.push(
                (0..d)
                    .map(|k| bra[k].conj() * state[base + k * inner])
                    .sum(),
            );
        }
    }
    Ok(out)
}
