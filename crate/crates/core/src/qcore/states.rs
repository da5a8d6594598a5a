//! Validated states, unitaries and bases.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::linalg::eigvals_hermitian;
use super::matrix::{kron, kron_vec, ComplexMatrix};
use super::DEFAULT_TOL;
use crate::error::{dim_mismatch, Error, Result};

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VectorJson", into = "VectorJson")]
pub struct Ket {
    amps: Vec<C64>,
}

/// Wire form of a vector: paired real arrays.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl VectorJson {
    pub fn from_amps(amps: &[C64]) -> Self {
        VectorJson {
            re: amps.iter().map(|z| z.re).collect(),
            im: amps.iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_amps(&self) -> Result<Vec<C64>> {
        if self.re.len() != self.im.len() {
            return Err(Error::Shape(format!(
                "re has {} entries but im has {}",
                self.re.len(),
                self.im.len()
            )));
        }
        let amps: Vec<C64> = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| C64::new(r, i))
            .collect();
        if let Some(i) = amps
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite(i));
        }
        Ok(amps)
    }
}

impl TryFrom<VectorJson> for Ket {
    type Error = Error;

    fn try_from(v: VectorJson) -> Result<Self> {
        Ket::new(v.to_amps()?)
    }
}

impl From<Ket> for VectorJson {
    fn from(k: Ket) -> Self {
        VectorJson::from_amps(&k.amps)
    }
}

impl Ket {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        Self::with_tolerance(amps, DEFAULT_TOL)
    }

    pub fn with_tolerance(amps: Vec<C64>, tol: f64) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Shape("empty state vector".into()));
        }
        if let Some(i) = amps
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite(i));
        }
        let n = norm(&amps);
        if (n - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(Ket { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let n = norm(&amps);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotNormalized { norm: n });
        }
        Ket::new(amps.into_iter().map(|z| z / n).collect())
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Ket::new(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Computational basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(
            index < dim,
            "basis index {index} out of range for dimension {dim}"
        );
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ket { amps }
    }

    pub fn zero() -> Self {
        Ket::basis(2, 0)
    }

    pub fn one() -> Self {
        Ket::basis(2, 1)
    }

    pub fn plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Ket::from_real(&[s, s]).expect("normalized")
    }

    pub fn minus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Ket::from_real(&[s, -s]).expect("normalized")
    }

    /// Uniform superposition of the computational basis.
    pub fn uniform(dim: usize) -> Self {
        let a = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ket { amps: vec![a; dim] }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Ket) -> C64 {
        inner(&self.amps, &other.amps)
    }

    /// `|<self|other>|^2`
    pub fn fidelity(&self, other: &Ket) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn kron(&self, other: &Ket) -> Ket {
        Ket {
            amps: kron_vec(&self.amps, &other.amps),
        }
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amps, &self.amps)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: self.projector(),
        }
    }

    pub fn phase(&self, phi: f64) -> Ket {
        let p = C64::from_polar(1.0, phi);
        Ket {
            amps: self.amps.iter().map(|z| z * p).collect(),
        }
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "ComplexMatrix")]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl From<DensityMatrix> for ComplexMatrix {
    fn from(d: DensityMatrix) -> Self {
        d.matrix
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(de)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, DEFAULT_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape(format!(
                "{}x{} density matrix",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let residual = matrix.hermitian_residual();
        if residual > tol {
            return Err(Error::NotHermitian { residual });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        let min = eigvals_hermitian(&matrix)?.last().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `tr(self * op)`
    pub fn expectation(&self, op: &ComplexMatrix) -> Result<C64> {
        Ok(self.matrix.matmul(op)?.trace())
    }

    /// `U rho U†`
    pub fn evolve(&self, u: &UnitaryOp) -> Result<DensityMatrix> {
        let m = u.matrix.matmul(&self.matrix)?;
        Ok(DensityMatrix {
            matrix: &m * &u.matrix.dagger(),
        })
    }
}

/// Square matrix with `U†U = I`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "ComplexMatrix")]
pub struct UnitaryOp {
    matrix: ComplexMatrix,
}

impl From<UnitaryOp> for ComplexMatrix {
    fn from(u: UnitaryOp) -> Self {
        u.matrix
    }
}

impl<'de> Deserialize<'de> for UnitaryOp {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(de)?;
        UnitaryOp::new(m).map_err(serde::de::Error::custom)
    }
}

impl UnitaryOp {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, DEFAULT_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let residual = matrix.unitarity_residual();
        if residual > tol {
            return Err(Error::NotUnitary { residual });
        }
        Ok(UnitaryOp { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryOp {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn pauli_x() -> Self {
        Self::real2([0.0, 1.0, 1.0, 0.0])
    }

    pub fn pauli_y() -> Self {
        let z = C64::new(0.0, 0.0);
        UnitaryOp {
            matrix: ComplexMatrix::new(2, 2, vec![z, C64::new(0.0, -1.0), C64::new(0.0, 1.0), z])
                .expect("2x2"),
        }
    }

    pub fn pauli_z() -> Self {
        Self::real2([1.0, 0.0, 0.0, -1.0])
    }

    pub fn hadamard() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::real2([s, s, s, -s])
    }

    /// `exp(-i theta sigma_y / 2)`
    pub fn ry(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::real2([c, -s, s, c])
    }

    fn real2(d: [f64; 4]) -> Self {
        UnitaryOp {
            matrix: ComplexMatrix::from_real(2, 2, &d).expect("2x2"),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dagger(&self) -> UnitaryOp {
        UnitaryOp {
            matrix: self.matrix.dagger(),
        }
    }

    /// `self * other`
    pub fn compose(&self, other: &UnitaryOp) -> Result<UnitaryOp> {
        Ok(UnitaryOp {
            matrix: self.matrix.matmul(&other.matrix)?,
        })
    }

    pub fn kron(&self, other: &UnitaryOp) -> UnitaryOp {
        UnitaryOp {
            matrix: kron(&self.matrix, &other.matrix),
        }
    }

    pub fn apply(&self, k: &Ket) -> Result<Ket> {
        Ok(Ket {
            amps: self.matrix.apply(k.amplitudes())?,
        })
    }
}

/// Ordered orthonormal basis; vector `i` is column `i` of [`OrthonormalBasis::matrix`].
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalBasis {
    vectors: Vec<Ket>,
}

impl OrthonormalBasis {
    pub fn new(vectors: Vec<Ket>) -> Result<Self> {
        Self::with_tolerance(vectors, DEFAULT_TOL)
    }

    pub fn with_tolerance(vectors: Vec<Ket>, tol: f64) -> Result<Self> {
        let n = vectors.len();
        if n == 0 {
            return Err(Error::Shape("empty basis".into()));
        }
        if let Some(v) = vectors.iter().find(|v| v.dim() != n) {
            return Err(dim_mismatch("basis vector", n, v.dim()));
        }
        let mut residual = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                residual = residual.max((vectors[i].inner(&vectors[j]) - target).norm());
            }
        }
        if residual > tol {
            return Err(Error::NotOrthonormal { residual });
        }
        Ok(OrthonormalBasis { vectors })
    }

    /// Basis from the columns of a unitary matrix.
    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        Self::from_matrix_with_tolerance(m, DEFAULT_TOL)
    }

    pub fn from_matrix_with_tolerance(m: &ComplexMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!(
                "{}x{} basis matrix",
                m.rows(),
                m.cols()
            )));
        }
        let vectors = (0..m.cols())
            .map(|c| Ket::with_tolerance(m.col(c), tol))
            .collect::<Result<Vec<_>>>()?;
        Self::with_tolerance(vectors, tol)
    }

    pub fn computational(dim: usize) -> Self {
        OrthonormalBasis {
            vectors: (0..dim).map(|i| Ket::basis(dim, i)).collect(),
        }
    }

    /// `{|+>, |->}`
    pub fn hadamard() -> Self {
        OrthonormalBasis {
            vectors: vec![Ket::plus(), Ket::minus()],
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Ket] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &Ket {
        &self.vectors[i]
    }

    /// Unitary whose columns are the basis vectors.
    pub fn matrix(&self) -> ComplexMatrix {
        let n = self.dim();
        ComplexMatrix::from_fn(n, n, |r, c| self.vectors[c].amplitudes()[r])
    }

    /// Coefficients `<v_i|psi>`.
    pub fn coordinates(&self, psi: &[C64]) -> Result<Vec<C64>> {
        if psi.len() != self.dim() {
            return Err(dim_mismatch("basis coordinates", self.dim(), psi.len()));
        }
        Ok(self
            .vectors
            .iter()
            .map(|v| inner(v.amplitudes(), psi))
            .collect())
    }

    /// Basis `{R v_i}`.
    pub fn rotated(&self, r: &UnitaryOp) -> Result<OrthonormalBasis> {
        let vectors = self
            .vectors
            .iter()
            .map(|v| r.apply(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(OrthonormalBasis { vectors })
    }
}

impl Serialize for OrthonormalBasis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix().serialize(s)
    }
}

impl<'de> Deserialize<'de> for OrthonormalBasis {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(de)?;
        OrthonormalBasis::from_matrix(&m).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ket_validation() {
        assert!(Ket::from_real(&[1.0, 1.0]).is_err());
        assert!(Ket::from_real(&[0.6, 0.8]).is_ok());
        assert!(Ket::normalized(vec![C64::new(0.0, 0.0); 2]).is_err());
        let k = Ket::normalized(vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0)]).unwrap();
        assert!((norm(k.amplitudes()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::identity(2)).is_err());
        let neg = ComplexMatrix::from_real(2, 2, &[1.5, 0.0, 0.0, -0.5]).unwrap();
        assert!(matches!(
            DensityMatrix::new(neg),
            Err(Error::InvalidDensity(_))
        ));
        let nonh = ComplexMatrix::from_real(2, 2, &[0.5, 0.3, 0.0, 0.5]).unwrap();
        assert!(matches!(
            DensityMatrix::new(nonh),
            Err(Error::NotHermitian { .. })
        ));
        assert!(DensityMatrix::new(Ket::plus().projector()).is_ok());
    }

    #[test]
    fn unitary_validation() {
        assert!(
            UnitaryOp::new(ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap()).is_err()
        );
        for u in [
            UnitaryOp::pauli_x(),
            UnitaryOp::pauli_y(),
            UnitaryOp::hadamard(),
            UnitaryOp::ry(0.7),
        ] {
            assert!(u.matrix().unitarity_residual() < 1e-15);
        }
    }

    #[test]
    fn basis_validation_and_coordinates() {
        let bad = OrthonormalBasis::new(vec![Ket::zero(), Ket::plus()]);
        assert!(matches!(bad, Err(Error::NotOrthonormal { .. })));
        let b = OrthonormalBasis::hadamard();
        let c = b.coordinates(Ket::zero().amplitudes()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c[0] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((c[1] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!(b.matrix().max_abs_diff(UnitaryOp::hadamard().matrix()) < 1e-15);
    }

    #[test]
    fn ket_json_round_trip() {
        let k = Ket::new(vec![C64::new(0.6, 0.0), C64::new(0.0, -0.8)]).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"re":[0.6,0.0],"im":[0.0,-0.8]}"#);
        assert_eq!(serde_json::from_str::<Ket>(&s).unwrap(), k);
        assert!(serde_json::from_str::<Ket>(r#"{"re":[1,1],"im":[0,0]}"#).is_err());
    }
}
