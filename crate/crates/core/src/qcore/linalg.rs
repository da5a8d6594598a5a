//! Hermitian eigendecomposition and spectral helpers, backed by nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::matrix::ComplexMatrix;
use super::{DEFAULT_TOL, EIG_TOL};
use crate::error::{Error, Result};

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.col(k)
    }

    /// Groups eigenvalues closer than `tol` into eigenspaces.
    ///
    /// Returns `(eigenvalue, projector)` pairs in descending eigenvalue order.
    pub fn eigenspaces(&self, tol: f64) -> Vec<(f64, ComplexMatrix)> {
        let n = self.values.len();
        let mut spaces: Vec<(f64, ComplexMatrix)> = Vec::new();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && (self.values[start] - self.values[end]).abs() <= tol {
                end += 1;
            }
            let mut proj = ComplexMatrix::zeros(n, n);
            for k in start..end {
                let v = self.vector(k);
                proj = &proj + &ComplexMatrix::outer(&v, &v);
            }
            let mean = self.values[start..end].iter().sum::<f64>() / (end - start) as f64;
            spaces.push((mean, proj));
            start = end;
        }
        spaces
    }

    /// `V f(D) V†`
    pub fn map(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let d: Vec<C64> = self.values.iter().map(|&x| f(x)).collect();
        let vd = &self.vectors * &ComplexMatrix::diag(&d);
        &vd * &self.vectors.dagger()
    }
}

fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn eigh(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "eigendecomposition of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let residual = m.hermitian_residual();
    if residual > DEFAULT_TOL {
        return Err(Error::NotHermitian { residual });
    }
    // symmetrize so round-off asymmetry does not leak into the solver
    let sym = (&to_nalgebra(m) + to_nalgebra(m).adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let n = m.rows();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Real eigenvalues of a Hermitian matrix in descending order.
pub fn eigvals_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(eigh(m)?.values)
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigvals_hermitian(m)?.iter().map(|x| x.abs()).sum())
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn spectral_norm_hermitian(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigvals_hermitian(m)?
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs())))
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn unitary_evolution(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = eigh(h)?;
    Ok(eig.map(|e| C64::new(0.0, -e * t).exp()))
}

/// Smallest gap between consecutive (descending) eigenvalues; infinite for 1x1.
pub fn min_level_gap(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| (w[0] - w[1]).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Whether two eigenvalue lists agree within [`EIG_TOL`].
pub fn spectra_close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= EIG_TOL)
}

/// Thin QR of a square complex matrix with the diagonal of R made real and positive.
pub fn qr_phase_fixed(m: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let qr = to_nalgebra(m).qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for k in 0..r.nrows().min(r.ncols()) {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        // Q R = (Q Λ)(Λ* R) with Λ = diag(phase)
        for i in 0..q.nrows() {
            q[(i, k)] *= phase;
        }
        for j in 0..r.ncols() {
            r[(k, j)] *= phase.conj();
        }
    }
    (from_nalgebra(&q), from_nalgebra(&r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: usize, cols: usize, d: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real(rows, cols, d).unwrap()
    }

    #[test]
    fn pauli_z_and_mixed() {
        let z = real(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let v = eigvals_hermitian(&z).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] + 1.0).abs() < 1e-14);
        let mixed = ComplexMatrix::identity(2).scale_real(0.5);
        let v = eigvals_hermitian(&mixed).unwrap();
        assert!(v.iter().all(|x| (x - 0.5).abs() < 1e-14));
    }

    #[test]
    fn projector_difference_spectrum() {
        // |0><0| - |+><+| has characteristic polynomial x^2 - 1/2
        let diff = real(2, 2, &[0.5, -0.5, -0.5, -0.5]);
        let v = eigvals_hermitian(&diff).unwrap();
        let s = 0.5f64.sqrt();
        assert!((v[0] - s).abs() < 1e-12 && (v[1] + s).abs() < 1e-12);
        assert!((trace_norm(&diff).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_examples() {
        let x = real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((trace_norm(&x).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(trace_norm(&ComplexMatrix::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            eigvals_hermitian(&m),
            Err(Error::NotHermitian { .. })
        ));
        assert!(matches!(trace_norm(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eigenvalue_sum_equals_trace() {
        let m = ComplexMatrix::new(
            3,
            3,
            vec![
                C64::new(1.0, 0.0),
                C64::new(0.2, 0.3),
                C64::new(-0.1, 0.0),
                C64::new(0.2, -0.3),
                C64::new(-0.5, 0.0),
                C64::new(0.0, 0.7),
                C64::new(-0.1, 0.0),
                C64::new(0.0, -0.7),
                C64::new(2.0, 0.0),
            ],
        )
        .unwrap();
        let eig = eigh(&m).unwrap();
        assert!((eig.values.iter().sum::<f64>() - m.trace().re).abs() < 1e-8);
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        let rebuilt = eig.map(|x| C64::new(x, 0.0));
        assert!(rebuilt.max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn degenerate_eigenspaces_are_grouped() {
        let m = ComplexMatrix::diag(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0)]);
        let spaces = eigh(&m).unwrap().eigenspaces(EIG_TOL);
        assert_eq!(spaces.len(), 2);
        assert!((spaces[0].0 - 1.0).abs() < 1e-14);
        assert!((spaces[0].1.trace().re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn evolution_of_pauli_x_is_minus_i_x_at_half_pi() {
        let x = real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let u = unitary_evolution(&x, std::f64::consts::FRAC_PI_2).unwrap();
        let expect = x.scale(C64::new(0.0, -1.0));
        assert!(u.max_abs_diff(&expect) < 1e-12);
    }
}
