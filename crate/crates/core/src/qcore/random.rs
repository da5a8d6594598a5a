//! Seeded random states, unitaries and isometries.
//!
//! Unitaries come from the QR decomposition of a complex Gaussian matrix with
//! the phases of `R`'s diagonal absorbed into `Q`, which makes the result
//! Haar distributed.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::linalg::qr_phase_fixed;
use super::matrix::ComplexMatrix;
use super::states::{DensityMatrix, Ket, UnitaryOp};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Ginibre matrix with unit-variance entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryOp {
    let (q, _) = qr_phase_fixed(&ginibre(dim, dim, rng));
    UnitaryOp::new(q).expect("QR factor is unitary")
}

/// Haar-random pure state.
pub fn random_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Ket {
    let amps: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    Ket::normalized(amps).expect("nonzero gaussian vector")
}

/// Random full-rank density matrix `G G† / tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(dim, dim, rng);
    let m = &g * &g.dagger();
    let tr = m.trace().re;
    let m = m.scale_real(1.0 / tr);
    // exact Hermitian symmetrization before validation
    let m = (&m + &m.dagger()).scale_real(0.5);
    DensityMatrix::new(m).expect("Wishart matrix is a valid state")
}

/// Isometry `out_dim x in_dim` (first `in_dim` columns of a Haar unitary).
pub fn random_isometry<R: Rng + ?Sized>(
    in_dim: usize,
    out_dim: usize,
    rng: &mut R,
) -> ComplexMatrix {
    assert!(out_dim >= in_dim, "isometry needs out_dim >= in_dim");
    let u = random_unitary(out_dim, rng);
    ComplexMatrix::from_fn(out_dim, in_dim, |r, c| u.matrix()[(r, c)])
}

/// Uniformly random point on the unit sphere.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}
