//! Choi-matrix representation of quantum channels and the two-instant history
//! operator of a density matrix.
//!
//! With input basis `{|a_i>}` and output basis `{|b_k>}`, write
//! `E_ij = |a_i><a_j|` and `F_kl = |b_k><b_l|`. The Choi entries are
//! `L[kl, ij] = tr(F_kl† Λ(E_ij)) = <b_k| Λ(E_ij) |b_l>` and are stored at row
//! `k * d_in + i`, column `l * d_in + j` (output index slow). In that layout the
//! channel is completely positive exactly when the stored matrix is positive
//! semidefinite.
//!
//! The history operator of `rho` is `Σ L[kl, ij] rho_ij F_kl ⊗ E_ij`, with the
//! output (later) factor on the left. Its coefficient matrix is the entrywise
//! product of the Choi matrix with `J ⊗ rho` (`J` all ones), so by the Schur
//! product theorem it is positive semidefinite for every CP channel and every
//! density matrix. Tracing out the input factor keeps only the diagonal of
//! `rho` in the input basis: the output marginal is `Λ(Δ(rho))`, where `Δ`
//! dephases in the input basis. It coincides with `Λ(rho)` only when `rho` is
//! diagonal in that basis.

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::Serialize;

use crate::error::{dim_mismatch, Error, Result};
use crate::qcore::{
    eigh, kron, partial_trace, random::random_isometry, spectral_norm_hermitian, ComplexMatrix,
    DensityMatrix, OrthonormalBasis, UnitaryOp, DEFAULT_TOL,
};

/// Eigenvalue floor below which a computed Choi matrix signals a non-CP input.
pub const CP_BUG_FLOOR: f64 = -1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// `Σ K†K = I`
    TracePreserving,
    /// `Σ K†K <= I`, admitted on purpose (post-selection modelling).
    TraceDecreasing,
    /// Shapes checked only; meant for [`validate_cptp`].
    Unchecked,
}

/// Channel in Kraus form, `Λ(X) = Σ K X K†`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    in_dim: usize,
    out_dim: usize,
    ops: Vec<ComplexMatrix>,
    kind: ChannelKind,
}

fn kraus_sum(ops: &[ComplexMatrix]) -> ComplexMatrix {
    let d = ops[0].cols();
    ops.iter().fold(ComplexMatrix::zeros(d, d), |acc, k| {
        &acc + &(&k.dagger() * k)
    })
}

impl KrausChannel {
    /// Trace-preserving channel; errors when `Σ K†K` deviates from `I` by more than 1e-9.
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let mut ch = Self::unchecked(ops)?;
        let deficit = ch.tp_deficit();
        if deficit > DEFAULT_TOL {
            return Err(Error::Channel(format!(
                "Kraus operators are not trace preserving (|Σ K†K - I| = {deficit:.3e})"
            )));
        }
        ch.kind = ChannelKind::TracePreserving;
        Ok(ch)
    }

    /// Trace-decreasing channel; requires `Σ K†K <= I`.
    pub fn trace_decreasing(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let mut ch = Self::unchecked(ops)?;
        let gap = &ComplexMatrix::identity(ch.in_dim) - &kraus_sum(&ch.ops);
        let min = eigh(&gap)?.values.last().copied().unwrap_or(0.0);
        if min < -DEFAULT_TOL {
            return Err(Error::Channel(format!(
                "Σ K†K exceeds the identity (min eigenvalue of I - Σ K†K = {min:.3e})"
            )));
        }
        ch.kind = ChannelKind::TraceDecreasing;
        Ok(ch)
    }

    /// Shape-checked Kraus list with no trace condition.
    pub fn unchecked(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::Channel("empty Kraus list".into()));
        };
        let (out_dim, in_dim) = (first.rows(), first.cols());
        if let Some(k) = ops
            .iter()
            .find(|k| k.rows() != out_dim || k.cols() != in_dim)
        {
            return Err(Error::Channel(format!(
                "Kraus operator of shape {}x{} in a {out_dim}x{in_dim} channel",
                k.rows(),
                k.cols()
            )));
        }
        Ok(KrausChannel {
            in_dim,
            out_dim,
            ops,
            kind: ChannelKind::Unchecked,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::unitary(&UnitaryOp::identity(dim))
    }

    pub fn unitary(u: &UnitaryOp) -> Self {
        KrausChannel {
            in_dim: u.dim(),
            out_dim: u.dim(),
            ops: vec![u.matrix().clone()],
            kind: ChannelKind::TracePreserving,
        }
    }

    /// Qubit depolarizing channel `ρ -> (1-p) ρ + p I/2`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "depolarizing probability {p} outside [0, 1]"
            )));
        }
        let paulis = [
            UnitaryOp::identity(2),
            UnitaryOp::pauli_x(),
            UnitaryOp::pauli_y(),
            UnitaryOp::pauli_z(),
        ];
        let weights = [
            (1.0 - 0.75 * p).sqrt(),
            (p / 4.0).sqrt(),
            (p / 4.0).sqrt(),
            (p / 4.0).sqrt(),
        ];
        Self::new(
            paulis
                .iter()
                .zip(weights)
                .map(|(u, w)| u.matrix().scale_real(w))
                .collect(),
        )
    }

    /// Qubit amplitude damping with decay probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!(
                "damping probability {gamma} outside [0, 1]"
            )));
        }
        let k0 = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()])?;
        let k1 = ComplexMatrix::from_real(2, 2, &[0.0, gamma.sqrt(), 0.0, 0.0])?;
        Self::new(vec![k0, k1])
    }

    /// Random CPTP map: Stinespring isometry into `out ⊗ env`, environment traced out.
    ///
    /// Panics unless `out_dim * env_dim >= in_dim`.
    pub fn random<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        env_dim: usize,
        rng: &mut R,
    ) -> Self {
        let v = random_isometry(in_dim, out_dim * env_dim, rng);
        let ops = (0..env_dim)
            .map(|e| ComplexMatrix::from_fn(out_dim, in_dim, |r, c| v[(r * env_dim + e, c)]))
            .collect();
        KrausChannel {
            in_dim,
            out_dim,
            ops,
            kind: ChannelKind::TracePreserving,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    /// Spectral norm of `Σ K†K - I`.
    pub fn tp_deficit(&self) -> f64 {
        let diff = &kraus_sum(&self.ops) - &ComplexMatrix::identity(self.in_dim);
        spectral_norm_hermitian(&diff).unwrap_or(f64::INFINITY)
    }

    /// `Σ K X K†`
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if !x.is_square() || x.rows() != self.in_dim {
            return Err(dim_mismatch("channel input", self.in_dim, x.rows()));
        }
        let mut out = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.ops {
            out = &out + &(&(k * x) * &k.dagger());
        }
        Ok(out)
    }
}

/// Choi matrix of a channel relative to fixed input and output bases.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiChannel {
    in_basis: OrthonormalBasis,
    out_basis: OrthonormalBasis,
    choi: ComplexMatrix,
    trace_decreasing: bool,
}

impl ChoiChannel {
    /// Wraps an explicit Choi matrix after checking Hermiticity, positivity and
    /// (unless `trace_decreasing`) trace preservation within `tol`.
    pub fn from_matrix(
        choi: ComplexMatrix,
        in_basis: OrthonormalBasis,
        out_basis: OrthonormalBasis,
        trace_decreasing: bool,
        tol: f64,
    ) -> Result<Self> {
        let (din, dout) = (in_basis.dim(), out_basis.dim());
        if !choi.is_square() || choi.rows() != din * dout {
            return Err(dim_mismatch(
                "Choi matrix dimension",
                din * dout,
                choi.rows(),
            ));
        }
        let eig = eigh(&choi)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(Error::Channel(format!(
                "Choi matrix is not positive (min eigenvalue {min:.3e})"
            )));
        }
        let ch = ChoiChannel {
            in_basis,
            out_basis,
            choi,
            trace_decreasing,
        };
        if !trace_decreasing {
            let mut worst = 0.0f64;
            for i in 0..din {
                for j in 0..din {
                    let t: C64 = (0..dout).map(|k| ch.entry(k, k, i, j)).sum();
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((t - target).norm());
                }
            }
            if worst > tol {
                return Err(Error::Channel(format!(
                    "Choi matrix is not trace preserving (residual {worst:.3e})"
                )));
            }
        }
        Ok(ch)
    }

    pub fn in_basis(&self) -> &OrthonormalBasis {
        &self.in_basis
    }

    pub fn out_basis(&self) -> &OrthonormalBasis {
        &self.out_basis
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn in_dim(&self) -> usize {
        self.in_basis.dim()
    }

    pub fn out_dim(&self) -> usize {
        self.out_basis.dim()
    }

    pub fn is_trace_decreasing(&self) -> bool {
        self.trace_decreasing
    }

    /// `L[kl, ij]`
    pub fn entry(&self, k: usize, l: usize, i: usize, j: usize) -> C64 {
        let din = self.in_dim();
        self.choi[(k * din + i, l * din + j)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigh(&self.choi)
            .map(|e| e.values.last().copied().unwrap_or(0.0))
            .unwrap_or(f64::NAN)
    }

    /// `Λ(ρ)` reconstructed from the Choi entries.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (din, dout) = (self.in_dim(), self.out_dim());
        if !rho.is_square() || rho.rows() != din {
            return Err(dim_mismatch("channel input", din, rho.rows()));
        }
        let bin = self.in_basis.matrix();
        let coef = &(&bin.dagger() * rho) * &bin;
        let out = ComplexMatrix::from_fn(dout, dout, |k, l| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..din {
                for j in 0..din {
                    acc += self.entry(k, l, i, j) * coef[(i, j)];
                }
            }
            acc
        });
        let bout = self.out_basis.matrix();
        Ok(&(&bout * &out) * &bout.dagger())
    }

    /// Kraus operators read off the Choi eigendecomposition.
    pub fn to_kraus(&self) -> Result<KrausChannel> {
        let (din, dout) = (self.in_dim(), self.out_dim());
        let eig = eigh(&self.choi)?;
        let (bin, bout) = (self.in_basis.matrix(), self.out_basis.matrix());
        let mut ops = Vec::new();
        for (idx, &lambda) in eig.values.iter().enumerate() {
            if lambda <= 1e-12 {
                continue;
            }
            let v = eig.vector(idx);
            let s = lambda.sqrt();
            let coef = ComplexMatrix::from_fn(dout, din, |k, i| v[k * din + i] * s);
            ops.push(&(&bout * &coef) * &bin.dagger());
        }
        if ops.is_empty() {
            return Err(Error::Channel("Choi matrix is zero".into()));
        }
        if self.trace_decreasing {
            KrausChannel::trace_decreasing(ops)
        } else {
            KrausChannel::new(ops)
        }
    }
}

/// Choi matrix `L[kl, ij] = tr(F_kl† Λ(E_ij))` of a Kraus channel.
pub fn choi_from_kraus(
    ch: &KrausChannel,
    in_basis: &OrthonormalBasis,
    out_basis: &OrthonormalBasis,
) -> Result<ChoiChannel> {
    if in_basis.dim() != ch.in_dim() {
        return Err(dim_mismatch("input basis", ch.in_dim(), in_basis.dim()));
    }
    if out_basis.dim() != ch.out_dim() {
        return Err(dim_mismatch("output basis", ch.out_dim(), out_basis.dim()));
    }
    let (din, dout) = (ch.in_dim(), ch.out_dim());
    let mut choi = ComplexMatrix::zeros(din * dout, din * dout);
    for i in 0..din {
        for j in 0..din {
            let a_i = in_basis.vector(i).amplitudes();
            let a_j = in_basis.vector(j).amplitudes();
            let image = ch.apply(&ComplexMatrix::outer(a_i, a_j))?;
            for k in 0..dout {
                let b_k = out_basis.vector(k).amplitudes();
                let left: Vec<C64> = image.dagger().apply(b_k)?; // (<b_k| image)†
                for l in 0..dout {
                    let b_l = out_basis.vector(l).amplitudes();
                    let val: C64 = left.iter().zip(b_l).map(|(x, y)| x.conj() * y).sum();
                    choi[(k * din + i, l * din + j)] = val;
                }
            }
        }
    }
    let out = ChoiChannel {
        in_basis: in_basis.clone(),
        out_basis: out_basis.clone(),
        choi,
        trace_decreasing: ch.kind() == ChannelKind::TraceDecreasing,
    };
    let min = out.min_eigenvalue();
    if min < CP_BUG_FLOOR {
        return Err(Error::Channel(format!(
            "Choi matrix of a Kraus channel has eigenvalue {min:.3e}; Kraus input is corrupt"
        )));
    }
    Ok(out)
}

/// Two-instant history operator of a density matrix under a channel.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryOperator {
    matrix: ComplexMatrix,
    out_basis: OrthonormalBasis,
    in_basis: OrthonormalBasis,
    trace_decreasing: bool,
}

impl HistoryOperator {
    /// Operator on `out ⊗ in` in computational coordinates.
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `[out_dim, in_dim]`
    pub fn dims(&self) -> [usize; 2] {
        [self.out_basis.dim(), self.in_basis.dim()]
    }

    pub fn bases(&self) -> (&OrthonormalBasis, &OrthonormalBasis) {
        (&self.out_basis, &self.in_basis)
    }

    pub fn is_trace_decreasing(&self) -> bool {
        self.trace_decreasing
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.matrix.hermitian_residual()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + &self.matrix.dagger()).scale_real(0.5);
        eigh(&h)
            .map(|e| e.values.last().copied().unwrap_or(0.0))
            .unwrap_or(f64::NAN)
    }
}

/// `Σ L[kl, ij] ρ_ij F_kl ⊗ E_ij`
pub fn channel_history(rho: &DensityMatrix, choi: &ChoiChannel) -> Result<HistoryOperator> {
    let (din, dout) = (choi.in_dim(), choi.out_dim());
    if rho.dim() != din {
        return Err(dim_mismatch(
            "density matrix vs channel input basis",
            din,
            rho.dim(),
        ));
    }
    let bin = choi.in_basis.matrix();
    let rho_coef = &(&bin.dagger() * rho.matrix()) * &bin;
    let coef = ComplexMatrix::from_fn(din * dout, din * dout, |r, c| {
        let (i, j) = (r % din, c % din);
        choi.choi[(r, c)] * rho_coef[(i, j)]
    });
    let basis = kron(&choi.out_basis.matrix(), &bin);
    let matrix = &(&basis * &coef) * &basis.dagger();
    Ok(HistoryOperator {
        matrix,
        out_basis: choi.out_basis.clone(),
        in_basis: choi.in_basis.clone(),
        trace_decreasing: choi.trace_decreasing,
    })
}

/// Partial trace of a history operator over its input (earlier) factor.
///
/// Equals `Λ(Δ(ρ))` with `Δ` the dephasing in the input basis.
pub fn marginal_out(h: &HistoryOperator) -> ComplexMatrix {
    partial_trace(&h.matrix, &h.dims(), &[0]).expect("history operator dims are consistent")
}

/// Partial trace of a history operator over its output (later) factor.
pub fn marginal_in(h: &HistoryOperator) -> ComplexMatrix {
    partial_trace(&h.matrix, &h.dims(), &[1]).expect("history operator dims are consistent")
}

/// `Σ_i <a_i|ρ|a_i> |a_i><a_i|`
pub fn dephase(rho: &ComplexMatrix, basis: &OrthonormalBasis) -> Result<ComplexMatrix> {
    if !rho.is_square() || rho.rows() != basis.dim() {
        return Err(dim_mismatch("dephasing input", basis.dim(), rho.rows()));
    }
    let mut out = ComplexMatrix::zeros(basis.dim(), basis.dim());
    for v in basis.vectors() {
        let p = v.projector();
        let w = (&p * rho).trace();
        out = &out + &p.scale(w);
    }
    Ok(out)
}

/// Outcome of [`validate_cptp`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CptpReport {
    pub cp_pass: bool,
    pub min_choi_eigenvalue: f64,
    pub tp_pass: bool,
    /// Spectral norm of `Σ K†K - I`.
    pub tp_deficit: f64,
    /// `Σ K†K <= I`
    pub trace_nonincreasing: bool,
    pub flags: Vec<String>,
}

/// Checks complete positivity (Choi spectrum) and trace preservation of a Kraus list.
pub fn validate_cptp(ch: &KrausChannel) -> CptpReport {
    let comp_in = OrthonormalBasis::computational(ch.in_dim());
    let comp_out = OrthonormalBasis::computational(ch.out_dim());
    let min_choi_eigenvalue = match choi_from_kraus(ch, &comp_in, &comp_out) {
        Ok(c) => c.min_eigenvalue(),
        Err(_) => f64::NEG_INFINITY,
    };
    let tp_deficit = ch.tp_deficit();
    let gap = &ComplexMatrix::identity(ch.in_dim()) - &kraus_sum(ch.ops());
    let trace_nonincreasing = eigh(&gap)
        .map(|e| e.values.last().copied().unwrap_or(0.0) >= -DEFAULT_TOL)
        .unwrap_or(false);
    let cp_pass = min_choi_eigenvalue >= -DEFAULT_TOL;
    let tp_pass = tp_deficit <= DEFAULT_TOL;
    let mut flags = Vec::new();
    if ch.kind() == ChannelKind::TraceDecreasing {
        flags.push("trace_decreasing".to_string());
    }
    if !tp_pass && trace_nonincreasing {
        flags.push("loses_trace".to_string());
    }
    if !trace_nonincreasing {
        flags.push("increases_trace".to_string());
    }
    CptpReport {
        cp_pass,
        min_choi_eigenvalue,
        tp_pass,
        tp_deficit,
        trace_nonincreasing,
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::Ket;

    fn comp(d: usize) -> OrthonormalBasis {
        OrthonormalBasis::computational(d)
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_choi_is_delta() {
        let choi = choi_from_kraus(&KrausChannel::identity(2), &comp(2), &comp(2)).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let expect = if k == i && l == j { 1.0 } else { 0.0 };
                        assert!((choi.entry(k, l, i, j) - c(expect)).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn completely_depolarizing_choi() {
        let ch = KrausChannel::depolarizing(1.0).unwrap();
        let choi = choi_from_kraus(&ch, &comp(2), &comp(2)).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let expect = if k == l && i == j { 0.5 } else { 0.0 };
                        assert!((choi.entry(k, l, i, j) - c(expect)).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn unitary_choi_is_outer_product_of_entries() {
        let u = UnitaryOp::hadamard().compose(&UnitaryOp::ry(0.4)).unwrap();
        let s = UnitaryOp::new(ComplexMatrix::diag(&[c(1.0), C64::new(0.0, 1.0)])).unwrap();
        let u = s.compose(&u).unwrap();
        let choi = choi_from_kraus(&KrausChannel::unitary(&u), &comp(2), &comp(2)).unwrap();
        let m = u.matrix();
        for k in 0..2 {
            for l in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let expect = m[(k, i)] * m[(l, j)].conj();
                        assert!((choi.entry(k, l, i, j) - expect).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn basis_dimension_checked() {
        assert!(matches!(
            choi_from_kraus(&KrausChannel::identity(2), &comp(3), &comp(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn identity_channel_maximally_mixed_history() {
        let choi = choi_from_kraus(&KrausChannel::identity(2), &comp(2), &comp(2)).unwrap();
        let h = channel_history(&DensityMatrix::maximally_mixed(2), &choi).unwrap();
        // Σ_ij ρ_ij F_ij ⊗ E_ij with ρ = I/2 leaves only the i = j terms
        let expect = ComplexMatrix::diag(&[c(0.5), c(0.0), c(0.0), c(0.5)]);
        assert!(h.matrix().max_abs_diff(&expect) < 1e-15);
        assert!((h.trace() - c(1.0)).norm() < 1e-15);

        // coherent input gives the correlated projector
        let h = channel_history(&Ket::plus().to_density(), &choi).unwrap();
        let ghz = [c(0.5f64.sqrt()), c(0.0), c(0.0), c(0.5f64.sqrt())];
        assert!(h.matrix().max_abs_diff(&ComplexMatrix::outer(&ghz, &ghz)) < 1e-15);
    }

    #[test]
    fn marginal_examples() {
        let rho =
            DensityMatrix::new(ComplexMatrix::from_real(2, 2, &[0.7, 0.2, 0.2, 0.3]).unwrap())
                .unwrap();
        let diag = ComplexMatrix::diag(&[c(0.7), c(0.3)]);

        let id = choi_from_kraus(&KrausChannel::identity(2), &comp(2), &comp(2)).unwrap();
        let m = marginal_out(&channel_history(&rho, &id).unwrap());
        assert!(m.max_abs_diff(&diag) < 1e-15);

        let dep = choi_from_kraus(
            &KrausChannel::depolarizing(1.0).unwrap(),
            &comp(2),
            &comp(2),
        )
        .unwrap();
        let m = marginal_out(&channel_history(&rho, &dep).unwrap());
        assert!(m.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);

        let u = UnitaryOp::hadamard();
        let uc = choi_from_kraus(&KrausChannel::unitary(&u), &comp(2), &comp(2)).unwrap();
        let m = marginal_out(&channel_history(&rho, &uc).unwrap());
        let dephased_image = &(u.matrix() * &diag) * &u.matrix().dagger();
        assert!(m.max_abs_diff(&dephased_image) < 1e-15);
        let full_image = &(u.matrix() * rho.matrix()) * &u.matrix().dagger();
        assert!(m.max_abs_diff(&full_image) > 0.1);

        // diagonal inputs reproduce the channel image
        let m = marginal_out(
            &channel_history(&DensityMatrix::new(diag.clone()).unwrap(), &uc).unwrap(),
        );
        assert!(m.max_abs_diff(&dephased_image) < 1e-15);
    }

    #[test]
    fn validate_cptp_examples() {
        let r = validate_cptp(&KrausChannel::identity(2));
        assert!(r.cp_pass && r.tp_pass);

        let half =
            KrausChannel::unchecked(vec![ComplexMatrix::identity(2).scale_real(0.5)]).unwrap();
        let r = validate_cptp(&half);
        assert!(r.cp_pass && !r.tp_pass);
        assert!((r.tp_deficit - 0.75).abs() < 1e-15);
        assert!(r.trace_nonincreasing);

        let r = validate_cptp(&KrausChannel::amplitude_damping(0.3).unwrap());
        assert!(r.cp_pass && r.tp_pass);
        assert!(r.tp_deficit < 1e-15);
    }

    #[test]
    fn kraus_constructors_enforce_trace_condition() {
        let half = vec![ComplexMatrix::identity(2).scale_real(0.5)];
        assert!(matches!(
            KrausChannel::new(half.clone()),
            Err(Error::Channel(_))
        ));
        assert!(KrausChannel::trace_decreasing(half).is_ok());
        let double = vec![ComplexMatrix::identity(2).scale_real(2.0)];
        assert!(KrausChannel::trace_decreasing(double).is_err());
        assert!(KrausChannel::unchecked(vec![]).is_err());
        let mixed = vec![ComplexMatrix::identity(2), ComplexMatrix::identity(3)];
        assert!(KrausChannel::unchecked(mixed).is_err());
    }

    #[test]
    fn trace_decreasing_history_loses_trace() {
        let ch = KrausChannel::trace_decreasing(vec![ComplexMatrix::identity(2).scale_real(0.5)])
            .unwrap();
        let choi = choi_from_kraus(&ch, &comp(2), &comp(2)).unwrap();
        assert!(choi.is_trace_decreasing());
        let h = channel_history(&Ket::plus().to_density(), &choi).unwrap();
        assert!((h.trace().re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn explicit_choi_matrix_validation() {
        let choi = choi_from_kraus(
            &KrausChannel::amplitude_damping(0.4).unwrap(),
            &comp(2),
            &comp(2),
        )
        .unwrap();
        let ok = ChoiChannel::from_matrix(choi.matrix().clone(), comp(2), comp(2), false, 1e-9);
        assert!(ok.is_ok());
        let scaled = choi.matrix().scale_real(0.5);
        assert!(ChoiChannel::from_matrix(scaled.clone(), comp(2), comp(2), false, 1e-9).is_err());
        assert!(ChoiChannel::from_matrix(scaled, comp(2), comp(2), true, 1e-9).is_ok());
        let neg = ComplexMatrix::identity(4).scale_real(-1.0);
        assert!(ChoiChannel::from_matrix(neg, comp(2), comp(2), true, 1e-9).is_err());
    }

    #[test]
    fn dephase_keeps_basis_diagonal() {
        let rho = Ket::plus().projector();
        let d = dephase(&rho, &comp(2)).unwrap();
        assert!(d.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
        let d = dephase(&rho, &OrthonormalBasis::hadamard()).unwrap();
        assert!(d.max_abs_diff(&rho) < 1e-15);
    }
}
