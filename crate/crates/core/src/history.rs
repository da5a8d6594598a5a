//! Entangled history states over a chain of instants.
//!
//! A chain `t0 < ... < tN` carries one orthonormal basis per instant and one
//! unitary per step. The history state lives on `H_N ⊗ ... ⊗ H_0` (latest
//! instant leftmost); its coefficient on the basis path `(i0, ..., iN)` is
//!
//! ```text
//! alpha_{i0} * prod_k <b_{k+1}[i_{k+1}] | U_k | b_k[i_k]>
//! ```
//!
//! where `alpha` expands the initial state in the instant-0 basis. The
//! per-step matrices `<b_{k+1}[n]| U_k |b_k[m]>` are the bridge operators.

use num_complex::Complex64 as C64;
use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::error::{dim_mismatch, Error, Result};
use crate::qcore::{
    contract_factor, partial_trace, strides, ComplexMatrix, DensityMatrix, Ket, OrthonormalBasis,
    UnitaryOp, DEFAULT_TOL, MAX_STATE_DIM,
};

/// Instants, their bases, and the unitaries between consecutive instants.
#[derive(Clone, Debug, PartialEq)]
pub struct InstantChain {
    labels: Vec<String>,
    bases: Vec<OrthonormalBasis>,
    steps: Vec<UnitaryOp>,
}

impl InstantChain {
    /// Builds a chain of `steps.len() + 1` instants.
    ///
    /// `bases` defaults to the computational basis at every instant.
    pub fn new(steps: Vec<UnitaryOp>, bases: Option<Vec<OrthonormalBasis>>) -> Result<Self> {
        let Some(first) = steps.first() else {
            return Err(Error::InvalidArgument(
                "a chain needs at least 2 instants".into(),
            ));
        };
        let dim = first.dim();
        if let Some(s) = steps.iter().find(|s| s.dim() != dim) {
            return Err(dim_mismatch("chain step", dim, s.dim()));
        }
        let n = steps.len() + 1;
        let bases = bases.unwrap_or_else(|| vec![OrthonormalBasis::computational(dim); n]);
        if bases.len() != n {
            return Err(dim_mismatch(
                "chain bases (one per instant)",
                n,
                bases.len(),
            ));
        }
        if let Some(b) = bases.iter().find(|b| b.dim() != dim) {
            return Err(dim_mismatch("instant basis", dim, b.dim()));
        }
        Ok(InstantChain {
            labels: (0..n).map(|k| format!("t{k}")).collect(),
            bases,
            steps,
        })
    }

    /// `instants` instants of identity evolution, computational bases.
    pub fn trivial(dim: usize, instants: usize) -> Result<Self> {
        Self::repeated(UnitaryOp::identity(dim), instants)
    }

    /// The same step between every pair of consecutive instants.
    pub fn repeated(step: UnitaryOp, instants: usize) -> Result<Self> {
        if instants < 2 {
            return Err(Error::InvalidArgument(
                "a chain needs at least 2 instants".into(),
            ));
        }
        Self::new(vec![step; instants - 1], None)
    }

    /// Replaces every instant's basis with `basis`.
    pub fn with_uniform_basis(self, basis: OrthonormalBasis) -> Result<Self> {
        let n = self.n_instants();
        Self::new(self.steps, Some(vec![basis; n])).map(|c| InstantChain {
            labels: self.labels,
            ..c
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_instants() {
            return Err(dim_mismatch(
                "instant labels",
                self.n_instants(),
                labels.len(),
            ));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn n_instants(&self) -> usize {
        self.bases.len()
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// Dimension of the system at each instant.
    pub fn dim(&self) -> usize {
        self.bases[0].dim()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn bases(&self) -> &[OrthonormalBasis] {
        &self.bases
    }

    pub fn basis(&self, instant: usize) -> Result<&OrthonormalBasis> {
        self.bases
            .get(instant)
            .ok_or_else(|| Error::IndexOutOfRange {
                context: "instant".into(),
                index: instant,
                len: self.bases.len(),
            })
    }

    pub fn steps(&self) -> &[UnitaryOp] {
        &self.steps
    }

    pub fn step(&self, k: usize) -> Result<&UnitaryOp> {
        self.steps.get(k).ok_or_else(|| Error::IndexOutOfRange {
            context: "step".into(),
            index: k,
            len: self.steps.len(),
        })
    }

    /// Total evolution `U_{to-1} ... U_from` from instant `from` to instant `to`.
    pub fn evolution(&self, from: usize, to: usize) -> Result<UnitaryOp> {
        if from > to || to >= self.n_instants() {
            return Err(Error::InvalidArgument(format!(
                "evolution from instant {from} to {to} in a chain of {} instants",
                self.n_instants()
            )));
        }
        let mut u = UnitaryOp::identity(self.dim());
        for step in &self.steps[from..to] {
            u = step.compose(&u)?;
        }
        Ok(u)
    }

    /// Factor dimensions of the history space, latest instant first.
    pub fn history_dims(&self) -> Vec<usize> {
        vec![self.dim(); self.n_instants()]
    }
}

/// Normalized vector on the history space of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryState {
    chain: InstantChain,
    vector: Ket,
}

impl HistoryState {
    pub fn chain(&self) -> &InstantChain {
        &self.chain
    }

    pub fn vector(&self) -> &Ket {
        &self.vector
    }

    /// Factor dimensions, latest instant first.
    pub fn dims(&self) -> Vec<usize> {
        self.chain.history_dims()
    }

    /// Tensor factor holding `instant`.
    pub fn factor_of(&self, instant: usize) -> Result<usize> {
        let n = self.chain.n_instants();
        if instant >= n {
            return Err(Error::IndexOutOfRange {
                context: "instant".into(),
                index: instant,
                len: n,
            });
        }
        Ok(n - 1 - instant)
    }

    /// Coefficients of the history on the product of the per-instant bases.
    ///
    /// Entry order follows the vector: the latest instant's basis index is slowest.
    pub fn path_amplitudes(&self) -> Vec<C64> {
        let dims = self.dims();
        let mut v = self.vector.amplitudes().to_vec();
        // express each factor in its instant's basis: apply B_k† on factor of instant k
        for instant in 0..self.chain.n_instants() {
            let factor = dims.len() - 1 - instant;
            let bd = self.chain.bases[instant].matrix().dagger();
            v = crate::qcore::apply_on_factors(&v, &dims, &[factor], &bd).expect("consistent dims");
        }
        v
    }

    /// Projects `instant` onto `v` and renormalizes.
    ///
    /// Returns the outcome probability and the collapsed history vector.
    pub fn project_instant(&self, instant: usize, v: &Ket) -> Result<(f64, Ket)> {
        let factor = self.factor_of(instant)?;
        let dims = self.dims();
        if v.dim() != dims[factor] {
            return Err(dim_mismatch("projection vector", dims[factor], v.dim()));
        }
        let reduced = contract_factor(self.vector.amplitudes(), &dims, factor, v.amplitudes())?;
        let prob: f64 = reduced.iter().map(|z| z.norm_sqr()).sum();
        if prob < 1e-300 {
            return Err(Error::ZeroProbability { prob });
        }
        // reinsert v on the projected factor
        let st = strides(&dims);
        let inner = st[factor];
        let d = dims[factor];
        let scale = 1.0 / prob.sqrt();
        let mut out = vec![C64::new(0.0, 0.0); self.vector.dim()];
        for (flat, r) in reduced.iter().enumerate() {
            let (o, i) = (flat / inner, flat % inner);
            for k in 0..d {
                out[o * d * inner + k * inner + i] = r * v.amplitudes()[k] * scale;
            }
        }
        Ok((prob, Ket::new(out)?))
    }
}

impl Serialize for HistoryState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let amps = self.vector.amplitudes();
        let mut st = s.serialize_struct("HistoryState", 5)?;
        st.serialize_field("dims", &self.dims())?;
        st.serialize_field("rows", &amps.len())?;
        st.serialize_field("cols", &1)?;
        st.serialize_field("re", &amps.iter().map(|z| z.re).collect::<Vec<_>>())?;
        st.serialize_field("im", &amps.iter().map(|z| z.im).collect::<Vec<_>>())?;
        st.end()
    }
}

/// The step unitary `U_k` written in the instant-`k` (input) and instant-`k+1` (output) bases.
///
/// For identity evolution with matching bases this is `Σ_i |i><i|`, which is
/// all the maximally entangled two-time state carries once the past-facing
/// (`τ+`, instant `k`) and future-facing (`τ-`, instant `k+1`) ends are
/// identified with the input and output indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BridgeOperator {
    pub from_instant: usize,
    pub to_instant: usize,
    pub matrix: ComplexMatrix,
}

/// Builds the history of `initial` through `chain`.
pub fn build_history(chain: &InstantChain, initial: &Ket) -> Result<HistoryState> {
    let d = chain.dim();
    if initial.dim() != d {
        return Err(dim_mismatch(
            "initial state vs instant-0 basis",
            d,
            initial.dim(),
        ));
    }
    let total = d
        .checked_pow(chain.n_instants() as u32)
        .filter(|&t| t <= MAX_STATE_DIM)
        .ok_or(Error::TooLarge {
            dim: d.saturating_pow(chain.n_instants() as u32),
            limit: MAX_STATE_DIM,
        })?;

    // The leftmost factor always holds the most recent instant. Each step
    // replaces it with the isometry |b_k[i]> -> U_k|b_k[i]> ⊗ |b_k[i]>.
    let mut psi = initial.amplitudes().to_vec();
    for (k, u) in chain.steps.iter().enumerate() {
        let basis = &chain.bases[k];
        let rest = psi.len() / d;
        let mut next = vec![C64::new(0.0, 0.0); psi.len() * d];
        for b in basis.vectors() {
            let b = b.amplitudes();
            let ub = u.matrix().apply(b)?;
            // coefficient of each remaining index after projecting the latest factor on b
            let coef = contract_factor(&psi, &[d, rest], 0, b)?;
            for (n, ubn) in ub.iter().enumerate() {
                for (m, bm) in b.iter().enumerate() {
                    let w = ubn * bm;
                    if w == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let base = (n * d + m) * rest;
                    for (r, c) in coef.iter().enumerate() {
                        next[base + r] += w * c;
                    }
                }
            }
        }
        psi = next;
    }
    debug_assert_eq!(psi.len(), total);
    Ok(HistoryState {
        chain: chain.clone(),
        vector: Ket::with_tolerance(psi, DEFAULT_TOL)?,
    })
}

/// `A(a -> b) = <b|U|a>`
pub fn transition_amplitude(u: &UnitaryOp, a: &Ket, b: &Ket) -> Result<C64> {
    if a.dim() != u.dim() {
        return Err(dim_mismatch("transition source state", u.dim(), a.dim()));
    }
    if b.dim() != u.dim() {
        return Err(dim_mismatch("transition target state", u.dim(), b.dim()));
    }
    let ua = u.apply(a)?;
    Ok(b.inner(&ua))
}

/// Bridge operator for step `k` (instant `k` to `k+1`).
pub fn bridge_operator(chain: &InstantChain, k: usize) -> Result<BridgeOperator> {
    let u = chain.step(k)?;
    let from = &chain.bases[k];
    let to = &chain.bases[k + 1];
    let d = chain.dim();
    let matrix = ComplexMatrix::from_fn(d, d, |n, m| {
        transition_amplitude(u, from.vector(m), to.vector(n)).expect("chain dims are consistent")
    });
    Ok(BridgeOperator {
        from_instant: k,
        to_instant: k + 1,
        matrix,
    })
}

/// Reduced state of a single instant.
pub fn temporal_marginal(h: &HistoryState, instant: usize) -> Result<DensityMatrix> {
    let factor = h.factor_of(instant)?;
    let rho = h.vector.projector();
    let reduced = partial_trace(&rho, &h.dims(), &[factor])?;
    // partial trace of a pure projector is Hermitian PSD up to round-off
    let reduced = (&reduced + &reduced.dagger()).scale_real(0.5);
    DensityMatrix::new(reduced)
}

/// The product state `|φ> ⊗ ... ⊗ |φ>` with `copies` factors.
///
/// This is the independent-copies model of a trivial evolution, kept for
/// contrast with the history state: it leaks the state to tomography and
/// carries no correlation between instants.
pub fn naive_product_model(initial: &Ket, copies: usize) -> Result<Ket> {
    if copies == 0 {
        return Err(Error::InvalidArgument(
            "naive product model needs at least one copy".into(),
        ));
    }
    let total = initial
        .dim()
        .checked_pow(copies as u32)
        .filter(|&t| t <= MAX_STATE_DIM)
        .ok_or(Error::TooLarge {
            dim: usize::MAX,
            limit: MAX_STATE_DIM,
        })?;
    let mut out = initial.clone();
    for _ in 1..copies {
        out = out.kron(initial);
    }
    debug_assert_eq!(out.dim(), total);
    Ok(out)
}
