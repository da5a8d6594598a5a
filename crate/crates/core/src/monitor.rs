//! Monitor-system realization of a history state.
//!
//! One ancilla per instant starts in `|0>`. At instant `k` a controlled-copy
//! gate writes the main system's instant-`k` basis vector into ancilla `k`;
//! between instants the main system evolves by the chain's step unitary.
//! Projecting the main system onto a post-selection state and discarding it
//! leaves the ancillas in the history state, with ordinary tensor products in
//! place of temporal ones.
//!
//! The register layout is `main ⊗ ancilla_N ⊗ ... ⊗ ancilla_0`, so after the
//! main system is removed the ancillas share the history's factor order.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{dim_mismatch, Error, Result};
use crate::history::{build_history, HistoryState, InstantChain};
use crate::qcore::{
    apply_on_factors, contract_factor, eigh, partial_trace, ComplexMatrix, DensityMatrix, Ket,
    OrthonormalBasis, UnitaryOp, EIG_TOL, MAX_STATE_DIM,
};

/// Post-selection probabilities below this are treated as impossible.
pub const MIN_SUCCESS_PROB: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MonitorProtocol {
    chain: InstantChain,
    initial: Ket,
    postselect: Ket,
}

impl MonitorProtocol {
    /// `postselect` defaults to the uniform superposition of the final instant's basis.
    pub fn new(chain: InstantChain, initial: Ket, postselect: Option<Ket>) -> Result<Self> {
        let d = chain.dim();
        if initial.dim() != d {
            return Err(dim_mismatch("monitor initial state", d, initial.dim()));
        }
        let postselect = match postselect {
            Some(p) => {
                if p.dim() != d {
                    return Err(dim_mismatch("post-selection state", d, p.dim()));
                }
                p
            }
            None => {
                let last = &chain.bases()[chain.n_instants() - 1];
                let mut amps = vec![C64::new(0.0, 0.0); d];
                for v in last.vectors() {
                    for (a, x) in amps.iter_mut().zip(v.amplitudes()) {
                        *a += x;
                    }
                }
                Ket::normalized(amps)?
            }
        };
        Ok(MonitorProtocol {
            chain,
            initial,
            postselect,
        })
    }

    pub fn chain(&self) -> &InstantChain {
        &self.chain
    }

    pub fn initial(&self) -> &Ket {
        &self.initial
    }

    pub fn postselect(&self) -> &Ket {
        &self.postselect
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonitorOutcome {
    pub monitor_state: Ket,
    /// Ancilla dimensions, latest instant first.
    pub dims: Vec<usize>,
    pub success_prob: f64,
    pub fidelity_vs_history: f64,
    pub history: HistoryState,
}

impl MonitorOutcome {
    /// Reduced state of the ancilla that recorded `instant`.
    pub fn marginal(&self, instant: usize) -> Result<DensityMatrix> {
        let n = self.dims.len();
        if instant >= n {
            return Err(Error::IndexOutOfRange {
                context: "instant".into(),
                index: instant,
                len: n,
            });
        }
        let reduced = partial_trace(
            &self.monitor_state.projector(),
            &self.dims,
            &[n - 1 - instant],
        )?;
        DensityMatrix::new((&reduced + &reduced.dagger()).scale_real(0.5))
    }
}

/// Gate on `main ⊗ ancilla` with `|v_i>|0> -> |v_i>|v_i>`.
///
/// Completed to a unitary as `Σ_i |v_i><v_i| ⊗ V X^i`, where `V` has the basis
/// vectors as columns and `X` is the cyclic increment `|j> -> |j+1 mod d>`.
pub fn controlled_copy(basis: &OrthonormalBasis) -> UnitaryOp {
    let d = basis.dim();
    let v = basis.matrix();
    let mut gate = ComplexMatrix::zeros(d * d, d * d);
    for (i, vi) in basis.vectors().iter().enumerate() {
        let proj = vi.projector();
        // V X^i maps |j> to |v_{(j+i) mod d}>
        let shifted = ComplexMatrix::from_fn(d, d, |r, c| v[(r, (c + i) % d)]);
        gate = &gate + &crate::qcore::kron(&proj, &shifted);
    }
    UnitaryOp::new(gate).expect("controlled copy is unitary")
}

/// Runs the monitor protocol and compares the ancilla state with the history state.
pub fn run_protocol(p: &MonitorProtocol) -> Result<MonitorOutcome> {
    let chain = &p.chain;
    let d = chain.dim();
    let n = chain.n_instants();
    let total = d
        .checked_pow(n as u32 + 1)
        .filter(|&t| t <= MAX_STATE_DIM)
        .ok_or(Error::TooLarge {
            dim: d.saturating_pow(n as u32 + 1),
            limit: MAX_STATE_DIM,
        })?;
    let reg_dims = vec![d; n + 1];
    let ancilla = |instant: usize| 1 + (n - 1 - instant);

    let mut state = vec![C64::new(0.0, 0.0); total];
    // main in the initial state, every ancilla in |0>
    let anc_block = total / d;
    for (i, a) in p.initial.amplitudes().iter().enumerate() {
        state[i * anc_block] = *a;
    }
    for instant in 0..n {
        if instant > 0 {
            state = apply_on_factors(&state, &reg_dims, &[0], chain.steps()[instant - 1].matrix())?;
        }
        let gate = controlled_copy(&chain.bases()[instant]);
        state = apply_on_factors(&state, &reg_dims, &[0, ancilla(instant)], gate.matrix())?;
    }

    let projected = contract_factor(&state, &reg_dims, 0, p.postselect.amplitudes())?;
    let success_prob: f64 = projected.iter().map(|z| z.norm_sqr()).sum();
    if success_prob < MIN_SUCCESS_PROB {
        return Err(Error::ZeroProbability { prob: success_prob });
    }
    let monitor_state = Ket::normalized(projected)?;
    let history = build_history(chain, &p.initial)?;
    let fidelity_vs_history = history.vector().fidelity(&monitor_state);
    Ok(MonitorOutcome {
        monitor_state,
        dims: vec![d; n],
        success_prob,
        fidelity_vs_history,
        history,
    })
}

/// One joint outcome of [`measure_monitors`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointOutcome {
    /// Eigenvalues, latest instant first.
    pub eigenvalues: Vec<f64>,
    pub probability: f64,
}

/// Born-rule distribution of measuring one observable on each ancilla.
///
/// `observables` and the returned eigenvalue tuples both follow the register's
/// factor order: latest instant first. Degenerate eigenvalues are measured as
/// eigenspace projectors.
pub fn measure_monitors(
    outcome: &MonitorOutcome,
    observables: &[ComplexMatrix],
) -> Result<Vec<JointOutcome>> {
    let dims = &outcome.dims;
    if observables.len() != dims.len() {
        return Err(dim_mismatch(
            "observables (one per instant)",
            dims.len(),
            observables.len(),
        ));
    }
    let mut spaces = Vec::with_capacity(dims.len());
    for (o, &d) in observables.iter().zip(dims) {
        if !o.is_square() || o.rows() != d {
            return Err(dim_mismatch("monitor observable", d, o.rows()));
        }
        spaces.push(eigh(o)?.eigenspaces(EIG_TOL));
    }
    let counts: Vec<usize> = spaces.iter().map(Vec::len).collect();
    let total: usize = counts.iter().product();
    let psi = outcome.monitor_state.amplitudes();
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut pick = vec![0; counts.len()];
        for f in (0..counts.len()).rev() {
            pick[f] = rem % counts[f];
            rem /= counts[f];
        }
        let mut v = psi.to_vec();
        for (f, &s) in pick.iter().enumerate() {
            v = apply_on_factors(&v, dims, &[f], &spaces[f][s].1)?;
        }
        out.push(JointOutcome {
            eigenvalues: pick
                .iter()
                .enumerate()
                .map(|(f, &s)| spaces[f][s].0)
                .collect(),
            probability: v.iter().map(|z| z.norm_sqr()).sum(),
        });
    }
    Ok(out)
}
