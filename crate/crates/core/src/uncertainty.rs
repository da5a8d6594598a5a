//! Energy and time uncertainty of a history.
//!
//! Time uncertainty is `1 - P_success` for guessing which instant a single
//! temporal marginal came from. Energy uncertainty is the spread of the
//! initial state over the Hamiltonian eigenbasis, reported both as a variance
//! and as a Shannon entropy.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{dim_mismatch, Error, Result};
use crate::history::{temporal_marginal, HistoryState, InstantChain};
use crate::qcore::{
    eigh, min_level_gap, trace_norm, unitary_evolution, ComplexMatrix, DensityMatrix, Ket,
    OrthonormalBasis, UnitaryOp, EIG_TOL,
};

/// Eigenvalues below this are treated as outside the support in the square-root measurement.
const PGM_CUTOFF: f64 = 1e-12;

/// Default angular step of the projective brute-force grid, in radians.
pub const BRUTE_FORCE_STEP: f64 = 1e-3;

/// Marginals `ρ_k` with priors `p_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct InstantEnsemble {
    states: Vec<DensityMatrix>,
    priors: Vec<f64>,
}

impl InstantEnsemble {
    /// Uniform priors when `priors` is `None`.
    pub fn new(states: Vec<DensityMatrix>, priors: Option<Vec<f64>>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidArgument("empty ensemble".into()));
        }
        let d = states[0].dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != d) {
            return Err(dim_mismatch("ensemble state", d, bad.dim()));
        }
        let n = states.len();
        let priors = priors.unwrap_or_else(|| vec![1.0 / n as f64; n]);
        if priors.len() != n {
            return Err(dim_mismatch("ensemble priors", n, priors.len()));
        }
        if priors.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument(
                "priors must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm: total });
        }
        Ok(InstantEnsemble { states, priors })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn max_prior(&self) -> f64 {
        self.priors.iter().copied().fold(0.0, f64::max)
    }

    /// Whether every state equals the first within `tol` entrywise.
    pub fn all_identical(&self, tol: f64) -> bool {
        let first = self.states[0].matrix();
        self.states
            .iter()
            .all(|s| s.matrix().max_abs_diff(first) <= tol)
    }

    /// Whether every pair has overlap `tr(ρ_a ρ_b)` below `tol`.
    pub fn pairwise_orthogonal(&self, tol: f64) -> bool {
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                let overlap = (self.states[a].matrix() * self.states[b].matrix())
                    .trace()
                    .re;
                if overlap >= tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Temporal marginals of every instant, uniform priors, in instant order.
pub fn instant_marginals(h: &HistoryState) -> Result<InstantEnsemble> {
    let states = (0..h.chain().n_instants())
        .map(|k| temporal_marginal(h, k))
        .collect::<Result<Vec<_>>>()?;
    InstantEnsemble::new(states, None)
}

/// `½(1 + ‖p0 ρ0 − p1 ρ1‖₁)`
pub fn helstrom_success(e: &InstantEnsemble) -> Result<f64> {
    if e.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "the two-state bound needs exactly 2 states, got {}",
            e.len()
        )));
    }
    let diff = &e.states[0].matrix().scale_real(e.priors[0])
        - &e.states[1].matrix().scale_real(e.priors[1]);
    Ok(0.5 * (1.0 + trace_norm(&diff)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscriminationStrategy {
    /// Square-root measurement, or guessing the likeliest label when that does better.
    PrettyGood,
    /// Best qubit projective measurement on a [`BRUTE_FORCE_STEP`] grid.
    BruteForceProjective,
    RandomGuess,
}

pub fn discrimination_success(
    e: &InstantEnsemble,
    strategy: DiscriminationStrategy,
) -> Result<f64> {
    if e.len() < 2 {
        return Err(Error::InvalidArgument(
            "discrimination needs at least 2 states".into(),
        ));
    }
    if strategy == DiscriminationStrategy::BruteForceProjective {
        check_brute_force_domain(e)?;
    }
    // identical states carry no information about the label
    if e.all_identical(EIG_TOL) {
        return Ok(e.max_prior());
    }
    match strategy {
        DiscriminationStrategy::RandomGuess => Ok(e.max_prior()),
        DiscriminationStrategy::PrettyGood => Ok(pretty_good_success(e)?.max(e.max_prior())),
        DiscriminationStrategy::BruteForceProjective => brute_force_projective(e, BRUTE_FORCE_STEP),
    }
}

/// Success of the square-root measurement `M_k = ρ̄^{-1/2} p_k ρ_k ρ̄^{-1/2}` alone.
pub fn pretty_good_success(e: &InstantEnsemble) -> Result<f64> {
    let d = e.dim();
    let mut avg = ComplexMatrix::zeros(d, d);
    for (s, &p) in e.states.iter().zip(&e.priors) {
        avg = &avg + &s.matrix().scale_real(p);
    }
    let inv_sqrt = eigh(&avg)?.map(|x| {
        if x > PGM_CUTOFF {
            C64::new(1.0 / x.sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let mut success = 0.0;
    for (s, &p) in e.states.iter().zip(&e.priors) {
        let m = &(&inv_sqrt * &s.matrix().scale_real(p)) * &inv_sqrt;
        success += p * (s.matrix() * &m).trace().re;
    }
    Ok(success)
}

fn bloch(rho: &DensityMatrix) -> [f64; 3] {
    let m = rho.matrix();
    let off = m[(0, 1)];
    [2.0 * off.re, -2.0 * off.im, m[(0, 0)].re - m[(1, 1)].re]
}

fn check_brute_force_domain(e: &InstantEnsemble) -> Result<()> {
    if e.dim() != 2 || e.len() > 4 {
        return Err(Error::Unsupported(format!(
            "projective brute force is limited to qubit ensembles of at most 4 states (got dim {}, {} states)",
            e.dim(),
            e.len()
        )));
    }
    Ok(())
}

/// Grid search over qubit projective measurements `{|n><n|, |-n><-n|}`.
///
/// Directions cover the upper hemisphere (`n` and `-n` give the same
/// measurement) at angular spacing `step`. Each outcome is assigned its most
/// likely label; the trivial measurement is included.
pub fn brute_force_projective(e: &InstantEnsemble, step: f64) -> Result<f64> {
    check_brute_force_domain(e)?;
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("grid step must be positive".into()));
    }
    let weighted: Vec<(f64, [f64; 3])> = e
        .states
        .iter()
        .zip(&e.priors)
        .map(|(s, &p)| (p, bloch(s)))
        .collect();
    let n_theta = (std::f64::consts::FRAC_PI_2 / step).floor() as usize;
    let n_phi = (std::f64::consts::TAU / step).ceil() as usize;
    let best = (0..=n_theta + 1)
        .into_par_iter()
        .map(|i| {
            let theta = (i as f64 * step).min(std::f64::consts::FRAC_PI_2);
            let (st, ct) = theta.sin_cos();
            let mut best = 0.0f64;
            for j in 0..n_phi {
                let (sp, cp) = (j as f64 * step).sin_cos();
                let n = [st * cp, st * sp, ct];
                let (mut up, mut down) = (0.0f64, 0.0f64);
                for (p, r) in &weighted {
                    let proj = n[0] * r[0] + n[1] * r[1] + n[2] * r[2];
                    up = up.max(0.5 * p * (1.0 + proj));
                    down = down.max(0.5 * p * (1.0 - proj));
                }
                best = best.max(up + down);
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best.max(e.max_prior()))
}

/// Hamiltonian with its eigendecomposition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyModel {
    hamiltonian: ComplexMatrix,
    eigenbasis: OrthonormalBasis,
    eigenvalues: Vec<f64>,
    allow_degenerate: bool,
}

impl EnergyModel {
    /// Rejects degenerate spectra (gap below `1e-8`) unless `allow_degenerate`.
    pub fn new(hamiltonian: ComplexMatrix, allow_degenerate: bool) -> Result<Self> {
        let eig = eigh(&hamiltonian)?;
        let gap = min_level_gap(&eig.values);
        if !allow_degenerate && gap < EIG_TOL {
            return Err(Error::Degenerate { gap });
        }
        let eigenbasis = OrthonormalBasis::from_matrix(&eig.vectors)?;
        Ok(EnergyModel {
            hamiltonian,
            eigenbasis,
            eigenvalues: eig.values,
            allow_degenerate,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.rows()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn eigenbasis(&self) -> &OrthonormalBasis {
        &self.eigenbasis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn allows_degenerate(&self) -> bool {
        self.allow_degenerate
    }

    /// `n_instants` instants joined by `exp(-iHτ)`, every instant in the energy eigenbasis.
    pub fn chain(&self, n_instants: usize, tau: f64) -> Result<InstantChain> {
        let step = UnitaryOp::new(unitary_evolution(&self.hamiltonian, tau)?)?;
        InstantChain::repeated(step, n_instants)?.with_uniform_basis(self.eigenbasis.clone())
    }

    /// Whether `u` commutes with `H`, as any `exp(-iHτ)` does.
    pub fn generates(&self, u: &UnitaryOp) -> bool {
        let h = &self.hamiltonian;
        let scale = 1.0 + h.frobenius_norm();
        (&(u.matrix() * h) - &(h * u.matrix())).frobenius_norm() <= 1e-9 * scale
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyStatistics {
    pub mean: f64,
    pub variance: f64,
    pub entropy_bits: f64,
}

/// Mean, variance and eigenbasis outcome entropy of `H` in `state`.
///
/// Degenerate levels (allowed only by the model's flag) count as one outcome.
pub fn energy_statistics(state: &DensityMatrix, em: &EnergyModel) -> Result<EnergyStatistics> {
    if state.dim() != em.dim() {
        return Err(dim_mismatch(
            "state for energy statistics",
            em.dim(),
            state.dim(),
        ));
    }
    let eig = eigh(&em.hamiltonian)?;
    let mut mean = 0.0;
    let mut second = 0.0;
    let mut entropy = 0.0;
    for (e, proj) in eig.eigenspaces(EIG_TOL) {
        let p = (&proj * state.matrix()).trace().re.max(0.0);
        mean += p * e;
        second += p * e * e;
        if p > 0.0 {
            entropy -= p * p.log2();
        }
    }
    Ok(EnergyStatistics {
        mean,
        variance: (second - mean * mean).max(0.0),
        entropy_bits: entropy.max(0.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMethod {
    /// Two instants: the closed-form optimum.
    Helstrom,
    /// All marginals equal: nothing beats guessing.
    IdenticalMarginals,
    /// Mutually orthogonal marginals: the square-root measurement is optimal.
    PrettyGoodOrthogonal,
    /// Otherwise: square-root measurement, a lower bound on the optimum.
    PrettyGoodLowerBound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeDiscrimination {
    pub success: f64,
    pub uncertainty: f64,
    pub method: TimeMethod,
    pub n_instants: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UncertaintyReport {
    pub energy: EnergyStatistics,
    pub time: TimeDiscrimination,
    /// Some chain step does not commute with `H`, so `H` does not generate the evolution.
    pub energy_model_external: bool,
}

/// Best available guess of the instant from one marginal, uniform priors.
pub fn time_discrimination(e: &InstantEnsemble) -> Result<TimeDiscrimination> {
    let (success, method) = if e.len() == 2 {
        (helstrom_success(e)?, TimeMethod::Helstrom)
    } else if e.all_identical(EIG_TOL) {
        (e.max_prior(), TimeMethod::IdenticalMarginals)
    } else if e.pairwise_orthogonal(1e-12) {
        (
            discrimination_success(e, DiscriminationStrategy::PrettyGood)?,
            TimeMethod::PrettyGoodOrthogonal,
        )
    } else {
        (
            discrimination_success(e, DiscriminationStrategy::PrettyGood)?,
            TimeMethod::PrettyGoodLowerBound,
        )
    };
    Ok(TimeDiscrimination {
        success,
        uncertainty: 1.0 - success,
        method,
        n_instants: e.len(),
    })
}

/// Energy statistics of `initial` paired with instant discrimination on its history.
pub fn uncertainty_report(
    chain: &InstantChain,
    initial: &Ket,
    em: &EnergyModel,
) -> Result<UncertaintyReport> {
    if em.dim() != chain.dim() {
        return Err(dim_mismatch("energy model", chain.dim(), em.dim()));
    }
    let history = crate::history::build_history(chain, initial)?;
    let ensemble = instant_marginals(&history)?;
    Ok(UncertaintyReport {
        energy: energy_statistics(&initial.to_density(), em)?,
        time: time_discrimination(&ensemble)?,
        energy_model_external: !chain.steps().iter().all(|u| em.generates(u)),
    })
}
