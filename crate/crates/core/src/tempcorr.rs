//! Two-time observables and temporal correlations.
//!
//! * [`pointer_two_time`]: a single pointer coupled impulsively at two instants
//!   with opposite signs reads out `σ(t2) - σ(t1)` and nothing else. The
//!   coupling `exp(∓i p σ)` is realized on a finite lattice as a controlled
//!   cyclic shift of the pointer by `∓s` for spin eigenvalue `s`.
//! * [`sequential_measure`]: projective measurements at several instants, as
//!   exact path enumeration and as seeded Monte-Carlo shots.
//! * [`lg_correlator`], [`lg_sweep`]: Leggett-Garg correlators with collapse at
//!   the earlier instant (the invasive sequential scheme).

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{dim_mismatch, Error, Result};
use crate::history::InstantChain;
use crate::qcore::{
    apply_on_factors, eigh, kron, partial_trace, ComplexMatrix, DensityMatrix, Ket, UnitaryOp,
    EIG_TOL,
};

/// `r · σ` for a unit vector `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinObservable {
    direction: [f64; 3],
    matrix: ComplexMatrix,
}

impl SpinObservable {
    /// Spin along `direction`, which is normalized; errors on a zero vector.
    pub fn along(direction: [f64; 3]) -> Result<Self> {
        let n = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n > 1e-12) || !n.is_finite() {
            return Err(Error::InvalidArgument(
                "spin direction must be a nonzero finite vector".into(),
            ));
        }
        let [x, y, z] = direction.map(|c| c / n);
        let matrix = ComplexMatrix::new(
            2,
            2,
            vec![
                C64::new(z, 0.0),
                C64::new(x, -y),
                C64::new(x, y),
                C64::new(-z, 0.0),
            ],
        )?;
        Ok(SpinObservable {
            direction: [x, y, z],
            matrix,
        })
    }

    pub fn x() -> Self {
        Self::along([1.0, 0.0, 0.0]).expect("unit vector")
    }

    pub fn z() -> Self {
        Self::along([0.0, 0.0, 1.0]).expect("unit vector")
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `(+1, P+)` and `(-1, P-)`, built from `(I ± r·σ)/2`.
    pub fn projectors(&self) -> [(i64, ComplexMatrix); 2] {
        let i = ComplexMatrix::identity(2);
        [
            (1, (&i + &self.matrix).scale_real(0.5)),
            (-1, (&i - &self.matrix).scale_real(0.5)),
        ]
    }

    /// Eigenbasis ordered `(+1, -1)`.
    pub fn eigenbasis(&self) -> crate::qcore::OrthonormalBasis {
        let eig = eigh(&self.matrix).expect("Hermitian");
        crate::qcore::OrthonormalBasis::from_matrix(&eig.vectors)
            .expect("eigenvectors are orthonormal")
    }
}

/// Pointer on the odd lattice `-(d-1)/2 ..= (d-1)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointerModel {
    lattice_dim: usize,
}

impl PointerModel {
    pub fn new(lattice_dim: usize) -> Result<Self> {
        if lattice_dim % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "pointer lattice dimension {lattice_dim} must be odd"
            )));
        }
        Ok(PointerModel { lattice_dim })
    }

    pub fn lattice_dim(&self) -> usize {
        self.lattice_dim
    }

    pub fn half_width(&self) -> i64 {
        (self.lattice_dim as i64 - 1) / 2
    }

    pub fn positions(&self) -> Vec<i64> {
        (-self.half_width()..=self.half_width()).collect()
    }

    fn index_of(&self, position: i64) -> usize {
        (position + self.half_width()).rem_euclid(self.lattice_dim as i64) as usize
    }

    /// Cyclic shift `|q> -> |q + k>`.
    pub fn shift(&self, k: i64) -> ComplexMatrix {
        let d = self.lattice_dim;
        let k = k.rem_euclid(d as i64) as usize;
        ComplexMatrix::from_fn(d, d, |r, c| {
            if r == (c + k) % d {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }
}

/// Final pointer displacement distribution (start position 0).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointerDistribution {
    pub positions: Vec<i64>,
    pub probabilities: Vec<f64>,
}

impl PointerDistribution {
    pub fn prob(&self, displacement: i64) -> f64 {
        self.positions
            .iter()
            .position(|&p| p == displacement)
            .map_or(0.0, |i| self.probabilities[i])
    }
}

/// Pointer readout of `σ(t2) - σ(t1)`.
///
/// The pointer is shifted by `-s` at `t1` and by `+s` at `t2`, where `s` is the
/// eigenvalue of `spin` on the system at that instant.
pub fn pointer_two_time(
    chain: &InstantChain,
    initial: &Ket,
    spin: &SpinObservable,
    t1: usize,
    t2: usize,
    lattice_dim: usize,
) -> Result<PointerDistribution> {
    pointer_two_time_with_offset(chain, initial, spin, t1, t2, lattice_dim, 0)
}

/// [`pointer_two_time`] for the shifted observable `σ + offset·I`.
///
/// The offset enters both couplings with opposite signs and cancels in the
/// readout; the lattice must still hold the intermediate displacement.
pub fn pointer_two_time_with_offset(
    chain: &InstantChain,
    initial: &Ket,
    spin: &SpinObservable,
    t1: usize,
    t2: usize,
    lattice_dim: usize,
    offset: i64,
) -> Result<PointerDistribution> {
    if chain.dim() != 2 {
        return Err(dim_mismatch("pointer chain (qubit system)", 2, chain.dim()));
    }
    if initial.dim() != 2 {
        return Err(dim_mismatch("pointer initial state", 2, initial.dim()));
    }
    if t1 >= t2 || t2 >= chain.n_instants() {
        return Err(Error::InvalidArgument(format!(
            "coupling instants must satisfy t1 < t2 < {} (got {t1}, {t2})",
            chain.n_instants()
        )));
    }
    let pointer = PointerModel::new(lattice_dim)?;
    let reach = 2.max(1 + offset.abs());
    if lattice_dim < 5 || pointer.half_width() < reach {
        return Err(Error::LatticeTooSmall {
            dim: lattice_dim,
            reason: format!(
                "displacements up to ±{reach} need at least {} sites",
                2 * reach + 1
            ),
        });
    }
    let dims = [2, lattice_dim];
    let mut start = vec![C64::new(0.0, 0.0); lattice_dim];
    start[pointer.index_of(0)] = C64::new(1.0, 0.0);
    let mut state = crate::qcore::kron_vec(initial.amplitudes(), &start);

    let coupling = |sign: i64| -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(2 * lattice_dim, 2 * lattice_dim);
        for (s, proj) in spin.projectors() {
            m = &m + &kron(&proj, &pointer.shift(sign * (s + offset)));
        }
        m
    };

    state = apply_on_factors(&state, &dims, &[0], chain.evolution(0, t1)?.matrix())?;
    state = apply_on_factors(&state, &dims, &[0, 1], &coupling(-1))?;
    state = apply_on_factors(&state, &dims, &[0], chain.evolution(t1, t2)?.matrix())?;
    state = apply_on_factors(&state, &dims, &[0, 1], &coupling(1))?;

    let rho = ComplexMatrix::outer(&state, &state);
    let reduced = partial_trace(&rho, &dims, &[1])?;
    let positions = pointer.positions();
    let probabilities = positions
        .iter()
        .map(|&q| reduced[(pointer.index_of(q), pointer.index_of(q))].re)
        .collect();
    Ok(PointerDistribution {
        positions,
        probabilities,
    })
}

/// Observables measured at chosen instants of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct SequentialMeasurementPlan {
    chain: InstantChain,
    instants: Vec<usize>,
    observables: Vec<ComplexMatrix>,
}

impl SequentialMeasurementPlan {
    pub fn new(
        chain: InstantChain,
        instants: Vec<usize>,
        observables: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        if instants.is_empty() {
            return Err(Error::InvalidArgument("no measured instants".into()));
        }
        if instants.len() != observables.len() {
            return Err(dim_mismatch(
                "observables (one per measured instant)",
                instants.len(),
                observables.len(),
            ));
        }
        if instants.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "measured instants must be strictly increasing".into(),
            ));
        }
        if let Some(&bad) = instants.iter().find(|&&t| t >= chain.n_instants()) {
            return Err(Error::IndexOutOfRange {
                context: "measured instant".into(),
                index: bad,
                len: chain.n_instants(),
            });
        }
        for o in &observables {
            if !o.is_square() || o.rows() != chain.dim() {
                return Err(dim_mismatch("observable", chain.dim(), o.rows()));
            }
            let residual = o.hermitian_residual();
            if residual > crate::qcore::DEFAULT_TOL {
                return Err(Error::NotHermitian { residual });
            }
        }
        Ok(SequentialMeasurementPlan {
            chain,
            instants,
            observables,
        })
    }

    pub fn chain(&self) -> &InstantChain {
        &self.chain
    }

    pub fn instants(&self) -> &[usize] {
        &self.instants
    }
}

/// One outcome sequence with its exact probability and Monte-Carlo count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceOutcome {
    /// Eigenvalues in measurement (time) order.
    pub eigenvalues: Vec<f64>,
    pub probability: f64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequentialResult {
    pub shots: u64,
    pub seed: u64,
    pub outcomes: Vec<SequenceOutcome>,
    /// Per shot, the index into `outcomes`.
    #[serde(skip)]
    pub records: Vec<usize>,
}

impl SequentialResult {
    pub fn frequency(&self, k: usize) -> f64 {
        self.outcomes[k].count as f64 / self.shots as f64
    }

    /// Exact probability that all measured eigenvalues are equal.
    pub fn prob_all_equal(&self) -> f64 {
        self.outcomes
            .iter()
            .filter(|o| {
                o.eigenvalues
                    .windows(2)
                    .all(|w| (w[0] - w[1]).abs() < EIG_TOL)
            })
            .map(|o| o.probability)
            .sum()
    }
}

/// Runs `shots` seeded Monte-Carlo measurement sequences and the exact path sum.
///
/// Outcomes at each instant are ordered by descending eigenvalue, and a shot
/// picks one by inverse CDF on a uniform draw.
pub fn sequential_measure(
    plan: &SequentialMeasurementPlan,
    initial: &Ket,
    shots: u64,
    seed: u64,
) -> Result<SequentialResult> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let chain = &plan.chain;
    if initial.dim() != chain.dim() {
        return Err(dim_mismatch("initial state", chain.dim(), initial.dim()));
    }
    let spaces: Vec<Vec<(f64, ComplexMatrix)>> = plan
        .observables
        .iter()
        .map(|o| eigh(o).map(|e| e.eigenspaces(EIG_TOL)))
        .collect::<Result<_>>()?;
    // evolution into each measured instant from the previous one
    let mut legs = Vec::with_capacity(plan.instants.len());
    let mut prev = 0;
    for &t in &plan.instants {
        legs.push(chain.evolution(prev, t)?);
        prev = t;
    }
    let counts: Vec<usize> = spaces.iter().map(Vec::len).collect();
    let total: usize = counts.iter().product();

    // exact path enumeration on unnormalized branches
    let mut probabilities = vec![0.0; total];
    let mut stack: Vec<(usize, usize, Vec<C64>)> = vec![(0, 0, initial.amplitudes().to_vec())];
    while let Some((level, flat, psi)) = stack.pop() {
        if level == legs.len() {
            probabilities[flat] = psi.iter().map(|z| z.norm_sqr()).sum();
            continue;
        }
        let evolved = legs[level].matrix().apply(&psi)?;
        for (s, (_, proj)) in spaces[level].iter().enumerate() {
            let branch = proj.apply(&evolved)?;
            stack.push((level + 1, flat * counts[level] + s, branch));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(shots as usize);
    let mut tallies = vec![0u64; total];
    for _ in 0..shots {
        let mut psi = initial.amplitudes().to_vec();
        let mut flat = 0;
        for (level, leg) in legs.iter().enumerate() {
            let evolved = leg.matrix().apply(&psi)?;
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = None;
            let branches: Vec<Vec<C64>> = spaces[level]
                .iter()
                .map(|(_, p)| p.apply(&evolved))
                .collect::<Result<_>>()?;
            for (s, b) in branches.iter().enumerate() {
                acc += b.iter().map(|z| z.norm_sqr()).sum::<f64>();
                if u < acc {
                    chosen = Some(s);
                    break;
                }
            }
            // round-off can leave acc marginally below 1: take the last nonzero branch
            let s = chosen.unwrap_or_else(|| {
                branches
                    .iter()
                    .rposition(|b| b.iter().any(|z| z.norm_sqr() > 0.0))
                    .unwrap_or(0)
            });
            let norm = branches[s].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            psi = branches[s].iter().map(|z| z / norm).collect();
            flat = flat * counts[level] + s;
        }
        tallies[flat] += 1;
        records.push(flat);
    }

    let outcomes = (0..total)
        .map(|flat| {
            let mut rem = flat;
            let mut pick = vec![0; counts.len()];
            for l in (0..counts.len()).rev() {
                pick[l] = rem % counts[l];
                rem /= counts[l];
            }
            SequenceOutcome {
                eigenvalues: pick
                    .iter()
                    .enumerate()
                    .map(|(l, &s)| spaces[l][s].0)
                    .collect(),
                probability: probabilities[flat],
                count: tallies[flat],
            }
        })
        .collect();
    Ok(SequentialResult {
        shots,
        seed,
        outcomes,
        records,
    })
}

fn dichotomic_projectors(q_obs: &ComplexMatrix) -> Result<[(f64, ComplexMatrix); 2]> {
    let eig = eigh(q_obs)?;
    if let Some(&bad) = eig.values.iter().find(|v| (v.abs() - 1.0).abs() > EIG_TOL) {
        return Err(Error::NotDichotomic { found: bad });
    }
    let d = q_obs.rows();
    let mut plus = ComplexMatrix::zeros(d, d);
    let mut minus = ComplexMatrix::zeros(d, d);
    for (k, &v) in eig.values.iter().enumerate() {
        let col = eig.vector(k);
        let p = ComplexMatrix::outer(&col, &col);
        if v > 0.0 {
            plus = &plus + &p;
        } else {
            minus = &minus + &p;
        }
    }
    Ok([(1.0, plus), (-1.0, minus)])
}

fn conjugate(u: &UnitaryOp, m: &ComplexMatrix) -> ComplexMatrix {
    &(u.matrix() * m) * &u.matrix().dagger()
}

/// `C_ij = Σ a b P(a at i, b at j)` with projective collapse at instant `i`.
pub fn lg_correlator(
    chain: &InstantChain,
    initial: &DensityMatrix,
    q_obs: &ComplexMatrix,
    i: usize,
    j: usize,
) -> Result<f64> {
    if initial.dim() != chain.dim() {
        return Err(dim_mismatch(
            "initial density matrix",
            chain.dim(),
            initial.dim(),
        ));
    }
    if !q_obs.is_square() || q_obs.rows() != chain.dim() {
        return Err(dim_mismatch(
            "dichotomic observable",
            chain.dim(),
            q_obs.rows(),
        ));
    }
    if i >= j || j >= chain.n_instants() {
        return Err(Error::InvalidArgument(format!(
            "correlator instants must satisfy i < j < {} (got {i}, {j})",
            chain.n_instants()
        )));
    }
    let projectors = dichotomic_projectors(q_obs)?;
    let at_i = conjugate(&chain.evolution(0, i)?, initial.matrix());
    let between = chain.evolution(i, j)?;
    let mut c = 0.0;
    for (a, pa) in &projectors {
        let collapsed = &(pa * &at_i) * pa;
        let at_j = conjugate(&between, &collapsed);
        for (b, pb) in &projectors {
            c += a * b * (pb * &at_j).trace().re;
        }
    }
    Ok(c)
}

/// Row of a Leggett-Garg sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LgRow {
    pub theta: f64,
    pub c12: f64,
    pub c23: f64,
    pub c13: f64,
    pub k: f64,
    /// `K > 1`, the macrorealist bound.
    pub violated: bool,
}

/// `K = C12 + C23 - C13` for three instants joined by `exp(-i θ σ_y / 2)` steps.
pub fn lg_sweep(
    angles: &[f64],
    q_obs: &ComplexMatrix,
    initial: &DensityMatrix,
) -> Result<Vec<LgRow>> {
    if angles.is_empty() {
        return Err(Error::InvalidArgument("empty angle grid".into()));
    }
    angles
        .iter()
        .map(|&theta| {
            let chain = InstantChain::repeated(UnitaryOp::ry(theta), 3)?;
            let c12 = lg_correlator(&chain, initial, q_obs, 0, 1)?;
            let c23 = lg_correlator(&chain, initial, q_obs, 1, 2)?;
            let c13 = lg_correlator(&chain, initial, q_obs, 0, 2)?;
            let k = c12 + c23 - c13;
            Ok(LgRow {
                theta,
                c12,
                c23,
                c13,
                k,
                violated: k > 1.0 + 1e-12,
            })
        })
        .collect()
}

/// Largest `K` over the 8 deterministic outcome assignments `(q1, q2, q3) ∈ {±1}³`.
pub fn classical_lg_max() -> f64 {
    let mut best = f64::NEG_INFINITY;
    for bits in 0..8u8 {
        let q = [0, 1, 2].map(|b| if bits >> b & 1 == 1 { -1.0 } else { 1.0 });
        best = best.max(q[0] * q[1] + q[1] * q[2] - q[0] * q[2]);
    }
    best
}

/// Uniform grid of `steps` points from `min` to `max` inclusive.
pub fn angle_grid(min: f64, max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..steps)
            .map(|k| min + (max - min) * k as f64 / (steps - 1) as f64)
            .collect(),
    }
}
