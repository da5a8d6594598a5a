mod common;

use std::f64::consts::PI;

use histlab::history::InstantChain;
use histlab::qcore::random::random_direction;
use histlab::qcore::{ComplexMatrix, DensityMatrix};
use histlab::tempcorr::{
    classical_lg_max, lg_sweep, pointer_two_time, pointer_two_time_with_offset, sequential_measure,
    SequentialMeasurementPlan, SpinObservable,
};
use proptest::prelude::*;

fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), y, r * phi.sin()]
        })
        .collect()
}

#[test]
fn trivial_evolution_never_moves_the_pointer() {
    let mut rng = common::rng(7);
    let chain = InstantChain::trivial(2, 3).unwrap();
    let states: Vec<_> = (0..50).map(|_| common::random_state(2, &mut rng)).collect();
    for dir in fibonacci_sphere(20) {
        let spin = SpinObservable::along(dir).unwrap();
        for psi in &states {
            let d = pointer_two_time(&chain, psi, &spin, 0, 2, 5).unwrap();
            assert!((d.prob(0) - 1.0).abs() <= 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn common_offset_never_changes_the_readout(seed in any::<u64>(), offset in -3i64..4, instants in 2usize..4) {
        let mut rng = common::rng(seed);
        let chain = common::random_chain(2, instants, &mut rng);
        let psi = common::random_state(2, &mut rng);
        let spin = SpinObservable::along(random_direction(&mut rng)).unwrap();
        let t2 = instants - 1;
        let base = pointer_two_time(&chain, &psi, &spin, 0, t2, 9).unwrap();
        let shifted = pointer_two_time_with_offset(&chain, &psi, &spin, 0, t2, 9, offset).unwrap();
        for (a, b) in base.probabilities.iter().zip(&shifted.probabilities) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        // the readout is σ(t2) - σ(t1): only 0 and ±2
        for (q, p) in base.positions.iter().zip(&base.probabilities) {
            if ![-2, 0, 2].contains(q) {
                prop_assert!(p.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_assignments_respect_the_bound(q in prop::array::uniform3(prop::bool::ANY)) {
        let v = q.map(|b| if b { 1.0 } else { -1.0 });
        prop_assert!(v[0] * v[1] + v[1] * v[2] - v[0] * v[2] <= 1.0);
    }
}

#[test]
fn classical_oracle_tops_out_at_one() {
    assert_eq!(classical_lg_max(), 1.0);
}

#[test]
fn quantum_sweep_violates_around_pi_over_three() {
    let z = ComplexMatrix::diag(&[histlab::C64::new(1.0, 0.0), histlab::C64::new(-1.0, 0.0)]);
    let angles: Vec<f64> = (-10..=10).map(|k| PI / 3.0 + 0.03 * k as f64).collect();
    for row in lg_sweep(&angles, &z, &DensityMatrix::maximally_mixed(2)).unwrap() {
        assert!(row.violated, "no violation at θ = {}", row.theta);
    }
}

/// Every outcome frequency lies within 4 binomial standard deviations of its exact probability.
#[test]
fn monte_carlo_matches_exact_distribution() {
    const SHOTS: u64 = 100_000;
    for seed in 0..6u64 {
        let mut rng = common::rng(seed);
        let chain = common::random_chain(2, 3, &mut rng);
        let observables = (0..3)
            .map(|_| {
                SpinObservable::along(random_direction(&mut rng))
                    .unwrap()
                    .matrix()
                    .clone()
            })
            .collect();
        let plan = SequentialMeasurementPlan::new(chain, vec![0, 1, 2], observables).unwrap();
        let psi = common::random_state(2, &mut rng);
        let r = sequential_measure(&plan, &psi, SHOTS, 1000 + seed).unwrap();
        let total: f64 = r.outcomes.iter().map(|o| o.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for o in &r.outcomes {
            let n = SHOTS as f64;
            let sigma = (n * o.probability * (1.0 - o.probability)).sqrt();
            let dev = (o.count as f64 - n * o.probability).abs();
            assert!(
                dev <= 4.0 * sigma + 1e-9,
                "seed {seed}: {:?} count {} vs p {}",
                o.eigenvalues,
                o.count,
                o.probability
            );
        }
    }
}
