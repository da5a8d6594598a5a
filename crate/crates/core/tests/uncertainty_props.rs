mod common;

use histlab::qcore::random::{ginibre, random_density, random_unitary};
use histlab::qcore::{ComplexMatrix, DensityMatrix, Ket};
use histlab::uncertainty::{
    brute_force_projective, discrimination_success, energy_statistics, helstrom_success,
    instant_marginals, uncertainty_report, DiscriminationStrategy, EnergyModel, InstantEnsemble,
    TimeMethod, BRUTE_FORCE_STEP,
};
use proptest::prelude::*;

fn random_hamiltonian(dim: usize, rng: &mut rand_chacha::ChaCha8Rng) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng);
    (&g + &g.dagger()).scale_real(0.5)
}

#[test]
fn energy_eigenstates_leave_only_guessing() {
    let mut rng = common::rng(11);
    for case in 0..20 {
        let dim = 2 + case % 2;
        let em = EnergyModel::new(random_hamiltonian(dim, &mut rng), false).unwrap();
        for (k, phi) in em.eigenbasis().vectors().iter().enumerate() {
            for instants in [2, 3, 4] {
                let chain = em.chain(instants, 0.37 + 0.1 * k as f64).unwrap();
                let r = uncertainty_report(&chain, phi, &em).unwrap();
                assert!(r.energy.variance <= 1e-9, "variance {}", r.energy.variance);
                let h = histlab::history::build_history(&chain, phi).unwrap();
                let e = instant_marginals(&h).unwrap();
                for s in [
                    DiscriminationStrategy::PrettyGood,
                    DiscriminationStrategy::RandomGuess,
                ] {
                    assert_eq!(discrimination_success(&e, s).unwrap(), e.max_prior());
                }
                if instants > 2 {
                    assert_eq!(r.time.method, TimeMethod::IdenticalMarginals);
                    assert_eq!(r.time.success, 1.0 / instants as f64);
                } else {
                    assert!((r.time.success - 0.5).abs() <= 1e-9);
                }
            }
        }
    }
}

#[test]
fn brute_force_never_beats_helstrom() {
    let mut rng = common::rng(5);
    for _ in 0..8 {
        let e = InstantEnsemble::new(
            vec![random_density(2, &mut rng), random_density(2, &mut rng)],
            None,
        )
        .unwrap();
        let bf = brute_force_projective(&e, BRUTE_FORCE_STEP).unwrap();
        let h = helstrom_success(&e).unwrap();
        assert!(bf <= h + 1e-9, "brute force {bf} exceeds {h}");
        assert!(h - bf <= 1e-4, "brute force {bf} misses {h}");
    }
}

proptest! {
    #[test]
    fn orthogonal_marginals_are_perfectly_discriminated(seed in any::<u64>(), dim in 2usize..5, n in 2usize..5) {
        let mut rng = common::rng(seed);
        let n = n.min(dim);
        let u = random_unitary(dim, &mut rng);
        let states = (0..n).map(|k| Ket::new(u.matrix().col(k)).unwrap().to_density()).collect();
        let e = InstantEnsemble::new(states, None).unwrap();
        prop_assert!(e.pairwise_orthogonal(1e-12));
        let pg = discrimination_success(&e, DiscriminationStrategy::PrettyGood).unwrap();
        prop_assert!((pg - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn no_strategy_falls_below_guessing(seed in any::<u64>(), n in 2usize..5, skew in prop::collection::vec(0.01f64..1.0, 4)) {
        let mut rng = common::rng(seed);
        let total: f64 = skew[..n].iter().sum();
        let priors: Vec<f64> = skew[..n].iter().map(|p| p / total).collect();
        let mut priors = priors;
        let drift: f64 = 1.0 - priors.iter().sum::<f64>();
        priors[0] += drift;
        let states: Vec<DensityMatrix> = (0..n).map(|_| random_density(2, &mut rng)).collect();
        let e = InstantEnsemble::new(states, Some(priors)).unwrap();
        for s in [DiscriminationStrategy::PrettyGood, DiscriminationStrategy::RandomGuess] {
            prop_assert!(discrimination_success(&e, s).unwrap() >= e.max_prior() - 1e-12);
        }
        prop_assert!(brute_force_projective(&e, 0.05).unwrap() >= e.max_prior() - 1e-12);
    }

    #[test]
    fn energy_statistics_match_direct_traces(seed in any::<u64>(), dim in 2usize..5) {
        let mut rng = common::rng(seed);
        let h = random_hamiltonian(dim, &mut rng);
        let em = EnergyModel::new(h.clone(), false).unwrap();
        let rho = random_density(dim, &mut rng);
        let s = energy_statistics(&rho, &em).unwrap();
        let mean = (rho.matrix() * &h).trace().re;
        let second = (&(rho.matrix() * &h) * &h).trace().re;
        prop_assert!((s.mean - mean).abs() <= 1e-9);
        prop_assert!((s.variance - (second - mean * mean)).abs() <= 1e-9);
        prop_assert!(s.entropy_bits >= 0.0 && s.entropy_bits <= (dim as f64).log2() + 1e-12);
    }
}
