mod common;

use histlab::history::InstantChain;
use histlab::monitor::{measure_monitors, run_protocol, MonitorProtocol};
use histlab::qcore::random::random_direction;
use histlab::qcore::{ComplexMatrix, Ket};
use histlab::tempcorr::SpinObservable;
use histlab::C64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn monitor_state_equals_history(seed in any::<u64>(), instants in 2usize..4) {
        let mut rng = common::rng(seed);
        let chain = common::random_chain(2, instants, &mut rng);
        let psi = common::random_state(2, &mut rng);
        let out = run_protocol(&MonitorProtocol::new(chain, psi, None).unwrap());
        match out {
            Ok(o) => prop_assert!((o.fidelity_vs_history - 1.0).abs() <= 1e-9),
            Err(e) => {
                let rejected = matches!(e, histlab::Error::ZeroProbability { .. });
                prop_assert!(rejected, "unexpected error {:?}", e);
            }
        }
    }
}

proptest! {
    #[test]
    fn repeated_spin_outcomes_agree(seed in any::<u64>(), instants in 2usize..5, pair in (0usize..4, 0usize..4)) {
        let mut rng = common::rng(seed);
        let spin = SpinObservable::along(random_direction(&mut rng)).unwrap();
        let chain = InstantChain::trivial(2, instants).unwrap().with_uniform_basis(spin.eigenbasis()).unwrap();
        let psi = common::random_state(2, &mut rng);
        let out = run_protocol(&MonitorProtocol::new(chain, psi, None).unwrap()).unwrap();
        let (j, l) = (pair.0 % instants, pair.1 % instants);
        prop_assume!(j != l);
        // latest instant first
        let obs: Vec<ComplexMatrix> = (0..instants)
            .rev()
            .map(|t| if t == j || t == l { spin.matrix().clone() } else { ComplexMatrix::identity(2) })
            .collect();
        let (fj, fl) = (instants - 1 - j, instants - 1 - l);
        let agree: f64 = measure_monitors(&out, &obs)
            .unwrap()
            .iter()
            .filter(|o| o.eigenvalues[fj] == o.eigenvalues[fl])
            .map(|o| o.probability)
            .sum();
        prop_assert!((agree - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_monitor_sees_no_phase(a in 0.05f64..0.95, theta in 0.0f64..6.28, instants in 2usize..5) {
        let b = (1.0 - a * a).sqrt();
        let chain = InstantChain::trivial(2, instants).unwrap();
        let reference = run_protocol(&MonitorProtocol::new(chain.clone(), Ket::from_real(&[a, b]).unwrap(), None).unwrap()).unwrap();
        let psi = Ket::new(vec![C64::from_polar(a, theta), C64::new(b, 0.0)]).unwrap();
        let out = run_protocol(&MonitorProtocol::new(chain, psi, None).unwrap()).unwrap();
        for t in 0..instants {
            let m = out.marginal(t).unwrap();
            prop_assert!(m.matrix().max_abs_diff(reference.marginal(t).unwrap().matrix()) <= 1e-12);
            prop_assert!(m.matrix()[(0, 1)].norm() <= 1e-12);
        }
    }

    #[test]
    fn postselection_phase_is_global(seed in any::<u64>(), phi in 0.0f64..6.28, instants in 2usize..4) {
        let mut rng = common::rng(seed);
        let chain = common::random_chain(2, instants, &mut rng);
        let psi = common::random_state(2, &mut rng);
        let post = common::random_state(2, &mut rng);
        let a = run_protocol(&MonitorProtocol::new(chain.clone(), psi.clone(), Some(post.clone())).unwrap());
        let b = run_protocol(&MonitorProtocol::new(chain, psi, Some(post.phase(phi))).unwrap());
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a.monitor_state.fidelity(&b.monitor_state) - 1.0).abs() <= 1e-9);
            prop_assert!((a.success_prob - b.success_prob).abs() <= 1e-12);
        }
    }
}
