//! Named reproduction checks, each with an independent oracle.
//!
//! Checks are independent of one another and run concurrently on a rayon pool.

use std::f64::consts::PI;
use std::time::Instant;

use histlab::channels::{channel_history, choi_from_kraus, dephase, marginal_out, KrausChannel};
use histlab::history::{bridge_operator, build_history, InstantChain};
use histlab::monitor::{run_protocol, MonitorProtocol};
use histlab::qcore::random::{
    ginibre, random_density, random_direction, random_ket, random_unitary,
};
use histlab::qcore::{ComplexMatrix, DensityMatrix, Ket, OrthonormalBasis, UnitaryOp};
use histlab::tempcorr::{
    classical_lg_max, lg_sweep, pointer_two_time, sequential_measure, SequentialMeasurementPlan,
    SpinObservable,
};
use histlab::uncertainty::{
    brute_force_projective, helstrom_success, uncertainty_report, EnergyModel, InstantEnsemble,
    BRUTE_FORCE_STEP,
};
use histlab::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::run::run_scenario;
use crate::scenario::{parse_scenario_str, SCHEMA_VERSION};

/// Bundled scenario fixtures, by name.
pub const FIXTURES: &[(&str, &str)] = &[
    ("trivial_ghz", include_str!("../scenarios/trivial_ghz.json")),
    (
        "x_step_history",
        include_str!("../scenarios/x_step_history.json"),
    ),
    (
        "two_time_pointer",
        include_str!("../scenarios/two_time_pointer.json"),
    ),
    (
        "repeated_spin",
        include_str!("../scenarios/repeated_spin.json"),
    ),
    (
        "channel_identity_ghz",
        include_str!("../scenarios/channel_identity_ghz.json"),
    ),
    (
        "channel_depolarizing",
        include_str!("../scenarios/channel_depolarizing.json"),
    ),
    (
        "energy_fixed",
        include_str!("../scenarios/energy_fixed.json"),
    ),
    ("time_fixed", include_str!("../scenarios/time_fixed.json")),
    ("lg_sweep", include_str!("../scenarios/lg_sweep.json")),
];

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub claim: &'static str,
    pub passed: bool,
    pub details: Value,
    pub duration_ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Bundle {
    pub schema_version: u32,
    pub histlab_version: &'static str,
    pub checks: Vec<CheckReport>,
    pub passed: bool,
    pub duration_ms: u64,
}

struct Check {
    name: &'static str,
    claim: &'static str,
    run: fn() -> (bool, Value),
}

const CHECKS: &[Check] = &[
    Check {
        name: "ghz_form",
        claim: "trivial evolution of a0|0>+a1|1> over N instants gives a0|0..0>+a1|1..1>",
        run: ghz_form,
    },
    Check {
        name: "x_step_history",
        claim: "a bit flip between two instants gives the history |1>|0>, reproduced by the monitor circuit",
        run: || fixture_check("x_step_history"),
    },
    Check {
        name: "bridge_identity",
        claim: "the bridge operator of a trivial step is the identity in any fixed basis",
        run: bridge_identity,
    },
    Check {
        name: "monitor_equivalence",
        claim: "the post-selected monitor state equals the history state",
        run: monitor_equivalence,
    },
    Check {
        name: "pointer_nullity",
        claim: "a pointer coupled at two instants of a trivial evolution is never displaced",
        run: pointer_nullity,
    },
    Check {
        name: "repeated_spin",
        claim: "repeating a spin measurement under trivial evolution gives the same value with certainty",
        run: repeated_spin,
    },
    Check {
        name: "channel_history",
        claim: "history operators of CPTP channels have unit trace, are Hermitian, and reduce to pure histories for unitaries",
        run: channel_history_check,
    },
    Check {
        name: "channel_marginal",
        claim: "the output marginal of a channel history equals the channel applied to the input",
        run: channel_marginal,
    },
    Check {
        name: "energy_fixed",
        claim: "an energy eigenstate has zero energy spread and its instants can only be guessed (success 1/N)",
        run: energy_fixed,
    },
    Check {
        name: "time_fixed",
        claim: "|0> flipped by X: instants are perfectly distinguishable and the energy entropy is 1 bit",
        run: time_fixed,
    },
    Check {
        name: "helstrom_oracle",
        claim: "brute-force projective discrimination matches the two-state minimum-error bound",
        run: helstrom_oracle,
    },
    Check {
        name: "lg_demo",
        claim: "K(θ) = 2cosθ - cos2θ peaks at 1.5 at θ = π/3; deterministic assignments never exceed 1",
        run: lg_demo,
    },
    Check {
        name: "fixtures",
        claim: "every bundled scenario parses and meets its declared expectations",
        run: fixtures,
    },
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.name).collect()
}

/// Runs the selected checks (all when `only` is empty) on `jobs` workers.
pub fn reproduce(only: &[String], jobs: Option<usize>) -> Result<Bundle, String> {
    for o in only {
        if !CHECKS.iter().any(|c| c.name == o) {
            return Err(format!(
                "unknown check '{o}' (known: {})",
                check_names().join(", ")
            ));
        }
    }
    let selected: Vec<&Check> = CHECKS
        .iter()
        .filter(|c| only.is_empty() || only.iter().any(|o| o == c.name))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let checks: Vec<CheckReport> = pool.install(|| {
        selected
            .par_iter()
            .map(|c| {
                let t = Instant::now();
                let (passed, details) = (c.run)();
                CheckReport {
                    name: c.name,
                    claim: c.claim,
                    passed,
                    details,
                    duration_ms: t.elapsed().as_millis() as u64,
                }
            })
            .collect()
    });
    Ok(Bundle {
        schema_version: SCHEMA_VERSION,
        histlab_version: histlab::VERSION,
        passed: checks.iter().all(|c| c.passed),
        checks,
        duration_ms: start.elapsed().as_millis() as u64,
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_basis(dim: usize, rng: &mut ChaCha8Rng) -> OrthonormalBasis {
    OrthonormalBasis::from_matrix(random_unitary(dim, rng).matrix()).expect("unitary columns")
}

fn random_chain(dim: usize, instants: usize, rng: &mut ChaCha8Rng) -> InstantChain {
    let steps = (0..instants - 1)
        .map(|_| random_unitary(dim, rng))
        .collect();
    let bases = (0..instants).map(|_| random_basis(dim, rng)).collect();
    InstantChain::new(steps, Some(bases)).expect("consistent random chain")
}

fn fixture_check(name: &str) -> (bool, Value) {
    let text = FIXTURES
        .iter()
        .find(|f| f.0 == name)
        .map(|f| f.1)
        .expect("bundled fixture");
    let scenario = match parse_scenario_str(text) {
        Ok(s) => s,
        Err(e) => return (false, json!({ "error": e.to_string() })),
    };
    match scenario.prepare(&scenario.analyses, None) {
        Ok(p) => {
            let report = run_scenario(&p, &scenario.analyses);
            (
                report.passed,
                json!({ "expectations": report.expectations }),
            )
        }
        Err(e) => (false, json!({ "error": e.violations() })),
    }
}

fn ghz_form() -> (bool, Value) {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for n in 2..=6 {
        for _ in 0..20 {
            let psi = random_ket(2, &mut r);
            let (a0, a1) = (psi.amplitudes()[0], psi.amplitudes()[1]);
            let h = build_history(&InstantChain::trivial(2, n).unwrap(), &psi).unwrap();
            let last = (1 << n) - 1;
            for (k, amp) in h.vector().amplitudes().iter().enumerate() {
                let expected = match k {
                    0 => a0,
                    k if k == last => a1,
                    _ => C64::new(0.0, 0.0),
                };
                worst = worst.max((amp - expected).norm());
            }
        }
    }
    (
        worst <= 1e-12,
        json!({ "max_deviation": worst, "tolerance": 1e-12, "instants": [2, 6], "states_per_n": 20 }),
    )
}

fn bridge_identity() -> (bool, Value) {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for dim in 2..=4 {
        let chain = InstantChain::trivial(dim, 3)
            .unwrap()
            .with_uniform_basis(random_basis(dim, &mut r))
            .unwrap();
        for k in 0..2 {
            let b = bridge_operator(&chain, k).unwrap();
            worst = worst.max(b.matrix.max_abs_diff(&ComplexMatrix::identity(dim)));
        }
    }
    let flip =
        bridge_operator(&InstantChain::repeated(UnitaryOp::pauli_x(), 2).unwrap(), 0).unwrap();
    let flip_dev = flip.matrix.max_abs_diff(UnitaryOp::pauli_x().matrix());
    (
        worst <= 1e-12 && flip_dev <= 1e-12,
        json!({ "identity_deviation": worst, "x_step_deviation": flip_dev, "tolerance": 1e-12 }),
    )
}

fn monitor_equivalence() -> (bool, Value) {
    let mut r = rng(3);
    let (mut cases, mut skipped, mut worst) = (0, 0, 0.0f64);
    while cases < 200 {
        let instants = 2 + (cases % 2);
        let chain = random_chain(2, instants, &mut r);
        let psi = random_ket(2, &mut r);
        match run_protocol(&MonitorProtocol::new(chain, psi, None).unwrap()) {
            Ok(o) => {
                worst = worst.max((1.0 - o.fidelity_vs_history).abs());
                cases += 1;
            }
            Err(histlab::Error::ZeroProbability { .. }) => skipped += 1,
            Err(e) => return (false, json!({ "error": e.to_string() })),
        }
    }
    (
        worst <= 1e-9,
        json!({ "cases": cases, "skipped_zero_probability": skipped, "max_fidelity_defect": worst, "tolerance": 1e-9 }),
    )
}

/// `n` nearly uniform points on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rad = (1.0 - y * y).sqrt();
            let phi = golden * i as f64;
            [rad * phi.cos(), y, rad * phi.sin()]
        })
        .collect()
}

fn pointer_nullity() -> (bool, Value) {
    let mut r = rng(4);
    let chain = InstantChain::trivial(2, 3).unwrap();
    let states: Vec<Ket> = (0..50).map(|_| random_ket(2, &mut r)).collect();
    let mut worst = 0.0f64;
    for dir in fibonacci_sphere(20) {
        let spin = SpinObservable::along(dir).unwrap();
        for psi in &states {
            let d = pointer_two_time(&chain, psi, &spin, 0, 2, 5).unwrap();
            worst = worst.max((d.prob(0) - 1.0).abs());
        }
    }
    let (fixture_ok, _) = fixture_check("two_time_pointer");
    (
        worst <= 1e-12 && fixture_ok,
        json!({ "directions": 20, "states": 50, "max_deviation": worst, "tolerance": 1e-12, "fixture_passed": fixture_ok }),
    )
}

fn repeated_spin() -> (bool, Value) {
    const SHOTS: u64 = 100_000;
    let mut r = rng(5);
    let (mut exact_worst, mut sigma_worst) = (0.0f64, 0.0f64);
    let mut all_agree = true;
    for k in 0..20 {
        let spin = SpinObservable::along(random_direction(&mut r)).unwrap();
        let chain = InstantChain::trivial(2, 3)
            .unwrap()
            .with_uniform_basis(spin.eigenbasis())
            .unwrap();
        let obs = vec![spin.matrix().clone(); 3];
        let plan = SequentialMeasurementPlan::new(chain, vec![0, 1, 2], obs).unwrap();
        let psi = random_ket(2, &mut r);
        let res = sequential_measure(&plan, &psi, SHOTS, 100 + k).unwrap();
        exact_worst = exact_worst.max((res.prob_all_equal() - 1.0).abs());
        for o in &res.outcomes {
            let n = SHOTS as f64;
            let sigma = (n * o.probability * (1.0 - o.probability)).sqrt();
            let dev = (o.count as f64 - n * o.probability).abs();
            if dev > 4.0 * sigma + 1e-6 {
                all_agree = false;
            }
            if sigma > 0.0 {
                sigma_worst = sigma_worst.max(dev / sigma);
            }
        }
        let unequal = res
            .outcomes
            .iter()
            .filter(|o| o.eigenvalues.windows(2).any(|w| (w[0] - w[1]).abs() > 1e-9))
            .map(|o| o.count)
            .sum::<u64>();
        all_agree &= unequal == 0;
    }
    (
        exact_worst <= 1e-12 && all_agree,
        json!({
            "directions": 20,
            "shots": SHOTS,
            "exact_disagreement": exact_worst,
            "monte_carlo_within_4_sigma": all_agree,
            "largest_deviation_in_sigma": sigma_worst,
        }),
    )
}

fn channel_history_check() -> (bool, Value) {
    let mut r = rng(6);
    let (mut trace_worst, mut herm_worst) = (0.0f64, 0.0f64);
    for case in 0..120usize {
        let (din, dout) = (2 + case % 2, 2 + (case / 2) % 2);
        let env = r.random_range(1..=3usize).max(din.div_ceil(dout));
        let ch = KrausChannel::random(din, dout, env, &mut r);
        let choi =
            choi_from_kraus(&ch, &random_basis(din, &mut r), &random_basis(dout, &mut r)).unwrap();
        let op = channel_history(&random_density(din, &mut r), &choi).unwrap();
        trace_worst = trace_worst.max((op.trace() - C64::new(1.0, 0.0)).norm());
        herm_worst = herm_worst.max(op.hermiticity_residual());
    }
    let mut pure_worst = 0.0f64;
    for case in 0..50usize {
        let dim = 2 + case % 2;
        let u = random_unitary(dim, &mut r);
        let (bin, bout) = (random_basis(dim, &mut r), random_basis(dim, &mut r));
        let psi = random_ket(dim, &mut r);
        let choi = choi_from_kraus(&KrausChannel::unitary(&u), &bin, &bout).unwrap();
        let op = channel_history(&psi.to_density(), &choi).unwrap();
        let h = build_history(
            &InstantChain::new(vec![u], Some(vec![bin, bout])).unwrap(),
            &psi,
        )
        .unwrap();
        pure_worst = pure_worst.max(op.matrix().max_abs_diff(&h.vector().projector()));
    }
    (
        trace_worst <= 1e-10 && herm_worst < 1e-10 && pure_worst <= 1e-9,
        json!({
            "random_channels": 120,
            "trace_deviation": trace_worst,
            "hermiticity_residual": herm_worst,
            "unitary_cases": 50,
            "pure_history_deviation": pure_worst,
        }),
    )
}

fn channel_marginal() -> (bool, Value) {
    let mut r = rng(7);
    let (mut direct_worst, mut dephased_worst) = (0.0f64, 0.0f64);
    for case in 0..100usize {
        let (din, dout) = (2 + case % 2, 2 + (case / 2) % 2);
        let ch = KrausChannel::random(din, dout, din.div_ceil(dout).max(2), &mut r);
        let bin = random_basis(din, &mut r);
        let choi = choi_from_kraus(&ch, &bin, &random_basis(dout, &mut r)).unwrap();
        let rho = random_density(din, &mut r);
        let out = marginal_out(&channel_history(&rho, &choi).unwrap());
        direct_worst = direct_worst.max(out.max_abs_diff(&ch.apply(rho.matrix()).unwrap()));
        let dephased = ch.apply(&dephase(rho.matrix(), &bin).unwrap()).unwrap();
        dephased_worst = dephased_worst.max(out.max_abs_diff(&dephased));
    }
    (
        direct_worst <= 1e-9,
        json!({
            "cases": 100,
            "max_deviation_from_channel_output": direct_worst,
            "max_deviation_from_channel_of_dephased_input": dephased_worst,
            "tolerance": 1e-9,
            "note": "tracing out the input instant keeps only the input-basis populations of rho",
        }),
    )
}

fn random_hamiltonian(dim: usize, r: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = ginibre(dim, dim, r);
    (&g + &g.dagger()).scale_real(0.5)
}

fn energy_fixed() -> (bool, Value) {
    let mut r = rng(8);
    let (mut var_worst, mut success_worst) = (0.0f64, 0.0f64);
    let mut cases = 0;
    for k in 0..20 {
        let dim = 2 + k % 2;
        let em = EnergyModel::new(random_hamiltonian(dim, &mut r), false).unwrap();
        for phi in em.eigenbasis().vectors() {
            for n in 2..=5 {
                let chain = em.chain(n, 0.3 + 0.2 * k as f64).unwrap();
                let rep = uncertainty_report(&chain, phi, &em).unwrap();
                var_worst = var_worst.max(rep.energy.variance);
                success_worst = success_worst.max((rep.time.success - 1.0 / n as f64).abs());
                cases += 1;
            }
        }
    }
    let (fixture_ok, _) = fixture_check("energy_fixed");
    (
        var_worst <= 1e-9 && success_worst <= 1e-9 && fixture_ok,
        json!({
            "cases": cases,
            "max_variance": var_worst,
            "max_success_deviation_from_1_over_n": success_worst,
            "fixture_passed": fixture_ok,
        }),
    )
}

fn time_fixed() -> (bool, Value) {
    let em = EnergyModel::new(UnitaryOp::pauli_x().matrix().clone(), false).unwrap();
    let chain = InstantChain::repeated(UnitaryOp::pauli_x(), 2).unwrap();
    let rep = uncertainty_report(&chain, &Ket::zero(), &em).unwrap();
    let ok =
        (rep.energy.entropy_bits - 1.0).abs() <= 1e-9 && (rep.time.success - 1.0).abs() <= 1e-9;
    let (fixture_ok, _) = fixture_check("time_fixed");
    (
        ok && fixture_ok,
        json!({ "report": rep, "fixture_passed": fixture_ok }),
    )
}

fn helstrom_oracle() -> (bool, Value) {
    let mut r = rng(9);
    let pairs: Vec<InstantEnsemble> = (0..50)
        .map(|k| {
            let state = |r: &mut ChaCha8Rng| -> DensityMatrix {
                if k % 2 == 0 {
                    random_ket(2, r).to_density()
                } else {
                    random_density(2, r)
                }
            };
            let (a, b) = (state(&mut r), state(&mut r));
            InstantEnsemble::new(vec![a, b], None).unwrap()
        })
        .collect();
    let (mut gap_worst, mut excess_worst) = (0.0f64, f64::NEG_INFINITY);
    for e in &pairs {
        let h = helstrom_success(e).unwrap();
        let bf = brute_force_projective(e, BRUTE_FORCE_STEP).unwrap();
        gap_worst = gap_worst.max((h - bf).abs());
        excess_worst = excess_worst.max(bf - h);
    }
    (
        gap_worst <= 1e-4 && excess_worst <= 1e-9,
        json!({
            "pairs": 50,
            "grid_step_rad": BRUTE_FORCE_STEP,
            "max_abs_gap": gap_worst,
            "max_excess_over_bound": excess_worst,
        }),
    )
}

fn lg_k(theta: f64) -> f64 {
    let z = SpinObservable::z().matrix().clone();
    lg_sweep(&[theta], &z, &DensityMatrix::maximally_mixed(2)).unwrap()[0].k
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn lg_demo() -> (bool, Value) {
    let z = SpinObservable::z().matrix().clone();
    let n = (PI / 1e-3).floor() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|k| k as f64 * 1e-3).collect();
    let rows = lg_sweep(&grid, &z, &DensityMatrix::maximally_mixed(2)).unwrap();
    let closed_worst = rows
        .iter()
        .map(|r| (r.k - (2.0 * r.theta.cos() - (2.0 * r.theta).cos())).abs())
        .fold(0.0f64, f64::max);
    let grid_best = rows
        .iter()
        .max_by(|a, b| a.k.total_cmp(&b.k))
        .unwrap()
        .theta;
    let theta_star = golden_max(lg_k, grid_best - 1e-3, grid_best + 1e-3, 1e-9);
    let k_star = lg_k(theta_star);
    let classical = classical_lg_max();
    let (fixture_ok, _) = fixture_check("lg_sweep");
    let passed = closed_worst <= 1e-9
        && (theta_star - PI / 3.0).abs() <= 1e-6
        && (k_star - 1.5).abs() <= 1e-6
        && classical <= 1.0
        && fixture_ok;
    (
        passed,
        json!({
            "grid_points": n,
            "max_closed_form_deviation": closed_worst,
            "theta_at_max": theta_star,
            "theta_error": (theta_star - PI / 3.0).abs(),
            "k_max": k_star,
            "classical_max": classical,
            "fixture_passed": fixture_ok,
        }),
    )
}

fn fixtures() -> (bool, Value) {
    let mut all = true;
    let mut details = serde_json::Map::new();
    for (name, _) in FIXTURES {
        let (ok, d) = fixture_check(name);
        all &= ok;
        details.insert(name.to_string(), json!({ "passed": ok, "details": d }));
    }
    (all, Value::Object(details))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_points_are_unit_vectors() {
        for p in fibonacci_sphere(20) {
            let n = p.iter().map(|x| x * x).sum::<f64>();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn golden_section_finds_a_parabola_peak() {
        let x = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn check_names_are_unique_and_fixtures_are_named_consistently() {
        let mut names = check_names();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), CHECKS.len());
        for (name, text) in FIXTURES {
            assert!(text.contains(&format!("\"name\": \"{name}\"")), "{name}");
        }
    }

    #[test]
    fn unknown_check_is_rejected() {
        assert!(reproduce(&["nope".to_string()], Some(1)).is_err());
    }
}
