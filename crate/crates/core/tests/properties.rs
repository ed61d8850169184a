use evolsort::analysis::{
    adm, decompose_blocks, is_admissible, theta_filter, AuxTracker, BlockKind, PaddedList,
};
use evolsort::harness::{
    run_mdev_protocol, run_tdev_protocol, run_trajectory, ProtocolConfig, RunSpec, Start,
};
use evolsort::model::{simulate_dual, sorting_fraction_ok, validate_window, StepKind};
use evolsort::perm::{dev, kendall_tau, kendall_tau_naive, mdev, DeviationTracker};
use evolsort::{Algorithm, PerturbationSpec, Permutation, ProcessState, StepSchedule};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn perm(max_n: usize) -> impl Strategy<Value = Permutation> {
    (1..=max_n).prop_flat_map(|n| Just((0..n as u32).collect::<Vec<_>>()).prop_shuffle())
        .prop_map(|v| Permutation::from_vec(v).unwrap())
}

fn perm_pair(max_n: usize) -> impl Strategy<Value = (Permutation, Permutation)> {
    (1..=max_n).prop_flat_map(|n| {
        let base: Vec<u32> = (0..n as u32).collect();
        (Just(base.clone()).prop_shuffle(), Just(base).prop_shuffle())
    })
    .prop_map(|(a, b)| (Permutation::from_vec(a).unwrap(), Permutation::from_vec(b).unwrap()))
}

fn spec() -> impl Strategy<Value = PerturbationSpec> {
    prop_oneof![
        Just(PerturbationSpec::adjacent()),
        (0.05f64..0.95).prop_map(|p| PerturbationSpec::signed_geometric(p).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kendall_matches_pairs_and_sandwiches_dev((p, q) in perm_pair(60)) {
        let k = kendall_tau(&p, &q).unwrap();
        prop_assert_eq!(k, kendall_tau_naive(&p, &q).unwrap());
        prop_assert_eq!(k, kendall_tau(&q, &p).unwrap());
        let d = dev(&p, &q).unwrap();
        prop_assert!(k <= d && d <= 2 * k);
        prop_assert!(mdev(&p, &q).unwrap() <= d);
    }

    #[test]
    fn inverse_composes_to_identity(p in perm(80)) {
        prop_assert!(p.compose(&p.inverse()).unwrap().is_identity());
        prop_assert!(p.inverse().compose(&p).unwrap().is_identity());
    }

    #[test]
    fn shifts_keep_a_bijection(p in perm(40), v in 0usize..40, s in -50i64..50) {
        let n = p.len();
        let v = v % n;
        let mut q = p.clone();
        let eff = q.shift_value(v, s);
        q.validate().unwrap();
        prop_assert_eq!(q.get(p.inv(v)) as i64, v as i64 + eff);
        prop_assert!(eff.abs() <= s.abs());
        let mut r = p.clone();
        let eff = r.shift_entry(v, s);
        r.validate().unwrap();
        prop_assert_eq!(r.get((v as i64 + eff) as usize), p.get(v));
    }

    #[test]
    fn deviation_tracker_follows_runs(start in perm(40), seed in any::<u64>(), b in 1u64..5, spec in spec()) {
        let n = start.len();
        let mut state = ProcessState::new(start, seed);
        let mut schedule = StepSchedule::fixed(b, n).unwrap();
        let mut dt = DeviationTracker::new(&state.pi);
        let mut prev = state.pi.clone();
        for _ in 0..300 {
            state.step(&spec, &mut schedule, Algorithm::Naive).unwrap();
            let idx: Vec<usize> = (0..n).filter(|&i| prev.get(i) != state.pi.get(i)).collect();
            let old: Vec<u32> = idx.iter().map(|&i| prev.get(i) as u32).collect();
            dt.update(&state.pi, &idx, &old);
            prev = state.pi.clone();
        }
        let id = Permutation::identity(n);
        prop_assert_eq!(dt.mdev(), mdev(&state.pi, &id).unwrap());
        prop_assert_eq!(dt.dev(), dev(&state.pi, &id).unwrap());
    }

    #[test]
    fn generated_schedules_respect_windows(n in 1usize..40, b in 1.0f64..6.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = StepSchedule::iid(b, n).unwrap();
        let entries: Vec<u64> = (1..=5 * n as u64).map(|i| s.next_count(i, &mut rng).unwrap()).collect();
        prop_assert!(validate_window(&entries, n, b).is_ok());
    }

    #[test]
    fn runs_sort_often_enough(n in 2usize..40, b in 1u64..6, seed in any::<u64>(), alg in 0usize..4) {
        let alg = [Algorithm::Naive, Algorithm::Insertion, Algorithm::Bubble, Algorithm::Cocktail][alg];
        let mut state = ProcessState::new(Permutation::reverse(n), seed);
        let mut schedule = StepSchedule::fixed(b, n).unwrap();
        let mut kinds = Vec::new();
        state.run::<evolsort::model::ModelError, _>(&PerturbationSpec::adjacent(), &mut schedule, alg, 2000, |_, r| {
            kinds.push(r.kind() == StepKind::Sort);
            Ok(())
        }).unwrap();
        prop_assert!(sorting_fraction_ok(&kinds, n, b as f64).is_ok());
    }

    #[test]
    fn adm_output_is_admissible((tau, pi) in perm_pair(60)) {
        let t = adm(&tau, &pi);
        prop_assert!(is_admissible(&t, &pi));
        prop_assert_eq!(adm(&t, &pi), t);
    }

    #[test]
    fn lopt_output_is_locally_optimal((tau, pi) in perm_pair(50), d in 2usize..5) {
        let tau = adm(&tau, &pi);
        let mut list = PaddedList::canonical(&pi, d);
        list.lopt(&tau);
        prop_assert!(list.is_locally_optimal(&tau));
        list.validate(&pi).unwrap();
    }

    #[test]
    fn blocks_tile_the_entries((tau, pi) in perm_pair(50), d in 2usize..5) {
        let tau = adm(&tau, &pi);
        let mut list = PaddedList::canonical(&pi, d);
        list.lopt(&tau);
        let blocks = decompose_blocks(&list, &tau);
        let covered: usize = blocks.iter().map(|b| (0..pi.len()).filter(|&k| {
            let c = list.slot(k);
            b.start <= c && c <= b.end
        }).count()).sum();
        prop_assert_eq!(covered, pi.len());
        for b in &blocks {
            prop_assert!(b.start <= b.head && b.head <= b.end);
            if b.kind == BlockKind::Stationary {
                prop_assert_eq!(b.start, b.end);
            }
        }
    }

    #[test]
    fn filtering_bounds((tau, _) in perm_pair(120), theta in 0u64..130) {
        let hat = theta_filter(&tau, theta);
        prop_assert!(mdev(&hat, &tau).unwrap() <= 2 * theta);
        let far: u64 = (0..tau.len()).map(|i| (i as u64).abs_diff(tau.get(i) as u64)).filter(|&x| x > theta).sum();
        prop_assert!(dev(&hat, &Permutation::identity(tau.len())).unwrap() <= 4 * far);
    }

    #[test]
    fn dual_agrees(start in perm(24), seed in any::<u64>(), b in 1u64..5, spec in spec()) {
        let n = start.len();
        prop_assert!(simulate_dual(&start, seed, &spec, &StepSchedule::fixed(b, n).unwrap(), 500).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phi_never_rises_and_running_sum_is_exact(start in perm(48), seed in any::<u64>(), b in 1u64..4, d in 2usize..4) {
        let n = start.len();
        let alpha = 20f64.ln() / (d - 1) as f64;
        let spec = PerturbationSpec::adjacent();
        let mut state = ProcessState::new(start, seed);
        let mut tracker = AuxTracker::new(&state.pi, d, alpha, 0).unwrap();
        let mut schedule = StepSchedule::fixed(b, n).unwrap();
        let mut last = tracker.phi_exact().ln();
        for _ in 0..1500 {
            let r = state.step(&spec, &mut schedule, Algorithm::Naive).unwrap();
            prop_assert!(tracker.aux_step(&state.pi, state.t, &r).unwrap().non_increasing());
            let now = tracker.phi_exact().ln();
            prop_assert!(now <= last + 1e-9 || now == f64::NEG_INFINITY);
            last = now;
        }
        let (run, exact) = (tracker.phi().ln(), tracker.phi_exact().ln());
        prop_assert!((run - exact).abs() <= 1e-8 * exact.abs().max(1.0) || (run.is_infinite() && exact.is_infinite()), "running {run} exact {exact}");
    }

    #[test]
    fn trajectories_are_deterministic_with_increasing_steps(n in 1usize..30, seed in any::<u64>(), every in 0u64..20, aux in any::<bool>()) {
        let spec = RunSpec {
            n,
            start: Start::Random,
            perturbation: PerturbationSpec::signed_geometric(0.4).unwrap(),
            schedule: StepSchedule::fixed(2, n).unwrap(),
            algorithm: Algorithm::Naive,
            steps: 400,
            seed,
            record_every: every,
            aux: aux.then_some(evolsort::harness::AuxSettings { d: 2, alpha: 20f64.ln(), psi_alpha: 1.0 / 3.0 }),
        };
        let a = run_trajectory(&spec).unwrap();
        prop_assert_eq!(&a, &run_trajectory(&spec).unwrap());
        prop_assert!(a.windows(2).all(|w| w[0].step < w[1].step));
        prop_assert_eq!(a.last().unwrap().step, 400);
        prop_assert!(a.iter().all(|r| r.phi.is_some() == aux));
    }
}

#[test]
fn protocol_reports_are_deterministic_and_monotone() {
    let spec = PerturbationSpec::adjacent();
    let mut cfg = ProtocolConfig::new(1);
    cfg.horizon_multiplier = 0.02;
    for seed in [3, 4] {
        let a = run_mdev_protocol(24, seed, &spec, &cfg).unwrap();
        let b = run_mdev_protocol(24, seed, &spec, &cfg).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert!(a.groups.iter().all(|g| g.phi_rises == 0 && g.phi_end <= g.phi_start));
        let a = run_tdev_protocol(24, seed, &spec, &cfg).unwrap();
        let b = run_tdev_protocol(24, seed, &spec, &cfg).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
