use evolsort::harness::{
    run_lower_bound_mdev, run_mdev_protocol, run_scaling_study, run_tdev_protocol, run_trajectory, seed_list,
    ProtocolConfig, RunSpec, ScalingConfig, Start,
};
use evolsort::{Algorithm, PerturbationSpec, StepSchedule};

#[test]
fn single_element_never_deviates() {
    let cfg = ScalingConfig {
        n_list: vec![1],
        b: 3,
        perturbation: PerturbationSpec::signed_geometric(0.5).unwrap(),
        algorithm: Algorithm::Naive,
        seeds: seed_list(0, 4),
        horizon_multiplier: 2.0,
        start: Start::Random,
        record_every: 0,
    };
    let rows = run_scaling_study(&cfg).unwrap();
    assert!(rows[0].runs.iter().all(|r| r.dev == 0 && r.mdev == 0));
}

#[test]
fn sorted_without_mixing_is_absorbing() {
    let n = 20;
    let recs = run_trajectory(&RunSpec {
        n,
        start: Start::Sorted,
        perturbation: PerturbationSpec::adjacent(),
        schedule: StepSchedule::explicit(vec![0; 5000], 1.0, n).unwrap(),
        algorithm: Algorithm::Naive,
        steps: 5000,
        seed: 1,
        record_every: 50,
        aux: None,
    })
    .unwrap();
    assert!(recs.iter().all(|r| r.dev == 0 && r.mixes == 0));
}

#[test]
fn huge_k_gives_one_group() {
    let spec = PerturbationSpec::adjacent();
    let mut cfg = ProtocolConfig::new(1);
    cfg.horizon_multiplier = 0.01;
    cfg.k0_multiplier = 1e6;
    let rep = run_mdev_protocol(32, 5, &spec, &cfg).unwrap();
    assert_eq!(rep.groups.len(), 1);
    assert_eq!(rep.groups[0].steps, rep.horizon);
}

#[test]
fn groups_do_not_raise_phi_and_rarely_hit_the_cap() {
    let spec = PerturbationSpec::adjacent();
    let mut cfg = ProtocolConfig::new(1);
    cfg.horizon_multiplier = 0.02;
    let (mut groups, mut violated) = (0, 0);
    for seed in seed_list(100, 20) {
        let rep = run_mdev_protocol(256, seed, &spec, &cfg).unwrap();
        for g in &rep.groups {
            assert!(g.phi_end <= g.phi_start);
            assert_eq!(g.phi_rises, 0);
        }
        groups += rep.groups.len();
        violated += rep.cap_violations();
    }
    assert!(violated as f64 <= 0.05 * groups as f64, "{violated} of {groups}");
}

#[test]
fn partial_resets_meet_the_filter_bound_and_final_dev_is_stable() {
    // reduced from n = 512 at the full horizon to keep the suite quick
    let spec = PerturbationSpec::adjacent();
    let mut cfg = ProtocolConfig::new(1);
    cfg.horizon_multiplier = 0.25;
    let mut finals = Vec::new();
    for seed in seed_list(200, 10) {
        let rep = run_tdev_protocol(128, seed, &spec, &cfg).unwrap();
        for ph in &rep.phases {
            if let Some(f) = ph.filter {
                assert!(f.holds(), "{f:?}");
            }
            assert_eq!(ph.phi_rises, 0);
        }
        finals.push(rep.final_dev as f64 / 128.0);
    }
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    let var = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (finals.len() - 1) as f64;
    assert!(var.sqrt() / mean < 0.5, "{finals:?}");
}

#[test]
fn peak_mdev_grows_with_b() {
    let seeds = seed_list(300, 20);
    let peaks: Vec<f64> = [1u64, 2, 4]
        .iter()
        .map(|&b| run_lower_bound_mdev(&[1024], b, &seeds, 1.0).unwrap().rows[0].median_peak)
        .collect();
    assert!(peaks.windows(2).all(|w| w[0] < w[1]), "{peaks:?}");
}
