use statrs::distribution::{ChiSquared, ContinuousCDF};
use toricloc::qmc::{
    initial_mu_guess, run_qmc, tune_mu, BoseModel, MoveStats, QmcRun, QmcSchedule, TuneOptions, WormParams,
    WormState,
};
use toricloc::rng_from_seed;
use toricloc_testkit::HardCoreBosonsEd;

#[test]
fn diagonal_configurations_follow_boltzmann_weights() {
    let model = BoseModel::disordered(2, 1.0, 0.2, 1.0, 21).unwrap();
    let exact = HardCoreBosonsEd::new(2, 1.0, model.mu, &model.offsets).diagonal_weights(1.0);
    let params = WormParams::default();
    let eta = params.eta_for(&model);
    let nb = model.neighbor_table();
    let mut rng = rng_from_seed(99);
    let mut state = WormState::empty(&model);
    let mut stats = MoveStats::default();
    let mut counts = vec![0u64; 16];
    let target = 1_000_000;
    let mut taken = 0;
    while taken < target {
        // Thinned sampling keeps the chain close to independent draws.
        for _ in 0..400 {
            state.update(&model, &params, eta, &nb, &mut rng, &mut stats);
        }
        if state.is_closed() {
            let occ = state.occupation_at_zero();
            let s: usize = occ.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum();
            counts[s] += 1;
            taken += 1;
        }
    }
    let chi2: f64 = counts
        .iter()
        .zip(&exact)
        .map(|(&c, &p)| (c as f64 - p * target as f64).powi(2) / (p * target as f64))
        .sum();
    let p_value = 1.0 - ChiSquared::new(15.0).unwrap().cdf(chi2);
    eprintln!("chi2 = {chi2:.2}, p = {p_value:.4}");
    assert!(p_value > 0.01, "chi2 {chi2} p {p_value}");
}

#[test]
fn atomic_limit_gives_fermi_occupations() {
    let model = BoseModel::disordered(3, 2.0, 0.1, 2.0, 8).unwrap().with_hopping(0.0);
    let mut sched = QmcSchedule::new(500, 40_000, 40);
    sched.site_densities = true;
    let obs = run_qmc(&model, &WormParams::default(), &sched, 4).unwrap();
    assert_eq!(obs.mean_kinks.mean, 0.0);
    let sites = obs.site_density.unwrap();
    for (i, n) in sites.iter().enumerate() {
        let f = 1.0 / (1.0 + (-model.beta * (model.mu - model.offsets[i])).exp());
        assert!((n - f).abs() < 0.02, "site {i}: {n} vs {f}");
    }
}

#[test]
fn deep_negative_mu_empties_the_lattice() {
    let obs = run_qmc(
        &BoseModel::clean(4, 4.0, -12.0).unwrap(),
        &WormParams::default(),
        &QmcSchedule::new(100, 2_000, 32),
        5,
    )
    .unwrap();
    assert!(obs.density.mean < 1e-3);
}

#[test]
fn particle_hole_mirror() {
    // n -> 1 - n with μ - ε_i -> -(μ - ε_i).
    let a = BoseModel::disordered(3, 2.0, -0.8, 1.5, 13).unwrap();
    let mirrored: Vec<f64> = a.offsets.iter().map(|e| -e).collect();
    let b = BoseModel::with_offsets(3, 2.0, 0.8, mirrored).unwrap();
    let s = QmcSchedule::new(1_000, 40_000, 40);
    let oa = run_qmc(&a, &WormParams::default(), &s, 1).unwrap();
    let ob = run_qmc(&b, &WormParams::default(), &s, 2).unwrap();
    let d = oa.density.mean + ob.density.mean - 1.0;
    let sd = (oa.density.stderr.powi(2) + ob.density.stderr.powi(2)).sqrt();
    assert!(d.abs() < 4.0 * sd, "{} + {} != 1", oa.density.mean, ob.density.mean);
    let dw = oa.winding_sq.mean - ob.winding_sq.mean;
    let sw = (oa.winding_sq.stderr.powi(2) + ob.winding_sq.stderr.powi(2)).sqrt();
    assert!(dw.abs() < 4.0 * sw);
}

#[test]
fn same_seed_same_stream() {
    let m = BoseModel::disordered(4, 4.0, -1.0, 2.0, 3).unwrap();
    let s = QmcSchedule::new(50, 320, 32);
    let a = run_qmc(&m, &WormParams::default(), &s, 77).unwrap();
    let b = run_qmc(&m, &WormParams::default(), &s, 77).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, run_qmc(&m, &WormParams::default(), &s, 78).unwrap());
}

#[test]
fn resumed_checkpoint_matches_uninterrupted_run() {
    let m = BoseModel::disordered(4, 3.0, -1.0, 2.0, 3).unwrap();
    let s = QmcSchedule::new(40, 320, 32);
    let full = run_qmc(&m, &WormParams::default(), &s, 5).unwrap();
    let mut run = QmcRun::new(m, WormParams::default(), s, 5).unwrap();
    run.advance(170);
    let text = serde_json::to_string(&run).unwrap();
    let mut resumed: QmcRun = serde_json::from_str(&text).unwrap();
    resumed.validate_resumed().unwrap();
    assert_eq!(resumed.run_to_end().unwrap(), full);
}

#[test]
fn winding_estimator_is_non_negative() {
    let obs = run_qmc(
        &BoseModel::clean(4, 4.0, 0.0).unwrap(),
        &WormParams::default(),
        &QmcSchedule::new(100, 3_200, 32),
        6,
    )
    .unwrap();
    assert!(obs.rho_s.mean >= 0.0);
    assert!(obs.records.iter().all(|r| r.winding_sq >= 0.0));
}

#[test]
fn tuning_examples() {
    let opts = TuneOptions::new(0.01, QmcSchedule::new(200, 2_000, 32));
    // Half filling of the clean lattice sits at μ = 0.
    let clean = BoseModel::clean(4, 4.0, 0.0).unwrap();
    let r = tune_mu(&clean, &WormParams::default(), 0.5, &opts, 1).unwrap();
    assert_eq!(r.mu, 0.0);
    // Without hopping and with a common offset, n = 1/2 at μ = ε.
    let flat = BoseModel::with_offsets(2, 2.0, 0.0, vec![0.7; 4]).unwrap().with_hopping(0.0);
    let r = tune_mu(&flat, &WormParams::default(), 0.5, &TuneOptions::new(0.01, QmcSchedule::new(200, 20_000, 32)), 2)
        .unwrap();
    assert!((r.mu - 0.7).abs() < 0.1, "mu {}", r.mu);
    // A disordered low-density target.
    let mut m = BoseModel::disordered(8, 8.0, 0.0, 5.0, 9).unwrap();
    m.mu = initial_mu_guess(&m, 0.125);
    let r = tune_mu(&m, &WormParams::default(), 0.125, &TuneOptions::new(0.005, QmcSchedule::new(200, 1_000, 32)), 3)
        .unwrap();
    assert!((r.density.mean - 0.125).abs() < 0.005);
    eprintln!("tuned mu {} after {} runs", r.mu, r.history.len());
}
