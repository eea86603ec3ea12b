use toricloc::qmc::{run_qmc, BoseModel, QmcSchedule, WormParams};
use toricloc_testkit::HardCoreBosonsEd;

fn compare(model: &BoseModel, sweeps: usize, seed: u64) {
    let ed = HardCoreBosonsEd::new(model.size, model.hopping, model.mu, &model.offsets);
    let obs = run_qmc(model, &WormParams::default(), &QmcSchedule::new(2_000, sweeps, 64), seed).unwrap();
    let (e, n) = (ed.energy(model.beta), ed.density(model.beta));
    eprintln!(
        "L={} beta={} mu={}: E {:.5} +- {:.5} (exact {e:.5}), n {:.5} +- {:.5} (exact {n:.5}), W2 {:.4}, closed {:.3}",
        model.size, model.beta, model.mu, obs.energy.mean, obs.energy.stderr, obs.density.mean, obs.density.stderr,
        obs.winding_sq.mean, obs.acceptance.closed_fraction
    );
    assert!(obs.energy.sigmas_from(e) < 4.0, "energy {obs:?} vs {e}");
    assert!(obs.density.sigmas_from(n) < 4.0, "density {obs:?} vs {n}");
}

#[test]
fn clean_two_by_two() {
    compare(&BoseModel::clean(2, 2.0, 0.0).unwrap(), 100_000, 1);
}

#[test]
fn disordered_two_by_two_off_half_filling() {
    compare(&BoseModel::disordered(2, 1.5, -0.7, 2.0, 4).unwrap(), 100_000, 2);
}

#[test]
fn disordered_three_by_three() {
    compare(&BoseModel::disordered(3, 2.0, 0.4, 1.0, 7).unwrap(), 50_000, 3);
}
