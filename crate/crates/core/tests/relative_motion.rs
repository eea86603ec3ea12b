use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use toricloc::geometry::LatticeGeometry;
use toricloc::relative_motion::{ballistic_escape_probe, build_fiber, nearest_neighbor_templates, PREFACTOR};

fn templates() -> (LatticeGeometry, Vec<toricloc::pauli::PerturbationTerm>) {
    let g = LatticeGeometry::torus(16).unwrap();
    let t = nearest_neighbor_templates(&g, 1.0);
    (g, t)
}

#[test]
fn plane_wave_residual_in_inner_half_box() {
    let (g, t) = templates();
    for k in [[0.0, 0.0], [0.7, -1.9]] {
        let f = build_fiber(k, &t, &g, 20).unwrap();
        let q = [0.9, 2.3];
        let psi: Vec<Complex64> = (0..f.dim())
            .map(|i| {
                let l = f.coordinate(i);
                Complex64::from_polar(1.0, q[0] * l[0] as f64 + q[1] * l[1] as f64)
            })
            .collect();
        let tpsi = f.homogeneous_matrix().apply(&psi);
        let e = f.dispersion(q);
        let mut res = 0.0;
        for i in 0..f.dim() {
            let l = f.coordinate(i);
            if l[0].abs() <= 10 && l[1].abs() <= 10 {
                res += (tpsi[i] - e * psi[i]).norm_sqr();
            }
        }
        assert!(res.sqrt() < 1e-10, "{}", res.sqrt());
        assert!(e.norm() > 1e-3 * PREFACTOR);
    }
}

#[test]
fn hermitian_and_finite_range() {
    let (g, t) = templates();
    let f = build_fiber([0.4, 1.1], &t, &g, 12).unwrap().with_random_interaction(3.0, 1.0, 2).unwrap();
    assert!(f.matrix().hermiticity_defect() < 1e-12);
    for (r, c, _) in f.matrix().triplets() {
        let (a, b) = (f.coordinate(r), f.coordinate(c));
        assert!((a[0] - b[0]).abs().max((a[1] - b[1]).abs()) <= 2);
    }
}

fn dense_real(f: &toricloc::relative_motion::FiberHamiltonian) -> DMatrix<f64> {
    let n = f.dim();
    let mut m = DMatrix::zeros(n, n);
    for (r, c, v) in f.matrix().triplets() {
        assert!(v.im.abs() < 1e-18);
        m[(r, c)] = v.re;
    }
    m
}

#[test]
fn free_packet_escape_matches_eigendecomposition() {
    let (g, t) = templates();
    let f = build_fiber([0.0, 0.0], &t, &g, 20).unwrap();
    let psi0 = f.gaussian_packet(1.5, [1.2, 1.9]);
    let region = f.central_block(2);
    let tr = f.reflection_time(6.0);
    let times: Vec<f64> = (1..=8).map(|i| tr * i as f64 / 8.0).collect();
    let report = ballistic_escape_probe(&f, &psi0, &times, &region, 6.0, 0.05).unwrap();
    let eig = dense_real(&f).symmetric_eigen();
    let re = DVector::from_iterator(f.dim(), psi0.iter().map(|a| a.re));
    let im = DVector::from_iterator(f.dim(), psi0.iter().map(|a| a.im));
    let (cr, ci) = (eig.eigenvectors.transpose() * &re, eig.eigenvectors.transpose() * &im);
    for (&time, &got) in times.iter().zip(&report.in_region) {
        let mut a = DVector::<Complex64>::zeros(f.dim());
        for k in 0..f.dim() {
            let ph = Complex64::from_polar(1.0, -eig.eigenvalues[k] * time);
            a[k] = ph * Complex64::new(cr[k], ci[k]);
        }
        let psi: Vec<Complex64> = (0..f.dim())
            .map(|i| (0..f.dim()).map(|k| a[k] * eig.eigenvectors[(i, k)]).sum())
            .collect();
        let want: f64 = region.iter().map(|&i| psi[i].norm_sqr()).sum();
        assert!((got - want).abs() < 1e-8, "t={time}: {got} vs {want}");
    }
    assert!(!report.contaminated);
    let whole: Vec<usize> = (0..f.dim()).collect();
    let all = ballistic_escape_probe(&f, &psi0, &times, &whole, 6.0, 0.05).unwrap();
    assert!(all.in_region.iter().all(|p| (p - 1.0).abs() < 1e-10));
}

#[test]
fn bulk_spectrum_is_stable_in_box_size() {
    let (g, t) = templates();
    let spectrum = |radius: usize| {
        let f = build_fiber([0.0, 0.0], &t, &g, radius).unwrap().with_random_interaction(4.0, 1.0, 17).unwrap();
        let mut e: Vec<f64> = dense_real(&f).symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    };
    let (a, b) = (spectrum(30), spectrum(40));
    let quantile = |e: &[f64], p: f64| e[(p * (e.len() - 1) as f64).round() as usize];
    let mut worst = 0.0f64;
    for i in 0..=50 {
        let p = 0.25 + 0.5 * i as f64 / 50.0;
        worst = worst.max((quantile(&a, p) - quantile(&b, p)).abs());
    }
    assert!(worst < 1e-3, "{worst:e}");
}
