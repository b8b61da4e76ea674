use paramfp::oracle::{
    fd_solve, fd_solve_snapshots, gibbs_density, sde_simulate, stability_bound, wasserstein1_1d, GridDensity,
    InitialLaw, Law1D,
};
use paramfp::Potential;

fn ou() -> Potential {
    Potential::quadratic_1d(1.0, 0.0, 1.0).unwrap()
}

#[test]
fn fd_ou_variance_matches_closed_form() {
    let rho0 = GridDensity::gaussian(10.0, 4001, 0.0, 2.0).unwrap();
    let v = ou();
    let dt = 0.9 * stability_bound(&rho0, &v);
    let rho = fd_solve(&rho0, &v, dt, 1.0).unwrap();
    let exact = 1.0 + 3.0 * (-2.0f64).exp();
    assert!((rho.variance() - exact).abs() < 1e-3, "variance {}", rho.variance());
    assert!(rho.mean().abs() < 1e-9);
    assert!((rho.mass() - 1.0).abs() < 1e-10);
}

#[test]
fn fd_double_well_reaches_gibbs() {
    let v = Potential::double_well(0.25).unwrap();
    let rho0 = GridDensity::gaussian(3.0, 2001, 0.0, 1.0).unwrap();
    let dt = 0.9 * stability_bound(&rho0, &v);
    let rho = fd_solve(&rho0, &v, dt, 5.0).unwrap();
    let gibbs = gibbs_density(&v, 3.0, 2001).unwrap();
    let w1 = wasserstein1_1d(&Law1D::Grid(rho), &Law1D::Grid(gibbs)).unwrap();
    assert!(w1 <= 0.02, "W1 {w1}");
}

#[test]
fn fd_snapshots_agree_with_direct_solves() {
    let v = Potential::double_well(0.25).unwrap();
    let rho0 = GridDensity::gaussian(3.0, 401, 0.0, 1.0).unwrap();
    let dt = 0.5 * stability_bound(&rho0, &v);
    let snaps = fd_solve_snapshots(&rho0, &v, dt, &[0.0, 0.1, 0.3]).unwrap();
    assert_eq!(snaps[0], rho0);
    let direct = fd_solve(&rho0, &v, dt, 0.1).unwrap();
    let w1 = wasserstein1_1d(&Law1D::Grid(direct), &Law1D::Grid(snaps[1].clone())).unwrap();
    assert!(w1 < 1e-4);
    assert!(fd_solve_snapshots(&rho0, &v, dt, &[0.3, 0.1]).is_err());
}

#[test]
fn sde_ou_moments() {
    let xs = sde_simulate(100_000, &ou(), &InitialLaw::normal_1d(1.0, 2.0), 1e-3, 1.0, 17)
        .unwrap()
        .into_points();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    // standard errors ≈ 0.004 (mean) and 0.006 (variance)
    assert!((mean - (-1.0f64).exp()).abs() < 0.02, "mean {mean}");
    assert!((var - (1.0 + 3.0 * (-2.0f64).exp())).abs() < 0.03, "var {var}");
}

#[test]
fn sde_and_fd_agree_on_ou() {
    let v = ou();
    let rho0 = GridDensity::gaussian(8.0, 3201, 0.0, 2.0).unwrap();
    let rho = fd_solve(&rho0, &v, 0.9 * stability_bound(&rho0, &v), 0.5).unwrap();
    let xs = sde_simulate(50_000, &v, &InitialLaw::normal_1d(0.0, 2.0), 1e-3, 0.5, 5).unwrap();
    let w1 = wasserstein1_1d(&Law1D::Grid(rho), &Law1D::Samples(xs.into_points())).unwrap();
    assert!(w1 < 0.03, "W1 {w1}");
}

#[test]
fn gibbs_of_quadratic_is_gaussian() {
    let g = gibbs_density(&Potential::quadratic_1d(1.0, 0.5, 0.5).unwrap(), 8.0, 3201).unwrap();
    let reference = GridDensity::gaussian(8.0, 3201, 0.5, 0.5f64.sqrt()).unwrap();
    let dev = g.values().iter().zip(reference.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-10, "max deviation {dev}");
}

#[test]
fn w1_of_translated_grid_gaussians() {
    for m in [0.25, 1.0, -1.5] {
        let a = GridDensity::gaussian(10.0, 4001, 0.0, 1.0).unwrap();
        let b = GridDensity::gaussian(10.0, 4001, m, 1.0).unwrap();
        let w = wasserstein1_1d(&Law1D::Grid(a), &Law1D::Grid(b)).unwrap();
        assert!((w - f64::abs(m)).abs() < 1e-6, "m = {m}: {w}");
    }
}
