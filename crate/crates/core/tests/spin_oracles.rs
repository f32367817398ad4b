mod common;

use common::{angle, grid_search_mle, log_likelihood, unit_vector};
use wavelab::rng::derive_seed;
use wavelab::spin::{estimate_direction, simulate_sg, up_probability, ApparatusAxis, SgCounts, SpinDirection};

fn xyz() -> [ApparatusAxis; 3] {
    [ApparatusAxis::x(), ApparatusAxis::y(), ApparatusAxis::z()]
}

fn measure(spin: &SpinDirection, axes: &[ApparatusAxis], shots: u64, seed: u64) -> Vec<SgCounts> {
    axes.iter()
        .enumerate()
        .map(|(k, a)| simulate_sg(spin, a, shots, derive_seed(seed, "axis", k as u64)))
        .collect()
}

#[test]
fn newton_estimate_agrees_with_exhaustive_grid_search() {
    let cases = [(63.0, 117.0, 1), (20.0, 300.0, 2), (150.0, 45.0, 3), (95.0, 200.0, 4)];
    for (theta, phi, seed) in cases {
        let spin = SpinDirection::from_degrees(theta, phi).unwrap();
        let counts = measure(&spin, &xyz(), 20_000, seed);
        let est = estimate_direction(&counts).unwrap();
        let (gt, gp) = grid_search_mle(&counts, 0.5);
        let gap = angle(est.direction.to_vector(), unit_vector(gt, gp));
        assert!(gap.to_degrees() < 0.5, "({theta},{phi}) gap {}", gap.to_degrees());
        let oracle_ll = log_likelihood(&counts, est.direction.to_vector());
        assert!((oracle_ll - est.log_likelihood).abs() < 1e-6 * oracle_ll.abs());
        assert!(est.log_likelihood >= log_likelihood(&counts, unit_vector(gt, gp)) - 1e-9);
    }
}

#[test]
fn estimator_error_shrinks_as_inverse_square_root() {
    let spin = SpinDirection::from_degrees(63.0, 117.0).unwrap();
    let shots = [1_000u64, 10_000, 100_000];
    let replicates = 40;
    let mean_err: Vec<f64> = shots
        .iter()
        .map(|&n| {
            (0..replicates)
                .map(|r| {
                    let counts = measure(&spin, &xyz(), n, 7_000 + r);
                    let est = estimate_direction(&counts).unwrap();
                    angle(est.direction.to_vector(), spin.to_vector())
                })
                .sum::<f64>()
                / replicates as f64
        })
        .collect();
    // Least-squares slope of log(error) against log(shots).
    let xs: Vec<f64> = shots.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = mean_err.iter().map(|e| e.ln()).collect();
    let xm = xs.iter().sum::<f64>() / 3.0;
    let ym = ys.iter().sum::<f64>() / 3.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum::<f64>()
        / xs.iter().map(|x| (x - xm).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}, errors {mean_err:?}");
}

#[test]
fn frequencies_match_up_probability() {
    let spin = SpinDirection::from_degrees(70.0, 10.0).unwrap();
    for axis in xyz() {
        let n = 400_000;
        let c = simulate_sg(&spin, &axis, n, 99);
        let p = up_probability(&spin, &axis);
        let cos: f64 = spin.to_vector().iter().zip(axis.to_vector()).map(|(a, b)| a * b).sum();
        assert!((p - 0.5 * (1.0 + cos)).abs() < 1e-15);
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((c.n_up as f64 / n as f64 - p).abs() < 4.0 * sd);
    }
}

#[test]
fn overdetermined_axes_also_work() {
    let spin = SpinDirection::from_degrees(33.0, 250.0).unwrap();
    let axes = [
        ApparatusAxis::from_degrees(90.0, 0.0).unwrap(),
        ApparatusAxis::from_degrees(90.0, 60.0).unwrap(),
        ApparatusAxis::from_degrees(90.0, 120.0).unwrap(),
        ApparatusAxis::from_degrees(30.0, 0.0).unwrap(),
        ApparatusAxis::from_degrees(0.0, 0.0).unwrap(),
    ];
    let counts = measure(&spin, &axes, 50_000, 17);
    let est = estimate_direction(&counts).unwrap();
    assert!(angle(est.direction.to_vector(), spin.to_vector()) < est.cone_halfangle_95 * 1.5);
    let (gt, gp) = grid_search_mle(&counts, 0.5);
    assert!(angle(est.direction.to_vector(), unit_vector(gt, gp)).to_degrees() < 0.5);
}
