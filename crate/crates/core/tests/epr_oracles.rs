mod common;

use common::{separated_joint, singlet_joint, CHI2_3_999};
use wavelab::epr::{
    analytic_chsh, correlation_e, joint_probability, sample_pairs, ChshSettings, EprModel, Outcome, PairOutcome,
};
use wavelab::rng::Philox4x32;

fn sign(o: Outcome) -> i32 {
    o.value()
}

#[test]
fn closed_forms_match_projection_and_sphere_average() {
    let mut rng = Philox4x32::new(11);
    for _ in 0..500 {
        let alpha = rng.uniform() * 2.0 * std::f64::consts::PI;
        let beta = rng.uniform() * 2.0 * std::f64::consts::PI;
        let zeta = alpha - beta;
        for pair in PairOutcome::ALL {
            let (ra, rb) = (sign(pair.r_a), sign(pair.r_b));
            let p1 = joint_probability(&EprModel::P1, pair.r_a, pair.r_b, zeta);
            let p2 = joint_probability(&EprModel::P2, pair.r_a, pair.r_b, zeta);
            assert!((p1 - singlet_joint(ra, rb, alpha, beta)).abs() < 1e-12);
            assert!((p2 - separated_joint(ra, rb, alpha, beta)).abs() < 1e-12);
        }
    }
}

#[test]
fn mixture_interpolates_linearly() {
    let mut rng = Philox4x32::new(12);
    for _ in 0..200 {
        let p = rng.uniform();
        let zeta = rng.uniform() * 6.0 - 3.0;
        let m = EprModel::Mixture { p_split: p };
        for pair in PairOutcome::ALL {
            let want = (1.0 - p) * joint_probability(&EprModel::P1, pair.r_a, pair.r_b, zeta)
                + p * joint_probability(&EprModel::P2, pair.r_a, pair.r_b, zeta);
            assert!((joint_probability(&m, pair.r_a, pair.r_b, zeta) - want).abs() < 1e-15);
        }
        let e = correlation_e(&m, zeta);
        assert!((e - (-(1.0 - p) - p / 3.0) * zeta.cos()).abs() < 1e-12);
    }
}

#[test]
fn sampled_frequencies_pass_chi_square() {
    let models = [EprModel::P1, EprModel::P2, EprModel::Mixture { p_split: 0.4 }];
    let zetas = [0.3, 1.1, 2.0, 2.9];
    let n = 200_000u64;
    for (mi, model) in models.iter().enumerate() {
        for (zi, &zeta) in zetas.iter().enumerate() {
            let rec = sample_pairs(model, zeta, n, 1000 + (mi * 10 + zi) as u64);
            let counts = rec.counts();
            let chi2: f64 = PairOutcome::ALL
                .iter()
                .zip(counts)
                .map(|(pair, c)| {
                    let e = n as f64 * joint_probability(model, pair.r_a, pair.r_b, zeta);
                    (c as f64 - e).powi(2) / e
                })
                .sum();
            assert!(chi2 < CHI2_3_999, "{model:?} zeta={zeta} chi2={chi2}");
            // Each side alone looks like a fair coin.
            let a_up = rec.marginal_a_up();
            assert!((a_up - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
        }
    }
}

#[test]
fn separated_law_never_exceeds_local_bound_on_coarse_grid() {
    let d = 3.0f64;
    let steps = (360.0 / d) as usize;
    let mut max_p2 = 0.0f64;
    let mut max_p1 = 0.0f64;
    for i in 0..steps {
        for j in 0..steps {
            for k in 0..steps {
                let s = ChshSettings {
                    a: 0.0,
                    a_prime: (i as f64 * d).to_radians(),
                    b: (j as f64 * d).to_radians(),
                    b_prime: (k as f64 * d).to_radians(),
                };
                max_p2 = max_p2.max(analytic_chsh(&EprModel::P2, &s));
                max_p1 = max_p1.max(analytic_chsh(&EprModel::P1, &s));
            }
        }
    }
    assert!(max_p2 <= 2.0);
    assert!((max_p2 - 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-9);
    assert!((max_p1 - 2.0 * 2f64.sqrt()).abs() < 1e-9);
}

#[test]
fn records_do_not_depend_on_thread_count() {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let n = 300_000;
    let a = one.install(|| sample_pairs(&EprModel::P1, 0.8, n, 5));
    let b = four.install(|| sample_pairs(&EprModel::P1, 0.8, n, 5));
    assert_eq!(a, b);
}
