//! Independent reference computations shared by the integration suites.

#![allow(dead_code)]

use std::f64::consts::PI;

use wavelab::spin::SgCounts;
use wavelab::statistics::ParticleKind;

/// 99.9% chi-square quantiles.
pub const CHI2_3_999: f64 = 16.266_236_196_238_13;
pub const CHI2_49_999: f64 = 85.350_564_608_593_05;

/// Spin-1/2 eigenvector of the axis at `angle` from z in the x-z plane.
fn spinor(r: i32, angle: f64) -> [f64; 2] {
    let (s, c) = (angle / 2.0).sin_cos();
    if r > 0 {
        [c, s]
    } else {
        [-s, c]
    }
}

/// Joint probability for the singlet state by direct projection.
pub fn singlet_joint(r_a: i32, r_b: i32, angle_a: f64, angle_b: f64) -> f64 {
    let u = spinor(r_a, angle_a);
    let v = spinor(r_b, angle_b);
    let amp = (u[0] * v[1] - u[1] * v[0]) / 2f64.sqrt();
    amp * amp
}

/// Joint probability for two independent spins pointing along n and -n,
/// with n uniform on the sphere. The integrand is a quadratic polynomial in
/// n, so 3-point Gauss-Legendre in cos(theta) and 6 equal steps in phi are
/// exact.
pub fn separated_joint(r_a: i32, r_b: i32, angle_a: f64, angle_b: f64) -> f64 {
    let a = [angle_a.sin(), 0.0, angle_a.cos()];
    let b = [angle_b.sin(), 0.0, angle_b.cos()];
    let nodes = [
        (-(0.6f64).sqrt(), 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        ((0.6f64).sqrt(), 5.0 / 9.0),
    ];
    let steps = 6;
    let mut total = 0.0;
    for &(mu, w) in &nodes {
        let st = (1.0 - mu * mu).sqrt();
        for k in 0..steps {
            let phi = 2.0 * PI * k as f64 / steps as f64;
            let n = [st * phi.cos(), st * phi.sin(), mu];
            let an: f64 = a.iter().zip(&n).map(|(x, y)| x * y).sum();
            let bn: f64 = b.iter().zip(&n).map(|(x, y)| x * y).sum();
            let pa = 0.5 * (1.0 + f64::from(r_a) * an);
            let pb = 0.5 * (1.0 - f64::from(r_b) * bn);
            total += w * pa * pb / steps as f64;
        }
    }
    // weights integrate d(cos theta) over [-1, 1] (total 2)
    total / 2.0
}

/// Width of a Gaussian released at rest in a harmonic well.
pub fn breathing_width(s0: f64, mass: f64, omega: f64, t: f64) -> f64 {
    let (s, c) = (omega * t).sin_cos();
    (s0 * s0 * c * c + s * s / (4.0 * mass * mass * omega * omega * s0 * s0)).sqrt()
}

/// Free Gaussian width by direct propagation of the variance:
/// var(t) = var(0) + (delta_p t / m)^2 for a packet with no x-p correlation.
pub fn free_width(s0: f64, mass: f64, t: f64) -> f64 {
    let dp = 0.5 / s0;
    (s0 * s0 + (dp * t / mass).powi(2)).sqrt()
}

/// Every occupation vector of `modes` modes holding `total` quanta.
pub fn occupation_states(kind: ParticleKind, modes: usize, total: u32) -> Vec<Vec<u32>> {
    fn rec(kind: ParticleKind, left: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 1 {
            if kind == ParticleKind::Bose || total <= 1 {
                prefix.push(total);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        let cap = if kind == ParticleKind::Fermi {
            total.min(1)
        } else {
            total
        };
        for n in 0..=cap {
            prefix.push(n);
            rec(kind, left - 1, total - n, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(kind, modes, total, &mut Vec::new(), &mut out);
    out
}

/// Canonical distribution `exp(-beta E)` over occupation states.
pub fn canonical_distribution(kind: ParticleKind, energies: &[f64], beta: f64, total: u32) -> Vec<(Vec<u32>, f64)> {
    let states = occupation_states(kind, energies.len(), total);
    let weights: Vec<f64> = states
        .iter()
        .map(|s| {
            let e: f64 = s.iter().zip(energies).map(|(&n, e)| f64::from(n) * e).sum();
            (-beta * e).exp()
        })
        .collect();
    let z: f64 = weights.iter().sum();
    states.into_iter().zip(weights).map(|(s, w)| (s, w / z)).collect()
}

pub fn canonical_occupancy(kind: ParticleKind, energies: &[f64], beta: f64, total: u32) -> Vec<f64> {
    let mut mean = vec![0.0; energies.len()];
    for (s, p) in canonical_distribution(kind, energies, beta, total) {
        for (m, &n) in mean.iter_mut().zip(&s) {
            *m += p * f64::from(n);
        }
    }
    mean
}

/// Grand-canonical mean occupancy by summing the geometric (bose) or
/// two-term (fermi) series directly.
pub fn grand_canonical_occupancy(kind: ParticleKind, beta: f64, energy: f64, mu: f64) -> f64 {
    let q = (-beta * (energy - mu)).exp();
    match kind {
        ParticleKind::Fermi => q / (1.0 + q),
        ParticleKind::Bose => {
            let (mut z, mut n_sum, mut term) = (0.0, 0.0, 1.0);
            for n in 0..20_000 {
                z += term;
                n_sum += n as f64 * term;
                term *= q;
                if term < 1e-18 * z {
                    break;
                }
            }
            n_sum / z
        }
    }
}

pub fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

pub fn angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    d.clamp(-1.0, 1.0).acos()
}

pub fn log_likelihood(counts: &[SgCounts], n: [f64; 3]) -> f64 {
    counts
        .iter()
        .map(|c| {
            let a = c.axis.to_vector();
            let cos: f64 = a.iter().zip(&n).map(|(x, y)| x * y).sum();
            let up = (0.5 * (1.0 + cos)).max(1e-300);
            let down = (0.5 * (1.0 - cos)).max(1e-300);
            c.n_up as f64 * up.ln() + c.n_down as f64 * down.ln()
        })
        .sum()
}

/// Exhaustive maximum-likelihood search over a grid of `step_deg` in theta
/// and phi. Returns (theta, phi) in radians.
pub fn grid_search_mle(counts: &[SgCounts], step_deg: f64) -> (f64, f64) {
    let n_theta = (180.0 / step_deg).round() as usize;
    let n_phi = (360.0 / step_deg).round() as usize;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=n_theta {
        let theta = (i as f64 * step_deg).to_radians();
        for j in 0..n_phi {
            let phi = (j as f64 * step_deg).to_radians();
            let ll = log_likelihood(counts, unit_vector(theta, phi));
            if ll > best.0 {
                best = (ll, theta, phi);
            }
        }
    }
    (best.1, best.2)
}
