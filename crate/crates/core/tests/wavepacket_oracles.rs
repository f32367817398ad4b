use num_complex::Complex64;
use proptest::prelude::*;
use wavelab::rng::Philox4x32;
use wavelab::wavepacket::{coalesce, heisenberg_product, make_gaussian, moments, split, Grid1D, Wavepacket};

/// One Gaussian term `c * exp(-(x - x0)^2 / (4 s^2) + i p x)`.
#[derive(Debug, Clone, Copy)]
struct Term {
    c: Complex64,
    x0: f64,
    s: f64,
    p: f64,
}

impl Term {
    fn value(&self, x: f64) -> Complex64 {
        let env = (-(x - self.x0).powi(2) / (4.0 * self.s * self.s)).exp();
        self.c * env * Complex64::from_polar(1.0, self.p * x)
    }

    fn derivative(&self, x: f64) -> Complex64 {
        self.value(x) * Complex64::new(-(x - self.x0) / (2.0 * self.s * self.s), self.p)
    }
}

/// Moments by direct quadrature with the analytic derivative:
/// <p> = Re integral conj(psi) (-i psi'), <p^2> = integral |psi'|^2.
fn oracle_moments(grid: &Grid1D, terms: &[Term]) -> (f64, f64, f64, f64) {
    let dx = grid.spacing();
    let (mut n, mut sx, mut sxx, mut sp, mut spp) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for x in grid.positions() {
        let psi: Complex64 = terms.iter().map(|t| t.value(x)).sum();
        let dpsi: Complex64 = terms.iter().map(|t| t.derivative(x)).sum();
        let w = psi.norm_sqr() * dx;
        n += w;
        sx += x * w;
        sxx += x * x * w;
        sp += (psi.conj() * Complex64::new(0.0, -1.0) * dpsi).re * dx;
        spp += dpsi.norm_sqr() * dx;
    }
    let mx = sx / n;
    let mp = sp / n;
    (mx, (sxx / n - mx * mx).sqrt(), mp, (spp / n - mp * mp).sqrt())
}

fn packet_from_terms(grid: Grid1D, terms: &[Term]) -> Wavepacket {
    let amps = grid
        .positions()
        .map(|x| terms.iter().map(|t| t.value(x)).sum())
        .collect();
    Wavepacket::from_amplitudes(grid, amps, 1.0, "electron").unwrap()
}

fn term_strategy() -> impl Strategy<Value = Term> {
    (-2.0..2.0f64, -2.0..2.0f64, -5.0..5.0f64, 0.3..2.0f64, -3.0..3.0f64).prop_map(|(re, im, x0, s, p)| Term {
        c: Complex64::new(re, im + 0.05),
        x0,
        s,
        p,
    })
}

fn grid() -> Grid1D {
    Grid1D::centered(1024, 0.05).unwrap()
}

#[test]
fn gaussian_moments_match_quadrature_oracle() {
    let grid = grid();
    for &(x0, s, p) in &[(0.0, 1.0, 0.0), (2.5, 0.7, 1.5), (-4.0, 1.8, -2.2)] {
        let wp = make_gaussian(grid, x0, p, s, 1.0, "electron").unwrap();
        let m = moments(&wp).unwrap();
        let t = Term {
            c: Complex64::new(1.0, 0.0),
            x0,
            s,
            p,
        };
        let (mx, dx, mp, dp) = oracle_moments(&grid, &[t]);
        assert!((m.mean_x - mx).abs() < 1e-9);
        assert!((m.delta_x - dx).abs() < 1e-9);
        assert!((m.mean_p - mp).abs() < 1e-9);
        assert!((m.delta_p - dp).abs() < 1e-9);
        // Closed form for a single Gaussian.
        assert!((m.delta_x - s).abs() < 1e-9);
        assert!((m.delta_p - 0.5 / s).abs() < 1e-9);
        assert!((m.mean_p - p).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn uncertainty_bound_holds_for_superpositions(terms in prop::collection::vec(term_strategy(), 1..5)) {
        let grid = grid();
        let wp = packet_from_terms(grid, &terms);
        let product = heisenberg_product(&wp).unwrap();
        prop_assert!(product >= 0.5 - 1e-6, "product {product}");

        let m = moments(&wp).unwrap();
        let (mx, dx, mp, dp) = oracle_moments(&grid, &terms);
        prop_assert!((m.mean_x - mx).abs() < 1e-8);
        prop_assert!((m.delta_x - dx).abs() < 1e-8);
        prop_assert!((m.mean_p - mp).abs() < 1e-8);
        prop_assert!((m.delta_p - dp).abs() < 1e-8);
    }

    #[test]
    fn gaussians_saturate_the_bound(x0 in -5.0..5.0f64, s in 0.3..2.0f64, p in -3.0..3.0f64) {
        let wp = make_gaussian(grid(), x0, p, s, 1.0, "electron").unwrap();
        let product = heisenberg_product(&wp).unwrap();
        prop_assert!((product - 0.5).abs() < 1e-6, "product {product}");
    }

    #[test]
    fn split_conserves_quanta(quanta in 1u32..40, parts in 1usize..40) {
        let wp = make_gaussian(grid(), 0.0, 0.0, 1.0, 1.0, "photon").unwrap().with_quanta(quanta).unwrap();
        match split(&wp, parts) {
            Ok(pieces) => {
                prop_assert!(parts <= quanta as usize);
                prop_assert_eq!(pieces.len(), parts);
                prop_assert_eq!(pieces.iter().map(|p| p.quanta()).sum::<u32>(), quanta);
                let max = pieces.iter().map(|p| p.quanta()).max().unwrap();
                let min = pieces.iter().map(|p| p.quanta()).min().unwrap();
                prop_assert!(max - min <= 1);
                prop_assert!(pieces.windows(2).all(|w| w[0].quanta() >= w[1].quanta()));
            }
            Err(_) => prop_assert!(parts > quanta as usize),
        }
    }
}

#[test]
fn ten_thousand_random_operations_conserve_quanta() {
    let grid = Grid1D::centered(64, 0.25).unwrap();
    let seed = make_gaussian(grid, 0.0, 0.0, 1.0, 1.0, "photon").unwrap();
    let mut pool: Vec<Wavepacket> = (0..8).map(|_| seed.clone()).collect();
    let total: u64 = 8;
    let mut rng = Philox4x32::new(0x9a7a);
    let (mut merges, mut splits) = (0, 0);
    for _ in 0..10_000 {
        let want_merge = pool.len() > 1 && (rng.bernoulli(0.5) || pool.iter().all(|p| p.quanta() == 1));
        if want_merge {
            let k = 2 + rng.below(pool.len().min(3) - 1);
            let mut picked = Vec::with_capacity(k);
            for _ in 0..k {
                picked.push(pool.swap_remove(rng.below(pool.len())));
            }
            pool.push(coalesce(&picked).unwrap());
            merges += 1;
        } else {
            let candidates: Vec<usize> = (0..pool.len()).filter(|&i| pool[i].quanta() > 1).collect();
            let i = candidates[rng.below(candidates.len())];
            let wp = pool.swap_remove(i);
            let parts = 2 + rng.below(wp.quanta() as usize - 1);
            pool.extend(split(&wp, parts).unwrap());
            splits += 1;
        }
        assert_eq!(pool.iter().map(|p| u64::from(p.quanta())).sum::<u64>(), total);
    }
    assert!(merges > 1000 && splits > 1000);
}
