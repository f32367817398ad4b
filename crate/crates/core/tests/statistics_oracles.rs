mod common;

use std::collections::HashMap;

use common::{canonical_distribution, canonical_occupancy, grand_canonical_occupancy, occupation_states};
use wavelab::rng::Philox4x32;
use wavelab::statistics::{
    propose_rates, simulate_balance, BalanceChain, Ensemble, ModeSpectrum, OccupationState, ParticleKind,
};

const KINDS: [ParticleKind; 2] = [ParticleKind::Bose, ParticleKind::Fermi];

fn ladder(n: usize, spacing: f64) -> Vec<f64> {
    (0..n).map(|i| i as f64 * spacing).collect()
}

#[test]
fn rates_satisfy_detailed_balance_on_every_edge() {
    let energies = [0.0, 0.4, 1.1, 1.9];
    let beta = 1.3;
    let spectrum = ModeSpectrum::new(energies.to_vec(), beta, 0.0).unwrap();
    for (kind, total) in [(ParticleKind::Bose, 3), (ParticleKind::Fermi, 2)] {
        let dist: HashMap<Vec<u32>, f64> = canonical_distribution(kind, &energies, beta, total)
            .into_iter()
            .collect();
        let mut edges = 0;
        for (s, &p) in &dist {
            let state = OccupationState::new(s.clone(), kind).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    if i == j || s[i] == 0 {
                        continue;
                    }
                    let forward = propose_rates(&state, i, j, &spectrum).unwrap();
                    let mut t = s.clone();
                    t[i] -= 1;
                    t[j] += 1;
                    match dist.get(&t) {
                        Some(&q) => {
                            let back_state = OccupationState::new(t.clone(), kind).unwrap();
                            let backward = propose_rates(&back_state, j, i, &spectrum).unwrap();
                            assert!((p * forward - q * backward).abs() < 1e-12 * (p * forward).max(1e-300));
                            edges += 1;
                        }
                        None => assert_eq!(forward, 0.0, "move into a forbidden state"),
                    }
                }
            }
        }
        assert!(edges > 10);
    }
}

fn visit_distribution(
    kind: ParticleKind,
    energies: &[f64],
    beta: f64,
    total: u64,
    steps: u64,
    seed: u64,
) -> HashMap<Vec<u32>, f64> {
    let spectrum = ModeSpectrum::new(energies.to_vec(), beta, 0.0).unwrap();
    let state = OccupationState::filled(energies.len(), total, kind).unwrap();
    let mut chain = BalanceChain::new(state, spectrum, Ensemble::Closed).unwrap();
    let mut rng = Philox4x32::new(seed);
    for _ in 0..10_000 {
        chain.step(&mut rng);
    }
    let mut visits: HashMap<Vec<u32>, u64> = HashMap::new();
    for _ in 0..steps {
        chain.step(&mut rng);
        *visits.entry(chain.state().occupations().to_vec()).or_default() += 1;
    }
    visits.into_iter().map(|(s, c)| (s, c as f64 / steps as f64)).collect()
}

#[test]
fn small_closed_chain_matches_enumerated_distribution() {
    let energies = [0.0, 0.7, 1.5];
    for kind in KINDS {
        let exact = canonical_distribution(kind, &energies, 1.0, 2);
        let seen = visit_distribution(kind, &energies, 1.0, 2, 1_000_000, 31);
        assert!(seen.keys().all(|s| exact.iter().any(|(t, _)| t == s)));
        let tv = 0.5
            * exact
                .iter()
                .map(|(s, p)| (p - seen.get(s).copied().unwrap_or(0.0)).abs())
                .sum::<f64>();
        assert!(tv < 0.01, "{kind:?} tv {tv}");
    }
}

#[test]
fn closed_ten_mode_chain_matches_canonical_enumeration() {
    let energies = ladder(10, 0.5);
    for (kind, total, seed) in [(ParticleKind::Bose, 10u32, 41), (ParticleKind::Fermi, 5, 42)] {
        let exact = canonical_occupancy(kind, &energies, 1.0, total);
        let spectrum = ModeSpectrum::new(energies.clone(), 1.0, 0.0).unwrap();
        let res = simulate_balance(
            &spectrum,
            kind,
            Ensemble::Closed,
            u64::from(total),
            4_000_000,
            100_000,
            seed,
        )
        .unwrap();
        assert!((res.mean_total - f64::from(total)).abs() < 1e-9);
        for (m, want) in res.modes.iter().zip(&exact) {
            let z = (m.mean_occupation - want) / m.stderr;
            assert!(
                z.abs() < 3.0,
                "{kind:?} mode {} mean {} exact {want} z {z}",
                m.mode_index,
                m.mean_occupation
            );
        }
    }
}

#[test]
fn reservoir_chain_reaches_grand_canonical_occupancy() {
    let energies = ladder(5, 0.5);
    for (kind, mu, seed) in [(ParticleKind::Bose, -0.3, 51), (ParticleKind::Fermi, 1.0, 52)] {
        let spectrum = ModeSpectrum::new(energies.clone(), 1.0, mu).unwrap();
        let res = simulate_balance(&spectrum, kind, Ensemble::Reservoir, 2, 2_000_000, 50_000, seed).unwrap();
        for m in &res.modes {
            let want = grand_canonical_occupancy(kind, 1.0, m.energy, mu);
            assert!(
                (m.mean_occupation - want).abs() < 3.0 * m.stderr,
                "{kind:?} {m:?} want {want}"
            );
        }
        let fitted = res.fitted_mu.unwrap();
        assert!((fitted - mu).abs() < 0.05, "{kind:?} fitted {fitted}");
    }
}

#[test]
fn fermi_exclusion_holds_for_a_million_steps() {
    let energies = ladder(8, 0.3);
    for ensemble in [Ensemble::Closed, Ensemble::Reservoir] {
        let spectrum = ModeSpectrum::new(energies.clone(), 0.7, 1.0).unwrap();
        let state = OccupationState::filled(8, 4, ParticleKind::Fermi).unwrap();
        let mut chain = BalanceChain::new(state, spectrum, ensemble).unwrap();
        let mut rng = Philox4x32::new(61);
        for _ in 0..1_000_000 {
            chain.step(&mut rng);
            assert!(chain.state().occupations().iter().all(|&n| n <= 1));
            assert_eq!(chain.state().total() as i64 + chain.reservoir_balance(), 4);
        }
    }
}

#[test]
fn enumeration_counts_are_binomial() {
    // C(M + N - 1, N) bose states, C(M, N) fermi states.
    assert_eq!(occupation_states(ParticleKind::Bose, 3, 2).len(), 6);
    assert_eq!(occupation_states(ParticleKind::Fermi, 3, 2).len(), 3);
    assert_eq!(occupation_states(ParticleKind::Bose, 10, 10).len(), 92_378);
    assert_eq!(occupation_states(ParticleKind::Fermi, 10, 5).len(), 252);
}
