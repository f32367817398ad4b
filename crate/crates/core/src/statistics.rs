//! Bose-Einstein and Fermi-Dirac occupancies from single-quantum balance
//! moves.
//!
//! A quantum moves from mode i to mode j at the rate
//!
//! ```text
//! bose:   n_i (1 + n_j) exp(-beta max(0, e_j - e_i))
//! fermi:  n_i (1 - n_j) exp(-beta max(0, e_j - e_i))
//! ```
//!
//! which satisfies detailed balance with respect to `exp(-beta E)` over
//! occupation-number states. Every move conserves the number of quanta.
//!
//! Two ensembles are available. [`Ensemble::Closed`] keeps the total number
//! of quanta in the listed modes fixed (canonical). [`Ensemble::Reservoir`]
//! additionally exchanges single quanta with a reservoir at the spectrum's
//! chemical potential; quanta are still conserved over modes plus reservoir,
//! and each mode then follows the grand-canonical closed forms exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Philox4x32;

/// Number of batches used for batch-means standard errors.
pub const BATCHES: usize = 50;
/// Absolute tolerance of the chemical-potential bisection.
pub const MU_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticleKind {
    Bose,
    Fermi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    Closed,
    Reservoir,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub energies: Vec<f64>,
    pub beta: f64,
    /// Chemical potential of the reservoir; unused by closed chains.
    pub chemical_potential: f64,
}

impl ModeSpectrum {
    pub fn new(energies: Vec<f64>, beta: f64, chemical_potential: f64) -> Result<Self> {
        let s = Self {
            energies,
            beta,
            chemical_potential,
        };
        if s.energies.is_empty() || s.energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter("energies must be finite and non-empty".into()));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
        }
        if !chemical_potential.is_finite() {
            return Err(Error::InvalidParameter("chemical potential must be finite".into()));
        }
        Ok(s)
    }

    /// `n` modes at energies `0, spacing, 2 spacing, ...`.
    pub fn equally_spaced(n: usize, spacing: f64, beta: f64, chemical_potential: f64) -> Result<Self> {
        Self::new((0..n).map(|k| k as f64 * spacing).collect(), beta, chemical_potential)
    }

    pub fn n_modes(&self) -> usize {
        self.energies.len()
    }

    fn min_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Bose occupancies are finite only below the lowest mode.
    pub fn check_reservoir(&self, kind: ParticleKind) -> Result<()> {
        if kind == ParticleKind::Bose && self.chemical_potential >= self.min_energy() {
            return Err(Error::DivergentOccupancy {
                energy: self.min_energy(),
                mu: self.chemical_potential,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupationState {
    occupations: Vec<u32>,
    kind: ParticleKind,
}

impl OccupationState {
    pub fn new(occupations: Vec<u32>, kind: ParticleKind) -> Result<Self> {
        if kind == ParticleKind::Fermi && occupations.iter().any(|&n| n > 1) {
            return Err(Error::InvalidParameter("fermion occupations must be 0 or 1".into()));
        }
        Ok(Self { occupations, kind })
    }

    /// `total` quanta placed in the lowest modes: one per mode for fermions,
    /// round-robin for bosons.
    pub fn filled(n_modes: usize, total: u64, kind: ParticleKind) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter("no modes".into()));
        }
        if kind == ParticleKind::Fermi && total > n_modes as u64 {
            return Err(Error::Overfilled {
                quanta: total,
                modes: n_modes,
            });
        }
        let mut occ = vec![0u32; n_modes];
        for q in 0..total {
            occ[(q % n_modes as u64) as usize] += 1;
        }
        Self::new(occ, kind)
    }

    pub fn occupations(&self) -> &[u32] {
        &self.occupations
    }

    pub fn kind(&self) -> ParticleKind {
        self.kind
    }

    pub fn total(&self) -> u64 {
        self.occupations.iter().map(|&n| u64::from(n)).sum()
    }

    pub fn energy(&self, spectrum: &ModeSpectrum) -> f64 {
        self.occupations
            .iter()
            .zip(&spectrum.energies)
            .map(|(&n, e)| f64::from(n) * e)
            .sum()
    }
}

fn boltzmann_factor(beta: f64, e_from: f64, e_to: f64) -> f64 {
    (-beta * (e_to - e_from).max(0.0)).exp()
}

/// Rate for one quantum moving from `mode_from` to `mode_to`.
pub fn propose_rates(
    state: &OccupationState,
    mode_from: usize,
    mode_to: usize,
    spectrum: &ModeSpectrum,
) -> Result<f64> {
    let n = state.occupations.len();
    if mode_from >= n || mode_to >= n || spectrum.n_modes() != n {
        return Err(Error::InvalidParameter("mode index out of range".into()));
    }
    if mode_from == mode_to {
        return Err(Error::InvalidParameter("source and target mode coincide".into()));
    }
    let n_from = f64::from(state.occupations[mode_from]);
    if n_from == 0.0 {
        return Err(Error::EmptySource { mode: mode_from });
    }
    let n_to = f64::from(state.occupations[mode_to]);
    let occupancy_factor = match state.kind {
        ParticleKind::Bose => 1.0 + n_to,
        ParticleKind::Fermi => (1.0 - n_to).max(0.0),
    };
    Ok(n_from
        * occupancy_factor
        * boltzmann_factor(spectrum.beta, spectrum.energies[mode_from], spectrum.energies[mode_to]))
}

/// Grand-canonical occupancy `1 / (exp(beta (e - mu)) -+ 1)`.
pub fn analytic_occupancy(kind: ParticleKind, beta: f64, energy: f64, mu: f64) -> Result<f64> {
    let x = beta * (energy - mu);
    match kind {
        ParticleKind::Bose => {
            if !(energy > mu) {
                return Err(Error::DivergentOccupancy { energy, mu });
            }
            Ok(1.0 / x.exp_m1())
        }
        ParticleKind::Fermi => Ok(1.0 / (x.exp() + 1.0)),
    }
}

fn analytic_total(kind: ParticleKind, beta: f64, energies: &[f64], mu: f64) -> f64 {
    energies
        .iter()
        .map(|&e| analytic_occupancy(kind, beta, e, mu).unwrap_or(f64::INFINITY))
        .sum()
}

/// Chemical potential whose grand-canonical total occupancy equals `target`,
/// by bisection to [`MU_TOLERANCE`].
pub fn fit_chemical_potential(kind: ParticleKind, beta: f64, energies: &[f64], target: f64) -> Result<f64> {
    let m = energies.len() as f64;
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let e_max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let valid = match kind {
        ParticleKind::Bose => target > 0.0,
        ParticleKind::Fermi => target > 0.0 && target < m,
    };
    if !valid || energies.is_empty() || !target.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "no chemical potential yields a total of {target}"
        )));
    }
    let width = 1.0 / beta;
    let (mut lo, mut hi) = match kind {
        ParticleKind::Bose => (e_min - width, e_min),
        ParticleKind::Fermi => (e_min - width, e_max + width),
    };
    while analytic_total(kind, beta, energies, lo) > target {
        lo -= (hi - lo).max(width);
    }
    if kind == ParticleKind::Fermi {
        while analytic_total(kind, beta, energies, hi) < target {
            hi += (hi - lo).max(width);
        }
    }
    while hi - lo > MU_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if analytic_total(kind, beta, energies, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Markov chain over occupation states driven by single-quantum moves.
#[derive(Debug, Clone)]
pub struct BalanceChain {
    state: OccupationState,
    spectrum: ModeSpectrum,
    ensemble: Ensemble,
    reservoir: i64,
    ledger: i64,
}

impl BalanceChain {
    pub fn new(state: OccupationState, spectrum: ModeSpectrum, ensemble: Ensemble) -> Result<Self> {
        if state.occupations.len() != spectrum.n_modes() {
            return Err(Error::InvalidParameter("state and spectrum disagree on modes".into()));
        }
        if ensemble == Ensemble::Reservoir {
            spectrum.check_reservoir(state.kind)?;
        }
        let ledger = state.total() as i64;
        Ok(Self {
            state,
            spectrum,
            ensemble,
            reservoir: 0,
            ledger,
        })
    }

    pub fn state(&self) -> &OccupationState {
        &self.state
    }

    /// Net quanta handed to the reservoir; modes plus reservoir is constant.
    pub fn reservoir_balance(&self) -> i64 {
        self.reservoir
    }

    fn transfer(&mut self, rng: &mut Philox4x32) {
        let total = self.state.total();
        let m = self.state.occupations.len();
        if total == 0 || m < 2 {
            return;
        }
        // source picked with probability n_i / N (a random quantum)
        let mut pick = rng.below(total as usize) as u64;
        let mut from = 0;
        for (i, &n) in self.state.occupations.iter().enumerate() {
            if pick < u64::from(n) {
                from = i;
                break;
            }
            pick -= u64::from(n);
        }
        let mut to = rng.below(m - 1);
        if to >= from {
            to += 1;
        }
        let n_to = f64::from(self.state.occupations[to]);
        let boltz = boltzmann_factor(
            self.spectrum.beta,
            self.spectrum.energies[from],
            self.spectrum.energies[to],
        );
        // acceptance = rate / (n_from * C) with C independent of the move
        let accept = match self.state.kind {
            ParticleKind::Bose => (1.0 + n_to) / (1.0 + total as f64) * boltz,
            ParticleKind::Fermi => (1.0 - n_to).max(0.0) * boltz,
        };
        if rng.uniform() < accept {
            self.state.occupations[from] -= 1;
            self.state.occupations[to] += 1;
        }
    }

    fn exchange(&mut self, rng: &mut Philox4x32) {
        let m = self.state.occupations.len();
        let i = rng.below(m);
        let into_mode = rng.uniform() < 0.5;
        let x = self.spectrum.beta * (self.spectrum.energies[i] - self.spectrum.chemical_potential);
        let n = self.state.occupations[i];
        if into_mode {
            if self.state.kind == ParticleKind::Fermi && n >= 1 {
                return;
            }
            if rng.uniform() < (-x).exp().min(1.0) {
                self.state.occupations[i] += 1;
                self.reservoir -= 1;
            }
        } else {
            if n == 0 {
                return;
            }
            if rng.uniform() < x.exp().min(1.0) {
                self.state.occupations[i] -= 1;
                self.reservoir += 1;
            }
        }
    }

    /// One proposal (accepted or not).
    pub fn step(&mut self, rng: &mut Philox4x32) {
        match self.ensemble {
            Ensemble::Closed => self.transfer(rng),
            Ensemble::Reservoir => {
                if rng.uniform() < 0.5 {
                    self.transfer(rng)
                } else {
                    self.exchange(rng)
                }
            }
        }
        assert_eq!(
            self.state.total() as i64 + self.reservoir,
            self.ledger,
            "quanta not conserved"
        );
        if self.state.kind == ParticleKind::Fermi {
            assert!(self.state.occupations.iter().all(|&n| n <= 1), "exclusion violated");
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode_index: usize,
    pub energy: f64,
    pub mean_occupation: f64,
    pub stderr: f64,
    pub analytic_value: f64,
}

impl ModeSummary {
    pub const CSV_HEADER: &'static str = "mode_index,energy,mean_occupation,stderr,analytic_value";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.mode_index, self.energy, self.mean_occupation, self.stderr, self.analytic_value
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceResult {
    pub kind: ParticleKind,
    pub ensemble: Ensemble,
    pub modes: Vec<ModeSummary>,
    pub mean_total: f64,
    /// Chemical potential fitted to `mean_total`; `None` when the mean total
    /// leaves no finite solution (e.g. a completely filled fermi spectrum).
    pub fitted_mu: Option<f64>,
    /// Per-mode time-averaged variance of the occupation.
    pub occupation_variance: Vec<f64>,
}

/// Runs the chain for `n_steps` proposals and averages the occupations over
/// the steps after `burn_in`. Standard errors come from [`BATCHES`] batch
/// means; the analytic column uses the chemical potential fitted to the
/// mean total.
pub fn simulate_balance(
    spectrum: &ModeSpectrum,
    kind: ParticleKind,
    ensemble: Ensemble,
    total_quanta: u64,
    n_steps: u64,
    burn_in: u64,
    rng_seed: u64,
) -> Result<BalanceResult> {
    if n_steps <= burn_in {
        return Err(Error::InvalidParameter("n_steps must exceed burn_in".into()));
    }
    let kept = n_steps - burn_in;
    if kept < BATCHES as u64 {
        return Err(Error::InvalidParameter(format!(
            "need at least {BATCHES} steps after burn-in"
        )));
    }
    let state = OccupationState::filled(spectrum.n_modes(), total_quanta, kind)?;
    let mut chain = BalanceChain::new(state, spectrum.clone(), ensemble)?;
    let mut rng = Philox4x32::new(rng_seed);
    for _ in 0..burn_in {
        chain.step(&mut rng);
    }

    let m = spectrum.n_modes();
    let batch_len = kept / BATCHES as u64;
    let mut batch_means = vec![vec![0.0; m]; BATCHES];
    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    let used = batch_len * BATCHES as u64;
    for t in 0..used {
        chain.step(&mut rng);
        let b = (t / batch_len) as usize;
        for (i, &n) in chain.state().occupations().iter().enumerate() {
            let n = f64::from(n);
            batch_means[b][i] += n;
            sum[i] += n;
            sum_sq[i] += n * n;
        }
    }
    for batch in batch_means.iter_mut() {
        for v in batch.iter_mut() {
            *v /= batch_len as f64;
        }
    }
    let count = used as f64;
    let means: Vec<f64> = sum.iter().map(|s| s / count).collect();
    let occupation_variance: Vec<f64> = sum_sq
        .iter()
        .zip(&means)
        .map(|(s2, mean)| (s2 / count - mean * mean).max(0.0))
        .collect();
    let stderrs: Vec<f64> = (0..m)
        .map(|i| {
            let var = batch_means.iter().map(|b| (b[i] - means[i]).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
            (var / BATCHES as f64).sqrt()
        })
        .collect();
    let mean_total: f64 = means.iter().sum();
    let fitted_mu = fit_chemical_potential(kind, spectrum.beta, &spectrum.energies, mean_total).ok();
    let modes = (0..m)
        .map(|i| ModeSummary {
            mode_index: i,
            energy: spectrum.energies[i],
            mean_occupation: means[i],
            stderr: stderrs[i],
            analytic_value: fitted_mu
                .and_then(|mu| analytic_occupancy(kind, spectrum.beta, spectrum.energies[i], mu).ok())
                .unwrap_or(f64::NAN),
        })
        .collect();
    Ok(BalanceResult {
        kind,
        ensemble,
        modes,
        mean_total,
        fitted_mu,
        occupation_variance,
    })
}
