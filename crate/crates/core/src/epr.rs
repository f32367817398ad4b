//! Joint spin outcomes of EPR pairs.
//!
//! Two laws govern a pair measured by apparatuses whose axes enclose the
//! angle zeta:
//!
//! ```text
//! P1(rA, rB | zeta) = (1 - rA rB cos zeta) / 4          coalesced pair
//! P2(rA, rB | zeta) = (1 - rA rB cos zeta / 3) / 4      separated pair
//! ```
//!
//! Splitting of the coalesced pair on its way through material is modeled as
//! a mixture `(1 - p) P1 + p P2` with `p = 1 - exp(-mu L)`.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{chunks, derive_seed, Philox4x32};
use crate::wavepacket::Species;

/// Minimum trials per CHSH setting.
pub const MIN_TRIALS_PER_SETTING: u64 = 100;
/// Local-realist bound on the CHSH statistic.
pub const LOCAL_BOUND: f64 = 2.0;
/// A CHSH estimate violates the local bound when it exceeds it by more than
/// this many standard errors.
pub const VERDICT_SIGMAS: f64 = 3.0;

const PAIR_STREAM: &str = "epr_pairs";

/// Which joint-outcome law governs a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EprModel {
    #[serde(rename = "P1")]
    P1,
    #[serde(rename = "P2")]
    P2,
    /// Splits (and then follows P2) with probability `p_split`.
    Mixture { p_split: f64 },
}

impl EprModel {
    pub fn validate(&self) -> Result<()> {
        if let EprModel::Mixture { p_split } = self {
            if !(0.0..=1.0).contains(p_split) {
                return Err(Error::InvalidParameter(format!(
                    "p_split must be in [0, 1], got {p_split}"
                )));
            }
        }
        Ok(())
    }

    /// Correlation strength relative to P1: `1` for P1, `1/3` for P2.
    fn strength(&self) -> f64 {
        match *self {
            EprModel::P1 => 1.0,
            EprModel::P2 => 1.0 / 3.0,
            EprModel::Mixture { p_split } => 1.0 - p_split + p_split / 3.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            EprModel::P1 => "P1".into(),
            EprModel::P2 => "P2".into(),
            EprModel::Mixture { p_split } => format!("mixture(p_split={p_split})"),
        }
    }
}

/// Only similar particles coalesce, so dissimilar pairs follow P2 whatever
/// law was requested.
pub fn model_for_species(requested: EprModel, a: &Species, b: &Species) -> EprModel {
    if a == b {
        requested
    } else {
        EprModel::P2
    }
}

/// Spin outcome along an apparatus axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Up,
    Down,
}

impl Outcome {
    pub fn value(self) -> i32 {
        match self {
            Outcome::Up => 1,
            Outcome::Down => -1,
        }
    }

    pub fn from_sign(r: i32) -> Result<Self> {
        match r {
            1 => Ok(Outcome::Up),
            -1 => Ok(Outcome::Down),
            _ => Err(Error::InvalidParameter(format!("outcome must be +-1, got {r}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairOutcome {
    pub r_a: Outcome,
    pub r_b: Outcome,
}

impl PairOutcome {
    /// All four outcomes in the order (++), (+-), (-+), (--).
    pub const ALL: [PairOutcome; 4] = [
        PairOutcome {
            r_a: Outcome::Up,
            r_b: Outcome::Up,
        },
        PairOutcome {
            r_a: Outcome::Up,
            r_b: Outcome::Down,
        },
        PairOutcome {
            r_a: Outcome::Down,
            r_b: Outcome::Up,
        },
        PairOutcome {
            r_a: Outcome::Down,
            r_b: Outcome::Down,
        },
    ];

    pub fn product(&self) -> i32 {
        self.r_a.value() * self.r_b.value()
    }
}

fn p1(rr: f64, zeta: f64) -> f64 {
    0.25 * (1.0 - rr * zeta.cos())
}

fn p2(rr: f64, zeta: f64) -> f64 {
    0.25 * (1.0 - rr * zeta.cos() / 3.0)
}

/// Probability of the joint outcome `(r_a, r_b)` at axis angle `zeta`.
pub fn joint_probability(model: &EprModel, r_a: Outcome, r_b: Outcome, zeta: f64) -> f64 {
    let rr = f64::from(r_a.value() * r_b.value());
    match *model {
        EprModel::P1 => p1(rr, zeta),
        EprModel::P2 => p2(rr, zeta),
        EprModel::Mixture { p_split } => (1.0 - p_split) * p1(rr, zeta) + p_split * p2(rr, zeta),
    }
}

fn outcome_probabilities(model: &EprModel, zeta: f64) -> [f64; 4] {
    PairOutcome::ALL.map(|o| joint_probability(model, o.r_a, o.r_b, zeta))
}

/// `E(zeta) = sum rA rB P(rA, rB | zeta)` in closed form.
pub fn correlation_e(model: &EprModel, zeta: f64) -> f64 {
    -model.strength() * zeta.cos()
}

/// Four-outcome categorical sampler for one model and angle.
#[derive(Debug, Clone, Copy)]
struct PairSampler {
    cumulative: [f64; 3],
}

impl PairSampler {
    fn new(model: &EprModel, zeta: f64) -> Self {
        let p = outcome_probabilities(model, zeta);
        Self {
            cumulative: [p[0], p[0] + p[1], p[0] + p[1] + p[2]],
        }
    }

    fn index(&self, rng: &mut Philox4x32) -> usize {
        let u = rng.uniform();
        self.cumulative.iter().position(|&c| u < c).unwrap_or(3)
    }
}

/// One pair drawn from the model's joint law.
pub fn sample_pair(model: &EprModel, zeta: f64, rng_seed: u64) -> PairOutcome {
    let mut rng = Philox4x32::new(rng_seed);
    PairOutcome::ALL[PairSampler::new(model, zeta).index(&mut rng)]
}

/// Sufficient statistics of E at one axis angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub zeta: f64,
    pub n: u64,
    pub counts_pp: u64,
    pub counts_pm: u64,
    pub counts_mp: u64,
    pub counts_mm: u64,
    pub e_hat: f64,
    pub stderr: f64,
}

impl CorrelationRecord {
    pub fn from_counts(zeta: f64, counts: [u64; 4]) -> Self {
        let n: u64 = counts.iter().sum();
        let (e_hat, stderr) = if n == 0 {
            (0.0, f64::INFINITY)
        } else {
            let nf = n as f64;
            let e = (counts[0] as f64 + counts[3] as f64 - counts[1] as f64 - counts[2] as f64) / nf;
            (e, ((1.0 - e * e).max(0.0) / nf).sqrt())
        };
        Self {
            zeta,
            n,
            counts_pp: counts[0],
            counts_pm: counts[1],
            counts_mp: counts[2],
            counts_mm: counts[3],
            e_hat,
            stderr,
        }
    }

    pub fn counts(&self) -> [u64; 4] {
        [self.counts_pp, self.counts_pm, self.counts_mp, self.counts_mm]
    }

    /// Fraction of pairs with `r_a = +1`.
    pub fn marginal_a_up(&self) -> f64 {
        (self.counts_pp + self.counts_pm) as f64 / self.n as f64
    }
}

/// `n` pairs at angle `zeta`. Draws are partitioned into fixed chunks with
/// derived streams, and counts are summed, so the record does not depend
/// on the number of threads.
pub fn sample_pairs(model: &EprModel, zeta: f64, n: u64, rng_seed: u64) -> CorrelationRecord {
    let sampler = PairSampler::new(model, zeta);
    let counts = chunks(n as usize)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut rng = Philox4x32::derived(rng_seed, PAIR_STREAM, chunk);
            let mut c = [0u64; 4];
            for _ in 0..len {
                c[sampler.index(&mut rng)] += 1;
            }
            c
        })
        .reduce(|| [0; 4], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]);
    CorrelationRecord::from_counts(zeta, counts)
}

/// Apparatus axis angles (radians) in a common plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshSettings {
    pub fn from_degrees(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Result<Self> {
        let s = Self {
            a: a.to_radians(),
            a_prime: a_prime.to_radians(),
            b: b.to_radians(),
            b_prime: b_prime.to_radians(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.a, self.a_prime, self.b, self.b_prime] {
            if !(0.0..TAU).contains(&v) {
                return Err(Error::InvalidParameter(format!("setting angle {v} outside [0, 2 pi)")));
            }
        }
        Ok(())
    }

    /// Axis angles of the four terms (a,b), (a,b'), (a',b), (a',b').
    pub fn zetas(&self) -> [f64; 4] {
        [
            self.b - self.a,
            self.b_prime - self.a,
            self.b - self.a_prime,
            self.b_prime - self.a_prime,
        ]
    }
}

impl Default for ChshSettings {
    /// (0, 90, 45, 135) degrees.
    fn default() -> Self {
        Self::from_degrees(0.0, 90.0, 45.0, 135.0).expect("default settings are valid")
    }
}

/// `|E1 - E2 + E3 + E4|` over the four terms in [`ChshSettings::zetas`] order.
pub fn chsh_combination(e: [f64; 4]) -> f64 {
    (e[0] - e[1] + e[2] + e[3]).abs()
}

/// Closed-form CHSH value of a model.
pub fn analytic_chsh(model: &EprModel, settings: &ChshSettings) -> f64 {
    chsh_combination(settings.zetas().map(|z| correlation_e(model, z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ViolatesBell,
    ConsistentWithLocal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub s_hat: f64,
    pub stderr: f64,
    pub records: [CorrelationRecord; 4],
}

impl ChshResult {
    /// Violation when `s_hat - 3 stderr > 2`.
    pub fn verdict(&self) -> Verdict {
        if self.s_hat - VERDICT_SIGMAS * self.stderr > LOCAL_BOUND {
            Verdict::ViolatesBell
        } else {
            Verdict::ConsistentWithLocal
        }
    }
}

/// Monte Carlo CHSH statistic. Setting k draws from
/// `derive_seed(rng_seed, "chsh", k)`.
pub fn chsh(model: &EprModel, settings: &ChshSettings, n_per_setting: u64, rng_seed: u64) -> Result<ChshResult> {
    model.validate()?;
    settings.validate()?;
    if n_per_setting < MIN_TRIALS_PER_SETTING {
        return Err(Error::InvalidParameter(format!(
            "n_per_setting must be >= {MIN_TRIALS_PER_SETTING}, got {n_per_setting}"
        )));
    }
    let zetas = settings.zetas();
    let records: [CorrelationRecord; 4] =
        std::array::from_fn(|k| sample_pairs(model, zetas[k], n_per_setting, derive_seed(rng_seed, "chsh", k as u64)));
    let s_hat = chsh_combination(records.map(|r| r.e_hat));
    let stderr = records.iter().map(|r| r.stderr * r.stderr).sum::<f64>().sqrt();
    Ok(ChshResult { s_hat, stderr, records })
}

/// Splitting probability after a path `distance` through material with
/// splitting rate `mu`: `1 - exp(-mu L)`.
pub fn p_split_from_material(mu: f64, distance: f64) -> Result<f64> {
    if !(mu >= 0.0 && mu.is_finite()) || !(distance >= 0.0 && distance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mu and distance must be finite and >= 0, got {mu}, {distance}"
        )));
    }
    Ok(-(-mu * distance).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub distance: f64,
    pub p_split: f64,
    pub e_hat: f64,
    pub stderr: f64,
    /// Copenhagen prediction: no splitting before measurement, always P1.
    pub e_copenhagen: f64,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "distance,p_split,e_hat,stderr,e_copenhagen";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.distance, self.p_split, self.e_hat, self.stderr, self.e_copenhagen
        )
    }
}

/// Realist correlation against distance through material, next to the
/// Copenhagen value. Row i draws from `derive_seed(rng_seed, "sweep", i)`.
pub fn correlation_sweep(mu: f64, distances: &[f64], zeta: f64, n: u64, rng_seed: u64) -> Result<Vec<SweepRow>> {
    if distances.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("distances must be sorted ascending".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let e_copenhagen = correlation_e(&EprModel::P1, zeta);
    distances
        .iter()
        .enumerate()
        .map(|(i, &distance)| {
            let p_split = p_split_from_material(mu, distance)?;
            let model = EprModel::Mixture { p_split };
            let rec = sample_pairs(&model, zeta, n, derive_seed(rng_seed, "sweep", i as u64));
            Ok(SweepRow {
                distance,
                p_split,
                e_hat: rec.e_hat,
                stderr: rec.stderr,
                e_copenhagen,
            })
        })
        .collect()
}
