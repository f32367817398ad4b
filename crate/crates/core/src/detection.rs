//! Effects induced by wavepackets in a homogeneous medium.
//!
//! The probability that a packet acts in the cell around node i is
//! |psi_i|^2 * spacing. Once an effect occurs the whole packet is replaced in
//! one operation; there is no partial or local collapse.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Philox4x32;
use crate::wavepacket::{gaussian_amplitudes, split, ProfileRule, Provenance, Wavepacket};

/// Smallest ensemble accepted by [`run_emulsion_experiment`].
pub const MIN_ENSEMBLE: usize = 100;

const EMULSION_STREAM: &str = "emulsion";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub position: f64,
    pub time: f64,
    pub packet_id: u64,
}

impl DetectionEvent {
    pub const CSV_HEADER: &'static str = "packet_id,position,time";

    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.packet_id, self.position, self.time)
    }
}

/// Homogeneous detecting medium.
///
/// `delta_t` is the response interval of the medium. For a homogeneous
/// medium it never enters the sampled probabilities and is carried for
/// provenance only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub delta_t: f64,
    /// Width of the Gaussian that replaces a packet after it acts.
    pub reduction_width: f64,
}

impl MediumConfig {
    pub fn validate(&self, spacing: f64) -> Result<()> {
        if !(self.delta_t.is_finite() && self.delta_t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_t must be > 0, got {}",
                self.delta_t
            )));
        }
        let min = 2.0 * spacing;
        if !(self.reduction_width >= min) || !self.reduction_width.is_finite() {
            return Err(Error::WidthTooSmall {
                width: self.reduction_width,
                min,
            });
        }
        Ok(())
    }
}

/// Cumulative action probability over the grid nodes of one packet.
#[derive(Debug, Clone)]
pub struct ActionSampler {
    cdf: Vec<f64>,
    positions: Vec<f64>,
    time: f64,
}

impl ActionSampler {
    pub fn new(wp: &Wavepacket) -> Result<Self> {
        wp.ensure_normalized()?;
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = wp
            .node_probabilities()
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let total = acc;
        for c in cdf.iter_mut() {
            *c /= total;
        }
        *cdf.last_mut().expect("grid has nodes") = 1.0;
        Ok(Self {
            cdf,
            positions: wp.grid().positions().collect(),
            time: wp.time(),
        })
    }

    pub fn sample(&self, rng: &mut Philox4x32, packet_id: u64) -> DetectionEvent {
        let u = rng.uniform();
        let i = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        DetectionEvent {
            position: self.positions[i],
            time: self.time,
            packet_id,
        }
    }
}

/// Draws the node where the packet acts, with probability |psi|^2 * spacing.
pub fn sample_effect(wp: &Wavepacket, medium: &MediumConfig, packet_id: u64, rng_seed: u64) -> Result<DetectionEvent> {
    medium.validate(wp.grid().spacing())?;
    let sampler = ActionSampler::new(wp)?;
    Ok(sampler.sample(&mut Philox4x32::new(rng_seed), packet_id))
}

/// Replaces the whole packet by a Gaussian of the medium's reduction width
/// centred on the effect. Species, quanta and time are kept.
pub fn reduce(wp: &Wavepacket, event: &DetectionEvent, medium: &MediumConfig) -> Result<Wavepacket> {
    let grid = wp.grid();
    let min = 2.0 * grid.spacing();
    if !(medium.reduction_width >= min) {
        return Err(Error::WidthTooSmall {
            width: medium.reduction_width,
            min,
        });
    }
    if !grid.contains(event.position) {
        return Err(Error::OffGrid {
            position: event.position,
        });
    }
    let amplitudes = gaussian_amplitudes(grid, event.position, 0.0, medium.reduction_width)?;
    Ok(Wavepacket::assemble(
        wp,
        amplitudes,
        wp.time(),
        wp.quanta(),
        Provenance {
            profile: ProfileRule::ReducedGaussian,
            coalesced_from: 1,
        },
    ))
}

/// Outcome of a packet acting with some of its quanta.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub events: Vec<DetectionEvent>,
    /// One reduced packet per event; quanta add up to the input's.
    pub packets: Vec<Wavepacket>,
}

/// A packet acting with `acting_quanta` of its quanta: it splits into that
/// many parts, each part produces one effect and is reduced there. A
/// one-quantum packet can act only once.
pub fn detect_quanta(
    wp: &Wavepacket,
    medium: &MediumConfig,
    acting_quanta: usize,
    packet_id: u64,
    rng_seed: u64,
) -> Result<Detection> {
    medium.validate(wp.grid().spacing())?;
    let parts = split(wp, acting_quanta)?;
    let sampler = ActionSampler::new(wp)?;
    let mut rng = Philox4x32::new(rng_seed);
    let mut events = Vec::with_capacity(parts.len());
    let mut packets = Vec::with_capacity(parts.len());
    for part in &parts {
        let event = sampler.sample(&mut rng, packet_id);
        packets.push(reduce(part, &event, medium)?);
        events.push(event);
    }
    Ok(Detection { events, packets })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmulsionResult {
    pub events: Vec<DetectionEvent>,
    /// Sample standard deviation of the spot positions.
    pub width_estimate: f64,
    /// `width_estimate / sqrt(2 n)`.
    pub stderr: f64,
}

/// Sends `n_particles` copies of `prototype` through the medium, one after
/// the other, and images the packet width from the spread of the spots.
///
/// Particle i draws from the stream `derive_seed(rng_seed, "emulsion", i)`,
/// so the events do not depend on how the work is scheduled.
pub fn run_emulsion_experiment(
    prototype: &Wavepacket,
    n_particles: usize,
    medium: &MediumConfig,
    rng_seed: u64,
) -> Result<EmulsionResult> {
    run_emulsion_with_quanta(prototype, n_particles, medium, 1, rng_seed)
}

/// Like [`run_emulsion_experiment`], with every particle acting with
/// `acting_quanta` quanta.
pub fn run_emulsion_with_quanta(
    prototype: &Wavepacket,
    n_particles: usize,
    medium: &MediumConfig,
    acting_quanta: usize,
    rng_seed: u64,
) -> Result<EmulsionResult> {
    if n_particles < MIN_ENSEMBLE {
        return Err(Error::EnsembleTooSmall {
            n: n_particles,
            min: MIN_ENSEMBLE,
        });
    }
    medium.validate(prototype.grid().spacing())?;
    if acting_quanta == 0 || acting_quanta > prototype.quanta() as usize {
        return Err(Error::TooManyParts {
            parts: acting_quanta,
            quanta: prototype.quanta(),
        });
    }
    let sampler = ActionSampler::new(prototype)?;
    let events: Vec<DetectionEvent> = (0..n_particles as u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = Philox4x32::derived(rng_seed, EMULSION_STREAM, i);
            (0..acting_quanta)
                .map(|_| sampler.sample(&mut rng, i))
                .collect::<Vec<_>>()
        })
        .collect();
    let (width_estimate, count) = sample_std(events.iter().map(|e| e.position));
    Ok(EmulsionResult {
        events,
        width_estimate,
        stderr: width_estimate / (2.0 * count as f64).sqrt(),
    })
}

/// Bessel-corrected standard deviation (two-pass) and sample count.
fn sample_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, usize) {
    let (sum, n) = xs.clone().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n < 2 {
        return (0.0, n);
    }
    let mean = sum / n as f64;
    let ss: f64 = xs.map(|x| (x - mean).powi(2)).sum();
    ((ss / (n - 1) as f64).sqrt(), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavepacket::{coalesce, make_gaussian, moments, Grid1D};

    fn grid() -> Grid1D {
        Grid1D::centered(1024, 0.05).unwrap()
    }

    fn medium() -> MediumConfig {
        MediumConfig {
            delta_t: 1.0,
            reduction_width: 0.2,
        }
    }

    fn gauss(sigma: f64) -> Wavepacket {
        make_gaussian(grid(), 0.0, 0.0, sigma, 1.0, "electron").unwrap()
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let wp = gauss(1.0);
        let a = sample_effect(&wp, &medium(), 3, 99).unwrap();
        let b = sample_effect(&wp, &medium(), 3, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.packet_id, 3);
        assert!(wp.grid().contains(a.position));
    }

    #[test]
    fn narrow_packet_samples_stay_near_center() {
        let sigma = 4.0 * grid().spacing();
        let wp = gauss(sigma);
        let sampler = ActionSampler::new(&wp).unwrap();
        let mut rng = Philox4x32::new(5);
        for _ in 0..20_000 {
            assert!(sampler.sample(&mut rng, 0).position.abs() <= 5.0 * sigma);
        }
    }

    #[test]
    fn reduce_centres_and_normalizes() {
        let wp = gauss(1.0);
        let ev = DetectionEvent {
            position: 1.5,
            time: 0.0,
            packet_id: 0,
        };
        let r = reduce(&wp, &ev, &medium()).unwrap();
        let m = moments(&r).unwrap();
        assert!((m.mean_x - 1.5).abs() <= grid().spacing());
        assert!((r.norm_sqr() - 1.0).abs() < 1e-9);
        assert_eq!(r.provenance().profile, ProfileRule::ReducedGaussian);
        let again = reduce(&r, &ev, &medium()).unwrap();
        let dev = again
            .amplitudes()
            .iter()
            .zip(r.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-9);
    }

    #[test]
    fn reduce_depends_only_on_event_and_width() {
        let ev = DetectionEvent {
            position: -2.0,
            time: 0.0,
            packet_id: 0,
        };
        let a = reduce(&gauss(1.0), &ev, &medium()).unwrap();
        let b = reduce(
            &make_gaussian(grid(), 5.0, 3.0, 2.0, 1.0, "electron").unwrap(),
            &ev,
            &medium(),
        )
        .unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
    }

    #[test]
    fn reduce_rejects_narrow_width_and_off_grid() {
        let wp = gauss(1.0);
        let ev = DetectionEvent {
            position: 0.0,
            time: 0.0,
            packet_id: 0,
        };
        let thin = MediumConfig {
            delta_t: 1.0,
            reduction_width: 0.05,
        };
        assert!(matches!(reduce(&wp, &ev, &thin), Err(Error::WidthTooSmall { .. })));
        let far = DetectionEvent { position: 100.0, ..ev };
        assert!(matches!(reduce(&wp, &far, &medium()), Err(Error::OffGrid { .. })));
    }

    #[test]
    fn one_quantum_acts_once() {
        let wp = gauss(1.0);
        let d = detect_quanta(&wp, &medium(), 1, 0, 1).unwrap();
        assert_eq!(d.events.len(), 1);
        assert!(matches!(
            detect_quanta(&wp, &medium(), 2, 0, 1),
            Err(Error::TooManyParts { .. })
        ));
    }

    #[test]
    fn coalesced_packet_may_act_with_each_quantum() {
        let wp = gauss(1.0);
        let c = coalesce(&[wp.clone(), wp.clone(), wp]).unwrap();
        let d = detect_quanta(&c, &medium(), 2, 7, 1).unwrap();
        assert_eq!(d.events.len(), 2);
        let q: u32 = d.packets.iter().map(|p| p.quanta()).sum();
        assert_eq!(q, 3);
    }

    #[test]
    fn small_ensemble_rejected() {
        assert!(matches!(
            run_emulsion_experiment(&gauss(1.0), 99, &medium(), 1),
            Err(Error::EnsembleTooSmall { n: 99, min: 100 })
        ));
    }

    #[test]
    fn emulsion_images_width() {
        let r = run_emulsion_experiment(&gauss(0.5), 10_000, &medium(), 17).unwrap();
        assert_eq!(r.events.len(), 10_000);
        assert!((r.width_estimate - 0.5).abs() < 3.0 * r.stderr, "{r:?}");
    }

    #[test]
    fn medium_validation() {
        let bad = MediumConfig {
            delta_t: 0.0,
            reduction_width: 1.0,
        };
        assert!(bad.validate(0.05).is_err());
    }
}
