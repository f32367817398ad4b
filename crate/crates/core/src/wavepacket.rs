//! Wavepackets on a uniform 1-D grid and their observables.
//!
//! A [`Wavepacket`] is the particle itself: a normalized complex field plus
//! the bookkeeping that travels with it (species, number of quanta, and how
//! its profile was produced). Units are natural, with hbar = 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{wavenumbers, FftPair};

/// Tolerance on norm^2 for every constructed or transformed packet.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Tolerance on norm^2 accepted by the observables.
pub const OBSERVABLE_NORM_TOLERANCE: f64 = 1e-6;
/// Default cutoff on the product-integral overlap measure.
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 1e-8;
/// Fraction of the grid, on each side, treated as the boundary region.
pub const EDGE_FRACTION: f64 = 0.05;
/// Maximum boundary tail mass accepted when preparing a packet.
pub const PREPARATION_LEAK_LIMIT: f64 = 1e-10;

/// Uniform grid: `x_i = origin + i * spacing` for `i in 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDescriptor", into = "GridDescriptor")]
pub struct Grid1D {
    n_points: usize,
    spacing: f64,
    origin: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDescriptor {
    n_points: usize,
    spacing: f64,
    origin: f64,
}

impl TryFrom<GridDescriptor> for Grid1D {
    type Error = Error;
    fn try_from(s: GridDescriptor) -> Result<Self> {
        Grid1D::new(s.n_points, s.spacing, s.origin)
    }
}

impl From<Grid1D> for GridDescriptor {
    fn from(g: Grid1D) -> Self {
        GridDescriptor {
            n_points: g.n_points,
            spacing: g.spacing,
            origin: g.origin,
        }
    }
}

impl Grid1D {
    pub fn new(n_points: usize, spacing: f64, origin: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be > 0, got {spacing}")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self {
            n_points,
            spacing,
            origin,
        })
    }

    /// Grid symmetric about x = 0 (origin at `-n_points * spacing / 2`).
    pub fn centered(n_points: usize, spacing: f64) -> Result<Self> {
        Self::new(n_points, spacing, -(n_points as f64) * spacing / 2.0)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.x(i))
    }

    /// Last grid node.
    pub fn end(&self) -> f64 {
        self.x(self.n_points - 1)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.origin && x <= self.end()
    }

    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((x - self.origin) / self.spacing).round();
        i.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    /// Number of nodes on each side that make up the boundary region.
    pub fn edge_nodes(&self) -> usize {
        ((self.n_points as f64 * EDGE_FRACTION).ceil() as usize).max(1)
    }
}

/// Particle species label. Only equality matters physically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Species(String);

impl Species {
    pub fn new(label: impl Into<String>) -> Self {
        Self(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for Species {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Species {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

/// How the amplitude profile of a packet came about. These are modeling
/// conventions, surfaced in every output that carries a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileRule {
    Prepared,
    Evolved,
    /// Normalized pointwise sum of the coalescing packets.
    NormalizedSum,
    /// Input profile re-normalized, quanta shared out.
    SplitRenormalized,
    /// Gaussian of the medium's reduction width at the effect position.
    ReducedGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub profile: ProfileRule,
    /// Number of packets merged into this one by the last coalescence.
    pub coalesced_from: usize,
}

impl Provenance {
    pub(crate) fn prepared() -> Self {
        Self {
            profile: ProfileRule::Prepared,
            coalesced_from: 1,
        }
    }
}

/// A normalized wavepacket.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavepacket {
    grid: Grid1D,
    amplitudes: Vec<Complex64>,
    time: f64,
    mass: f64,
    species: Species,
    quanta: u32,
    provenance: Provenance,
}

impl Wavepacket {
    /// Builds a one-quantum packet from raw amplitudes, normalizing them.
    pub fn from_amplitudes(
        grid: Grid1D,
        amplitudes: Vec<Complex64>,
        mass: f64,
        species: impl Into<Species>,
    ) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::GridMismatch);
        }
        check_mass(mass)?;
        if amplitudes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        let amplitudes = normalized(amplitudes, grid.spacing())?;
        Ok(Self {
            grid,
            amplitudes,
            time: 0.0,
            mass,
            species: species.into(),
            quanta: 1,
            provenance: Provenance::prepared(),
        })
    }

    /// Internal constructor; callers guarantee normalization.
    pub(crate) fn assemble(
        template: &Wavepacket,
        amplitudes: Vec<Complex64>,
        time: f64,
        quanta: u32,
        provenance: Provenance,
    ) -> Self {
        debug_assert_eq!(amplitudes.len(), template.grid.n_points());
        Self {
            grid: template.grid,
            amplitudes,
            time,
            mass: template.mass,
            species: template.species.clone(),
            quanta,
            provenance,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn species(&self) -> &Species {
        &self.species
    }

    pub fn quanta(&self) -> u32 {
        self.quanta
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Same packet carrying `quanta` quanta.
    pub fn with_quanta(mut self, quanta: u32) -> Result<Self> {
        if quanta == 0 {
            return Err(Error::InvalidParameter("quanta must be >= 1".into()));
        }
        self.quanta = quanta;
        Ok(self)
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Sum of |psi_i|^2 * spacing.
    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes, self.grid.spacing())
    }

    /// Action probability per node: |psi_i|^2 * spacing.
    pub fn node_probabilities(&self) -> Vec<f64> {
        let dx = self.grid.spacing();
        self.amplitudes.iter().map(|z| z.norm_sqr() * dx).collect()
    }

    /// Probability that the packet acts within `[lo, hi]` (nodes inside the interval).
    pub fn action_probability(&self, lo: f64, hi: f64) -> f64 {
        let dx = self.grid.spacing();
        self.grid
            .positions()
            .zip(&self.amplitudes)
            .filter(|(x, _)| *x >= lo && *x <= hi)
            .map(|(_, z)| z.norm_sqr() * dx)
            .sum()
    }

    /// Probability mass in the outer [`EDGE_FRACTION`] of the grid, both sides.
    pub fn tail_mass(&self) -> f64 {
        let dx = self.grid.spacing();
        let n = self.grid.n_points();
        let e = self.grid.edge_nodes();
        self.amplitudes[..e]
            .iter()
            .chain(&self.amplitudes[n - e..])
            .map(|z| z.norm_sqr() * dx)
            .sum()
    }

    pub(crate) fn ensure_normalized(&self) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > OBSERVABLE_NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&WavepacketFile::from(self)).expect("wavepacket serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: WavepacketFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("wavepacket JSON: {e}")))?;
        file.try_into()
    }
}

fn check_mass(mass: f64) -> Result<()> {
    if mass.is_finite() && mass > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("mass must be > 0, got {mass}")))
    }
}

fn norm_sqr(amplitudes: &[Complex64], dx: f64) -> f64 {
    amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx
}

fn normalized(mut amplitudes: Vec<Complex64>, dx: f64) -> Result<Vec<Complex64>> {
    let norm = norm_sqr(&amplitudes, dx);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::ZeroAmplitude);
    }
    let scale = 1.0 / norm.sqrt();
    for z in amplitudes.iter_mut() {
        *z *= scale;
    }
    Ok(amplitudes)
}

/// On-disk form: grid descriptor plus interleaved `[re0, im0, re1, im1, ...]`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WavepacketFile {
    grid: Grid1D,
    time: f64,
    mass: f64,
    species: Species,
    quanta: u32,
    provenance: Provenance,
    amplitudes: Vec<f64>,
}

impl From<&Wavepacket> for WavepacketFile {
    fn from(wp: &Wavepacket) -> Self {
        Self {
            grid: wp.grid,
            time: wp.time,
            mass: wp.mass,
            species: wp.species.clone(),
            quanta: wp.quanta,
            provenance: wp.provenance,
            amplitudes: wp.amplitudes.iter().flat_map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<WavepacketFile> for Wavepacket {
    type Error = Error;
    fn try_from(f: WavepacketFile) -> Result<Self> {
        if f.amplitudes.len() != 2 * f.grid.n_points() {
            return Err(Error::GridMismatch);
        }
        check_mass(f.mass)?;
        if f.quanta == 0 {
            return Err(Error::InvalidParameter("quanta must be >= 1".into()));
        }
        let amplitudes: Vec<Complex64> = f
            .amplitudes
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        let norm = norm_sqr(&amplitudes, f.grid.spacing());
        if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            grid: f.grid,
            amplitudes,
            time: f.time,
            mass: f.mass,
            species: f.species,
            quanta: f.quanta,
            provenance: f.provenance,
        })
    }
}

/// Position and momentum moments of a packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean_x: f64,
    pub delta_x: f64,
    pub mean_p: f64,
    pub delta_p: f64,
}

/// Normalized Gaussian `exp(-(x-center)^2/(4 sigma^2) + i p x)` without the
/// resolution and leakage checks.
pub(crate) fn gaussian_amplitudes(grid: &Grid1D, center: f64, momentum: f64, sigma: f64) -> Result<Vec<Complex64>> {
    let amps = grid
        .positions()
        .map(|x| {
            let env = (-(x - center).powi(2) / (4.0 * sigma * sigma)).exp();
            Complex64::from_polar(env, momentum * x)
        })
        .collect();
    normalized(amps, grid.spacing())
}

/// Minimum-uncertainty Gaussian packet carrying one quantum.
pub fn make_gaussian(
    grid: Grid1D,
    center: f64,
    momentum: f64,
    sigma: f64,
    mass: f64,
    species: impl Into<Species>,
) -> Result<Wavepacket> {
    for (name, v) in [("center", center), ("momentum", momentum), ("sigma", sigma)] {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be finite")));
        }
    }
    check_mass(mass)?;
    let min = 4.0 * grid.spacing();
    if !(sigma >= min) {
        return Err(Error::GridTooCoarse { sigma, min });
    }
    let amplitudes = gaussian_amplitudes(&grid, center, momentum, sigma)?;
    let wp = Wavepacket {
        grid,
        amplitudes,
        time: 0.0,
        mass,
        species: species.into(),
        quanta: 1,
        provenance: Provenance::prepared(),
    };
    let tail = wp.tail_mass();
    if tail > PREPARATION_LEAK_LIMIT {
        return Err(Error::BoundaryLeak {
            tail,
            limit: PREPARATION_LEAK_LIMIT,
        });
    }
    Ok(wp)
}

/// Position moments from real-space quadrature, momentum moments from the
/// discrete Fourier spectrum.
pub fn moments(wp: &Wavepacket) -> Result<Moments> {
    wp.ensure_normalized()?;
    let grid = wp.grid();
    let weights = wp.node_probabilities();
    let total: f64 = weights.iter().sum();
    let mean_x = grid.positions().zip(&weights).map(|(x, w)| x * w).sum::<f64>() / total;
    let var_x = grid
        .positions()
        .zip(&weights)
        .map(|(x, w)| (x - mean_x).powi(2) * w)
        .sum::<f64>()
        / total;

    let mut spectrum = wp.amplitudes().to_vec();
    FftPair::new(spectrum.len()).forward(&mut spectrum);
    let k = wavenumbers(grid);
    let p_weights: Vec<f64> = spectrum.iter().map(|z| z.norm_sqr()).collect();
    let p_total: f64 = p_weights.iter().sum();
    let mean_p = k.iter().zip(&p_weights).map(|(k, w)| k * w).sum::<f64>() / p_total;
    let var_p = k
        .iter()
        .zip(&p_weights)
        .map(|(k, w)| (k - mean_p).powi(2) * w)
        .sum::<f64>()
        / p_total;

    Ok(Moments {
        mean_x,
        delta_x: var_x.sqrt(),
        mean_p,
        delta_p: var_p.sqrt(),
    })
}

/// `delta_x * delta_p` (bounded below by 1/2 with hbar = 1).
pub fn heisenberg_product(wp: &Wavepacket) -> Result<f64> {
    let m = moments(wp)?;
    Ok(m.delta_x * m.delta_p)
}

/// Result of the coalescence overlap test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub overlaps: bool,
    pub measure: f64,
}

fn check_compatible(packets: &[Wavepacket]) -> Result<&Wavepacket> {
    let first = packets.first().ok_or(Error::EmptyAggregate)?;
    for p in &packets[1..] {
        if p.grid != first.grid {
            return Err(Error::GridMismatch);
        }
        if p.species != first.species || p.mass != first.mass {
            return Err(Error::SpeciesMismatch(first.species.to_string(), p.species.to_string()));
        }
    }
    Ok(first)
}

/// Product-integral overlap `sum_i prod_k |psi_k(x_i)| * spacing`, compared
/// against `threshold`.
pub fn overlap_measure(packets: &[Wavepacket], threshold: f64) -> Result<Overlap> {
    let first = check_compatible(packets)?;
    let dx = first.grid.spacing();
    let measure = (0..first.grid.n_points())
        .map(|i| packets.iter().map(|p| p.amplitudes[i].norm()).product::<f64>())
        .sum::<f64>()
        * dx;
    Ok(Overlap {
        overlaps: measure > threshold,
        measure,
    })
}

/// [`coalesce_with`] at the default overlap threshold.
pub fn coalesce(packets: &[Wavepacket]) -> Result<Wavepacket> {
    coalesce_with(packets, DEFAULT_OVERLAP_THRESHOLD)
}

/// Merges overlapping similar packets into one packet carrying all their quanta.
pub fn coalesce_with(packets: &[Wavepacket], threshold: f64) -> Result<Wavepacket> {
    let first = check_compatible(packets)?;
    if packets.len() == 1 {
        return Ok(first.clone());
    }
    if let Some(p) = packets.iter().find(|p| p.time != first.time) {
        return Err(Error::TimeMismatch(first.time, p.time));
    }
    let overlap = overlap_measure(packets, threshold)?;
    if !overlap.overlaps {
        return Err(Error::NoOverlap {
            measure: overlap.measure,
            threshold,
        });
    }
    let mut sum = vec![Complex64::new(0.0, 0.0); first.grid.n_points()];
    for p in packets {
        for (s, z) in sum.iter_mut().zip(&p.amplitudes) {
            *s += z;
        }
    }
    let amplitudes = normalized(sum, first.grid.spacing())?;
    let quanta = packets
        .iter()
        .try_fold(0u32, |acc, p| acc.checked_add(p.quanta))
        .ok_or_else(|| Error::InvalidParameter("quanta overflow".into()))?;
    Ok(Wavepacket::assemble(
        first,
        amplitudes,
        first.time,
        quanta,
        Provenance {
            profile: ProfileRule::NormalizedSum,
            coalesced_from: packets.len(),
        },
    ))
}

/// Splits a packet into `parts` packets sharing its quanta as evenly as
/// possible, earlier parts taking the remainder.
pub fn split(wp: &Wavepacket, parts: usize) -> Result<Vec<Wavepacket>> {
    if parts == 0 {
        return Err(Error::InvalidParameter("parts must be >= 1".into()));
    }
    if parts > wp.quanta as usize {
        return Err(Error::TooManyParts {
            parts,
            quanta: wp.quanta,
        });
    }
    if parts == 1 {
        return Ok(vec![wp.clone()]);
    }
    let amplitudes = normalized(wp.amplitudes.clone(), wp.grid.spacing())?;
    let base = wp.quanta / parts as u32;
    let extra = wp.quanta as usize % parts;
    Ok((0..parts)
        .map(|i| {
            let q = base + u32::from(i < extra);
            Wavepacket::assemble(
                wp,
                amplitudes.clone(),
                wp.time,
                q,
                Provenance {
                    profile: ProfileRule::SplitRenormalized,
                    coalesced_from: 1,
                },
            )
        })
        .collect())
}

/// A set of distinct wavepackets (an atom, a molecule). Members evolve and
/// reduce independently; there is no aggregate-wide reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    members: Vec<Wavepacket>,
}

impl Aggregate {
    pub fn new(members: Vec<Wavepacket>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyAggregate);
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[Wavepacket] {
        &self.members
    }

    pub fn into_members(self) -> Vec<Wavepacket> {
        self.members
    }

    pub fn total_quanta(&self) -> u64 {
        self.members.iter().map(|m| u64::from(m.quanta)).sum()
    }

    /// Joint probability that member `k` acts within `regions[k]`, for all k.
    pub fn joint_action_probability(&self, regions: &[(f64, f64)]) -> Result<f64> {
        if regions.len() != self.members.len() {
            return Err(Error::InvalidParameter(format!(
                "{} regions for {} members",
                regions.len(),
                self.members.len()
            )));
        }
        Ok(self
            .members
            .iter()
            .zip(regions)
            .map(|(m, &(lo, hi))| m.action_probability(lo, hi))
            .product())
    }

    /// Replaces member `index`, leaving every other member untouched.
    pub fn replace_member(&mut self, index: usize, packet: Wavepacket) -> Result<()> {
        let slot = self
            .members
            .get_mut(index)
            .ok_or_else(|| Error::InvalidParameter(format!("no member {index}")))?;
        *slot = packet;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid1D {
        Grid1D::centered(1024, 0.05).unwrap()
    }

    fn gauss(center: f64, p: f64, sigma: f64) -> Wavepacket {
        make_gaussian(grid(), center, p, sigma, 1.0, "electron").unwrap()
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(matches!(Grid1D::new(6, 0.1, 0.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid1D::new(100, 0.1, 0.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid1D::new(64, 0.0, 0.0), Err(Error::InvalidGrid(_))));
        assert!(Grid1D::new(8, 0.1, 0.0).is_ok());
    }

    #[test]
    fn gaussian_is_normalized() {
        let wp = gauss(0.0, 0.0, 1.0);
        assert!((wp.norm_sqr() - 1.0).abs() < 1e-9);
        assert_eq!(wp.quanta(), 1);
    }

    #[test]
    fn gaussian_too_coarse() {
        let err = make_gaussian(grid(), 0.0, 0.0, 0.19, 1.0, "e").unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }));
    }

    #[test]
    fn gaussian_leaking_into_edges() {
        let err = make_gaussian(grid(), 22.0, 0.0, 1.0, 1.0, "e").unwrap_err();
        assert!(matches!(err, Error::BoundaryLeak { .. }));
    }

    #[test]
    fn moments_of_minimum_uncertainty_gaussian() {
        let m = moments(&gauss(0.0, 0.0, 1.0)).unwrap();
        assert!(m.mean_x.abs() < 1e-9);
        assert!((m.delta_x - 1.0).abs() < 1e-6);
        assert!(m.mean_p.abs() < 1e-9);
        assert!((m.delta_p - 0.5).abs() < 1e-6);
    }

    #[test]
    fn shift_moves_mean_not_width() {
        let a = moments(&gauss(0.0, 0.0, 1.0)).unwrap();
        let b = moments(&gauss(3.0, 0.0, 1.0)).unwrap();
        assert!((b.mean_x - 3.0).abs() < 1e-9);
        assert!((b.delta_x - a.delta_x).abs() < 1e-9);
    }

    #[test]
    fn boosted_gaussian_mean_momentum() {
        let m = moments(&gauss(0.0, 2.0, 1.0)).unwrap();
        assert!((m.mean_p - 2.0).abs() < 1e-6);
        assert!((m.delta_p - 0.5).abs() < 1e-6);
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let mut wp = gauss(0.0, 0.0, 1.0);
        wp.amplitudes[512] += Complex64::new(1.0, 0.0);
        assert!(matches!(moments(&wp), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn two_hump_state_beats_the_bound() {
        let g = grid();
        let amps: Vec<_> = g
            .positions()
            .map(|x| Complex64::new((-(x - 4.0).powi(2) / 4.0).exp() + (-(x + 4.0).powi(2) / 4.0).exp(), 0.0))
            .collect();
        let wp = Wavepacket::from_amplitudes(g, amps, 1.0, "e").unwrap();
        assert!(heisenberg_product(&wp).unwrap() > 0.5 + 1e-3);
    }

    #[test]
    fn identical_packets_overlap() {
        let a = gauss(0.0, 0.0, 1.0);
        let o = overlap_measure(&[a.clone(), a], DEFAULT_OVERLAP_THRESHOLD).unwrap();
        assert!(o.overlaps);
        assert!((o.measure - 1.0).abs() < 1e-9);
    }

    #[test]
    fn distant_packets_do_not_overlap() {
        let g = Grid1D::centered(4096, 0.05).unwrap();
        let a = make_gaussian(g, -50.0, 0.0, 1.0, 1.0, "e").unwrap();
        let b = make_gaussian(g, 50.0, 0.0, 1.0, 1.0, "e").unwrap();
        let o = overlap_measure(&[a.clone(), b.clone()], DEFAULT_OVERLAP_THRESHOLD).unwrap();
        assert!(!o.overlaps);
        assert!(matches!(coalesce(&[a, b]), Err(Error::NoOverlap { .. })));
    }

    #[test]
    fn overlap_matches_closed_form_product_integral() {
        // |psi1 psi2| for sigma = 1 at +-1 integrates to exp(-1/2).
        let a = gauss(-1.0, 0.0, 1.0);
        let b = gauss(1.0, 0.0, 1.0);
        let o = overlap_measure(&[a, b], DEFAULT_OVERLAP_THRESHOLD).unwrap();
        assert!((o.measure - (-0.5f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn dissimilar_species_are_signaled() {
        let a = gauss(0.0, 0.0, 1.0);
        let b = make_gaussian(grid(), 0.0, 0.0, 1.0, 1.0, "proton").unwrap();
        assert!(matches!(
            overlap_measure(&[a.clone(), b.clone()], 1e-8),
            Err(Error::SpeciesMismatch(..))
        ));
        assert!(matches!(coalesce(&[a, b]), Err(Error::SpeciesMismatch(..))));
    }

    #[test]
    fn grid_mismatch_is_signaled() {
        let a = gauss(0.0, 0.0, 1.0);
        let b = make_gaussian(Grid1D::centered(512, 0.05).unwrap(), 0.0, 0.0, 1.0, 1.0, "electron").unwrap();
        assert!(matches!(overlap_measure(&[a, b], 1e-8), Err(Error::GridMismatch)));
    }

    #[test]
    fn coalesce_adds_quanta_and_records_provenance() {
        let a = gauss(-0.5, 0.0, 1.0);
        let b = gauss(0.5, 0.0, 1.0);
        let c = coalesce(&[a, b]).unwrap();
        assert_eq!(c.quanta(), 2);
        assert_eq!(c.provenance().coalesced_from, 2);
        assert_eq!(c.provenance().profile, ProfileRule::NormalizedSum);
        assert!((c.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coalesce_single_is_identity() {
        let a = gauss(0.0, 1.0, 1.0);
        assert_eq!(coalesce(std::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn opposite_phase_packets_cannot_merge() {
        let a = gauss(0.0, 0.0, 1.0);
        let mut b = a.clone();
        for z in b.amplitudes.iter_mut() {
            *z = -*z;
        }
        assert!(matches!(coalesce(&[a, b]), Err(Error::ZeroAmplitude)));
    }

    #[test]
    fn coalesce_then_split_conserves_quanta() {
        let a = gauss(0.0, 0.0, 1.0);
        let c = coalesce(&[a.clone(), a]).unwrap();
        let parts = split(&c, 2).unwrap();
        assert_eq!(parts.len(), 2);
        assert!(parts.iter().all(|p| p.quanta() == 1));
        assert!(parts.iter().all(|p| (p.norm_sqr() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn split_distributes_remainder_first() {
        let a = gauss(0.0, 0.0, 1.0).with_quanta(7).unwrap();
        let q: Vec<u32> = split(&a, 3).unwrap().iter().map(|p| p.quanta()).collect();
        assert_eq!(q, vec![3, 2, 2]);
    }

    #[test]
    fn split_errors() {
        let a = gauss(0.0, 0.0, 1.0);
        assert_eq!(split(&a, 1).unwrap(), vec![a.clone()]);
        assert!(matches!(split(&a, 2), Err(Error::TooManyParts { parts: 2, quanta: 1 })));
        assert!(matches!(split(&a, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn aggregate_joint_probability_factorizes() {
        let a = gauss(-3.0, 0.0, 1.0);
        let b = make_gaussian(grid(), 3.0, 0.0, 0.5, 1836.0, "proton").unwrap();
        let agg = Aggregate::new(vec![a.clone(), b.clone()]).unwrap();
        let regions = [(-4.0, -2.0), (2.5, 3.5)];
        let joint = agg.joint_action_probability(&regions).unwrap();
        let expect = a.action_probability(-4.0, -2.0) * b.action_probability(2.5, 3.5);
        assert_eq!(joint, expect);
        assert_eq!(agg.total_quanta(), 2);
        assert!(Aggregate::new(vec![]).is_err());
    }

    #[test]
    fn json_round_trip_preserves_packet() {
        let a = coalesce(&[gauss(0.0, 1.0, 1.0), gauss(0.3, 1.0, 1.0)]).unwrap();
        let back = Wavepacket::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn json_rejects_unnormalized_amplitudes() {
        let a = gauss(0.0, 0.0, 1.0);
        let text = a.to_json();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["amplitudes"][1024] = serde_json::json!(5.0);
        let err = Wavepacket::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }

    #[test]
    fn action_probability_over_whole_grid_is_one() {
        let wp = gauss(0.0, 0.0, 1.0);
        let g = wp.grid();
        assert!((wp.action_probability(g.origin(), g.end()) - 1.0).abs() < 1e-12);
        // half the mass on each side of a symmetric packet, minus the central node
        let half = wp.action_probability(f64::NEG_INFINITY, -1e-12);
        assert!((half - 0.5).abs() < 0.05 / (2.0 * PI).sqrt());
    }
}
