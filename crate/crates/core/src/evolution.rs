//! Split-step spectral Schrödinger propagation on a periodic grid.
//!
//! Each step is a symmetric (Strang) splitting: half a potential kick in
//! real space, a full kinetic drift in Fourier space, another half kick.
//! The kinetic factor is exact, so free evolution carries no splitting error.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{wavenumbers, FftPair};
use crate::wavepacket::{moments, Grid1D, ProfileRule, Provenance, Wavepacket};

/// Per-step norm change that aborts the propagation.
pub const STEP_DRIFT_LIMIT: f64 = 1e-9;
/// Boundary tail mass above which a leak warning is recorded.
pub const LEAK_WARNING_LIMIT: f64 = 1e-8;

/// External potential entering the Schrödinger equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Free,
    /// `V = m omega^2 (x - center)^2 / 2`.
    Harmonic {
        omega: f64,
        #[serde(default)]
        center: f64,
    },
    /// `V = height` on `[left, right]`, zero elsewhere.
    Barrier {
        height: f64,
        left: f64,
        right: f64,
    },
    /// One value per grid node.
    Tabulated {
        values: Vec<f64>,
    },
}

impl Potential {
    /// Potential sampled on the grid nodes.
    pub fn sample(&self, grid: &Grid1D, mass: f64) -> Result<Vec<f64>> {
        let values: Vec<f64> = match self {
            Potential::Free => vec![0.0; grid.n_points()],
            Potential::Harmonic { omega, center } => grid
                .positions()
                .map(|x| 0.5 * mass * omega * omega * (x - center).powi(2))
                .collect(),
            Potential::Barrier { height, left, right } => {
                if left > right {
                    return Err(Error::InvalidParameter("barrier left > right".into()));
                }
                grid.positions()
                    .map(|x| if x >= *left && x <= *right { *height } else { 0.0 })
                    .collect()
            }
            Potential::Tabulated { values } => {
                if values.len() != grid.n_points() {
                    return Err(Error::InvalidParameter(format!(
                        "tabulated potential has {} values for {} nodes",
                        values.len(),
                        grid.n_points()
                    )));
                }
                values.clone()
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("potential must be finite".into()));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub n_steps: usize,
    /// Record a trace point every `trace_stride` steps (the final state is
    /// always recorded). Zero keeps only the endpoints.
    pub trace_stride: usize,
}

impl EvolutionConfig {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self {
            dt,
            n_steps,
            trace_stride: 0,
        }
    }

    pub fn with_trace_stride(mut self, stride: usize) -> Self {
        self.trace_stride = stride;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub time: f64,
    pub mean_x: f64,
    pub delta_x: f64,
    pub delta_p: f64,
    pub norm: f64,
}

impl TracePoint {
    pub const CSV_HEADER: &'static str = "time,mean_x,delta_x,delta_p,norm";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.time, self.mean_x, self.delta_x, self.delta_p, self.norm
        )
    }
}

/// Tail mass in the outer grid region crossed [`LEAK_WARNING_LIMIT`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakWarning {
    pub step: usize,
    pub time: f64,
    pub tail_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRun {
    pub packet: Wavepacket,
    pub trace: Vec<TracePoint>,
    pub leak_warnings: Vec<LeakWarning>,
}

/// Precomputed phase factors for one (grid, mass, potential, dt).
pub struct Propagator {
    half_kick: Vec<Complex64>,
    drift: Vec<Complex64>,
    fft: FftPair,
    dt: f64,
}

impl Propagator {
    /// `dt` may be negative to propagate backwards in time.
    pub fn new(grid: &Grid1D, mass: f64, potential: &Potential, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be nonzero, got {dt}")));
        }
        let v = potential.sample(grid, mass)?;
        let half_kick = v.iter().map(|v| Complex64::from_polar(1.0, -v * dt / 2.0)).collect();
        let drift = wavenumbers(grid)
            .iter()
            .map(|k| Complex64::from_polar(1.0, -k * k * dt / (2.0 * mass)))
            .collect();
        Ok(Self {
            half_kick,
            drift,
            fft: FftPair::new(grid.n_points()),
            dt,
        })
    }

    fn apply(&mut self, psi: &mut [Complex64]) {
        for (z, k) in psi.iter_mut().zip(&self.half_kick) {
            *z *= k;
        }
        self.fft.forward(psi);
        for (z, d) in psi.iter_mut().zip(&self.drift) {
            *z *= d;
        }
        self.fft.inverse(psi);
        for (z, k) in psi.iter_mut().zip(&self.half_kick) {
            *z *= k;
        }
    }

    /// One step; fails with [`Error::NormDrift`] past [`STEP_DRIFT_LIMIT`].
    pub fn step(&mut self, wp: &Wavepacket) -> Result<Wavepacket> {
        let before = wp.norm_sqr();
        let mut psi = wp.amplitudes().to_vec();
        self.apply(&mut psi);
        let next = Wavepacket::assemble(
            wp,
            psi,
            wp.time() + self.dt,
            wp.quanta(),
            Provenance {
                profile: ProfileRule::Evolved,
                ..wp.provenance()
            },
        );
        let drift = (next.norm_sqr() - before).abs();
        if !(drift <= STEP_DRIFT_LIMIT) {
            return Err(Error::NormDrift { drift });
        }
        Ok(next)
    }
}

/// Single split-step of length `dt`.
pub fn step(wp: &Wavepacket, potential: &Potential, dt: f64) -> Result<Wavepacket> {
    wp.ensure_normalized()?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    Propagator::new(wp.grid(), wp.mass(), potential, dt)?.step(wp)
}

fn trace_point(wp: &Wavepacket) -> Result<TracePoint> {
    let m = moments(wp)?;
    Ok(TracePoint {
        time: wp.time(),
        mean_x: m.mean_x,
        delta_x: m.delta_x,
        delta_p: m.delta_p,
        norm: wp.norm_sqr(),
    })
}

fn run(wp: &Wavepacket, potential: &Potential, cfg: &EvolutionConfig, dt: f64) -> Result<EvolutionRun> {
    wp.ensure_normalized()?;
    cfg.validate()?;
    let mut trace = vec![trace_point(wp)?];
    let mut leak_warnings = Vec::new();
    if cfg.n_steps == 0 {
        return Ok(EvolutionRun {
            packet: wp.clone(),
            trace,
            leak_warnings,
        });
    }
    let mut prop = Propagator::new(wp.grid(), wp.mass(), potential, dt)?;
    let mut current = wp.clone();
    for index in 0..cfg.n_steps {
        current = prop.step(&current).map_err(|e| Error::AtStep {
            index,
            source: Box::new(e),
        })?;
        let done = index + 1;
        let tail = current.tail_mass();
        if tail > LEAK_WARNING_LIMIT {
            // one warning per crossing is enough to flag the run
            if leak_warnings.last().is_none_or(|w: &LeakWarning| w.step + 1 != done) {
                leak_warnings.push(LeakWarning {
                    step: done,
                    time: current.time(),
                    tail_mass: tail,
                });
            } else if let Some(last) = leak_warnings.last_mut() {
                last.step = done;
                last.time = current.time();
                last.tail_mass = last.tail_mass.max(tail);
            }
        }
        let on_stride = cfg.trace_stride > 0 && done % cfg.trace_stride == 0;
        if on_stride || done == cfg.n_steps {
            trace.push(trace_point(&current)?);
        }
    }
    Ok(EvolutionRun {
        packet: current,
        trace,
        leak_warnings,
    })
}

/// `cfg.n_steps` forward steps of `cfg.dt`.
pub fn evolve(wp: &Wavepacket, potential: &Potential, cfg: &EvolutionConfig) -> Result<EvolutionRun> {
    run(wp, potential, cfg, cfg.dt)
}

/// `cfg.n_steps` backward steps of `cfg.dt`; inverts [`evolve`] up to rounding.
pub fn evolve_backward(wp: &Wavepacket, potential: &Potential, cfg: &EvolutionConfig) -> Result<EvolutionRun> {
    run(wp, potential, cfg, -cfg.dt)
}

/// Free-Gaussian width `sigma0 * sqrt(1 + (t / (2 m sigma0^2))^2)`.
pub fn analytic_gaussian_width(sigma0: f64, mass: f64, t: f64) -> f64 {
    let tau = t / (2.0 * mass * sigma0 * sigma0);
    sigma0 * (1.0 + tau * tau).sqrt()
}
