//! C ABI over `wavelab`.
//!
//! Every fallible function returns a [`WlStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can be
//! read with [`wl_last_error_message`]. Wavepackets cross the boundary as the
//! opaque [`WlWavepacket`] handle, owned by the caller and released with
//! [`wl_wavepacket_free`]. Strings returned by the library are released with
//! [`wl_string_free`]. Angles are in radians.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use wavelab::detection::{run_emulsion_with_quanta, MediumConfig};
use wavelab::epr::{self, ChshSettings, EprModel, Outcome, Verdict};
use wavelab::evolution::{evolve, EvolutionConfig, Potential};
use wavelab::harness::{self, HarnessError, RunOptions};
use wavelab::spin::{self, ApparatusAxis, SgCounts, SpinDirection};
use wavelab::statistics::{self, Ensemble, ModeSpectrum, ParticleKind};
use wavelab::wavepacket::{self, Grid1D, Wavepacket};
use wavelab::Error;

/// Status codes. Values 10 and above mirror the library's error kinds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlStatus {
    Ok = 0,
    Io = 1,
    Config = 2,
    NullPointer = 4,
    InvalidUtf8 = 5,
    Panic = 6,
    BufferTooSmall = 7,
    InvalidGrid = 10,
    InvalidParameter = 11,
    GridTooCoarse = 12,
    BoundaryLeak = 13,
    NotNormalized = 14,
    ZeroAmplitude = 15,
    GridMismatch = 16,
    TimeMismatch = 17,
    SpeciesMismatch = 18,
    NoOverlap = 19,
    TooManyParts = 20,
    EmptyAggregate = 21,
    NormDrift = 22,
    OffGrid = 23,
    WidthTooSmall = 24,
    EnsembleTooSmall = 25,
    DegenerateAxes = 26,
    EmptySource = 27,
    Overfilled = 28,
    DivergentOccupancy = 29,
}

impl WlStatus {
    fn from_code(code: i32) -> Self {
        use WlStatus::*;
        match code {
            10 => InvalidGrid,
            11 => InvalidParameter,
            12 => GridTooCoarse,
            13 => BoundaryLeak,
            14 => NotNormalized,
            15 => ZeroAmplitude,
            16 => GridMismatch,
            17 => TimeMismatch,
            18 => SpeciesMismatch,
            19 => NoOverlap,
            20 => TooManyParts,
            21 => EmptyAggregate,
            22 => NormDrift,
            23 => OffGrid,
            24 => WidthTooSmall,
            25 => EnsembleTooSmall,
            26 => DegenerateAxes,
            27 => EmptySource,
            28 => Overfilled,
            29 => DivergentOccupancy,
            _ => InvalidParameter,
        }
    }
}

/// Opaque wavepacket handle.
pub struct WlWavepacket {
    inner: Wavepacket,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WlMoments {
    pub mean_x: f64,
    pub delta_x: f64,
    pub mean_p: f64,
    pub delta_p: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WlSgCounts {
    pub axis_theta: f64,
    pub axis_phi: f64,
    pub n_up: u64,
    pub n_down: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WlDirectionEstimate {
    pub theta: f64,
    pub phi: f64,
    pub cone_halfangle_95: f64,
    pub log_likelihood: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlEprKind {
    P1 = 0,
    P2 = 1,
    Mixture = 2,
}

/// `p_split` is read only for [`WlEprKind::Mixture`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WlEprModel {
    pub kind: WlEprKind,
    pub p_split: f64,
}

impl From<WlEprModel> for EprModel {
    fn from(m: WlEprModel) -> Self {
        match m.kind {
            WlEprKind::P1 => EprModel::P1,
            WlEprKind::P2 => EprModel::P2,
            WlEprKind::Mixture => EprModel::Mixture { p_split: m.p_split },
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WlChshResult {
    pub s_hat: f64,
    pub s_stderr: f64,
    /// Correlations at (a,b), (a,b'), (a',b), (a',b').
    pub e_hat: [f64; 4],
    pub violates_bell: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlParticleKind {
    Bose = 0,
    Fermi = 1,
}

impl From<WlParticleKind> for ParticleKind {
    fn from(k: WlParticleKind) -> Self {
        match k {
            WlParticleKind::Bose => ParticleKind::Bose,
            WlParticleKind::Fermi => ParticleKind::Fermi,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlEnsemble {
    Closed = 0,
    Reservoir = 1,
}

struct Failure {
    status: WlStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            status: WlStatus::from_code(e.code()),
            message: e.to_string(),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let status = match &e {
            HarnessError::Config { .. } => WlStatus::Config,
            HarnessError::Io { .. } => WlStatus::Io,
            HarnessError::Module { source, .. } => WlStatus::from_code(source.code()),
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

impl Failure {
    fn new(status: WlStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(what: &str) -> Self {
        Self::new(WlStatus::NullPointer, format!("{what} is null"))
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WlStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {msg}"));
            WlStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn packet<'a>(p: *const WlWavepacket) -> Result<&'a Wavepacket, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| Failure::null("wavepacket"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(WlStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed(wp: Wavepacket) -> *mut WlWavepacket {
    Box::into_raw(Box::new(WlWavepacket { inner: wp }))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn wl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Seed of the stream (master, label, index). A null label is treated as "".
#[no_mangle]
pub unsafe extern "C" fn wl_derive_seed(master: u64, label: *const c_char, index: u64) -> u64 {
    let label = if label.is_null() {
        ""
    } else {
        CStr::from_ptr(label).to_str().unwrap_or("")
    };
    wavelab::rng::derive_seed(master, label, index)
}

/// Minimum-uncertainty Gaussian on the grid `origin + i * spacing`.
#[no_mangle]
pub unsafe extern "C" fn wl_wavepacket_gaussian(
    n_points: usize,
    spacing: f64,
    origin: f64,
    center: f64,
    momentum: f64,
    sigma: f64,
    mass: f64,
    species: *const c_char,
    out_packet: *mut *mut WlWavepacket,
) -> WlStatus {
    guard(|| {
        let slot = out(out_packet, "out_packet")?;
        let species = text(species, "species")?;
        let grid = Grid1D::new(n_points, spacing, origin)?;
        let wp = wavepacket::make_gaussian(grid, center, momentum, sigma, mass, species)?;
        *slot = boxed(wp);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wl_wavepacket_free(wp: *mut WlWavepacket) {
    if !wp.is_null() {
        drop(Box::from_raw(wp));
    }
}

#[no_mangle]
pub unsafe extern "C" fn wl_wavepacket_clone(wp: *const WlWavepacket) -> *mut WlWavepacket {
    match wp.as_ref() {
        Some(h) => boxed(h.inner.clone()),
        None => ptr::null_mut(),
    }
}

/// Number of grid nodes, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn wl_wavepacket_n_points(wp: *const WlWavepacket) -> usize {
    wp.as_ref().map_or(0, |h| h.inner.grid().n_points())
}

#[no_mangle]
pub unsafe extern "C" fn wl_wavepacket_time(wp: *const WlWavepacket) -> f64 {
    wp.as_ref().map_or(f64::NAN, |h| h.inner.time())
}

#[no_mangle]
pub unsafe extern "C" fn wl_wavepacket_quanta(wp: *const WlWavepacket) -> u32 {
    wp.as_ref().map_or(0, |h| h.inner.quanta())
}

/// Copies the amplitudes as interleaved (re, im) pairs; `len` must be at
/// least twice the number of nodes.
#[no_mangle]
pub unsafe extern "C" fn wl_wavepacket_amplitudes(
    wp: *const WlWavepacket,
    out_re_im: *mut f64,
    len: usize,
) -> WlStatus {
    guard(|| {
        let wp = packet(wp)?;
        let amps = wp.amplitudes();
        if len < 2 * amps.len() {
            return Err(Failure::new(
                WlStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", 2 * amps.len()),
            ));
        }
        if out_re_im.is_null() {
            return Err(Failure::null("out_re_im"));
        }
        let dst = std::slice::from_raw_parts_mut(out_re_im, 2 * amps.len());
        for (pair, z) in dst.chunks_exact_mut(2).zip(amps) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wl_wavepacket_moments(wp: *const WlWavepacket, out_moments: *mut WlMoments) -> WlStatus {
    guard(|| {
        let slot = out(out_moments, "out_moments")?;
        let m = wavepacket::moments(packet(wp)?)?;
        *slot = WlMoments {
            mean_x: m.mean_x,
            delta_x: m.delta_x,
            mean_p: m.mean_p,
            delta_p: m.delta_p,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wl_wavepacket_heisenberg(wp: *const WlWavepacket, out_product: *mut f64) -> WlStatus {
    guard(|| {
        let slot = out(out_product, "out_product")?;
        *slot = wavepacket::heisenberg_product(packet(wp)?)?;
        Ok(())
    })
}

/// Serializes to JSON; release the string with [`wl_string_free`].
#[no_mangle]
pub unsafe extern "C" fn wl_wavepacket_to_json(wp: *const WlWavepacket, out_json: *mut *mut c_char) -> WlStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        *slot = into_c_string(packet(wp)?.to_json());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wl_wavepacket_from_json(json: *const c_char, out_packet: *mut *mut WlWavepacket) -> WlStatus {
    guard(|| {
        let slot = out(out_packet, "out_packet")?;
        let wp = Wavepacket::from_json(text(json, "json")?)?;
        *slot = boxed(wp);
        Ok(())
    })
}

/// Merges `count` overlapping packets; a negative threshold selects the
/// default.
#[no_mangle]
pub unsafe extern "C" fn wl_wavepacket_coalesce(
    packets: *const *const WlWavepacket,
    count: usize,
    threshold: f64,
    out_packet: *mut *mut WlWavepacket,
) -> WlStatus {
    guard(|| {
        let slot = out(out_packet, "out_packet")?;
        let handles = slice(packets, count, "packets")?;
        let members = handles
            .iter()
            .map(|&h| packet(h).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let threshold = if threshold < 0.0 {
            wavepacket::DEFAULT_OVERLAP_THRESHOLD
        } else {
            threshold
        };
        *slot = boxed(wavepacket::coalesce_with(&members, threshold)?);
        Ok(())
    })
}

/// Splits into `parts` handles written to `out_parts` (capacity >= parts).
#[no_mangle]
pub unsafe extern "C" fn wl_wavepacket_split(
    wp: *const WlWavepacket,
    parts: usize,
    out_parts: *mut *mut WlWavepacket,
    capacity: usize,
) -> WlStatus {
    guard(|| {
        if capacity < parts {
            return Err(Failure::new(
                WlStatus::BufferTooSmall,
                format!("need room for {parts} handles, got {capacity}"),
            ));
        }
        if out_parts.is_null() {
            return Err(Failure::null("out_parts"));
        }
        let pieces = wavepacket::split(packet(wp)?, parts)?;
        let dst = std::slice::from_raw_parts_mut(out_parts, pieces.len());
        for (slot, piece) in dst.iter_mut().zip(pieces) {
            *slot = boxed(piece);
        }
        Ok(())
    })
}

/// Evolves `n_steps` steps of `dt`. `potential_json` uses the scenario
/// schema (`{"kind": "harmonic", "omega": 1.0}`); null means free.
#[no_mangle]
pub unsafe extern "C" fn wl_evolve(
    wp: *const WlWavepacket,
    potential_json: *const c_char,
    dt: f64,
    n_steps: usize,
    out_packet: *mut *mut WlWavepacket,
) -> WlStatus {
    guard(|| {
        let slot = out(out_packet, "out_packet")?;
        let wp = packet(wp)?;
        let potential = if potential_json.is_null() {
            Potential::Free
        } else {
            serde_json::from_str(text(potential_json, "potential_json")?)
                .map_err(|e| Failure::new(WlStatus::Config, format!("potential: {e}")))?
        };
        let cfg = EvolutionConfig::new(dt, n_steps).with_trace_stride(n_steps.max(1));
        *slot = boxed(evolve(wp, &potential, &cfg)?.packet);
        Ok(())
    })
}

/// Width of the packet imaged from `n_particles` emulsion spots.
#[no_mangle]
pub unsafe extern "C" fn wl_emulsion_width(
    wp: *const WlWavepacket,
    n_particles: usize,
    delta_t: f64,
    reduction_width: f64,
    acting_quanta: usize,
    seed: u64,
    out_width: *mut f64,
    out_stderr: *mut f64,
) -> WlStatus {
    guard(|| {
        let width = out(out_width, "out_width")?;
        let stderr = out(out_stderr, "out_stderr")?;
        let medium = MediumConfig {
            delta_t,
            reduction_width,
        };
        let res = run_emulsion_with_quanta(packet(wp)?, n_particles, &medium, acting_quanta, seed)?;
        *width = res.width_estimate;
        *stderr = res.stderr;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wl_sg_up_probability(
    theta: f64,
    phi: f64,
    axis_theta: f64,
    axis_phi: f64,
    out_probability: *mut f64,
) -> WlStatus {
    guard(|| {
        let slot = unsafe { out(out_probability, "out_probability")? };
        let s = SpinDirection::new(theta, phi)?;
        let a = ApparatusAxis::new(axis_theta, axis_phi)?;
        *slot = spin::up_probability(&s, &a);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wl_sg_simulate(
    theta: f64,
    phi: f64,
    axis_theta: f64,
    axis_phi: f64,
    n: u64,
    seed: u64,
    out_counts: *mut WlSgCounts,
) -> WlStatus {
    guard(|| {
        let slot = out(out_counts, "out_counts")?;
        let s = SpinDirection::new(theta, phi)?;
        let a = ApparatusAxis::new(axis_theta, axis_phi)?;
        let c = spin::simulate_sg(&s, &a, n, seed);
        *slot = WlSgCounts {
            axis_theta: c.axis.theta(),
            axis_phi: c.axis.phi(),
            n_up: c.n_up,
            n_down: c.n_down,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wl_sg_estimate(
    counts: *const WlSgCounts,
    len: usize,
    out_estimate: *mut WlDirectionEstimate,
) -> WlStatus {
    guard(|| {
        let slot = out(out_estimate, "out_estimate")?;
        let counts = slice(counts, len, "counts")?
            .iter()
            .map(|c| {
                Ok(SgCounts {
                    axis: ApparatusAxis::new(c.axis_theta, c.axis_phi)?,
                    n_up: c.n_up,
                    n_down: c.n_down,
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let est = spin::estimate_direction(&counts)?;
        *slot = WlDirectionEstimate {
            theta: est.direction.theta(),
            phi: est.direction.phi(),
            cone_halfangle_95: est.cone_halfangle_95,
            log_likelihood: est.log_likelihood,
        };
        Ok(())
    })
}

fn outcome(r: i32) -> Result<Outcome, Failure> {
    Ok(Outcome::from_sign(r)?)
}

/// Joint probability of outcomes `r_a`, `r_b` (each +1 or -1).
#[no_mangle]
pub unsafe extern "C" fn wl_epr_joint_probability(
    model: WlEprModel,
    r_a: i32,
    r_b: i32,
    zeta: f64,
    out_probability: *mut f64,
) -> WlStatus {
    guard(|| {
        let slot = out(out_probability, "out_probability")?;
        let model = EprModel::from(model);
        model.validate()?;
        *slot = epr::joint_probability(&model, outcome(r_a)?, outcome(r_b)?, zeta);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wl_epr_correlation(model: WlEprModel, zeta: f64, out_e: *mut f64) -> WlStatus {
    guard(|| {
        let slot = out(out_e, "out_e")?;
        let model = EprModel::from(model);
        model.validate()?;
        *slot = epr::correlation_e(&model, zeta);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wl_epr_chsh(
    model: WlEprModel,
    a: f64,
    a_prime: f64,
    b: f64,
    b_prime: f64,
    n_per_setting: u64,
    seed: u64,
    out_result: *mut WlChshResult,
) -> WlStatus {
    guard(|| {
        let slot = out(out_result, "out_result")?;
        let settings = ChshSettings { a, a_prime, b, b_prime };
        let res = epr::chsh(&EprModel::from(model), &settings, n_per_setting, seed)?;
        *slot = WlChshResult {
            s_hat: res.s_hat,
            s_stderr: res.stderr,
            e_hat: res.records.map(|r| r.e_hat),
            violates_bell: res.verdict() == Verdict::ViolatesBell,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wl_epr_p_split(mu: f64, distance: f64, out_p_split: *mut f64) -> WlStatus {
    guard(|| {
        let slot = out(out_p_split, "out_p_split")?;
        *slot = epr::p_split_from_material(mu, distance)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wl_analytic_occupancy(
    kind: WlParticleKind,
    beta: f64,
    energy: f64,
    mu: f64,
    out_occupancy: *mut f64,
) -> WlStatus {
    guard(|| {
        let slot = out(out_occupancy, "out_occupancy")?;
        *slot = statistics::analytic_occupancy(kind.into(), beta, energy, mu)?;
        Ok(())
    })
}

/// Runs the balance chain over `n_modes` modes. Each output array must hold
/// `n_modes` values; any of them may be null.
#[no_mangle]
pub unsafe extern "C" fn wl_balance_simulate(
    kind: WlParticleKind,
    ensemble: WlEnsemble,
    energies: *const f64,
    n_modes: usize,
    beta: f64,
    chemical_potential: f64,
    total_quanta: u64,
    n_steps: u64,
    burn_in: u64,
    seed: u64,
    out_mean: *mut f64,
    out_stderr: *mut f64,
    out_analytic: *mut f64,
) -> WlStatus {
    guard(|| {
        let energies = slice(energies, n_modes, "energies")?.to_vec();
        let spectrum = ModeSpectrum::new(energies, beta, chemical_potential)?;
        let ensemble = match ensemble {
            WlEnsemble::Closed => Ensemble::Closed,
            WlEnsemble::Reservoir => Ensemble::Reservoir,
        };
        let res = statistics::simulate_balance(&spectrum, kind.into(), ensemble, total_quanta, n_steps, burn_in, seed)?;
        for (dst, pick) in [
            (
                out_mean,
                (|m: &statistics::ModeSummary| m.mean_occupation) as fn(&_) -> f64,
            ),
            (out_stderr, |m| m.stderr),
            (out_analytic, |m| m.analytic_value),
        ] {
            if !dst.is_null() {
                let dst = std::slice::from_raw_parts_mut(dst, n_modes);
                for (d, m) in dst.iter_mut().zip(&res.modes) {
                    *d = pick(m);
                }
            }
        }
        Ok(())
    })
}

/// Runs a scenario file. `out_dir` may be null to use the scenario's own
/// path; `seed` overrides the scenario seed when `override_seed` is true.
/// The run directory is written to `out_run_dir` if it is not null.
#[no_mangle]
pub unsafe extern "C" fn wl_run_scenario(
    scenario_path: *const c_char,
    out_dir: *const c_char,
    force: bool,
    override_seed: bool,
    seed: u64,
    threads: usize,
    out_run_dir: *mut *mut c_char,
) -> WlStatus {
    guard(|| {
        let path = PathBuf::from(text(scenario_path, "scenario_path")?);
        let out = if out_dir.is_null() {
            None
        } else {
            Some(PathBuf::from(text(out_dir, "out_dir")?))
        };
        let opts = RunOptions {
            seed: override_seed.then_some(seed),
            out,
            force,
            threads: (threads > 0).then_some(threads),
        };
        let report = harness::run_file(&path, &opts)?;
        if let Some(slot) = out_run_dir.as_mut() {
            *slot = into_c_string(report.dir.display().to_string());
        }
        Ok(())
    })
}
