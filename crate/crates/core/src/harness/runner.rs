use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde_json::json;

use super::manifest::{design_flags, Manifest};
use super::scenario::{Experiment, Scenario};
use super::HarnessError;
use crate::detection::run_emulsion_with_quanta;
use crate::detection::DetectionEvent;
use crate::epr::{chsh, correlation_sweep, model_for_species, ChshSettings, SweepRow};
use crate::evolution::{analytic_gaussian_width, evolve, EvolutionConfig, Potential, TracePoint};
use crate::rng::derive_seed;
use crate::spin::{estimate_direction, simulate_sg, ApparatusAxis, SgCounts, SpinDirection};
use crate::statistics::{simulate_balance, ModeSpectrum, ModeSummary};
use crate::wavepacket::{coalesce_with, moments, Species};

/// One output file held in memory until the run is complete.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultFile {
    pub name: String,
    pub contents: String,
}

impl ResultFile {
    fn new(name: &str, contents: String) -> Self {
        Self {
            name: name.to_string(),
            contents,
        }
    }

    fn json(name: &str, value: &serde_json::Value) -> Self {
        let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
        text.push('\n');
        Self::new(name, text)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Replaces the scenario's `output_path`.
    pub out: Option<PathBuf>,
    /// Write straight into the output directory instead of a fresh
    /// timestamped subdirectory.
    pub force: bool,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: Manifest,
}

fn csv<T>(header: &str, rows: &[T], row: impl Fn(&T) -> String) -> String {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(&row(r));
        out.push('\n');
    }
    out
}

/// Runs the experiment in memory and returns its result files.
pub fn compute(scenario: &Scenario) -> Result<Vec<ResultFile>, HarnessError> {
    scenario.validate()?;
    let seed = derive_seed(scenario.master_seed, scenario.experiment.name(), 0);
    match &scenario.experiment {
        Experiment::Evolve(p) => {
            let grid = p.grid.build_checked()?;
            let wp = p.packet.build_checked(grid)?;
            let cfg = EvolutionConfig::new(p.dt, p.n_steps).with_trace_stride(p.trace_stride);
            let run = evolve(&wp, &p.potential, &cfg).map_err(HarnessError::module("evolve"))?;
            let m = moments(&run.packet).map_err(HarnessError::module("final moments"))?;
            let analytic = matches!(p.potential, Potential::Free)
                .then(|| analytic_gaussian_width(p.packet.sigma, p.packet.mass, run.packet.time()));
            let summary = json!({
                "final_time": run.packet.time(),
                "mean_x": m.mean_x,
                "delta_x": m.delta_x,
                "mean_p": m.mean_p,
                "delta_p": m.delta_p,
                "norm": run.packet.norm_sqr(),
                "analytic_width": analytic,
                "leak_warnings": run.leak_warnings,
            });
            Ok(vec![
                ResultFile::new("trace.csv", csv(TracePoint::CSV_HEADER, &run.trace, |t| t.csv_row())),
                ResultFile::new("final_packet.json", run.packet.to_json()),
                ResultFile::json("summary.json", &summary),
            ])
        }
        Experiment::Emulsion(p) => {
            let grid = p.grid.build_checked()?;
            let single = p.packet.build_checked(grid)?;
            let mut proto = if p.quanta > 1 {
                let copies = vec![single; p.quanta as usize];
                coalesce_with(&copies, p.overlap_threshold).map_err(HarnessError::module("coalesce"))?
            } else {
                single
            };
            if p.free_flight_time > 0.0 {
                let n = (p.free_flight_time / p.flight_dt).ceil().max(1.0) as usize;
                let cfg = EvolutionConfig::new(p.free_flight_time / n as f64, n).with_trace_stride(n);
                proto = evolve(&proto, &Potential::Free, &cfg)
                    .map_err(HarnessError::module("free flight"))?
                    .packet;
            }
            let true_width = moments(&proto)
                .map_err(HarnessError::module("prototype moments"))?
                .delta_x;
            let res = run_emulsion_with_quanta(&proto, p.n_particles, &p.medium, p.acting_quanta, seed)
                .map_err(HarnessError::module("emulsion"))?;
            let summary = json!({
                "n": res.events.len(),
                "width_estimate": res.width_estimate,
                "stderr": res.stderr,
                "true_width": true_width,
                "z_score": (res.width_estimate - true_width) / res.stderr,
            });
            Ok(vec![
                ResultFile::new(
                    "events.csv",
                    csv(DetectionEvent::CSV_HEADER, &res.events, |e| e.csv_row()),
                ),
                ResultFile::json("summary.json", &summary),
            ])
        }
        Experiment::SternGerlach(p) => {
            let spin =
                SpinDirection::from_degrees(p.spin.theta_deg, p.spin.phi_deg).map_err(HarnessError::module("spin"))?;
            let counts: Vec<SgCounts> = p
                .axes
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    let axis =
                        ApparatusAxis::from_degrees(a.theta_deg, a.phi_deg).map_err(HarnessError::module("axis"))?;
                    Ok(simulate_sg(
                        &spin,
                        &axis,
                        p.shots_per_axis,
                        derive_seed(seed, "axis", k as u64),
                    ))
                })
                .collect::<Result<_, HarnessError>>()?;
            let est = estimate_direction(&counts).map_err(HarnessError::module("estimate"))?;
            let estimate = json!({
                "theta": est.direction.theta(),
                "phi": est.direction.phi(),
                "cone_halfangle_95": est.cone_halfangle_95,
                "log_likelihood": est.log_likelihood,
            });
            Ok(vec![
                ResultFile::new("counts.csv", csv(SgCounts::CSV_HEADER, &counts, |c| c.csv_row())),
                ResultFile::json("estimate.json", &estimate),
            ])
        }
        Experiment::EprChsh(p) => {
            let model = match &p.species {
                Some((a, b)) => model_for_species(p.model, &Species::new(a.as_str()), &Species::new(b.as_str())),
                None => p.model,
            };
            let s = p.settings_deg;
            let settings =
                ChshSettings::from_degrees(s.a, s.a_prime, s.b, s.b_prime).map_err(HarnessError::module("settings"))?;
            let res = chsh(&model, &settings, p.n_per_setting, seed).map_err(HarnessError::module("chsh"))?;
            let out = json!({
                "settings": settings,
                "records": res.records,
                "s_hat": res.s_hat,
                "stderr": res.stderr,
                "verdict": res.verdict(),
            });
            Ok(vec![ResultFile::json("chsh.json", &out)])
        }
        Experiment::EprSweep(p) => {
            let rows = correlation_sweep(p.mu, &p.distances, p.zeta_deg.to_radians(), p.n_per_point, seed)
                .map_err(HarnessError::module("sweep"))?;
            Ok(vec![ResultFile::new(
                "sweep.csv",
                csv(SweepRow::CSV_HEADER, &rows, |r| r.csv_row()),
            )])
        }
        Experiment::Statistics(p) => {
            let spectrum = ModeSpectrum::new(p.energies.clone(), p.beta, p.chemical_potential.unwrap_or(0.0))
                .map_err(HarnessError::module("spectrum"))?;
            let res = simulate_balance(
                &spectrum,
                p.kind,
                p.ensemble,
                p.total_quanta,
                p.n_steps,
                p.burn_in,
                seed,
            )
            .map_err(HarnessError::module("balance"))?;
            Ok(vec![ResultFile::new(
                "occupations.csv",
                csv(ModeSummary::CSV_HEADER, &res.modes, |m| m.csv_row()),
            )])
        }
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn fresh_dir(base: &Path, digest: &str) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(base).map_err(io_err(base))?;
    let stamp = Utc::now().format("%Y%m%dT%H%M%SZ");
    for attempt in 0u32.. {
        let name = if attempt == 0 {
            format!("run-{stamp}-{}", &digest[..8])
        } else {
            format!("run-{stamp}-{}-{attempt}", &digest[..8])
        };
        let dir = base.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(io_err(&dir)(e)),
        }
    }
    unreachable!()
}

/// Validates, computes and writes one scenario.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<RunReport, HarnessError> {
    let mut scenario = scenario.clone();
    if let Some(seed) = opts.seed {
        scenario.master_seed = seed;
    }
    scenario.validate()?;
    if opts.threads == Some(0) {
        return Err(HarnessError::config("--threads", "must be >= 1"));
    }

    let started_at = now();
    let (files, threads) = match opts.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::config("--threads", e))?;
            (pool.install(|| compute(&scenario))?, n)
        }
        None => (compute(&scenario)?, rayon::current_num_threads()),
    };
    let finished_at = now();

    let digest = scenario.digest();
    let base = opts.out.clone().unwrap_or_else(|| scenario.output_path.clone());
    let dir = if opts.force {
        fs::create_dir_all(&base).map_err(io_err(&base))?;
        base
    } else {
        fresh_dir(&base, &digest)?
    };

    let manifest = Manifest {
        tool: "wavelab".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        experiment: scenario.experiment.name().into(),
        scenario_digest: digest,
        master_seed: scenario.master_seed,
        started_at,
        finished_at,
        threads,
        result_files: files.iter().map(|f| f.name.clone()).collect(),
        design_flags: design_flags(&scenario),
    };
    let mut written = Vec::with_capacity(files.len() + 1);
    let manifest_file = ResultFile::json(
        "manifest.json",
        &serde_json::to_value(&manifest).expect("manifest serializes"),
    );
    for f in files.iter().chain(std::iter::once(&manifest_file)) {
        let path = dir.join(&f.name);
        fs::write(&path, &f.contents).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(RunReport {
        dir,
        files: written,
        manifest,
    })
}

/// Reads a scenario file and runs it.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunReport, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let scenario = Scenario::from_json_str(&text, opts.seed)?;
    run_scenario(&scenario, opts)
}
