use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::scenario::{Experiment, Scenario};
use crate::{detection, epr, evolution, rng, spin, statistics, wavepacket};

/// Run record written next to the results as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    pub experiment: String,
    pub scenario_digest: String,
    pub master_seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub threads: usize,
    pub result_files: Vec<String>,
    /// Every switchable rule and numeric knob that shaped the results.
    pub design_flags: BTreeMap<String, Value>,
}

pub(crate) fn design_flags(scenario: &Scenario) -> BTreeMap<String, Value> {
    let mut f = BTreeMap::new();
    let mut put = |k: &str, v: Value| {
        f.insert(k.to_string(), v);
    };
    put("rng", json!("philox4x32-10"));
    put("seed_derivation", json!("sha256(wavelab-seed-v1|master|label|index)"));
    put("rng_chunk_len", json!(rng::CHUNK_LEN));
    put("norm_tolerance", json!(wavepacket::NORM_TOLERANCE));
    put(
        "overlap_threshold_default",
        json!(wavepacket::DEFAULT_OVERLAP_THRESHOLD),
    );
    put("edge_fraction", json!(wavepacket::EDGE_FRACTION));
    put("coalesce_rule", json!("normalized_sum"));
    put("split_rule", json!("renormalized_copies_remainder_first"));

    match &scenario.experiment {
        Experiment::Evolve(p) => {
            put("integrator", json!("strang_split_step"));
            put("step_drift_limit", json!(evolution::STEP_DRIFT_LIMIT));
            put("leak_warning_limit", json!(evolution::LEAK_WARNING_LIMIT));
            put("potential", serde_json::to_value(&p.potential).unwrap_or(Value::Null));
            put("dt", json!(p.dt));
            put("trace_stride", json!(p.trace_stride));
        }
        Experiment::Emulsion(p) => {
            put("integrator", json!("strang_split_step"));
            put("flight_dt", json!(p.flight_dt));
            put("spot_sampling", json!("grid_node"));
            put("reduction", json!("whole_packet_gaussian"));
            put("reduction_width", json!(p.medium.reduction_width));
            put("medium_delta_t", json!(p.medium.delta_t));
            put("min_ensemble", json!(detection::MIN_ENSEMBLE));
            put("width_stderr", json!("width/sqrt(2n)"));
            put("quanta", json!(p.quanta));
            put("acting_quanta", json!(p.acting_quanta));
            put("overlap_threshold", json!(p.overlap_threshold));
        }
        Experiment::SternGerlach(_) => {
            put("up_probability", json!("(1+cos)/2"));
            put("mle_coarse_step_deg", json!(spin::COARSE_STEP_DEG));
            put("mle_refinement", json!("newton_on_sphere"));
            put("cone", json!("chi2_2dof_95_largest_axis"));
            put("degeneracy", json!("axes_not_spanning_or_tied_maxima"));
        }
        Experiment::EprChsh(p) => {
            put("model", serde_json::to_value(p.model).unwrap_or(Value::Null));
            put("species_forces_p2", json!(p.species.is_some()));
            put("chsh_statistic", json!("|E(a,b)-E(a,b')+E(a',b)+E(a',b')|"));
            put("min_trials_per_setting", json!(epr::MIN_TRIALS_PER_SETTING));
            put("local_bound", json!(epr::LOCAL_BOUND));
            put("verdict_sigmas", json!(epr::VERDICT_SIGMAS));
        }
        Experiment::EprSweep(p) => {
            put("model", json!("mixture"));
            put("p_split", json!("1-exp(-mu*L)"));
            put("mu", json!(p.mu));
            put("copenhagen_reference", json!("P1"));
            put("post_split_law", json!("P2"));
        }
        Experiment::Statistics(p) => {
            put("kind", serde_json::to_value(p.kind).unwrap_or(Value::Null));
            put("ensemble", serde_json::to_value(p.ensemble).unwrap_or(Value::Null));
            put("proposal", json!("source_by_weight_target_uniform"));
            put("barrier", json!("exp(-beta*max(0,de))"));
            put("batches", json!(statistics::BATCHES));
            put("mu_fit_tolerance", json!(statistics::MU_TOLERANCE));
            put("burn_in", json!(p.burn_in));
        }
    }
    f
}
