//! Experiment dispatch: build core types from a validated config, run the
//! owning module, and write the report files.

use std::path::{Path, PathBuf};

use serde::Serialize;

use mlec_core::channel::{EfficacyFamily, NoiseSpec};
use mlec_core::codec::{Alphabet, TransformMatrix};
use mlec_core::continuous::{
    additivity_check, conditional_entropy, DensityField, Trajectory,
};
use mlec_core::energy::{
    optimize_multilevel, optimize_two_level, two_level_energy, AllocationResult, Coupling,
    EnergyParams, LevelSpec,
};
use mlec_core::geometry::{census_with_cap, CensusReport, CodeSpace, DEFAULT_ENUMERATION_CAP};
use mlec_core::pipeline::{
    attach_model_comparison, mismatch_experiment, run_pipeline, AgentSpec, Direction, HopSpec,
    PipelineSpec, SimReport,
};

use crate::config::{
    CensusConfig, CodeDef, ConfigError, ContinuousConfig, CouplingDef, DensityDef, EfficacyDef,
    ExperimentConfig, MismatchConfig, SimulateConfig, TrajectoryDef, WordDef,
};
use crate::report::{format_float, write_csv, write_json};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{code}: {message}")]
    Domain { code: String, message: String },
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    fn domain(code: &str, message: impl ToString) -> Self {
        RunError::Domain {
            code: code.to_string(),
            message: message.to_string(),
        }
    }
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    config_echo: String,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
pub struct ErrorBody {
    pub error: ErrorInfo,
}

#[derive(Serialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

/// Write the error-shaped report for a failed run.
pub fn write_error_report(
    config: &ExperimentConfig,
    out_dir: &Path,
    stem: &str,
    code: &str,
    message: &str,
) -> std::io::Result<PathBuf> {
    let path = out_dir.join(format!("{stem}_report.json"));
    let envelope = Envelope {
        kind: config.kind.clone(),
        seed: config.seed,
        config_echo: config.echo(),
        body: ErrorBody {
            error: ErrorInfo {
                code: code.to_string(),
                message: message.to_string(),
            },
        },
    };
    write_json(&path, &envelope)?;
    Ok(path)
}

/// Run the experiment and write its reports; returns the written paths.
pub fn run(
    config: &ExperimentConfig,
    out_dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(out_dir)?;
    match config.kind.as_str() {
        "design" => run_design(config, out_dir, stem),
        "census" => run_census(config, out_dir, stem),
        "simulate" => run_simulate(config, out_dir, stem),
        "optimize" => run_optimize(config, out_dir, stem),
        "continuous" => run_continuous(config, out_dir, stem),
        "mismatch" => run_mismatch(config, out_dir, stem),
        other => Err(ConfigError::invalid("kind", format!("unknown kind `{other}`")).into()),
    }
}

fn report_path(out_dir: &Path, stem: &str) -> PathBuf {
    out_dir.join(format!("{stem}_report.json"))
}

fn envelope<T: Serialize>(config: &ExperimentConfig, body: T) -> Envelope<T> {
    Envelope {
        kind: config.kind.clone(),
        seed: config.seed,
        config_echo: config.echo(),
        body,
    }
}

// ---------------------------------------------------------------- builders

fn build_code(def: &CodeDef, key: &str) -> Result<TransformMatrix, ConfigError> {
    let input = Alphabet::new(def.input_symbols.clone())
        .map_err(|e| ConfigError::invalid(&format!("{key}.input_symbols"), e.to_string()))?;
    let output = Alphabet::new(def.output_symbols.clone())
        .map_err(|e| ConfigError::invalid(&format!("{key}.output_symbols"), e.to_string()))?;
    let single_char = def.output_symbols.iter().all(|l| l.chars().count() == 1);
    let mut words: Vec<Vec<String>> = Vec::with_capacity(def.words.len());
    for (i, word) in def.words.iter().enumerate() {
        match word {
            WordDef::Labels(labels) => words.push(labels.clone()),
            WordDef::Compact(text) => {
                if !single_char {
                    return Err(ConfigError::invalid(
                        &format!("{key}.words[{i}]"),
                        "compact word strings need single-character output symbols",
                    ));
                }
                words.push(text.chars().map(String::from).collect());
            }
        }
    }
    TransformMatrix::from_labels(input, output, def.degrees, &words)
        .map_err(|e| ConfigError::invalid(&format!("{key}.words"), e.to_string()))
}

fn build_efficacy(def: &EfficacyDef, key: &str) -> Result<EfficacyFamily<f64>, ConfigError> {
    let result = match def.family.as_str() {
        "inverse_exponential" => EfficacyFamily::inverse_exponential(def.ceiling, def.scale),
        "linear_saturating" => EfficacyFamily::linear_saturating(def.ceiling, def.scale),
        other => {
            return Err(ConfigError::invalid(
                &format!("{key}.family"),
                format!(
                    "unknown efficacy family `{other}`; expected inverse_exponential or \
                     linear_saturating"
                ),
            ))
        }
    };
    result.map_err(|e| ConfigError::invalid(key, e.to_string()))
}

fn build_coupling(def: &CouplingDef, key: &str) -> Result<Coupling<f64>, ConfigError> {
    let need = |field: Option<f64>, name: &str| {
        field.ok_or_else(|| {
            ConfigError::invalid(
                &format!("{key}.{name}"),
                format!("coupling model `{}` requires `{name}`", def.model),
            )
        })
    };
    let coupling = match def.model.as_str() {
        "independent" => Coupling::Independent,
        "exponential_decay" => Coupling::ExponentialDecay {
            initial: need(def.initial, "initial")?,
            scale: need(def.scale, "scale")?,
        },
        "linear_ramp" => Coupling::LinearRamp {
            initial: need(def.initial, "initial")?,
        },
        "step" => Coupling::Step {
            initial: need(def.initial, "initial")?,
            threshold: need(def.threshold, "threshold")?,
        },
        other => {
            return Err(ConfigError::invalid(
                &format!("{key}.model"),
                format!(
                    "unknown coupling model `{other}`; expected independent, \
                     exponential_decay, linear_ramp, or step"
                ),
            ))
        }
    };
    coupling
        .validate()
        .map_err(|e| ConfigError::invalid(key, e.to_string()))?;
    Ok(coupling)
}

// ------------------------------------------------------------------ design

#[derive(Serialize)]
struct DesignBody {
    design: DesignReport,
}

#[derive(Serialize)]
struct DesignReport {
    input_symbols: Vec<String>,
    output_symbols: Vec<String>,
    degrees: usize,
    words: Vec<WordEntry>,
    matrix: Vec<Vec<u8>>,
    rank: usize,
    uniquely_decodable: bool,
    round_trip_ok: bool,
}

#[derive(Serialize)]
struct WordEntry {
    input: String,
    word: Vec<String>,
}

fn run_design(
    config: &ExperimentConfig,
    out_dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, RunError> {
    let def = config.design.as_ref().expect("validated");
    let code = build_code(&def.code, "design.code")?;
    let words = (0..code.cols())
        .map(|symbol| WordEntry {
            input: code.in_alphabet().label(symbol).unwrap_or_default().to_string(),
            word: code
                .word(symbol)
                .expect("symbol in range")
                .iter()
                .map(|&s| code.out_alphabet().label(s).unwrap_or_default().to_string())
                .collect(),
        })
        .collect();
    let round_trip_ok = (0..code.cols()).all(|symbol| {
        code.encode(symbol)
            .ok()
            .and_then(|word| code.decode_exact(&word).ok())
            == Some(symbol)
    });
    let body = DesignBody {
        design: DesignReport {
            input_symbols: code.in_alphabet().labels().to_vec(),
            output_symbols: code.out_alphabet().labels().to_vec(),
            degrees: code.degrees(),
            words,
            matrix: code.dense(),
            rank: code.rank(),
            uniquely_decodable: code.is_uniquely_decodable(),
            round_trip_ok,
        },
    };
    let path = report_path(out_dir, stem);
    write_json(&path, &envelope(config, body))?;
    Ok(vec![path])
}

// ------------------------------------------------------------------ census

#[derive(Serialize)]
struct CensusBody {
    space: SpaceInfo,
    census: CensusReport,
}

#[derive(Serialize)]
struct SpaceInfo {
    alphabet_size: usize,
    degrees: usize,
    valid_points: usize,
}

fn build_space(def: &CensusConfig) -> Result<CodeSpace, ConfigError> {
    match (&def.points, &def.code) {
        (Some(points), None) => {
            let alphabet_size = def.alphabet_size.ok_or_else(|| {
                ConfigError::invalid("census.alphabet_size", "required with explicit points")
            })?;
            let degrees = def.degrees.ok_or_else(|| {
                ConfigError::invalid("census.degrees", "required with explicit points")
            })?;
            CodeSpace::new(alphabet_size, degrees, points.clone())
                .map_err(|e| ConfigError::invalid("census.points", e.to_string()))
        }
        (None, Some(code)) => {
            let code = build_code(code, "census.code")?;
            CodeSpace::from_code(&code)
                .map_err(|e| ConfigError::invalid("census.code", e.to_string()))
        }
        (Some(_), Some(_)) => Err(ConfigError::invalid(
            "census",
            "give either `points` or `code`, not both",
        )),
        (None, None) => Err(ConfigError::invalid(
            "census",
            "give `points` (with alphabet_size and degrees) or `code`",
        )),
    }
}

fn run_census(
    config: &ExperimentConfig,
    out_dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, RunError> {
    let def = config.census.as_ref().expect("validated");
    let space = build_space(def)?;
    let report = census_with_cap(&space, def.cap.unwrap_or(DEFAULT_ENUMERATION_CAP))
        .map_err(|e| RunError::domain(e.code(), e))?;
    let body = CensusBody {
        space: SpaceInfo {
            alphabet_size: space.alphabet_size(),
            degrees: space.degrees(),
            valid_points: space.valid_points().len(),
        },
        census: report,
    };
    let path = report_path(out_dir, stem);
    write_json(&path, &envelope(config, body))?;
    Ok(vec![path])
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimulateBody {
    simulate: SimReport,
}

fn build_pipeline(
    def: &SimulateConfig,
    seed: u64,
) -> Result<PipelineSpec, ConfigError> {
    let mut hops = Vec::with_capacity(def.hops.len());
    for (i, hop) in def.hops.iter().enumerate() {
        let key = format!("simulate.hops[{i}]");
        let transform = build_code(&hop.code, &format!("{key}.code"))?;
        let direction = match hop.direction.as_str() {
            "encode" => Direction::Encode,
            "decode" => Direction::Decode,
            other => {
                return Err(ConfigError::invalid(
                    &format!("{key}.direction"),
                    format!("unknown direction `{other}`; expected encode or decode"),
                ))
            }
        };
        let noise = NoiseSpec::new(hop.error_rate)
            .map_err(|e| ConfigError::invalid(&format!("{key}.error_rate"), e.to_string()))?;
        let efficacy = build_efficacy(&hop.efficacy, &format!("{key}.efficacy"))?;
        hops.push(HopSpec {
            agent: AgentSpec {
                transform,
                direction,
            },
            noise,
            detect_energy: hop.detect_energy,
            repair_cost: hop.repair_cost,
            efficacy,
        });
    }
    let spec = PipelineSpec {
        hops,
        source_length: def.source_length,
        master_seed: seed,
        trials: def.trials,
    };
    spec.validate()
        .map_err(|e| ConfigError::invalid("simulate", e.to_string()))?;
    Ok(spec)
}

fn run_simulate(
    config: &ExperimentConfig,
    out_dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, RunError> {
    let def = config.simulate.as_ref().expect("validated");
    let seed = config.seed.expect("validated for stochastic kinds");
    let spec = build_pipeline(def, seed)?;
    let mut report = run_pipeline(&spec).map_err(|e| RunError::domain(e.code(), e))?;

    if def.compare_with_model {
        if spec.hops.len() > 2 {
            return Err(ConfigError::invalid(
                "simulate.compare_with_model",
                "model comparison handles chains of 1 or 2 hops",
            )
            .into());
        }
        // The matched two-level parameters are implied by the chain itself:
        // downstream detection cost is whatever the second hop spends
        // (independent of the first hop), transit noise is its error rate.
        let upstream = &spec.hops[0];
        let downstream = spec.hops.get(1);
        let params = EnergyParams {
            error_rate: upstream.noise.error_rate(),
            upstream_repair_cost: upstream.repair_cost,
            downstream_repair_cost: downstream.map_or(upstream.repair_cost, |h| h.repair_cost),
            upstream_bits: report.levels[0].bits,
            downstream_bits: report.levels.get(1).map_or(0.0, |l| l.bits),
            efficacy: upstream.efficacy,
            coupling: Coupling::Independent,
            downstream_base_cost: downstream.map_or(0.0, |h| h.detect_energy),
            transit_noise: downstream.map_or(0.0, |h| h.noise.error_rate()),
        }
        .validated()
        .map_err(|e| RunError::domain(e.code(), e))?;
        attach_model_comparison(&mut report, &params)
            .map_err(|e| RunError::domain(e.code(), e))?;
    }

    let rows: Vec<Vec<String>> = report
        .records
        .iter()
        .map(|r| {
            vec![
                r.trial.to_string(),
                r.level.to_string(),
                format_float(r.bits),
                r.detected.to_string(),
                r.repaired.to_string(),
                format_float(r.residual),
                format_float(r.energy_detect),
                format_float(r.energy_repair),
            ]
        })
        .collect();
    let csv_path = out_dir.join(format!("{stem}_trials.csv"));
    write_csv(
        &csv_path,
        &[
            "trial",
            "level",
            "bits",
            "detected",
            "repaired",
            "residual",
            "energy_detect",
            "energy_repair",
        ],
        &rows,
    )?;

    let path = report_path(out_dir, stem);
    write_json(&path, &envelope(config, SimulateBody { simulate: report }))?;
    Ok(vec![path, csv_path])
}

// ---------------------------------------------------------------- optimize

#[derive(Serialize)]
struct OptimizeBody {
    optimize: OptimizeReport,
}

#[derive(Serialize)]
struct OptimizeReport {
    mode: String,
    allocation: AllocationResult<f64>,
}

fn run_optimize(
    config: &ExperimentConfig,
    out_dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, RunError> {
    let def = config.optimize.as_ref().expect("validated");
    match (&def.two_level, &def.levels) {
        (Some(two), None) => {
            let params = EnergyParams {
                error_rate: def.error_rate,
                upstream_repair_cost: two.upstream_repair_cost,
                downstream_repair_cost: two.downstream_repair_cost,
                upstream_bits: two.upstream_bits,
                downstream_bits: two.downstream_bits,
                efficacy: build_efficacy(&two.efficacy, "optimize.two_level.efficacy")?,
                coupling: build_coupling(&two.coupling, "optimize.two_level.coupling")?,
                downstream_base_cost: two.downstream_base_cost,
                transit_noise: two.transit_noise,
            }
            .validated()
            .map_err(|e| ConfigError::invalid("optimize.two_level", e.to_string()))?;
            if !def.k_max.is_finite() || def.k_max <= 0.0 {
                return Err(
                    ConfigError::invalid("optimize.k_max", "must be positive and finite").into(),
                );
            }
            let allocation = optimize_two_level(&params, def.k_max);

            // Energy curve for plotting: detection energy against the
            // normalised two-level energy, efficacy, and coupled cost.
            let samples = def.curve_points.unwrap_or(257).max(2);
            let rows: Vec<Vec<String>> = (0..samples)
                .map(|i| {
                    let k = def.k_max * i as f64 / (samples - 1) as f64;
                    vec![
                        format_float(k),
                        format_float(two_level_energy(&params, k)),
                        format_float(params.efficacy.value(k)),
                        format_float(params.downstream_detect_cost(k)),
                    ]
                })
                .collect();
            let csv_path = out_dir.join(format!("{stem}_curve.csv"));
            write_csv(&csv_path, &["K_R", "E_normalized", "z", "K_S"], &rows)?;

            let body = OptimizeBody {
                optimize: OptimizeReport {
                    mode: "two_level".to_string(),
                    allocation,
                },
            };
            let path = report_path(out_dir, stem);
            write_json(&path, &envelope(config, body))?;
            Ok(vec![path, csv_path])
        }
        (None, Some(levels)) => {
            let mut stack = Vec::with_capacity(levels.len());
            for (i, level) in levels.iter().enumerate() {
                let key = format!("optimize.levels[{i}]");
                stack.push(LevelSpec {
                    repair_cost: level.repair_cost,
                    bits: level.bits,
                    efficacy: build_efficacy(&level.efficacy, &format!("{key}.efficacy"))?,
                    coupling: build_coupling(&level.coupling, &format!("{key}.coupling"))?,
                    base_cost: level.base_cost,
                });
            }
            let allocation = optimize_multilevel(&stack, def.error_rate, def.k_max)
                .map_err(|e| ConfigError::invalid("optimize.levels", e.to_string()))?;
            let body = OptimizeBody {
                optimize: OptimizeReport {
                    mode: "multilevel".to_string(),
                    allocation,
                },
            };
            let path = report_path(out_dir, stem);
            write_json(&path, &envelope(config, body))?;
            Ok(vec![path])
        }
        (Some(_), Some(_)) => Err(ConfigError::invalid(
            "optimize",
            "give either `two_level` or `levels`, not both",
        )
        .into()),
        (None, None) => Err(ConfigError::invalid(
            "optimize",
            "give a `two_level` block or a `levels` array",
        )
        .into()),
    }
}

// -------------------------------------------------------------- continuous

#[derive(Serialize)]
struct ContinuousBody {
    continuous: ContinuousReport,
}

#[derive(Serialize)]
struct ContinuousReport {
    duration: f64,
    output_entropy: f64,
    per_input_mutual_information: Vec<f64>,
    mutual_information_sum: f64,
    additivity_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    condition_on: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conditional_entropy: Option<f64>,
    /// Time-averaged readings: the integrals divided by the duration.
    output_entropy_per_second: f64,
    mutual_information_sum_per_second: f64,
}

fn build_trajectory(
    def: &TrajectoryDef,
    t0: f64,
    t1: f64,
    samples: usize,
    key: &str,
) -> Result<Trajectory<f64>, ConfigError> {
    let invalid = |field: &str, message: &str| -> ConfigError {
        ConfigError::invalid(&format!("{key}.{field}"), message)
    };
    let traj = match def.kind.as_str() {
        "constant" => {
            let point = def
                .point
                .clone()
                .ok_or_else(|| invalid("point", "constant trajectories need `point`"))?;
            Trajectory::sampled(t0, t1, samples, move |_| point.clone())
        }
        "line" => {
            let from = def
                .from
                .clone()
                .ok_or_else(|| invalid("from", "line trajectories need `from`"))?;
            let to = def
                .to
                .clone()
                .ok_or_else(|| invalid("to", "line trajectories need `to`"))?;
            if from.len() != to.len() {
                return Err(invalid("to", "`from` and `to` must have equal lengths"));
            }
            let span = t1 - t0;
            Trajectory::sampled(t0, t1, samples, move |t| {
                let blend = if span != 0.0 { (t - t0) / span } else { 0.0 };
                from.iter()
                    .zip(&to)
                    .map(|(&a, &b)| a + (b - a) * blend)
                    .collect()
            })
        }
        "sine" => {
            let amplitude = def
                .amplitude
                .clone()
                .ok_or_else(|| invalid("amplitude", "sine trajectories need `amplitude`"))?;
            let frequency = def
                .frequency
                .clone()
                .ok_or_else(|| invalid("frequency", "sine trajectories need `frequency`"))?;
            if frequency.len() != amplitude.len() {
                return Err(invalid("frequency", "must match `amplitude` length"));
            }
            let dims = amplitude.len();
            let phase = def.phase.clone().unwrap_or_else(|| vec![0.0; dims]);
            let offset = def.offset.clone().unwrap_or_else(|| vec![0.0; dims]);
            if phase.len() != dims || offset.len() != dims {
                return Err(invalid("phase", "`phase`/`offset` must match `amplitude`"));
            }
            let tau = std::f64::consts::TAU;
            Trajectory::sampled(t0, t1, samples, move |t| {
                (0..dims)
                    .map(|d| offset[d] + amplitude[d] * (tau * frequency[d] * t + phase[d]).sin())
                    .collect()
            })
        }
        other => {
            return Err(invalid(
                "kind",
                &format!("unknown trajectory kind `{other}`; expected constant, line, or sine"),
            ))
        }
    };
    traj.map_err(|e| ConfigError::invalid(key, e.to_string()))
}

fn build_density(
    def: &DensityDef,
    dims: usize,
    key: &str,
) -> Result<DensityField<f64>, ConfigError> {
    let field = match def.kind.as_str() {
        "constant" => {
            let value = def.value.ok_or_else(|| {
                ConfigError::invalid(&format!("{key}.value"), "constant densities need `value`")
            })?;
            DensityField::constant(value, dims)
        }
        "gaussian" => {
            let means = def.means.clone().ok_or_else(|| {
                ConfigError::invalid(&format!("{key}.means"), "gaussian densities need `means`")
            })?;
            let sigmas = def.sigmas.clone().ok_or_else(|| {
                ConfigError::invalid(&format!("{key}.sigmas"), "gaussian densities need `sigmas`")
            })?;
            DensityField::gaussian(means, sigmas)
        }
        other => {
            return Err(ConfigError::invalid(
                &format!("{key}.kind"),
                format!("unknown density kind `{other}`; expected constant or gaussian"),
            ))
        }
    };
    let field = field.map_err(|e| ConfigError::invalid(key, e.to_string()))?;
    if field.dims() != dims {
        return Err(ConfigError::invalid(
            key,
            format!(
                "density covers {} dimensions but the trajectory has {dims}",
                field.dims()
            ),
        ));
    }
    Ok(field)
}

fn run_continuous(
    config: &ExperimentConfig,
    out_dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, RunError> {
    let def: &ContinuousConfig = config.continuous.as_ref().expect("validated");
    if def.inputs.is_empty() {
        return Err(ConfigError::invalid("continuous.inputs", "need at least one input").into());
    }
    if !def.t0.is_finite() || !def.t1.is_finite() || def.t1 <= def.t0 {
        return Err(ConfigError::invalid("continuous.t1", "t1 must exceed t0").into());
    }
    if def.samples < 2 {
        return Err(ConfigError::invalid("continuous.samples", "need at least 2 samples").into());
    }
    let mut inputs: Vec<(DensityField<f64>, Trajectory<f64>)> =
        Vec::with_capacity(def.inputs.len());
    for (i, signal) in def.inputs.iter().enumerate() {
        let key = format!("continuous.inputs[{i}]");
        let traj = build_trajectory(
            &signal.trajectory,
            def.t0,
            def.t1,
            def.samples,
            &format!("{key}.trajectory"),
        )?;
        let density = build_density(&signal.density, traj.dims(), &format!("{key}.density"))?;
        inputs.push((density, traj));
    }

    // The output signal appends the inputs; independence makes its density
    // the product of theirs.
    let mut output_traj = inputs[0].1.clone();
    for (_, traj) in &inputs[1..] {
        output_traj = output_traj
            .concat(traj)
            .map_err(|e| RunError::domain(e.code(), e))?;
    }
    let output_density = DensityField::product(inputs.iter().map(|(d, _)| d.clone()).collect())
        .map_err(|e| RunError::domain(e.code(), e))?;

    let report = additivity_check(&inputs, &output_density, &output_traj)
        .map_err(|e| RunError::domain(e.code(), e))?;
    let conditional = match &def.condition_on {
        Some(set) => Some(
            conditional_entropy(&inputs, &output_density, &output_traj, set)
                .map_err(|e| RunError::domain(e.code(), e))?,
        ),
        None => None,
    };

    let duration = output_traj.duration();
    let body = ContinuousBody {
        continuous: ContinuousReport {
            duration,
            output_entropy: report.output_entropy,
            per_input_mutual_information: report.per_input.clone(),
            mutual_information_sum: report.mutual_information_sum,
            additivity_gap: report.gap,
            condition_on: def.condition_on.clone(),
            conditional_entropy: conditional,
            output_entropy_per_second: report.output_entropy / duration,
            mutual_information_sum_per_second: report.mutual_information_sum / duration,
        },
    };
    let path = report_path(out_dir, stem);
    write_json(&path, &envelope(config, body))?;
    Ok(vec![path])
}

// ---------------------------------------------------------------- mismatch

#[derive(Serialize)]
struct MismatchBody {
    mismatch: MismatchView,
}

#[derive(Serialize)]
struct MismatchView {
    exact_accuracy: f64,
    empirical_accuracy: f64,
    sample_count: usize,
    confusion: Vec<ConfusionEntry>,
}

#[derive(Serialize)]
struct ConfusionEntry {
    input: String,
    decoded: Option<String>,
}

fn run_mismatch(
    config: &ExperimentConfig,
    out_dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, RunError> {
    let def: &MismatchConfig = config.mismatch.as_ref().expect("validated");
    let seed = config.seed.expect("validated for stochastic kinds");
    let encoder = build_code(&def.encoder, "mismatch.encoder")?;
    let decoder = build_code(&def.decoder, "mismatch.decoder")?;
    let report = mismatch_experiment(&encoder, &decoder, def.source_length, seed)
        .map_err(|e| RunError::domain(e.code(), e))?;
    let confusion = report
        .confusion
        .iter()
        .enumerate()
        .map(|(symbol, decoded)| ConfusionEntry {
            input: encoder
                .in_alphabet()
                .label(symbol)
                .unwrap_or_default()
                .to_string(),
            decoded: decoded.and_then(|d| {
                decoder.in_alphabet().label(d).map(ToString::to_string)
            }),
        })
        .collect();
    let body = MismatchBody {
        mismatch: MismatchView {
            exact_accuracy: report.exact_accuracy,
            empirical_accuracy: report.empirical_accuracy,
            sample_count: report.sample_count,
            confusion,
        },
    };
    let path = report_path(out_dir, stem);
    write_json(&path, &envelope(config, body))?;
    Ok(vec![path])
}
