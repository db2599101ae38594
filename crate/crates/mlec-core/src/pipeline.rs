//! Monte-Carlo simulation of agent chains.
//!
//! A pipeline is an ordered list of hops. Each hop maps the incoming symbol
//! stream through its transformation matrix, expanding one symbol into a
//! word (encode) or collapsing each word to the symbol of its nearest
//! codeword (decode), then corrupts the result with substitution noise,
//! detects errors with the efficacy bought by its detection energy, and
//! repairs what it found. Undetected errors flow into the next hop as wrong
//! symbols. The per-level energy ledger charges detection on every bit and
//! repair per found error, at the hop's per-bit repair cost.
//!
//! Each trial draws from its own ChaCha8 stream of the master seed, so runs
//! are reproducible bit for bit regardless of how trials are scheduled, and
//! the ledger is merged in trial order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{
    apply_noise_with_rng, detect_with_rng, repair, ChannelError, CorrectionSideInfo,
    EfficacyFamily, NoiseSpec,
};
use crate::codec::{Alphabet, CodecError, TransformMatrix};
use crate::energy::{one_level_energy, two_level_energy, EnergyParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid pipeline spec: {0}")]
    InvalidSpec(String),
    #[error("report and parameters describe different configurations: {0}")]
    ConfigMismatch(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::DimensionMismatch(_) => "DimensionMismatch",
            PipelineError::InvalidSpec(_) => "InvalidSpec",
            PipelineError::ConfigMismatch(_) => "ConfigMismatch",
            PipelineError::Channel(e) => e.code(),
            PipelineError::Codec(e) => e.code(),
        }
    }
}

/// Which way a hop applies its transformation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// One input symbol becomes its `degrees`-symbol output word.
    Encode,
    /// Each `degrees`-symbol word collapses to the input symbol of its
    /// nearest codeword (ties break to the smallest symbol index).
    Decode,
}

/// Agent classification by how the degrees of freedom change through it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    /// Consumes more degrees of freedom than it emits.
    Aggregator,
    /// Emits more degrees of freedom than it consumes.
    Distributor,
    OneToOne,
}

/// A transformation matrix applied in a chosen direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentSpec {
    pub transform: TransformMatrix,
    pub direction: Direction,
}

impl AgentSpec {
    /// Role derived from the word length and the direction of use.
    pub fn role(&self) -> AgentRole {
        if self.transform.degrees() == 1 {
            AgentRole::OneToOne
        } else {
            match self.direction {
                Direction::Encode => AgentRole::Distributor,
                Direction::Decode => AgentRole::Aggregator,
            }
        }
    }

    /// Alphabet of the stream this agent consumes.
    pub fn stream_in_alphabet(&self) -> &Alphabet {
        match self.direction {
            Direction::Encode => self.transform.in_alphabet(),
            Direction::Decode => self.transform.out_alphabet(),
        }
    }

    /// Alphabet of the stream this agent emits.
    pub fn stream_out_alphabet(&self) -> &Alphabet {
        match self.direction {
            Direction::Encode => self.transform.out_alphabet(),
            Direction::Decode => self.transform.in_alphabet(),
        }
    }

    /// Map a symbol stream through the agent.
    pub fn map_stream(&self, stream: &[u16]) -> Result<Vec<u16>, PipelineError> {
        match self.direction {
            Direction::Encode => {
                let mut out = Vec::with_capacity(stream.len() * self.transform.degrees());
                for &symbol in stream {
                    let word = self.transform.word(symbol as usize)?;
                    out.extend(word.iter().map(|&s| s as u16));
                }
                Ok(out)
            }
            Direction::Decode => {
                let degrees = self.transform.degrees();
                if !stream.len().is_multiple_of(degrees) {
                    return Err(PipelineError::DimensionMismatch(format!(
                        "stream of {} symbols does not divide into {}-symbol words",
                        stream.len(),
                        degrees
                    )));
                }
                let words = self.transform.words();
                let mut out = Vec::with_capacity(stream.len() / degrees);
                for chunk in stream.chunks_exact(degrees) {
                    let mut best = 0usize;
                    let mut best_distance = usize::MAX;
                    for (symbol, word) in words.iter().enumerate() {
                        let distance = word
                            .iter()
                            .zip(chunk)
                            .filter(|(&w, &c)| w as u16 != c)
                            .count();
                        if distance < best_distance {
                            best_distance = distance;
                            best = symbol;
                        }
                    }
                    out.push(best as u16);
                }
                Ok(out)
            }
        }
    }
}

/// One correction level of the simulated chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopSpec {
    pub agent: AgentSpec,
    /// Fresh substitution noise applied to this hop's output stream.
    pub noise: NoiseSpec,
    /// Detection energy spent per bit at this level.
    pub detect_energy: f64,
    /// Repair cost per bit at this level.
    pub repair_cost: f64,
    /// Detection-efficacy curve of this level.
    pub efficacy: EfficacyFamily<f64>,
}

/// A full simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineSpec {
    pub hops: Vec<HopSpec>,
    /// Length of the uniform i.i.d. source stream per trial.
    pub source_length: usize,
    pub master_seed: u64,
    pub trials: usize,
}

impl PipelineSpec {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.hops.is_empty() {
            return Err(PipelineError::InvalidSpec("no hops".to_string()));
        }
        if self.source_length == 0 {
            return Err(PipelineError::InvalidSpec(
                "source length must be at least 1".to_string(),
            ));
        }
        if self.trials == 0 {
            return Err(PipelineError::InvalidSpec(
                "need at least one trial".to_string(),
            ));
        }
        let mut length = self.source_length;
        for (i, hop) in self.hops.iter().enumerate() {
            if !hop.detect_energy.is_finite() || hop.detect_energy < 0.0 {
                return Err(PipelineError::InvalidSpec(format!(
                    "hop {i}: detection energy must be finite and nonnegative"
                )));
            }
            if !hop.repair_cost.is_finite() || hop.repair_cost < 0.0 {
                return Err(PipelineError::InvalidSpec(format!(
                    "hop {i}: repair cost must be finite and nonnegative"
                )));
            }
            if i + 1 < self.hops.len() {
                let next = &self.hops[i + 1];
                if hop.agent.stream_out_alphabet() != next.agent.stream_in_alphabet() {
                    return Err(PipelineError::DimensionMismatch(format!(
                        "hop {i} emits a different alphabet than hop {} consumes",
                        i + 1
                    )));
                }
            }
            match hop.agent.direction {
                Direction::Encode => length *= hop.agent.transform.degrees(),
                Direction::Decode => {
                    let degrees = hop.agent.transform.degrees();
                    if !length.is_multiple_of(degrees) {
                        return Err(PipelineError::DimensionMismatch(format!(
                            "hop {i}: stream of {length} symbols does not divide into \
                             {degrees}-symbol words"
                        )));
                    }
                    length /= degrees;
                    if length == 0 {
                        return Err(PipelineError::DimensionMismatch(format!(
                            "hop {i} consumes the whole stream"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One level of one trial: the CSV row shape.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopRecord {
    pub trial: usize,
    pub level: usize,
    /// Bits handled at this level: stream length times log2(alphabet).
    pub bits: f64,
    /// Symbols flagged by detection.
    pub detected: u64,
    /// Symbols restored by repair.
    pub repaired: u64,
    /// Fraction of symbols still wrong after repair.
    pub residual: f64,
    pub energy_detect: f64,
    pub energy_repair: f64,
}

/// Per-level averages across trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    pub level: usize,
    pub role: AgentRole,
    pub bits: f64,
    pub detected_mean: f64,
    pub repaired_mean: f64,
    /// Detected symbols as a fraction of the stream.
    pub detected_fraction: f64,
    /// Repaired symbols as a fraction of the stream.
    pub repaired_fraction: f64,
    pub residual_mean: f64,
    pub energy_detect_mean: f64,
    pub energy_repair_mean: f64,
    pub energy_mean: f64,
}

/// Echo of the configuration a report was produced from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfigEcho {
    pub source_length: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub hops: Vec<HopEcho>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopEcho {
    pub direction: Direction,
    pub role: AgentRole,
    pub stream_alphabet_size: usize,
    pub degrees: usize,
    pub error_rate: f64,
    pub detect_energy: f64,
    pub repair_cost: f64,
    pub efficacy: EfficacyFamily<f64>,
}

/// Averaged simulation outcome plus the raw per-trial ledger.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub config: SimConfigEcho,
    pub levels: Vec<LevelSummary>,
    /// Fraction of final-level symbols matching the noise-free reference.
    pub end_to_end_accuracy: f64,
    /// Mean total energy per trial, summed over levels.
    pub total_energy_mean: f64,
    /// Analytic prediction and deviation, when a comparison was attached via
    /// [`attach_model_comparison`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_comparison: Option<DeviationStats>,
    /// Raw rows behind the averages; exported as CSV, not JSON.
    #[serde(skip)]
    pub records: Vec<HopRecord>,
}

/// Run [`compare_with_model`] and embed the outcome in the report.
pub fn attach_model_comparison(
    report: &mut SimReport,
    params: &EnergyParams<f64>,
) -> Result<(), PipelineError> {
    let stats = compare_with_model(report, params)?;
    report.model_comparison = Some(stats);
    Ok(())
}

struct TrialOutcome {
    records: Vec<HopRecord>,
    accuracy: f64,
}

/// Run the chain for every trial and average the ledgers.
pub fn run_pipeline(spec: &PipelineSpec) -> Result<SimReport, PipelineError> {
    spec.validate()?;
    let outcomes: Vec<Result<TrialOutcome, PipelineError>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| run_trial(spec, trial))
        .collect();

    let mut records = Vec::with_capacity(spec.trials * spec.hops.len());
    let mut accuracy_sum = 0.0;
    for outcome in outcomes {
        let outcome = outcome?;
        accuracy_sum += outcome.accuracy;
        records.extend(outcome.records);
    }

    // Stream length at each level's output, fixed by the chain shape.
    let mut lengths = Vec::with_capacity(spec.hops.len());
    let mut length = spec.source_length;
    for hop in &spec.hops {
        match hop.agent.direction {
            Direction::Encode => length *= hop.agent.transform.degrees(),
            Direction::Decode => length /= hop.agent.transform.degrees(),
        }
        lengths.push(length);
    }

    let trials = spec.trials as f64;
    let mut levels = Vec::with_capacity(spec.hops.len());
    let mut total_energy = 0.0;
    for (level, hop) in spec.hops.iter().enumerate() {
        let rows: Vec<&HopRecord> = records.iter().filter(|r| r.level == level).collect();
        let bits = rows[0].bits;
        let symbols = lengths[level] as f64;
        let detected_mean = rows.iter().map(|r| r.detected as f64).sum::<f64>() / trials;
        let repaired_mean = rows.iter().map(|r| r.repaired as f64).sum::<f64>() / trials;
        let residual_mean = rows.iter().map(|r| r.residual).sum::<f64>() / trials;
        let energy_detect_mean = rows.iter().map(|r| r.energy_detect).sum::<f64>() / trials;
        let energy_repair_mean = rows.iter().map(|r| r.energy_repair).sum::<f64>() / trials;
        total_energy += energy_detect_mean + energy_repair_mean;
        levels.push(LevelSummary {
            level,
            role: hop.agent.role(),
            bits,
            detected_mean,
            repaired_mean,
            detected_fraction: detected_mean / symbols,
            repaired_fraction: repaired_mean / symbols,
            residual_mean,
            energy_detect_mean,
            energy_repair_mean,
            energy_mean: energy_detect_mean + energy_repair_mean,
        });
    }

    let config = SimConfigEcho {
        source_length: spec.source_length,
        trials: spec.trials,
        master_seed: spec.master_seed,
        hops: spec
            .hops
            .iter()
            .map(|hop| HopEcho {
                direction: hop.agent.direction,
                role: hop.agent.role(),
                stream_alphabet_size: hop.agent.stream_out_alphabet().size(),
                degrees: hop.agent.transform.degrees(),
                error_rate: hop.noise.error_rate(),
                detect_energy: hop.detect_energy,
                repair_cost: hop.repair_cost,
                efficacy: hop.efficacy,
            })
            .collect(),
    };

    Ok(SimReport {
        config,
        levels,
        end_to_end_accuracy: accuracy_sum / trials,
        total_energy_mean: total_energy,
        model_comparison: None,
        records,
    })
}

fn run_trial(spec: &PipelineSpec, trial: usize) -> Result<TrialOutcome, PipelineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.master_seed);
    rng.set_stream(trial as u64);

    let source_symbols = spec.hops[0].agent.stream_in_alphabet().size() as u16;
    let source: Vec<u16> = (0..spec.source_length)
        .map(|_| rng.random_range(0..source_symbols))
        .collect();

    let mut truth = source.clone();
    let mut actual = source;
    let mut records = Vec::with_capacity(spec.hops.len());
    let mut accuracy = 1.0;
    for (level, hop) in spec.hops.iter().enumerate() {
        let truth_out = hop.agent.map_stream(&truth)?;
        let tentative = hop.agent.map_stream(&actual)?;
        let alphabet_size = hop.agent.stream_out_alphabet().size();
        let (noised, _) = apply_noise_with_rng(&tentative, alphabet_size, &hop.noise, &mut rng)?;

        // The oracle compares against the noise-free reference stream, so
        // detection sees propagated errors as well as fresh ones.
        let side = CorrectionSideInfo::from_streams(&noised, &truth_out)?;
        let detection_rate = hop.efficacy.value(hop.detect_energy);
        let detected = detect_with_rng(&noised, &side, detection_rate, &mut rng);
        let (repaired_stream, repaired) = repair(&noised, &detected, &side)?;

        let length = truth_out.len() as f64;
        let bits_per_symbol = (alphabet_size as f64).log2();
        let bits = length * bits_per_symbol;
        let wrong = repaired_stream
            .iter()
            .zip(&truth_out)
            .filter(|(a, b)| a != b)
            .count();
        records.push(HopRecord {
            trial,
            level,
            bits,
            detected: detected.len() as u64,
            repaired: repaired as u64,
            residual: wrong as f64 / length,
            energy_detect: hop.detect_energy * bits,
            energy_repair: hop.repair_cost * repaired as f64 * bits_per_symbol,
        });
        accuracy = 1.0 - wrong as f64 / length;
        truth = truth_out;
        actual = repaired_stream;
    }
    Ok(TrialOutcome { records, accuracy })
}

/// How far a simulation sits from the analytic energy model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationStats {
    pub predicted_normalized_energy: f64,
    pub simulated_normalized_energy: f64,
    /// `|simulated - predicted| / predicted`.
    pub energy_relative_deviation: f64,
    pub predicted_residual: f64,
    pub simulated_residual: f64,
    /// Monte-Carlo standard error of the simulated residual.
    pub residual_sigma: f64,
    /// Residual deviation in units of the standard error.
    pub residual_deviation_sigmas: f64,
    /// True when the energy deviation exceeds 1% or the residual deviation
    /// exceeds three standard errors.
    pub flagged: bool,
}

fn matches_tolerance(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Compare a one- or two-level simulation against the analytic model's
/// prediction for the same configuration.
pub fn compare_with_model(
    report: &SimReport,
    params: &EnergyParams<f64>,
) -> Result<DeviationStats, PipelineError> {
    let hops = &report.config.hops;
    if hops.is_empty() || hops.len() > 2 {
        return Err(PipelineError::ConfigMismatch(format!(
            "model comparison handles 1 or 2 levels, report has {}",
            hops.len()
        )));
    }
    let upstream = &hops[0];
    if !matches_tolerance(upstream.error_rate, params.error_rate) {
        return Err(PipelineError::ConfigMismatch(format!(
            "upstream error rate {} vs model {}",
            upstream.error_rate, params.error_rate
        )));
    }
    if !matches_tolerance(upstream.repair_cost, params.upstream_repair_cost) {
        return Err(PipelineError::ConfigMismatch(format!(
            "upstream repair cost {} vs model {}",
            upstream.repair_cost, params.upstream_repair_cost
        )));
    }
    if upstream.efficacy != params.efficacy {
        return Err(PipelineError::ConfigMismatch(
            "upstream efficacy curves differ".to_string(),
        ));
    }
    let upstream_bits = report.levels[0].bits;
    if !matches_tolerance(upstream_bits, params.upstream_bits) {
        return Err(PipelineError::ConfigMismatch(format!(
            "upstream bits {} vs model {}",
            upstream_bits, params.upstream_bits
        )));
    }
    let k = upstream.detect_energy;
    let predicted_normalized = if hops.len() == 1 {
        one_level_energy(params, k) / params.upstream_bits
    } else {
        let downstream = &hops[1];
        if !matches_tolerance(downstream.repair_cost, params.downstream_repair_cost) {
            return Err(PipelineError::ConfigMismatch(format!(
                "downstream repair cost {} vs model {}",
                downstream.repair_cost, params.downstream_repair_cost
            )));
        }
        let ratio = report.levels[1].bits / report.levels[0].bits;
        if !matches_tolerance(ratio, params.bit_ratio()) {
            return Err(PipelineError::ConfigMismatch(format!(
                "bit ratio {} vs model {}",
                ratio,
                params.bit_ratio()
            )));
        }
        if !matches_tolerance(downstream.detect_energy, params.downstream_detect_cost(k)) {
            return Err(PipelineError::ConfigMismatch(format!(
                "downstream detection energy {} vs coupled cost {}",
                downstream.detect_energy,
                params.downstream_detect_cost(k)
            )));
        }
        if !matches_tolerance(downstream.error_rate, params.transit_noise) {
            return Err(PipelineError::ConfigMismatch(format!(
                "transit noise {} vs model {}",
                downstream.error_rate, params.transit_noise
            )));
        }
        two_level_energy(params, k)
    };

    let simulated_normalized = report.total_energy_mean / upstream_bits;
    let energy_relative_deviation = if predicted_normalized != 0.0 {
        (simulated_normalized - predicted_normalized).abs() / predicted_normalized
    } else {
        simulated_normalized.abs()
    };

    let predicted_residual =
        params.error_rate * (1.0 - params.efficacy.value(k));
    let level0: Vec<f64> = report
        .records
        .iter()
        .filter(|r| r.level == 0)
        .map(|r| r.residual)
        .collect();
    let simulated_residual = level0.iter().sum::<f64>() / level0.len() as f64;
    let variance = level0
        .iter()
        .map(|r| (r - simulated_residual).powi(2))
        .sum::<f64>()
        / level0.len() as f64;
    let residual_sigma = (variance / level0.len() as f64).sqrt();
    let residual_deviation_sigmas = if residual_sigma > 0.0 {
        (simulated_residual - predicted_residual).abs() / residual_sigma
    } else if (simulated_residual - predicted_residual).abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    };
    let flagged = energy_relative_deviation > 0.01 || residual_deviation_sigmas > 3.0;

    Ok(DeviationStats {
        predicted_normalized_energy: predicted_normalized,
        simulated_normalized_energy: simulated_normalized,
        energy_relative_deviation,
        predicted_residual,
        simulated_residual,
        residual_sigma,
        residual_deviation_sigmas,
        flagged,
    })
}

/// Outcome of decoding one codebook with another.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MismatchReport {
    /// Exact per-symbol accuracy under a uniform source, by enumeration.
    pub exact_accuracy: f64,
    /// Accuracy measured on the sampled source stream.
    pub empirical_accuracy: f64,
    /// For each input symbol, the symbol the decoder recovers (absent when
    /// the encoder's word decodes to nothing under the decoder table).
    pub confusion: Vec<Option<usize>>,
    pub sample_count: usize,
}

/// Encode with one codebook, decode exactly with another, and report how
/// much of the message survives the disagreement. No noise is involved.
pub fn mismatch_experiment(
    encoder: &TransformMatrix,
    decoder: &TransformMatrix,
    source_length: usize,
    seed: u64,
) -> Result<MismatchReport, PipelineError> {
    if encoder.in_alphabet().size() != decoder.in_alphabet().size()
        || encoder.out_alphabet().size() != decoder.out_alphabet().size()
        || encoder.degrees() != decoder.degrees()
    {
        return Err(PipelineError::DimensionMismatch(format!(
            "encoder maps {}->{}^{}, decoder maps {}->{}^{}",
            encoder.in_alphabet().size(),
            encoder.out_alphabet().size(),
            encoder.degrees(),
            decoder.in_alphabet().size(),
            decoder.out_alphabet().size(),
            decoder.degrees()
        )));
    }
    let symbols = encoder.in_alphabet().size();
    let mut confusion = Vec::with_capacity(symbols);
    for symbol in 0..symbols {
        let word = encoder.encode(symbol)?;
        confusion.push(decoder.decode_exact(&word).ok());
    }
    let fixed_points = confusion
        .iter()
        .enumerate()
        .filter(|(symbol, decoded)| **decoded == Some(*symbol))
        .count();
    let exact_accuracy = fixed_points as f64 / symbols as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut correct = 0usize;
    for _ in 0..source_length {
        let symbol = rng.random_range(0..symbols as u16) as usize;
        if confusion[symbol] == Some(symbol) {
            correct += 1;
        }
    }
    let empirical_accuracy = if source_length > 0 {
        correct as f64 / source_length as f64
    } else {
        exact_accuracy
    };

    Ok(MismatchReport {
        exact_accuracy,
        empirical_accuracy,
        confusion,
        sample_count: source_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Alphabet;

    fn binary_identity_hop(
        error_rate: f64,
        detect_energy: f64,
        repair_cost: f64,
        efficacy: EfficacyFamily<f64>,
    ) -> HopSpec {
        HopSpec {
            agent: AgentSpec {
                transform: TransformMatrix::identity(Alphabet::new(["0", "1"]).unwrap()),
                direction: Direction::Encode,
            },
            noise: NoiseSpec::new(error_rate).unwrap(),
            detect_energy,
            repair_cost,
            efficacy,
        }
    }

    fn demo_code() -> TransformMatrix {
        let input = Alphabet::new(["A", "B", "C", "D"]).unwrap();
        let output = Alphabet::new(["a", "b"]).unwrap();
        TransformMatrix::from_labels(
            input,
            output,
            2,
            &[
                vec!["a", "a"],
                vec!["a", "b"],
                vec!["b", "a"],
                vec!["b", "b"],
            ],
        )
        .unwrap()
    }

    #[test]
    fn roles_derive_from_shape_and_direction() {
        let encode = AgentSpec {
            transform: demo_code(),
            direction: Direction::Encode,
        };
        assert_eq!(encode.role(), AgentRole::Distributor);
        let decode = AgentSpec {
            transform: demo_code(),
            direction: Direction::Decode,
        };
        assert_eq!(decode.role(), AgentRole::Aggregator);
        let identity = AgentSpec {
            transform: TransformMatrix::identity(Alphabet::new(["0", "1"]).unwrap()),
            direction: Direction::Encode,
        };
        assert_eq!(identity.role(), AgentRole::OneToOne);
    }

    #[test]
    fn decode_direction_collapses_words() {
        let agent = AgentSpec {
            transform: demo_code(),
            direction: Direction::Decode,
        };
        // aa ba bb -> A C D
        let stream = vec![0, 0, 1, 0, 1, 1];
        assert_eq!(agent.map_stream(&stream).unwrap(), vec![0, 2, 3]);
        assert!(matches!(
            agent.map_stream(&[0, 0, 1]),
            Err(PipelineError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn noiseless_pipeline_has_exact_energy_and_no_errors() {
        let efficacy = EfficacyFamily::inverse_exponential(0.9, 1.0).unwrap();
        let spec = PipelineSpec {
            hops: vec![
                HopSpec {
                    agent: AgentSpec {
                        transform: demo_code(),
                        direction: Direction::Encode,
                    },
                    noise: NoiseSpec::new(0.0).unwrap(),
                    detect_energy: 0.75,
                    repair_cost: 5.0,
                    efficacy,
                },
                HopSpec {
                    agent: AgentSpec {
                        transform: TransformMatrix::identity(
                            Alphabet::new(["a", "b"]).unwrap(),
                        ),
                        direction: Direction::Encode,
                    },
                    noise: NoiseSpec::new(0.0).unwrap(),
                    detect_energy: 0.5,
                    repair_cost: 3.0,
                    efficacy,
                },
            ],
            source_length: 1000,
            master_seed: 7,
            trials: 4,
        };
        let report = run_pipeline(&spec).unwrap();
        assert_eq!(report.end_to_end_accuracy, 1.0);
        for level in &report.levels {
            assert_eq!(level.residual_mean, 0.0);
            assert_eq!(level.energy_repair_mean, 0.0);
        }
        // Detection energy is charged on every bit regardless of noise.
        let expected = 0.75 * 2000.0 + 0.5 * 2000.0;
        assert!((report.total_energy_mean - expected).abs() < 1e-9);
    }

    #[test]
    fn single_hop_matches_the_worked_fraction() {
        // f = 0.1, z = 0.8: about 8% of symbols get repaired and 2% stay
        // wrong.
        let efficacy = EfficacyFamily::linear_saturating(0.8, 1.0).unwrap();
        let spec = PipelineSpec {
            hops: vec![binary_identity_hop(0.1, 1.0, 10.0, efficacy)],
            source_length: 100_000,
            master_seed: 99,
            trials: 10,
        };
        let report = run_pipeline(&spec).unwrap();
        let level = &report.levels[0];
        assert!(
            (level.repaired_fraction - 0.08).abs() < 0.005,
            "repaired fraction {}",
            level.repaired_fraction
        );
        assert!(
            (level.residual_mean - 0.02).abs() < 0.005,
            "residual {}",
            level.residual_mean
        );
    }

    #[test]
    fn reports_are_bit_identical_across_runs() {
        let efficacy = EfficacyFamily::inverse_exponential(0.85, 0.5).unwrap();
        let spec = PipelineSpec {
            hops: vec![
                HopSpec {
                    agent: AgentSpec {
                        transform: demo_code(),
                        direction: Direction::Encode,
                    },
                    noise: NoiseSpec::new(0.07).unwrap(),
                    detect_energy: 1.25,
                    repair_cost: 4.0,
                    efficacy,
                },
                HopSpec {
                    agent: AgentSpec {
                        transform: demo_code(),
                        direction: Direction::Decode,
                    },
                    noise: NoiseSpec::new(0.01).unwrap(),
                    detect_energy: 0.5,
                    repair_cost: 8.0,
                    efficacy,
                },
            ],
            source_length: 4000,
            master_seed: 2024,
            trials: 8,
        };
        let a = run_pipeline(&spec).unwrap();
        let b = run_pipeline(&spec).unwrap();
        assert_eq!(a, b);
        let mut other = spec.clone();
        other.master_seed = 2025;
        let c = run_pipeline(&other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn more_detection_energy_never_hurts() {
        let efficacy = EfficacyFamily::inverse_exponential(0.95, 1.0).unwrap();
        let residual_at = |k: f64| {
            let spec = PipelineSpec {
                hops: vec![binary_identity_hop(0.2, k, 1.0, efficacy)],
                source_length: 2000,
                master_seed: 5,
                trials: 100,
            };
            run_pipeline(&spec).unwrap().levels[0].residual_mean
        };
        let r0 = residual_at(0.0);
        let r1 = residual_at(1.0);
        let r2 = residual_at(4.0);
        assert!(r1 <= r0, "{r1} vs {r0}");
        assert!(r2 <= r1, "{r2} vs {r1}");
    }

    #[test]
    fn energy_ledger_is_additive() {
        let efficacy = EfficacyFamily::inverse_exponential(0.9, 1.0).unwrap();
        let spec = PipelineSpec {
            hops: vec![
                binary_identity_hop(0.05, 0.8, 6.0, efficacy),
                binary_identity_hop(0.02, 0.3, 2.0, efficacy),
            ],
            source_length: 5000,
            master_seed: 11,
            trials: 6,
        };
        let report = run_pipeline(&spec).unwrap();
        let per_level: f64 = report.levels.iter().map(|l| l.energy_mean).sum();
        assert!((report.total_energy_mean - per_level).abs() < 1e-9);
        for record in &report.records {
            let hop = &spec.hops[record.level];
            let bits_per_symbol =
                (hop.agent.stream_out_alphabet().size() as f64).log2();
            let expected_repair = hop.repair_cost * record.repaired as f64 * bits_per_symbol;
            assert!((record.energy_repair - expected_repair).abs() < 1e-9);
            assert!((record.energy_detect - hop.detect_energy * record.bits).abs() < 1e-9);
        }
    }

    #[test]
    fn model_comparison_on_a_matched_two_level_chain() {
        // Downstream z close to 1 realises the model's "everything left is
        // repaired downstream" assumption.
        let upstream_efficacy = EfficacyFamily::inverse_exponential(0.8, 1.0).unwrap();
        let downstream_efficacy = EfficacyFamily::inverse_exponential(0.999, 1e-6).unwrap();
        let k_up = 1.5;
        let spec = PipelineSpec {
            hops: vec![
                HopSpec {
                    agent: AgentSpec {
                        transform: demo_code(),
                        direction: Direction::Decode,
                    },
                    noise: NoiseSpec::new(0.1).unwrap(),
                    detect_energy: k_up,
                    repair_cost: 10.0,
                    efficacy: upstream_efficacy,
                },
                HopSpec {
                    agent: AgentSpec {
                        transform: TransformMatrix::identity(
                            Alphabet::new(["A", "B", "C", "D"]).unwrap(),
                        ),
                        direction: Direction::Encode,
                    },
                    noise: NoiseSpec::new(0.0).unwrap(),
                    detect_energy: 2.0,
                    repair_cost: 10.0,
                    efficacy: downstream_efficacy,
                },
            ],
            source_length: 500_000,
            master_seed: 31,
            trials: 5,
        };
        let report = run_pipeline(&spec).unwrap();
        let upstream_bits = report.levels[0].bits;
        let params = EnergyParams {
            error_rate: 0.1,
            upstream_repair_cost: 10.0,
            downstream_repair_cost: 10.0,
            upstream_bits,
            downstream_bits: report.levels[1].bits,
            efficacy: upstream_efficacy,
            coupling: crate::energy::Coupling::Independent,
            downstream_base_cost: 2.0,
            transit_noise: 0.0,
        }
        .validated()
        .unwrap();
        let stats = compare_with_model(&report, &params).unwrap();
        assert!(
            stats.energy_relative_deviation < 0.01,
            "energy deviation {}",
            stats.energy_relative_deviation
        );
        assert!(
            stats.residual_deviation_sigmas <= 3.0,
            "residual deviation {} sigma",
            stats.residual_deviation_sigmas
        );
        assert!(!stats.flagged);

        // A deliberately wrong error rate is a configuration mismatch.
        let mut wrong = params;
        wrong.error_rate = 0.2;
        assert!(matches!(
            compare_with_model(&report, &wrong),
            Err(PipelineError::ConfigMismatch(_))
        ));
    }

    #[test]
    fn noiseless_comparison_deviates_by_exactly_zero() {
        let efficacy = EfficacyFamily::inverse_exponential(0.8, 1.0).unwrap();
        let spec = PipelineSpec {
            hops: vec![binary_identity_hop(0.0, 1.5, 10.0, efficacy)],
            source_length: 10_000,
            master_seed: 47,
            trials: 3,
        };
        let report = run_pipeline(&spec).unwrap();
        let params = EnergyParams {
            error_rate: 0.0,
            upstream_repair_cost: 10.0,
            downstream_repair_cost: 10.0,
            upstream_bits: report.levels[0].bits,
            downstream_bits: report.levels[0].bits,
            efficacy,
            coupling: crate::energy::Coupling::Independent,
            downstream_base_cost: 0.0,
            transit_noise: 0.0,
        }
        .validated()
        .unwrap();
        let stats = compare_with_model(&report, &params).unwrap();
        assert_eq!(stats.energy_relative_deviation, 0.0);
        assert_eq!(stats.simulated_residual, 0.0);
        assert!(!stats.flagged);
    }

    #[test]
    fn mismatch_with_matching_tables_is_perfect() {
        let code = demo_code();
        let report = mismatch_experiment(&code, &code, 1000, 3).unwrap();
        assert_eq!(report.exact_accuracy, 1.0);
        assert_eq!(report.empirical_accuracy, 1.0);
        assert_eq!(report.confusion, vec![Some(0), Some(1), Some(2), Some(3)]);
    }

    #[test]
    fn swapped_pair_decoder_loses_half_the_symbols() {
        let encoder = demo_code();
        // Decoder has B and C encodings swapped.
        let input = Alphabet::new(["A", "B", "C", "D"]).unwrap();
        let output = Alphabet::new(["a", "b"]).unwrap();
        let decoder = TransformMatrix::from_labels(
            input,
            output,
            2,
            &[
                vec!["a", "a"],
                vec!["b", "a"],
                vec!["a", "b"],
                vec!["b", "b"],
            ],
        )
        .unwrap();
        let report = mismatch_experiment(&encoder, &decoder, 10_000, 17).unwrap();
        assert_eq!(report.exact_accuracy, 0.5);
        assert_eq!(report.confusion, vec![Some(0), Some(2), Some(1), Some(3)]);
        assert!((report.empirical_accuracy - 0.5).abs() < 0.02);
    }

    #[test]
    fn fully_permuted_decoder_loses_everything() {
        let encoder = demo_code();
        let input = Alphabet::new(["A", "B", "C", "D"]).unwrap();
        let output = Alphabet::new(["a", "b"]).unwrap();
        // Cyclic shift: no fixed points.
        let decoder = TransformMatrix::from_labels(
            input,
            output,
            2,
            &[
                vec!["b", "b"],
                vec!["a", "a"],
                vec!["a", "b"],
                vec!["b", "a"],
            ],
        )
        .unwrap();
        let report = mismatch_experiment(&encoder, &decoder, 100, 5).unwrap();
        assert_eq!(report.exact_accuracy, 0.0);
        assert_eq!(report.empirical_accuracy, 0.0);
    }

    #[test]
    fn mismatch_rejects_incompatible_shapes() {
        let encoder = demo_code();
        let other = TransformMatrix::identity(Alphabet::new(["x", "y"]).unwrap());
        assert!(matches!(
            mismatch_experiment(&encoder, &other, 10, 0),
            Err(PipelineError::DimensionMismatch(_))
        ));
    }
}
