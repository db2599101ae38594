//! Symbol-substitution noise and the detect/repair stages.
//!
//! Noise corrupts each position of a symbol stream independently with
//! probability `f`, replacing it by a uniformly chosen different symbol.
//! Detection and repair are deliberately abstract: instead of implementing a
//! concrete FEC scheme, the channel hands back oracle side information (the
//! ground-truth error mask plus the original stream) and detection finds each
//! truly corrupted position independently with probability `z(K)`, the
//! efficacy of the energy `K` spent per bit. There are no false positives:
//! repair is charged only for errors actually found.
//!
//! All randomness comes from ChaCha8 (the `rand_chacha` crate) seeded through
//! `seed_from_u64`, so any seed reproduces the same streams on every
//! platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("error rate {0} outside [0, 1)")]
    InvalidErrorRate(f64),
    #[error("invalid efficacy curve: {0}")]
    InvalidEfficacy(String),
    #[error("cannot corrupt symbols of a single-symbol alphabet")]
    DegenerateAlphabet,
    #[error("side information does not match the stream: {0}")]
    MaskMismatch(String),
}

impl ChannelError {
    pub fn code(&self) -> &'static str {
        match self {
            ChannelError::InvalidErrorRate(_) => "InvalidErrorRate",
            ChannelError::InvalidEfficacy(_) => "InvalidEfficacy",
            ChannelError::DegenerateAlphabet => "DegenerateAlphabet",
            ChannelError::MaskMismatch(_) => "MaskMismatch",
        }
    }
}

/// Memoryless substitution noise at symbol error rate `f` in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSpec {
    error_rate: f64,
}

impl NoiseSpec {
    pub fn new(error_rate: f64) -> Result<Self, ChannelError> {
        if !error_rate.is_finite() || !(0.0..1.0).contains(&error_rate) {
            return Err(ChannelError::InvalidErrorRate(error_rate));
        }
        Ok(Self { error_rate })
    }

    pub fn error_rate(&self) -> f64 {
        self.error_rate
    }
}

/// Detection-efficacy curve `z(K)`: the fraction of errors found per unit of
/// detection energy `K` spent per bit.
///
/// Every family satisfies `z(0) = 0`, is monotone non-decreasing, and stays
/// strictly below 1 for finite energy (`ceiling < 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EfficacyFamily<R: Real> {
    /// `z(K) = ceiling * (1 - exp(-K / scale))`: diminishing returns, the
    /// default choice.
    InverseExponential { ceiling: R, scale: R },
    /// `z(K) = ceiling * min(K / scale, 1)`: linear up to saturation.
    LinearSaturating { ceiling: R, scale: R },
}

impl<R: Real> EfficacyFamily<R> {
    pub fn inverse_exponential(ceiling: R, scale: R) -> Result<Self, ChannelError> {
        Self::validate(ceiling, scale)?;
        Ok(Self::InverseExponential { ceiling, scale })
    }

    pub fn linear_saturating(ceiling: R, scale: R) -> Result<Self, ChannelError> {
        Self::validate(ceiling, scale)?;
        Ok(Self::LinearSaturating { ceiling, scale })
    }

    fn validate(ceiling: R, scale: R) -> Result<(), ChannelError> {
        if !ceiling.is_finite() || ceiling < R::zero() || ceiling >= R::one() {
            return Err(ChannelError::InvalidEfficacy(format!(
                "ceiling {ceiling} outside [0, 1)"
            )));
        }
        if !scale.is_finite() || scale <= R::zero() {
            return Err(ChannelError::InvalidEfficacy(format!(
                "energy scale {scale} must be positive"
            )));
        }
        Ok(())
    }

    /// Efficacy at detection energy `energy >= 0`.
    pub fn value(&self, energy: R) -> R {
        let energy = energy.max(R::zero());
        match *self {
            Self::InverseExponential { ceiling, scale } => {
                ceiling * (R::one() - (-energy / scale).exp())
            }
            Self::LinearSaturating { ceiling, scale } => ceiling * (energy / scale).min(R::one()),
        }
    }

    /// Closed-form derivative `dz/dK`.
    ///
    /// The linear family saturates at `scale`; at the kink the saturated-side
    /// derivative (zero) is returned.
    pub fn slope(&self, energy: R) -> R {
        let energy = energy.max(R::zero());
        match *self {
            Self::InverseExponential { ceiling, scale } => {
                ceiling / scale * (-energy / scale).exp()
            }
            Self::LinearSaturating { ceiling, scale } => {
                if energy < scale {
                    ceiling / scale
                } else {
                    R::zero()
                }
            }
        }
    }
}

/// Oracle side information produced alongside noise: which positions were
/// corrupted, and the stream as it was before corruption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionSideInfo {
    mask: Vec<bool>,
    original: Vec<u16>,
}

impl CorrectionSideInfo {
    /// Side information computed after the fact, from a received stream and
    /// the stream it should have been.
    pub fn from_streams(received: &[u16], expected: &[u16]) -> Result<Self, ChannelError> {
        if received.len() != expected.len() {
            return Err(ChannelError::MaskMismatch(format!(
                "received {} symbols, expected {}",
                received.len(),
                expected.len()
            )));
        }
        let mask = received
            .iter()
            .zip(expected)
            .map(|(r, e)| r != e)
            .collect();
        Ok(Self {
            mask,
            original: expected.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn corrupted_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &hit)| hit.then_some(i))
    }

    pub fn corrupted_count(&self) -> usize {
        self.mask.iter().filter(|&&hit| hit).count()
    }
}

/// Corrupt a stream with substitution noise; deterministic per seed.
pub fn apply_noise(
    message: &[u16],
    alphabet_size: usize,
    spec: &NoiseSpec,
    seed: u64,
) -> Result<(Vec<u16>, CorrectionSideInfo), ChannelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    apply_noise_with_rng(message, alphabet_size, spec, &mut rng)
}

/// [`apply_noise`] driving an existing generator (used to chain stages).
pub fn apply_noise_with_rng(
    message: &[u16],
    alphabet_size: usize,
    spec: &NoiseSpec,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<u16>, CorrectionSideInfo), ChannelError> {
    if alphabet_size < 2 && spec.error_rate() > 0.0 {
        return Err(ChannelError::DegenerateAlphabet);
    }
    let mut corrupted = message.to_vec();
    let mut mask = vec![false; message.len()];
    if spec.error_rate() > 0.0 {
        for (pos, symbol) in corrupted.iter_mut().enumerate() {
            if rng.random::<f64>() < spec.error_rate() {
                // Uniform over the other alphabet symbols.
                let offset = rng.random_range(1..alphabet_size as u64);
                *symbol = ((*symbol as u64 + offset) % alphabet_size as u64) as u16;
                mask[pos] = true;
            }
        }
    }
    let side = CorrectionSideInfo {
        mask,
        original: message.to_vec(),
    };
    Ok((corrupted, side))
}

/// Find corrupted positions: each truly corrupted position is reported
/// independently with probability `detection_rate`; clean positions never
/// are. Positions come back sorted.
pub fn detect(
    corrupted: &[u16],
    truth: &CorrectionSideInfo,
    detection_rate: f64,
    seed: u64,
) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    detect_with_rng(corrupted, truth, detection_rate, &mut rng)
}

/// [`detect`] driving an existing generator.
pub fn detect_with_rng(
    corrupted: &[u16],
    truth: &CorrectionSideInfo,
    detection_rate: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    assert!(
        (0.0..1.0).contains(&detection_rate),
        "detection rate {detection_rate} outside [0, 1)"
    );
    assert_eq!(
        corrupted.len(),
        truth.len(),
        "stream and side information lengths differ"
    );
    truth
        .corrupted_positions()
        .filter(|_| rng.random::<f64>() < detection_rate)
        .collect()
}

/// Restore every detected position to its original symbol.
///
/// Detected positions must be a subset of the true error mask (detection
/// produces no false positives). Undetected errors remain in place.
pub fn repair(
    corrupted: &[u16],
    detected: &[usize],
    truth: &CorrectionSideInfo,
) -> Result<(Vec<u16>, usize), ChannelError> {
    if corrupted.len() != truth.len() {
        return Err(ChannelError::MaskMismatch(format!(
            "stream has {} symbols, side information {}",
            corrupted.len(),
            truth.len()
        )));
    }
    let mut repaired = corrupted.to_vec();
    for &pos in detected {
        if pos >= truth.len() || !truth.mask[pos] {
            return Err(ChannelError::MaskMismatch(format!(
                "position {pos} was not corrupted"
            )));
        }
        repaired[pos] = truth.original[pos];
    }
    Ok((repaired, detected.len()))
}
