//! Error-correction energy models and allocation.
//!
//! A correction level spends detection energy `K` per bit to find errors
//! (efficacy `z(K)`) and pays a per-bit repair cost `L` for each error found.
//! For two adjacent levels the normalised energy as a function of the
//! upstream detection energy `K` is
//!
//! ```text
//! E / I_up = K + f L_up z(K) + K_down(K) a + f L_down a (1 - z(K))
//! ```
//!
//! where `a` is the ratio of downstream to upstream information volume and
//! `K_down(K) = base + declining(K)` couples the downstream detection need to
//! the upstream spend. Errors missed upstream (`1 - z(K)`) are repaired
//! downstream. The model treats the bound as the value being minimised.
//!
//! The allocator scans a bracketing grid (the energy curve may be non-convex
//! or even discontinuous under a step coupling) and refines the best bracket
//! by golden-section search. Derivatives used by the stationarity conditions
//! come from closed forms per family, never from finite differences.

use serde::Serialize;
use thiserror::Error;

use crate::channel::EfficacyFamily;
use crate::Real;

/// Grid used to bracket the global minimum before golden-section refinement.
pub const BRACKET_GRID_POINTS: usize = 1024;

/// Relative tolerance on energy values: minima are located to
/// `RELATIVE_TOLERANCE * (energy scale)`.
pub const RELATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("invalid energy parameter: {0}")]
    InvalidParameter(String),
    #[error("coupling is not differentiable at detection energy {at}")]
    NotDifferentiable { at: f64 },
    #[error("invalid level stack: {0}")]
    InvalidLevels(String),
}

impl EnergyError {
    pub fn code(&self) -> &'static str {
        match self {
            EnergyError::InvalidParameter(_) => "InvalidParameter",
            EnergyError::NotDifferentiable { .. } => "NotDifferentiable",
            EnergyError::InvalidLevels(_) => "InvalidLevels",
        }
    }
}

/// How the downstream detection cost declines as upstream detection energy
/// rises. The declining part starts at `initial` and reaches or approaches
/// zero for large energies; `Independent` means no decline at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Coupling<R: Real> {
    Independent,
    /// `initial * exp(-k / scale)`.
    ExponentialDecay { initial: R, scale: R },
    /// `max(0, initial - k)`.
    LinearRamp { initial: R },
    /// `initial` below `threshold`, zero at and above it.
    Step { initial: R, threshold: R },
}

impl<R: Real> Coupling<R> {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let check = |value: R, name: &str, strict: bool| {
            if !value.is_finite() || value < R::zero() || (strict && value == R::zero()) {
                Err(EnergyError::InvalidParameter(format!(
                    "coupling {name} must be {}finite and nonnegative",
                    if strict { "positive, " } else { "" }
                )))
            } else {
                Ok(())
            }
        };
        match *self {
            Coupling::Independent => Ok(()),
            Coupling::ExponentialDecay { initial, scale } => {
                check(initial, "initial", false)?;
                check(scale, "scale", true)
            }
            Coupling::LinearRamp { initial } => check(initial, "initial", false),
            Coupling::Step { initial, threshold } => {
                check(initial, "initial", false)?;
                check(threshold, "threshold", true)
            }
        }
    }

    /// Declining component of the downstream detection cost at upstream
    /// energy `k`.
    pub fn declining_cost(&self, k: R) -> R {
        let k = k.max(R::zero());
        match *self {
            Coupling::Independent => R::zero(),
            Coupling::ExponentialDecay { initial, scale } => initial * (-k / scale).exp(),
            Coupling::LinearRamp { initial } => (initial - k).max(R::zero()),
            Coupling::Step { initial, threshold } => {
                if k < threshold {
                    initial
                } else {
                    R::zero()
                }
            }
        }
    }

    /// Closed-form derivative of the declining component.
    ///
    /// The step model is undefined at its jump; the linear ramp returns the
    /// saturated-side derivative (zero) at its kink.
    pub fn slope(&self, k: R) -> Result<R, EnergyError> {
        let k = k.max(R::zero());
        match *self {
            Coupling::Independent => Ok(R::zero()),
            Coupling::ExponentialDecay { initial, scale } => {
                Ok(-initial / scale * (-k / scale).exp())
            }
            Coupling::LinearRamp { initial } => {
                if k < initial {
                    Ok(-R::one())
                } else {
                    Ok(R::zero())
                }
            }
            Coupling::Step { threshold, .. } => {
                if k == threshold {
                    Err(EnergyError::NotDifferentiable {
                        at: k.to_f64().unwrap_or(f64::NAN),
                    })
                } else {
                    Ok(R::zero())
                }
            }
        }
    }
}

/// Parameters of the two-level energy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParams<R: Real> {
    /// Symbol error rate `f` on the upstream transmission.
    pub error_rate: R,
    /// Per-bit repair cost at the upstream level.
    pub upstream_repair_cost: R,
    /// Per-bit repair cost at the downstream level.
    pub downstream_repair_cost: R,
    /// Information volume handled upstream, in bits per message.
    pub upstream_bits: R,
    /// Information volume handled downstream, in bits per message.
    pub downstream_bits: R,
    /// Detection-efficacy curve of the upstream level.
    pub efficacy: EfficacyFamily<R>,
    /// Coupling of the downstream detection cost to the upstream spend.
    pub coupling: Coupling<R>,
    /// Baseline downstream detection cost, independent of upstream spend.
    pub downstream_base_cost: R,
    /// Fresh error rate on the hop between the levels; contributes a
    /// constant repair term and never moves the optimum.
    pub transit_noise: R,
}

impl<R: Real> EnergyParams<R> {
    /// Check every invariant; returns `self` for chained construction.
    pub fn validated(self) -> Result<Self, EnergyError> {
        let nonneg = |value: R, name: &str| {
            if !value.is_finite() || value < R::zero() {
                Err(EnergyError::InvalidParameter(format!(
                    "{name} must be finite and nonnegative, got {value}"
                )))
            } else {
                Ok(())
            }
        };
        let rate = |value: R, name: &str| {
            if !value.is_finite() || value < R::zero() || value >= R::one() {
                Err(EnergyError::InvalidParameter(format!(
                    "{name} must lie in [0, 1), got {value}"
                )))
            } else {
                Ok(())
            }
        };
        rate(self.error_rate, "error rate")?;
        rate(self.transit_noise, "transit noise")?;
        nonneg(self.upstream_repair_cost, "upstream repair cost")?;
        nonneg(self.downstream_repair_cost, "downstream repair cost")?;
        nonneg(self.downstream_bits, "downstream bits")?;
        nonneg(self.downstream_base_cost, "downstream base cost")?;
        if !self.upstream_bits.is_finite() || self.upstream_bits <= R::zero() {
            return Err(EnergyError::InvalidParameter(
                "upstream bits must be positive".to_string(),
            ));
        }
        self.coupling.validate()?;
        Ok(self)
    }

    /// Ratio of downstream to upstream information volume.
    pub fn bit_ratio(&self) -> R {
        self.downstream_bits / self.upstream_bits
    }

    /// Downstream detection cost at upstream detection energy `k`:
    /// `base + declining(k)`.
    pub fn downstream_detect_cost(&self, k: R) -> R {
        self.downstream_base_cost + self.coupling.declining_cost(k)
    }
}

/// Absolute energy of a single correction level: detection over all bits
/// plus repair of the errors found.
pub fn one_level_energy<R: Real>(p: &EnergyParams<R>, detect_energy: R) -> R {
    let z = p.efficacy.value(detect_energy);
    detect_energy * p.upstream_bits
        + p.error_rate * p.upstream_repair_cost * p.upstream_bits * z
}

/// Two-level energy normalised by the upstream information volume, as a
/// function of the upstream detection energy.
pub fn two_level_energy<R: Real>(p: &EnergyParams<R>, detect_energy: R) -> R {
    two_level_energy_core(p, detect_energy) + transit_noise_term(p, p.transit_noise)
}

/// Constant normalised repair term contributed by fresh noise of rate
/// `transit_noise` on the hop between the levels. Independent of the
/// upstream detection energy, so the optimiser's choice never changes.
pub fn transit_noise_term<R: Real>(p: &EnergyParams<R>, transit_noise: R) -> R {
    transit_noise * p.downstream_repair_cost * p.bit_ratio()
}

/// The `detect_energy`-dependent part of [`two_level_energy`].
fn two_level_energy_core<R: Real>(p: &EnergyParams<R>, detect_energy: R) -> R {
    let z = p.efficacy.value(detect_energy);
    let alpha = p.bit_ratio();
    detect_energy
        + p.error_rate * p.upstream_repair_cost * z
        + p.downstream_detect_cost(detect_energy) * alpha
        + p.error_rate * p.downstream_repair_cost * alpha * (R::one() - z)
}

/// Derivative of the normalised two-level energy with respect to the
/// upstream detection energy:
/// `1 + f (L_up - a L_down) z'(k) + a K_down'(k)`.
///
/// A zero is a stationary point of [`two_level_energy`].
pub fn stationarity_residual<R: Real>(
    p: &EnergyParams<R>,
    detect_energy: R,
) -> Result<R, EnergyError> {
    let z_slope = p.efficacy.slope(detect_energy);
    let alpha = p.bit_ratio();
    let coupling_slope = p.coupling.slope(detect_energy)?;
    Ok(R::one()
        + p.error_rate * (p.upstream_repair_cost - alpha * p.downstream_repair_cost) * z_slope
        + alpha * coupling_slope)
}

/// The stationarity condition rearranged as a balance between the decline of
/// the downstream need and the per-ratio detection payoff:
/// `(-declining'(k)) - (1/a + f (L_up - a L_down)/a z'(k))`.
///
/// Zero exactly where [`stationarity_residual`] is zero (the two forms differ
/// by the factor `-1/a`).
pub fn coupling_balance_residual<R: Real>(
    p: &EnergyParams<R>,
    detect_energy: R,
) -> Result<R, EnergyError> {
    let z_slope = p.efficacy.slope(detect_energy);
    let alpha = p.bit_ratio();
    let coupling_slope = p.coupling.slope(detect_energy)?;
    Ok(-coupling_slope
        - (R::one() / alpha
            + p.error_rate * (p.upstream_repair_cost - alpha * p.downstream_repair_cost) / alpha
                * z_slope))
}

/// Where the allocator found its minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerStatus {
    /// A stationary point strictly inside the feasible interval.
    Interior,
    /// The minimum sits at zero or at the energy ceiling.
    Boundary,
    /// The energy range over the feasible set is below tolerance; ties break
    /// to the smallest detection energy.
    Flat,
}

/// An energy allocation: detection energy per level (the final level's is
/// the coupled cost, not a free choice) and the energy it achieves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationResult<R: Real> {
    pub detect_energies: Vec<R>,
    pub total_energy: R,
    pub normalized_energy: R,
    pub status: OptimizerStatus,
}

/// Minimise the two-level energy over upstream detection energies in
/// `[0, k_max]`.
pub fn optimize_two_level<R: Real>(p: &EnergyParams<R>, k_max: R) -> AllocationResult<R> {
    assert!(
        k_max.is_finite() && k_max > R::zero(),
        "energy ceiling must be positive"
    );
    // The transit term is constant in k; keeping it out of the scanned
    // function makes the argmin exactly invariant under it.
    let scan = grid_golden_minimize(
        |k| two_level_energy_core(p, k),
        R::zero(),
        k_max,
        BRACKET_GRID_POINTS,
    );
    let normalized = scan.minimum + transit_noise_term(p, p.transit_noise);
    let status = scan.status(R::zero(), k_max);
    AllocationResult {
        detect_energies: vec![scan.argmin, p.downstream_detect_cost(scan.argmin)],
        total_energy: normalized * p.upstream_bits,
        normalized_energy: normalized,
        status,
    }
}

/// One correction level of a multi-level stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSpec<R: Real> {
    /// Per-bit repair cost at this level.
    pub repair_cost: R,
    /// Information volume handled at this level, bits per message.
    pub bits: R,
    /// Detection-efficacy curve; unused on the final level, which repairs
    /// every remaining error.
    pub efficacy: EfficacyFamily<R>,
    /// Coupling of this level's mandatory detection cost to the previous
    /// level's total spend. The first level has no predecessor and must use
    /// `Coupling::Independent` with a zero base.
    pub coupling: Coupling<R>,
    /// Baseline detection cost independent of the predecessor.
    pub base_cost: R,
}

fn validate_levels<R: Real>(levels: &[LevelSpec<R>], error_rate: R) -> Result<(), EnergyError> {
    if levels.len() < 2 {
        return Err(EnergyError::InvalidLevels(
            "a multi-level stack needs at least two levels".to_string(),
        ));
    }
    if !error_rate.is_finite() || error_rate < R::zero() || error_rate >= R::one() {
        return Err(EnergyError::InvalidParameter(format!(
            "error rate must lie in [0, 1), got {error_rate}"
        )));
    }
    for (i, level) in levels.iter().enumerate() {
        if !level.bits.is_finite() || level.bits <= R::zero() {
            return Err(EnergyError::InvalidLevels(format!(
                "level {i}: bits must be positive"
            )));
        }
        if !level.repair_cost.is_finite() || level.repair_cost < R::zero() {
            return Err(EnergyError::InvalidLevels(format!(
                "level {i}: repair cost must be nonnegative"
            )));
        }
        if !level.base_cost.is_finite() || level.base_cost < R::zero() {
            return Err(EnergyError::InvalidLevels(format!(
                "level {i}: base cost must be nonnegative"
            )));
        }
        level.coupling.validate()?;
    }
    if levels[0].coupling != Coupling::Independent || levels[0].base_cost != R::zero() {
        return Err(EnergyError::InvalidLevels(
            "the first level has no predecessor: its coupling must be independent with zero base"
                .to_string(),
        ));
    }
    Ok(())
}

/// Detection energies actually spent per level for the given free choices:
/// each non-final level spends its coupled mandatory cost plus its free
/// allocation; the final level spends only the coupled cost.
pub fn level_detect_energies<R: Real>(
    levels: &[LevelSpec<R>],
    free_energies: &[R],
) -> Result<Vec<R>, EnergyError> {
    if free_energies.len() + 1 != levels.len() {
        return Err(EnergyError::InvalidLevels(format!(
            "{} free energies for {} levels; the final level is not free",
            free_energies.len(),
            levels.len()
        )));
    }
    Ok(spent_energies(levels, free_energies))
}

fn spent_energies<R: Real>(levels: &[LevelSpec<R>], free_energies: &[R]) -> Vec<R> {
    let mut spent = Vec::with_capacity(levels.len());
    for (i, level) in levels.iter().enumerate() {
        let mandatory = if i == 0 {
            R::zero()
        } else {
            level.base_cost + level.coupling.declining_cost(spent[i - 1])
        };
        let free = free_energies.get(i).copied().unwrap_or(R::zero());
        spent.push(mandatory + free.max(R::zero()));
    }
    spent
}

/// Total multi-level energy normalised by the first level's bits.
///
/// Errors enter at rate `error_rate`; level `i` repairs the share its
/// efficacy finds of what reaches it, and the final level repairs everything
/// left.
pub fn multilevel_energy<R: Real>(
    levels: &[LevelSpec<R>],
    error_rate: R,
    free_energies: &[R],
) -> Result<R, EnergyError> {
    validate_levels(levels, error_rate)?;
    level_detect_energies(levels, free_energies)?;
    Ok(multilevel_energy_unchecked(levels, error_rate, free_energies))
}

fn multilevel_energy_unchecked<R: Real>(
    levels: &[LevelSpec<R>],
    error_rate: R,
    free_energies: &[R],
) -> R {
    let spent = spent_energies(levels, free_energies);
    let head_bits = levels[0].bits;
    let mut residual_rate = error_rate;
    let mut energy = R::zero();
    let last = levels.len() - 1;
    for (i, level) in levels.iter().enumerate() {
        let weight = level.bits / head_bits;
        if i < last {
            let z = level.efficacy.value(spent[i]);
            energy += weight * (spent[i] + residual_rate * level.repair_cost * z);
            residual_rate *= R::one() - z;
        } else {
            energy += weight * (spent[i] + residual_rate * level.repair_cost);
        }
    }
    energy
}

/// Minimise the multi-level energy over the free per-level detection
/// energies, each in `[0, k_max]`.
///
/// The first descent pass realises the recursive two-level reduction: each
/// level is optimised against the whole remaining stack held at its
/// mandatory floor. Further passes refine coordinate by coordinate until the
/// energy stops improving.
pub fn optimize_multilevel<R: Real>(
    levels: &[LevelSpec<R>],
    error_rate: R,
    k_max: R,
) -> Result<AllocationResult<R>, EnergyError> {
    validate_levels(levels, error_rate)?;
    if !k_max.is_finite() || k_max <= R::zero() {
        return Err(EnergyError::InvalidParameter(
            "energy ceiling must be positive".to_string(),
        ));
    }
    let free_count = levels.len() - 1;
    let mut free = vec![R::zero(); free_count];
    let tolerance = R::of(RELATIVE_TOLERANCE);
    let mut best = multilevel_energy_unchecked(levels, error_rate, &free);
    let mut all_flat = false;
    for _pass in 0..64 {
        let mut improved = false;
        all_flat = true;
        for slot in 0..free_count {
            let scan = grid_golden_minimize(
                |k| {
                    let mut probe = free.clone();
                    probe[slot] = k;
                    multilevel_energy_unchecked(levels, error_rate, &probe)
                },
                R::zero(),
                k_max,
                BRACKET_GRID_POINTS,
            );
            if !matches!(scan.status(R::zero(), k_max), OptimizerStatus::Flat) {
                all_flat = false;
            }
            if scan.minimum < best - tolerance * scale_of(best) {
                improved = true;
            }
            if scan.minimum <= best {
                free[slot] = scan.argmin;
                best = scan.minimum;
            }
        }
        if !improved {
            break;
        }
    }
    let spent = level_detect_energies(levels, &free)?;
    let normalized = multilevel_energy_unchecked(levels, error_rate, &free);
    let status = if all_flat {
        OptimizerStatus::Flat
    } else if free.iter().any(|&k| k == R::zero() || k == k_max) {
        OptimizerStatus::Boundary
    } else {
        OptimizerStatus::Interior
    };
    Ok(AllocationResult {
        detect_energies: spent,
        total_energy: normalized * levels[0].bits,
        normalized_energy: normalized,
        status,
    })
}

struct ScanOutcome<R> {
    argmin: R,
    minimum: R,
    flat: bool,
}

impl<R: Real> ScanOutcome<R> {
    fn status(&self, lo: R, hi: R) -> OptimizerStatus {
        if self.flat {
            OptimizerStatus::Flat
        } else if self.argmin == lo || self.argmin == hi {
            OptimizerStatus::Boundary
        } else {
            OptimizerStatus::Interior
        }
    }
}

fn scale_of<R: Real>(value: R) -> R {
    value.abs().max(R::one())
}

/// Global 1-D minimisation: bracket on a uniform grid (ties keep the smallest
/// abscissa), then refine the winning bracket by golden-section search. The
/// refined point replaces the grid point only when strictly better, so exact
/// boundary minima stay exactly on the boundary.
fn grid_golden_minimize<R: Real>(
    f: impl Fn(R) -> R,
    lo: R,
    hi: R,
    grid_points: usize,
) -> ScanOutcome<R> {
    debug_assert!(grid_points >= 2);
    let span = hi - lo;
    let steps = R::from_usize(grid_points - 1).expect("grid size fits the scalar");
    let mut best_index = 0usize;
    let mut best_x = lo;
    let mut best_val = f(lo);
    let mut max_val = best_val;
    for i in 1..grid_points {
        let x = lo + span * (R::from_usize(i).expect("grid index fits the scalar") / steps);
        let value = f(x);
        if value < best_val {
            best_val = value;
            best_x = x;
            best_index = i;
        }
        if value > max_val {
            max_val = value;
        }
    }
    // Flatness is judged against the observed energy scale.
    let scale = max_val.abs().max(best_val.abs());
    if max_val - best_val <= R::of(RELATIVE_TOLERANCE) * scale {
        return ScanOutcome {
            argmin: lo,
            minimum: f(lo),
            flat: true,
        };
    }

    // Golden-section refinement inside the winning bracket.
    let step = span / steps;
    let mut a = if best_index == 0 { lo } else { best_x - step };
    let mut b = if best_index == grid_points - 1 {
        hi
    } else {
        best_x + step
    };
    a = a.max(lo);
    b = b.min(hi);
    let inv_phi = R::of(0.618_033_988_749_894_9);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..128 {
        if b - a <= step * R::of(1e-9) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    let (cand_x, cand_val) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    let refined_better =
        cand_val < best_val || (cand_val == best_val && cand_x < best_x);
    let (argmin, minimum) = if refined_better {
        (cand_x, cand_val)
    } else {
        (best_x, best_val)
    };
    ScanOutcome {
        argmin,
        minimum,
        flat: false,
    }
}
