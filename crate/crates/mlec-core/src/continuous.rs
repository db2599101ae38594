//! Path-integral information measures for continuous signals.
//!
//! A signal is a trajectory through a phase space carrying a probability
//! density field. The divergence between two signals is the time integral of
//! `p_a(a(t)) log2(p_a(a(t)) / p_b(b(t)))` along their paths: density
//! values sampled along the trajectories, integrated over time, not the
//! usual state-space integral. Mutual information is the divergence of a
//! joint density from the product of the marginals, and for an output built
//! from independent inputs (output density = product of input densities) the
//! output entropy splits exactly into the per-input mutual informations.
//!
//! All integrals are trapezoidal on a shared time grid with fixed-order
//! pairwise summation, so results are deterministic bit for bit. Results are
//! plain time integrals (bit-seconds); divide by the duration for a
//! per-second reading. Logarithms are base 2 throughout.

use serde::Serialize;
use thiserror::Error;

use crate::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContinuousError {
    #[error("trajectories do not share a time grid")]
    GridMismatch,
    #[error("dimension mismatch: {0}")]
    ShapeMismatch(String),
    #[error("output density is not the product of the input densities (first at grid index {at_index})")]
    NotAProductDensity { at_index: usize },
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("input index {index} out of range for {count} inputs")]
    InputOutOfRange { index: usize, count: usize },
}

impl ContinuousError {
    pub fn code(&self) -> &'static str {
        match self {
            ContinuousError::GridMismatch => "GridMismatch",
            ContinuousError::ShapeMismatch(_) => "ShapeMismatch",
            ContinuousError::NotAProductDensity { .. } => "NotAProductDensity",
            ContinuousError::InvalidDensity(_) => "InvalidDensity",
            ContinuousError::InvalidTrajectory(_) => "InvalidTrajectory",
            ContinuousError::InputOutOfRange { .. } => "InputOutOfRange",
        }
    }
}

/// A sampled path through a phase space: strictly increasing times with one
/// coordinate vector per sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<R: Real> {
    times: Vec<R>,
    points: Vec<Vec<R>>,
}

impl<R: Real> Trajectory<R> {
    pub fn new(times: Vec<R>, points: Vec<Vec<R>>) -> Result<Self, ContinuousError> {
        if times.len() < 2 {
            return Err(ContinuousError::InvalidTrajectory(
                "need at least two samples".to_string(),
            ));
        }
        if times.len() != points.len() {
            return Err(ContinuousError::InvalidTrajectory(format!(
                "{} times for {} points",
                times.len(),
                points.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(ContinuousError::InvalidTrajectory(
                "times must be finite".to_string(),
            ));
        }
        for pair in times.windows(2) {
            if pair[1] <= pair[0] {
                return Err(ContinuousError::InvalidTrajectory(
                    "times must be strictly increasing".to_string(),
                ));
            }
        }
        let dims = points[0].len();
        if dims == 0 {
            return Err(ContinuousError::InvalidTrajectory(
                "points need at least one coordinate".to_string(),
            ));
        }
        if points.iter().any(|p| p.len() != dims) {
            return Err(ContinuousError::InvalidTrajectory(
                "all points must share the dimension".to_string(),
            ));
        }
        Ok(Self { times, points })
    }

    /// Sample `point_of(t)` on a uniform grid of `samples` points over
    /// `[t0, t1]`.
    pub fn sampled(
        t0: R,
        t1: R,
        samples: usize,
        point_of: impl Fn(R) -> Vec<R>,
    ) -> Result<Self, ContinuousError> {
        if samples < 2 {
            return Err(ContinuousError::InvalidTrajectory(
                "need at least two samples".to_string(),
            ));
        }
        let steps = R::from_usize(samples - 1).expect("sample count fits the scalar");
        let times: Vec<R> = (0..samples)
            .map(|i| {
                t0 + (t1 - t0) * (R::from_usize(i).expect("sample index fits the scalar") / steps)
            })
            .collect();
        let points = times.iter().map(|&t| point_of(t)).collect();
        Self::new(times, points)
    }

    pub fn times(&self) -> &[R] {
        &self.times
    }

    pub fn points(&self) -> &[Vec<R>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.points[0].len()
    }

    pub fn duration(&self) -> R {
        *self.times.last().expect("validated nonempty") - self.times[0]
    }

    /// Concatenate coordinates with another trajectory on the same grid.
    pub fn concat(&self, other: &Trajectory<R>) -> Result<Trajectory<R>, ContinuousError> {
        if self.times != other.times {
            return Err(ContinuousError::GridMismatch);
        }
        let points = self
            .points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| {
                let mut p = a.clone();
                p.extend_from_slice(b);
                p
            })
            .collect();
        Trajectory::new(self.times.clone(), points)
    }
}

/// A time-invariant probability density field over a phase space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DensityField<R: Real> {
    /// Uniform density `value` over a `dims`-dimensional space.
    Constant { value: R, dims: usize },
    /// Axis-aligned normal density with one mean and width per coordinate.
    Gaussian { means: Vec<R>, sigmas: Vec<R> },
    /// Product of factor densities over consecutive coordinate slices.
    Product { factors: Vec<DensityField<R>> },
}

impl<R: Real> DensityField<R> {
    pub fn constant(value: R, dims: usize) -> Result<Self, ContinuousError> {
        if !value.is_finite() || value < R::zero() {
            return Err(ContinuousError::InvalidDensity(format!(
                "density value {value} must be finite and nonnegative"
            )));
        }
        if dims == 0 {
            return Err(ContinuousError::InvalidDensity(
                "density needs at least one dimension".to_string(),
            ));
        }
        Ok(Self::Constant { value, dims })
    }

    pub fn gaussian(means: Vec<R>, sigmas: Vec<R>) -> Result<Self, ContinuousError> {
        if means.is_empty() || means.len() != sigmas.len() {
            return Err(ContinuousError::InvalidDensity(
                "means and sigmas must be nonempty and of equal length".to_string(),
            ));
        }
        if sigmas.iter().any(|s| !s.is_finite() || *s <= R::zero()) {
            return Err(ContinuousError::InvalidDensity(
                "sigmas must be positive".to_string(),
            ));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(ContinuousError::InvalidDensity(
                "means must be finite".to_string(),
            ));
        }
        Ok(Self::Gaussian { means, sigmas })
    }

    pub fn product(factors: Vec<DensityField<R>>) -> Result<Self, ContinuousError> {
        if factors.is_empty() {
            return Err(ContinuousError::InvalidDensity(
                "a product density needs at least one factor".to_string(),
            ));
        }
        Ok(Self::Product { factors })
    }

    pub fn dims(&self) -> usize {
        match self {
            Self::Constant { dims, .. } => *dims,
            Self::Gaussian { means, .. } => means.len(),
            Self::Product { factors } => factors.iter().map(Self::dims).sum(),
        }
    }

    /// Density value at a point of matching dimension.
    pub fn evaluate(&self, point: &[R]) -> Result<R, ContinuousError> {
        if point.len() != self.dims() {
            return Err(ContinuousError::ShapeMismatch(format!(
                "point has {} coordinates, field expects {}",
                point.len(),
                self.dims()
            )));
        }
        Ok(self.evaluate_unchecked(point))
    }

    fn evaluate_unchecked(&self, point: &[R]) -> R {
        match self {
            Self::Constant { value, .. } => *value,
            Self::Gaussian { means, sigmas } => {
                let tau = R::of(2.0) * R::of(std::f64::consts::PI);
                let mut density = R::one();
                for ((&x, &mean), &sigma) in point.iter().zip(means).zip(sigmas) {
                    let standard = (x - mean) / sigma;
                    density = density
                        * (-standard * standard / R::of(2.0)).exp()
                        / (sigma * tau.sqrt());
                }
                density
            }
            Self::Product { factors } => {
                let mut density = R::one();
                let mut offset = 0;
                for factor in factors {
                    let dims = factor.dims();
                    density *= factor.evaluate_unchecked(&point[offset..offset + dims]);
                    offset += dims;
                }
                density
            }
        }
    }
}

/// Fixed-order pairwise summation: deterministic and accurate for long grids.
fn pairwise_sum<R: Real>(values: &[R]) -> R {
    match values.len() {
        0 => R::zero(),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Trapezoidal integral of sampled values over the grid.
fn trapezoid<R: Real>(times: &[R], values: &[R]) -> R {
    let half = R::of(0.5);
    let contributions: Vec<R> = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| half * (v[0] + v[1]) * (t[1] - t[0]))
        .collect();
    pairwise_sum(&contributions)
}

fn check_shared_grid<R: Real>(a: &Trajectory<R>, b: &Trajectory<R>) -> Result<(), ContinuousError> {
    if a.times() != b.times() {
        return Err(ContinuousError::GridMismatch);
    }
    Ok(())
}

fn check_field<R: Real>(
    field: &DensityField<R>,
    traj: &Trajectory<R>,
) -> Result<(), ContinuousError> {
    if field.dims() != traj.dims() {
        return Err(ContinuousError::ShapeMismatch(format!(
            "field over {} dimensions, trajectory over {}",
            field.dims(),
            traj.dims()
        )));
    }
    Ok(())
}

/// Relative entropy between two signals as a time integral along their
/// paths:
/// `D(a || b) = integral of p_a(a(t)) log2(p_a(a(t)) / p_b(b(t))) dt`.
///
/// Points where `p_a` vanishes contribute zero (the `x log x` limit); a
/// point with `p_b = 0 < p_a` makes the divergence infinite, reported as the
/// `+inf` marker value rather than an error.
pub fn path_relative_entropy<R: Real>(
    p_a: &DensityField<R>,
    traj_a: &Trajectory<R>,
    p_b: &DensityField<R>,
    traj_b: &Trajectory<R>,
) -> Result<R, ContinuousError> {
    check_shared_grid(traj_a, traj_b)?;
    check_field(p_a, traj_a)?;
    check_field(p_b, traj_b)?;
    let mut integrand = Vec::with_capacity(traj_a.len());
    for (point_a, point_b) in traj_a.points().iter().zip(traj_b.points()) {
        let a = p_a.evaluate_unchecked(point_a);
        let b = p_b.evaluate_unchecked(point_b);
        if a == R::zero() {
            integrand.push(R::zero());
        } else if b == R::zero() {
            return Ok(R::infinity());
        } else {
            integrand.push(a * (a / b).log2());
        }
    }
    Ok(trapezoid(traj_a.times(), &integrand))
}

/// Path entropy of a signal: `-integral of p(q(t)) log2 p(q(t)) dt`.
pub fn path_entropy<R: Real>(
    p: &DensityField<R>,
    traj: &Trajectory<R>,
) -> Result<R, ContinuousError> {
    check_field(p, traj)?;
    let integrand: Vec<R> = traj
        .points()
        .iter()
        .map(|point| {
            let density = p.evaluate_unchecked(point);
            if density == R::zero() {
                R::zero()
            } else {
                -(density * density.log2())
            }
        })
        .collect();
    Ok(trapezoid(traj.times(), &integrand))
}

/// Mutual information of two signals over a time interval:
/// `I(a; b) = D(joint || marginal_a * marginal_b)` along the paths, with the
/// joint evaluated on the concatenated trajectory.
pub fn path_mutual_information<R: Real>(
    joint: &DensityField<R>,
    marginal_a: &DensityField<R>,
    traj_a: &Trajectory<R>,
    marginal_b: &DensityField<R>,
    traj_b: &Trajectory<R>,
) -> Result<R, ContinuousError> {
    check_shared_grid(traj_a, traj_b)?;
    check_field(marginal_a, traj_a)?;
    check_field(marginal_b, traj_b)?;
    let joint_traj = traj_a.concat(traj_b)?;
    check_field(joint, &joint_traj)?;
    let product = DensityField::Product {
        factors: vec![marginal_a.clone(), marginal_b.clone()],
    };
    path_relative_entropy(joint, &joint_traj, &product, &joint_traj)
}

/// Expected entropy of one input weighted by the other inputs' densities:
/// `-integral of p(q(t)) * prod_others * log2 p(q(t)) dt`.
///
/// For an output assembled from independent inputs this equals the mutual
/// information between that input and the output.
pub fn expected_entropy<R: Real>(
    p: &DensityField<R>,
    traj: &Trajectory<R>,
    others: &[(&DensityField<R>, &Trajectory<R>)],
) -> Result<R, ContinuousError> {
    check_field(p, traj)?;
    for (field, other_traj) in others {
        check_shared_grid(traj, other_traj)?;
        check_field(field, other_traj)?;
    }
    let mut integrand = Vec::with_capacity(traj.len());
    for (index, point) in traj.points().iter().enumerate() {
        let density = p.evaluate_unchecked(point);
        let mut weight = R::one();
        for (field, other_traj) in others {
            weight *= field.evaluate_unchecked(&other_traj.points()[index]);
        }
        if density == R::zero() {
            integrand.push(R::zero());
        } else {
            integrand.push(-(density * weight * density.log2()));
        }
    }
    Ok(trapezoid(traj.times(), &integrand))
}

/// Outcome of the entropy-additivity identity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdditivityReport<R: Real> {
    /// Path entropy of the output signal.
    pub output_entropy: R,
    /// Mutual information of each input with the output.
    pub per_input: Vec<R>,
    /// Sum of the per-input mutual informations.
    pub mutual_information_sum: R,
    /// `|output_entropy - mutual_information_sum|`.
    pub gap: R,
}

/// Tolerance for the pointwise product-density validation.
pub const PRODUCT_TOLERANCE: f64 = 1e-9;

fn check_product_construction<R: Real>(
    inputs: &[(DensityField<R>, Trajectory<R>)],
    output: &DensityField<R>,
    output_traj: &Trajectory<R>,
) -> Result<(), ContinuousError> {
    if inputs.is_empty() {
        return Err(ContinuousError::ShapeMismatch(
            "need at least one input signal".to_string(),
        ));
    }
    check_field(output, output_traj)?;
    for (field, traj) in inputs {
        check_shared_grid(output_traj, traj)?;
        check_field(field, traj)?;
    }
    let tolerance = R::of(PRODUCT_TOLERANCE);
    for index in 0..output_traj.len() {
        let out = output.evaluate_unchecked(&output_traj.points()[index]);
        let mut product = R::one();
        for (field, traj) in inputs {
            product *= field.evaluate_unchecked(&traj.points()[index]);
        }
        let scale = R::one().max(product.abs());
        if (out - product).abs() > tolerance * scale {
            return Err(ContinuousError::NotAProductDensity { at_index: index });
        }
    }
    Ok(())
}

/// Verify that the output entropy splits into the per-input mutual
/// informations when the output density is the product of the input
/// densities (independent inputs).
pub fn additivity_check<R: Real>(
    inputs: &[(DensityField<R>, Trajectory<R>)],
    output: &DensityField<R>,
    output_traj: &Trajectory<R>,
) -> Result<AdditivityReport<R>, ContinuousError> {
    check_product_construction(inputs, output, output_traj)?;
    let output_entropy = path_entropy(output, output_traj)?;
    let mut per_input = Vec::with_capacity(inputs.len());
    for (index, (field, traj)) in inputs.iter().enumerate() {
        let others: Vec<(&DensityField<R>, &Trajectory<R>)> = inputs
            .iter()
            .enumerate()
            .filter(|(other, _)| *other != index)
            .map(|(_, (f, t))| (f, t))
            .collect();
        per_input.push(expected_entropy(field, traj, &others)?);
    }
    let mutual_information_sum = pairwise_sum(&per_input);
    let gap = (output_entropy - mutual_information_sum).abs();
    Ok(AdditivityReport {
        output_entropy,
        per_input,
        mutual_information_sum,
        gap,
    })
}

/// Entropy of the output conditional on a subset of the inputs:
/// `H(r) - sum of I(q_i; r)` over the conditioning set. Under the product
/// construction this equals the mutual information with the other inputs.
pub fn conditional_entropy<R: Real>(
    inputs: &[(DensityField<R>, Trajectory<R>)],
    output: &DensityField<R>,
    output_traj: &Trajectory<R>,
    condition_on: &[usize],
) -> Result<R, ContinuousError> {
    for &index in condition_on {
        if index >= inputs.len() {
            return Err(ContinuousError::InputOutOfRange {
                index,
                count: inputs.len(),
            });
        }
    }
    let report = additivity_check(inputs, output, output_traj)?;
    let conditioned: Vec<R> = condition_on
        .iter()
        .map(|&index| report.per_input[index])
        .collect();
    Ok(report.output_entropy - pairwise_sum(&conditioned))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(samples: usize) -> Trajectory<f64> {
        Trajectory::sampled(0.0, 1.0, samples, |t| vec![t]).unwrap()
    }

    #[test]
    fn trajectory_validation() {
        assert!(Trajectory::new(vec![0.0], vec![vec![0.0]]).is_err());
        assert!(Trajectory::new(vec![0.0, 0.0], vec![vec![0.0], vec![0.0]]).is_err());
        assert!(Trajectory::new(vec![0.0, 1.0], vec![vec![0.0], vec![0.0, 1.0]]).is_err());
        let t = unit_grid(11);
        assert_eq!(t.len(), 11);
        assert_eq!(t.dims(), 1);
        assert!((t.duration() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn self_divergence_is_exactly_zero() {
        let traj = unit_grid(101);
        let p = DensityField::gaussian(vec![0.3], vec![0.5]).unwrap();
        let d = path_relative_entropy(&p, &traj, &p, &traj).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn constant_density_closed_form() {
        let traj = unit_grid(1001);
        let p_a = DensityField::constant(0.5, 1).unwrap();
        let p_b = DensityField::constant(0.25, 1).unwrap();
        let d = path_relative_entropy(&p_a, &traj, &p_b, &traj).unwrap();
        // 0.5 * log2(2) integrated over the unit interval.
        assert!((d - 0.5).abs() < 1e-12, "got {d}");
    }

    #[test]
    fn quadrature_converges_for_smooth_fields() {
        let p_a = DensityField::gaussian(vec![0.2], vec![0.6]).unwrap();
        let p_b = DensityField::gaussian(vec![-0.1], vec![0.8]).unwrap();
        let path = |t: f64| vec![(2.0 * t).sin() * 0.5];
        let coarse = {
            let traj = Trajectory::sampled(0.0, 1.0, 501, path).unwrap();
            path_relative_entropy(&p_a, &traj, &p_b, &traj).unwrap()
        };
        let fine = {
            let traj = Trajectory::sampled(0.0, 1.0, 1001, path).unwrap();
            path_relative_entropy(&p_a, &traj, &p_b, &traj).unwrap()
        };
        assert!((coarse - fine).abs() < 1e-6, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn vanishing_reference_density_is_an_infinity_marker() {
        let traj = unit_grid(11);
        let p_a = DensityField::constant(0.5, 1).unwrap();
        let p_b = DensityField::constant(0.0, 1).unwrap();
        let d = path_relative_entropy(&p_a, &traj, &p_b, &traj).unwrap();
        assert!(d.is_infinite() && d > 0.0);
        // The reverse direction contributes zero everywhere.
        let reverse = path_relative_entropy(&p_b, &traj, &p_a, &traj).unwrap();
        assert_eq!(reverse, 0.0);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = unit_grid(11);
        let b = unit_grid(12);
        let p = DensityField::constant(1.0, 1).unwrap();
        assert_eq!(
            path_relative_entropy(&p, &a, &p, &b).unwrap_err(),
            ContinuousError::GridMismatch
        );
    }

    #[test]
    fn independent_joint_carries_no_information() {
        let traj = unit_grid(101);
        let p_a = DensityField::gaussian(vec![0.0], vec![1.0]).unwrap();
        let p_b = DensityField::gaussian(vec![0.5], vec![0.7]).unwrap();
        let joint = DensityField::product(vec![p_a.clone(), p_b.clone()]).unwrap();
        let mi = path_mutual_information(&joint, &p_a, &traj, &p_b, &traj).unwrap();
        assert!(mi.abs() < 1e-12, "got {mi}");
    }

    #[test]
    fn constant_pair_mutual_information() {
        // p(q1) = p(q2) = 0.5 on the unit interval: I(q1; r) = 0.25 bits.
        // The output is the pair r = (q1, q2); independence makes the joint
        // density of (q1, r) equal p(q1) p(q2), expressed over the
        // concatenated (q1, q1, q2) coordinates.
        let traj = unit_grid(1001);
        let half = DensityField::constant(0.5, 1).unwrap();
        let one = DensityField::constant(1.0, 1).unwrap();
        let output_density = DensityField::product(vec![half.clone(), half.clone()]).unwrap();
        let output_traj = traj.concat(&traj).unwrap();
        let joint =
            DensityField::product(vec![half.clone(), one, half.clone()]).unwrap();
        let mi =
            path_mutual_information(&joint, &half, &traj, &output_density, &output_traj).unwrap();
        assert!((mi - 0.25).abs() < 1e-12, "got {mi}");
    }

    #[test]
    fn expected_entropy_closed_form_and_consistency() {
        let traj = unit_grid(1001);
        let half = DensityField::constant(0.5, 1).unwrap();
        // Unit density over one factor: plain path entropy.
        let one = DensityField::constant(1.0, 1).unwrap();
        let plain = expected_entropy(&one, &traj, &[]).unwrap();
        assert_eq!(plain, 0.0);

        let weighted = expected_entropy(&half, &traj, &[(&half, &traj)]).unwrap();
        assert!((weighted - 0.25).abs() < 1e-12, "got {weighted}");

        // Matches the mutual-information route of the independent pair.
        let output_density = DensityField::product(vec![half.clone(), half.clone()]).unwrap();
        let output_traj = traj.concat(&traj).unwrap();
        let joint = DensityField::product(vec![half.clone(), one, half.clone()]).unwrap();
        let mi =
            path_mutual_information(&joint, &half, &traj, &output_density, &output_traj).unwrap();
        assert!((weighted - mi).abs() < 1e-12);
    }

    #[test]
    fn additivity_of_two_constant_inputs() {
        let traj = unit_grid(1001);
        let half = DensityField::constant(0.5, 1).unwrap();
        let inputs = vec![(half.clone(), traj.clone()), (half.clone(), traj.clone())];
        let output = DensityField::product(vec![half.clone(), half]).unwrap();
        let output_traj = traj.concat(&traj).unwrap();
        let report = additivity_check(&inputs, &output, &output_traj).unwrap();
        assert!((report.output_entropy - 0.5).abs() < 1e-12);
        assert!((report.per_input[0] - 0.25).abs() < 1e-12);
        assert!((report.per_input[1] - 0.25).abs() < 1e-12);
        assert!(report.gap < 1e-12);
    }

    #[test]
    fn additivity_with_a_single_input_is_trivial() {
        let traj = unit_grid(101);
        let p = DensityField::gaussian(vec![0.1], vec![0.4]).unwrap();
        let report = additivity_check(&[(p.clone(), traj.clone())], &p, &traj).unwrap();
        assert!(report.gap < 1e-12);
        assert_eq!(report.per_input.len(), 1);
    }

    #[test]
    fn additivity_of_three_gaussian_inputs() {
        let grid = 1001;
        let traj_a =
            Trajectory::sampled(0.0, 1.0, grid, |t: f64| vec![(3.0 * t).sin()]).unwrap();
        let traj_b = Trajectory::sampled(0.0, 1.0, grid, |t| vec![0.5 * t]).unwrap();
        let traj_c =
            Trajectory::sampled(0.0, 1.0, grid, |t: f64| vec![(2.0 * t).cos() * 0.3]).unwrap();
        let p_a = DensityField::gaussian(vec![0.0], vec![0.8]).unwrap();
        let p_b = DensityField::gaussian(vec![0.25], vec![0.5]).unwrap();
        let p_c = DensityField::gaussian(vec![-0.1], vec![0.9]).unwrap();
        let inputs = vec![
            (p_a.clone(), traj_a.clone()),
            (p_b.clone(), traj_b.clone()),
            (p_c.clone(), traj_c.clone()),
        ];
        let output = DensityField::product(vec![p_a, p_b, p_c]).unwrap();
        let output_traj = traj_a.concat(&traj_b).unwrap().concat(&traj_c).unwrap();
        let report = additivity_check(&inputs, &output, &output_traj).unwrap();
        assert!(report.gap < 1e-6, "gap {}", report.gap);
    }

    #[test]
    fn non_product_output_is_rejected() {
        let traj = unit_grid(11);
        let half = DensityField::constant(0.5, 1).unwrap();
        let wrong = DensityField::constant(0.3, 2).unwrap();
        let inputs = vec![(half.clone(), traj.clone()), (half, traj.clone())];
        let output_traj = traj.concat(&traj).unwrap();
        assert!(matches!(
            additivity_check(&inputs, &wrong, &output_traj),
            Err(ContinuousError::NotAProductDensity { at_index: 0 })
        ));
    }

    #[test]
    fn conditional_entropy_decomposition() {
        let traj = unit_grid(1001);
        let half = DensityField::constant(0.5, 1).unwrap();
        let inputs = vec![(half.clone(), traj.clone()), (half.clone(), traj.clone())];
        let output = DensityField::product(vec![half.clone(), half]).unwrap();
        let output_traj = traj.concat(&traj).unwrap();

        // Conditioning on one input leaves the other input's information.
        let on_first = conditional_entropy(&inputs, &output, &output_traj, &[0]).unwrap();
        assert!((on_first - 0.25).abs() < 1e-12, "got {on_first}");
        // Conditioning on everything leaves nothing.
        let on_all = conditional_entropy(&inputs, &output, &output_traj, &[0, 1]).unwrap();
        assert!(on_all.abs() < 1e-12);
        // Conditioning on nothing is the full output entropy.
        let on_none = conditional_entropy(&inputs, &output, &output_traj, &[]).unwrap();
        assert!((on_none - 0.5).abs() < 1e-12);

        assert!(matches!(
            conditional_entropy(&inputs, &output, &output_traj, &[2]),
            Err(ContinuousError::InputOutOfRange { index: 2, count: 2 })
        ));
    }

    #[test]
    fn single_precision_constant_closed_form() {
        let traj = Trajectory::<f32>::sampled(0.0, 1.0, 101, |t| vec![t]).unwrap();
        let p_a = DensityField::constant(0.5f32, 1).unwrap();
        let p_b = DensityField::constant(0.25f32, 1).unwrap();
        let d = path_relative_entropy(&p_a, &traj, &p_b, &traj).unwrap();
        assert!((d - 0.5).abs() < 1e-5, "got {d}");
        assert_eq!(path_relative_entropy(&p_a, &traj, &p_a, &traj).unwrap(), 0.0);
    }

    #[test]
    fn halving_the_step_approaches_the_richardson_limit() {
        let p_a = DensityField::gaussian(vec![0.2], vec![0.6]).unwrap();
        let p_b = DensityField::gaussian(vec![-0.3], vec![0.9]).unwrap();
        let path = |t: f64| vec![(1.3 * t).sin() * 0.4];
        let value = |samples: usize| {
            let traj = Trajectory::sampled(0.0, 1.0, samples, path).unwrap();
            path_relative_entropy(&p_a, &traj, &p_b, &traj).unwrap()
        };
        let h = value(251);
        let h2 = value(501);
        let h4 = value(1001);
        // Trapezoid error halves its square with the step.
        let richardson = h4 + (h4 - h2) / 3.0;
        assert!((h4 - richardson).abs() < (h2 - richardson).abs());
        assert!((h2 - richardson).abs() < (h - richardson).abs());
    }
}
