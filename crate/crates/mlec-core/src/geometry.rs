//! Finite Hamming-space geometry.
//!
//! A [`CodeSpace`] is the set of all `N^nu` symbol tuples of length `nu`
//! over an alphabet of size `N`, together with the subset of valid code
//! points. The [`census`] classifies every point of the space exhaustively:
//! valid, correctable (a unique nearest valid point at nonzero distance), or
//! ambiguous (two or more valid points tied at the minimum distance). No
//! sampling and no tie-breaking: ambiguity is reported, never resolved.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::codec::TransformMatrix;
use crate::Real;

/// Spaces above this many points are refused by [`census`]; use
/// [`census_with_cap`] to raise it explicitly.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("tuples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("code distance needs at least two valid points")]
    SingletonCode,
    #[error("2^entropy exceeds the {points}-point space")]
    EntropyExceedsSpace { points: u64 },
    #[error("entropy must be a finite nonnegative bit count")]
    InvalidEntropy,
    #[error("space has {points} points, above the enumeration cap {cap}")]
    SpaceTooLarge { points: u64, cap: u64 },
    #[error("a code space needs at least one valid point")]
    NoValidPoints,
    #[error("duplicate valid point")]
    DuplicatePoint,
    #[error("point coordinate {coord} outside alphabet of size {size}")]
    PointOutOfRange { coord: u16, size: usize },
    #[error("space of {points} points overflows the index type")]
    SpaceOverflow { points: u128 },
}

impl GeometryError {
    pub fn code(&self) -> &'static str {
        match self {
            GeometryError::LengthMismatch(..) => "LengthMismatch",
            GeometryError::SingletonCode => "SingletonCode",
            GeometryError::EntropyExceedsSpace { .. } => "EntropyExceedsSpace",
            GeometryError::InvalidEntropy => "InvalidEntropy",
            GeometryError::SpaceTooLarge { .. } => "SpaceTooLarge",
            GeometryError::NoValidPoints => "NoValidPoints",
            GeometryError::DuplicatePoint => "DuplicatePoint",
            GeometryError::PointOutOfRange { .. } => "PointOutOfRange",
            GeometryError::SpaceOverflow { .. } => "SpaceOverflow",
        }
    }
}

/// A finite phase space with its valid code points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSpace {
    alphabet_size: usize,
    degrees: usize,
    valid: Vec<Vec<u16>>,
}

impl CodeSpace {
    pub fn new(
        alphabet_size: usize,
        degrees: usize,
        valid_points: Vec<Vec<u16>>,
    ) -> Result<Self, GeometryError> {
        if valid_points.is_empty() {
            return Err(GeometryError::NoValidPoints);
        }
        if alphabet_size == 0 || degrees == 0 {
            return Err(GeometryError::NoValidPoints);
        }
        let mut seen = BTreeSet::new();
        for point in &valid_points {
            if point.len() != degrees {
                return Err(GeometryError::LengthMismatch(point.len(), degrees));
            }
            for &coord in point {
                if coord as usize >= alphabet_size {
                    return Err(GeometryError::PointOutOfRange {
                        coord,
                        size: alphabet_size,
                    });
                }
            }
            if !seen.insert(point.clone()) {
                return Err(GeometryError::DuplicatePoint);
            }
        }
        let valid = seen.into_iter().collect();
        Ok(Self {
            alphabet_size,
            degrees,
            valid,
        })
    }

    /// The space whose valid points are a codebook's words.
    ///
    /// Duplicate words (a non-uniquely-decodable code) collapse to one point.
    pub fn from_code(code: &TransformMatrix) -> Result<Self, GeometryError> {
        let mut points: Vec<Vec<u16>> = code
            .words()
            .iter()
            .map(|w| w.iter().map(|&s| s as u16).collect())
            .collect();
        points.sort();
        points.dedup();
        Self::new(code.out_alphabet().size(), code.degrees(), points)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn degrees(&self) -> usize {
        self.degrees
    }

    /// Valid points in canonical (sorted) order.
    pub fn valid_points(&self) -> &[Vec<u16>] {
        &self.valid
    }

    /// Total number of points `N^nu`.
    pub fn total_points(&self) -> Result<u64, GeometryError> {
        let mut total: u128 = 1;
        for _ in 0..self.degrees {
            total = total.saturating_mul(self.alphabet_size as u128);
            if total > u64::MAX as u128 {
                return Err(GeometryError::SpaceOverflow { points: total });
            }
        }
        Ok(total as u64)
    }

    pub fn contains(&self, point: &[u16]) -> bool {
        point.len() == self.degrees
            && point
                .iter()
                .all(|&c| (c as usize) < self.alphabet_size)
    }

    fn point_at(&self, mut index: u64) -> Vec<u16> {
        let mut point = vec![0u16; self.degrees];
        for slot in (0..self.degrees).rev() {
            point[slot] = (index % self.alphabet_size as u64) as u16;
            index /= self.alphabet_size as u64;
        }
        point
    }
}

/// Number of coordinates in which two equal-length tuples differ.
pub fn hamming_distance(u: &[u16], v: &[u16]) -> Result<usize, GeometryError> {
    if u.len() != v.len() {
        return Err(GeometryError::LengthMismatch(u.len(), v.len()));
    }
    Ok(u.iter().zip(v).filter(|(a, b)| a != b).count())
}

/// Minimum pairwise Hamming distance between valid points.
pub fn code_distance(space: &CodeSpace) -> Result<usize, GeometryError> {
    let points = space.valid_points();
    if points.len() < 2 {
        return Err(GeometryError::SingletonCode);
    }
    let mut min = usize::MAX;
    for (i, u) in points.iter().enumerate() {
        for v in &points[i + 1..] {
            let d = hamming_distance(u, v)?;
            if d < min {
                min = d;
            }
        }
    }
    Ok(min)
}

/// Probability that a uniformly random point of the space is a valid code
/// point: `2^H / N^nu` for a source of `H` bits of entropy.
pub fn valid_point_probability<R: Real>(
    entropy_bits: R,
    alphabet_size: usize,
    degrees: u32,
) -> Result<R, GeometryError> {
    if !entropy_bits.is_finite() || entropy_bits < R::zero() {
        return Err(GeometryError::InvalidEntropy);
    }
    let log_points = R::from_usize(alphabet_size)
        .expect("alphabet size fits the scalar")
        .log2()
        * R::from_u32(degrees).expect("degrees fit the scalar");
    if entropy_bits > log_points {
        let points = (alphabet_size as u64).saturating_pow(degrees);
        return Err(GeometryError::EntropyExceedsSpace { points });
    }
    Ok((entropy_bits - log_points).exp2())
}

/// Exhaustive classification of a code space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CensusReport {
    pub total_points: u64,
    pub valid: u64,
    pub correctable: u64,
    pub ambiguous: u64,
    /// Minimum pairwise distance of valid points; absent for singleton codes.
    pub distance: Option<u32>,
}

/// Classify every point of the space with the default enumeration cap.
pub fn census(space: &CodeSpace) -> Result<CensusReport, GeometryError> {
    census_with_cap(space, DEFAULT_ENUMERATION_CAP)
}

/// Classify every point of the space, refusing spaces above `cap` points.
///
/// The enumeration is partitioned across worker threads; the counts are
/// order-independent sums, so the result does not depend on the partition.
pub fn census_with_cap(space: &CodeSpace, cap: u64) -> Result<CensusReport, GeometryError> {
    use rayon::prelude::*;

    let total = space.total_points()?;
    if total > cap {
        return Err(GeometryError::SpaceTooLarge { points: total, cap });
    }
    let distance = match code_distance(space) {
        Ok(d) => Some(d as u32),
        Err(GeometryError::SingletonCode) => None,
        Err(e) => return Err(e),
    };

    let (valid, correctable, ambiguous) = (0..total)
        .into_par_iter()
        .fold(
            || (0u64, 0u64, 0u64),
            |(valid, correctable, ambiguous), index| {
                let point = space.point_at(index);
                match classify(&point, space) {
                    PointClass::Valid => (valid + 1, correctable, ambiguous),
                    PointClass::Correctable => (valid, correctable + 1, ambiguous),
                    PointClass::Ambiguous => (valid, correctable, ambiguous + 1),
                }
            },
        )
        .reduce(
            || (0, 0, 0),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
        );

    Ok(CensusReport {
        total_points: total,
        valid,
        correctable,
        ambiguous,
        distance,
    })
}

enum PointClass {
    Valid,
    Correctable,
    Ambiguous,
}

fn classify(point: &[u16], space: &CodeSpace) -> PointClass {
    let mut min = usize::MAX;
    let mut ties = 0usize;
    for valid in space.valid_points() {
        let d = hamming_distance(point, valid).expect("space points share the length");
        if d < min {
            min = d;
            ties = 1;
        } else if d == min {
            ties += 1;
        }
    }
    if min == 0 {
        PointClass::Valid
    } else if ties == 1 {
        PointClass::Correctable
    } else {
        PointClass::Ambiguous
    }
}

/// Result of nearest-valid-point lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NearestValid {
    Unique(Vec<u16>),
    /// All valid points tied at the minimum distance, in canonical order.
    Ambiguous(Vec<Vec<u16>>),
}

/// Nearest valid point of the space, or every tied candidate.
///
/// A valid point is its own unique nearest point. Panics if `point` does not
/// belong to the space (wrong length or out-of-range coordinate).
pub fn nearest_valid(point: &[u16], space: &CodeSpace) -> NearestValid {
    assert!(
        space.contains(point),
        "point {:?} is not a member of the {}^{} space",
        point,
        space.alphabet_size(),
        space.degrees()
    );
    let mut min = usize::MAX;
    let mut candidates: Vec<&Vec<u16>> = Vec::new();
    for valid in space.valid_points() {
        let d = hamming_distance(point, valid).expect("space points share the length");
        if d < min {
            min = d;
            candidates.clear();
            candidates.push(valid);
        } else if d == min {
            candidates.push(valid);
        }
    }
    if candidates.len() == 1 {
        NearestValid::Unique(candidates[0].clone())
    } else {
        NearestValid::Ambiguous(candidates.into_iter().cloned().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn repetition(degrees: usize) -> CodeSpace {
        CodeSpace::new(2, degrees, vec![vec![0; degrees], vec![1; degrees]]).unwrap()
    }

    fn full_binary_pairs() -> CodeSpace {
        CodeSpace::new(2, 2, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap()
    }

    #[test]
    fn hamming_distance_counts_differing_coordinates() {
        assert_eq!(hamming_distance(&[0, 0], &[1, 0]).unwrap(), 1);
        assert_eq!(hamming_distance(&[3, 1, 4], &[3, 1, 4]).unwrap(), 0);
        assert_eq!(hamming_distance(&[0, 1, 2], &[2, 1, 0]).unwrap(), 2);
        assert!(matches!(
            hamming_distance(&[0], &[0, 1]),
            Err(GeometryError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn code_distance_of_repetition_codes() {
        assert_eq!(code_distance(&repetition(2)).unwrap(), 2);
        assert_eq!(code_distance(&repetition(3)).unwrap(), 3);
        assert_eq!(code_distance(&full_binary_pairs()).unwrap(), 1);
        let singleton = CodeSpace::new(2, 2, vec![vec![0, 0]]).unwrap();
        assert_eq!(
            code_distance(&singleton).unwrap_err(),
            GeometryError::SingletonCode
        );
    }

    #[test]
    fn valid_point_probability_closed_forms() {
        assert_eq!(valid_point_probability(2.0f64, 2, 4).unwrap(), 0.25);
        assert_eq!(valid_point_probability(3.0f64, 2, 3).unwrap(), 1.0);
        assert_eq!(valid_point_probability(0.0f64, 2, 3).unwrap(), 0.125);
        assert!(matches!(
            valid_point_probability(4.0f64, 2, 3),
            Err(GeometryError::EntropyExceedsSpace { points: 8 })
        ));
        assert!(matches!(
            valid_point_probability(-1.0f64, 2, 3),
            Err(GeometryError::InvalidEntropy)
        ));
    }

    #[test]
    fn probability_decreases_with_degrees() {
        let mut previous = f64::INFINITY;
        for degrees in 2..=12 {
            let p = valid_point_probability(1.5f64, 3, degrees).unwrap();
            assert!(p < previous, "p_valid must fall as degrees grow");
            previous = p;
        }
    }

    #[test]
    fn census_of_two_point_repetition_pair() {
        let report = census(&repetition(2)).unwrap();
        assert_eq!(
            report,
            CensusReport {
                total_points: 4,
                valid: 2,
                correctable: 0,
                ambiguous: 2,
                distance: Some(2),
            }
        );
    }

    #[test]
    fn census_of_three_point_repetition() {
        let report = census(&repetition(3)).unwrap();
        assert_eq!(
            report,
            CensusReport {
                total_points: 8,
                valid: 2,
                correctable: 6,
                ambiguous: 0,
                distance: Some(3),
            }
        );
    }

    #[test]
    fn census_of_full_space_has_no_invalid_points() {
        let report = census(&full_binary_pairs()).unwrap();
        assert_eq!(report.valid, 4);
        assert_eq!(report.correctable, 0);
        assert_eq!(report.ambiguous, 0);
        assert_eq!(report.distance, Some(1));
    }

    #[test]
    fn census_respects_the_enumeration_cap() {
        let space = repetition(5);
        assert!(matches!(
            census_with_cap(&space, 16),
            Err(GeometryError::SpaceTooLarge { points: 32, cap: 16 })
        ));
    }

    #[test]
    fn census_report_serialises_with_fixed_field_names() {
        let report = census(&repetition(3)).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        for key in ["total_points", "valid", "correctable", "ambiguous", "distance"] {
            assert!(json.get(key).is_some(), "missing field {key}");
        }
        assert_eq!(json["valid"], 2);
        assert_eq!(json["correctable"], 6);
        assert_eq!(json["ambiguous"], 0);
    }

    #[test]
    fn nearest_valid_resolves_and_reports_ties() {
        let space = repetition(3);
        assert_eq!(
            nearest_valid(&[0, 0, 1], &space),
            NearestValid::Unique(vec![0, 0, 0])
        );
        let pair = repetition(2);
        assert_eq!(
            nearest_valid(&[0, 1], &pair),
            NearestValid::Ambiguous(vec![vec![0, 0], vec![1, 1]])
        );
        assert_eq!(
            nearest_valid(&[1, 1], &pair),
            NearestValid::Unique(vec![1, 1])
        );
    }

    #[test]
    fn repetition_family_ambiguity_trend() {
        // Odd lengths have no ties at all; across even lengths the ambiguous
        // share of invalid points falls as the distance grows.
        let mut even_shares = Vec::new();
        for degrees in 2..=8 {
            let report = census(&repetition(degrees)).unwrap();
            assert_eq!(
                report.valid + report.correctable + report.ambiguous,
                report.total_points
            );
            if degrees % 2 == 1 {
                assert_eq!(report.ambiguous, 0, "odd length {degrees} must have no ties");
            } else {
                let share =
                    report.ambiguous as f64 / (report.correctable + report.ambiguous) as f64;
                even_shares.push(share);
            }
        }
        for pair in even_shares.windows(2) {
            assert!(pair[1] <= pair[0], "ambiguous share must not grow: {even_shares:?}");
        }
    }
}
