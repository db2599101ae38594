//! Exact LP decoding on the probability simplex.
//!
//! The decode polytope `{x >= 0, sum x = 1, T x = q}` is tiny (at most one
//! variable per input symbol), so instead of a floating-point simplex method
//! the solver enumerates basic feasible solutions in exact rational
//! arithmetic: row-reduce the constraints, try every column basis of the
//! reduced system, keep the feasible vertex with the smallest cost. The first
//! basis in lexicographic order wins ties, which makes the result
//! deterministic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::CodecError;

/// Minimise `costs . x` over `{x >= 0, sum x = 1, dense x = q}`.
pub(crate) fn decode_on_simplex(
    dense: &[Vec<u8>],
    q: &[f64],
    costs: &[f64],
) -> Result<Vec<f64>, CodecError> {
    let cols = costs.len();
    let mut aug: Vec<Vec<BigRational>> = Vec::with_capacity(dense.len() + 1);
    for (row, &target) in dense.iter().zip(q) {
        let mut r: Vec<BigRational> = row
            .iter()
            .map(|&e| BigRational::from_integer(BigInt::from(e)))
            .collect();
        r.push(rational_from(target)?);
        aug.push(r);
    }
    // The simplex constraint sum x = 1.
    let mut ones: Vec<BigRational> =
        vec![BigRational::from_integer(BigInt::from(1)); cols];
    ones.push(BigRational::from_integer(BigInt::from(1)));
    aug.push(ones);

    let rank = row_echelon(&mut aug, cols);
    // A zero row of the coefficient part with a nonzero target is
    // inconsistent: q lies outside the column space.
    for row in aug.iter().skip(rank) {
        if !row[cols].is_zero() {
            return Err(CodecError::Infeasible);
        }
    }
    let reduced: Vec<&[BigRational]> = aug.iter().take(rank).map(Vec::as_slice).collect();

    let rational_costs: Vec<BigRational> = costs
        .iter()
        .map(|&c| rational_from(c))
        .collect::<Result<_, _>>()?;

    let mut best: Option<(BigRational, Vec<BigRational>)> = None;
    let mut basis: Vec<usize> = (0..rank).collect();
    loop {
        if let Some(solution) = solve_basis(&reduced, &basis, cols) {
            if solution.iter().all(|v| !v.is_negative()) {
                let mut x = vec![BigRational::zero(); cols];
                for (slot, &col) in basis.iter().enumerate() {
                    x[col] = solution[slot].clone();
                }
                let cost: BigRational = basis
                    .iter()
                    .enumerate()
                    .map(|(slot, &col)| &rational_costs[col] * &solution[slot])
                    .sum();
                let better = match &best {
                    None => true,
                    Some((best_cost, _)) => cost < *best_cost,
                };
                if better {
                    best = Some((cost, x));
                }
            }
        }
        if !next_combination(&mut basis, cols) {
            break;
        }
    }

    match best {
        Some((_, x)) => Ok(x
            .iter()
            .map(|v| v.to_f64().expect("vertex coordinate fits in f64"))
            .collect()),
        None => Err(CodecError::Infeasible),
    }
}

fn rational_from(value: f64) -> Result<BigRational, CodecError> {
    BigRational::from_float(value).ok_or(CodecError::NonFiniteValue)
}

/// Reduce the coefficient part (first `cols` columns) to row echelon form,
/// carrying the augmented column along. Returns the rank.
fn row_echelon(aug: &mut [Vec<BigRational>], cols: usize) -> usize {
    let rows = aug.len();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| !aug[r][col].is_zero()) else {
            continue;
        };
        aug.swap(rank, pivot);
        let (pivot_rows, below) = aug.split_at_mut(rank + 1);
        let pivot_row = &pivot_rows[rank];
        for row in below.iter_mut() {
            if row[col].is_zero() {
                continue;
            }
            let factor = &row[col] / &pivot_row[col];
            for (dst, src) in row[col..=cols].iter_mut().zip(&pivot_row[col..=cols]) {
                *dst -= &factor * src;
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Solve the square system restricted to `basis` columns; `None` if singular.
fn solve_basis(
    reduced: &[&[BigRational]],
    basis: &[usize],
    target_col: usize,
) -> Option<Vec<BigRational>> {
    let n = basis.len();
    let mut m: Vec<Vec<BigRational>> = reduced
        .iter()
        .map(|row| {
            let mut r: Vec<BigRational> = basis.iter().map(|&c| row[c].clone()).collect();
            r.push(row[target_col].clone());
            r
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let factor = &row[col] / &pivot_row[col];
            for (dst, src) in row[col..=n].iter_mut().zip(&pivot_row[col..=n]) {
                *dst -= &factor * src;
            }
        }
    }
    let mut solution = Vec::with_capacity(n);
    for (r, row) in m.iter().enumerate() {
        solution.push(&row[n] / &row[r]);
    }
    Some(solution)
}

/// Advance `indices` to the next k-combination of `0..n`; false when done.
fn next_combination(indices: &mut [usize], n: usize) -> bool {
    let k = indices.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if indices[i] < n - (k - i) {
            indices[i] += 1;
            for j in i + 1..k {
                indices[j] = indices[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_cover_all_subsets() {
        let mut basis = vec![0, 1];
        let mut seen = vec![basis.clone()];
        while next_combination(&mut basis, 4) {
            seen.push(basis.clone());
        }
        assert_eq!(
            seen,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }

    #[test]
    fn echelon_detects_inconsistency() {
        // x + y = 1 and x + y = 2 cannot both hold.
        let one = || BigRational::from_integer(BigInt::from(1));
        let two = || BigRational::from_integer(BigInt::from(2));
        let mut aug = vec![vec![one(), one(), one()], vec![one(), one(), two()]];
        let rank = row_echelon(&mut aug, 2);
        assert_eq!(rank, 1);
        assert!(!aug[1][2].is_zero());
    }
}
