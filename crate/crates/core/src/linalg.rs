//! Exact integer-matrix normal forms and linear-system solving.
//!
//! Smith normal form `U·A·V = D` with unimodular `U`, `V` and a positive
//! diagonal divisibility chain; row-style Hermite normal form `U·A = H`;
//! and exact solving of `A·x = b` over the integers with a kernel basis or
//! a divisibility obstruction.
//!
//! Pivoting always selects a minimal-magnitude nonzero entry and reduces by
//! Euclidean division, which keeps intermediate entries small at the scales
//! this crate targets; correctness never depends on the pivoting strategy
//! because the transforms are returned and `U·A·V = D` is checked by the
//! test suites in exact arithmetic.

use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{Matrix, Scalar};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: matrix has {rows} rows but vector has {len} entries")]
    DimensionMismatch { rows: usize, len: usize },
}

/// Smith decomposition `U·A·V = D`.
///
/// `D` is diagonal with positive entries `d_1 | d_2 | ...` followed only by
/// zeros; `invariant_factors` lists the nonzero diagonal in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm<T> {
    pub u: Matrix<T>,
    pub d: Matrix<T>,
    pub v: Matrix<T>,
    pub invariant_factors: Vec<T>,
}

impl<T: Scalar> SmithForm<T> {
    /// Number of nonzero diagonal entries.
    pub fn rank(&self) -> usize {
        self.invariant_factors.len()
    }

    pub fn diagonal(&self, i: usize) -> T {
        self.d.at(i, i).clone()
    }
}

fn find_min_pivot<T: Scalar>(a: &Matrix<T>, from: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for r in from..a.rows() {
        for c in from..a.cols() {
            if a.at(r, c).is_zero() {
                continue;
            }
            match &best {
                Some((br, bc)) if a.at(*br, *bc).abs() <= a.at(r, c).abs() => {}
                _ => best = Some((r, c)),
            }
        }
    }
    best
}

/// Computes the Smith normal form of `A`.
///
/// Empty and zero matrices are legal; they yield an empty factor list.
pub fn smith_normal_form<T: Scalar>(a: &Matrix<T>) -> SmithForm<T> {
    let m = a.rows();
    let n = a.cols();
    let mut d = a.clone();
    let mut u = Matrix::<T>::identity(m);
    let mut v = Matrix::<T>::identity(n);

    let mut t = 0usize;
    while t < m.min(n) {
        let Some((pr, pc)) = find_min_pivot(&d, t) else {
            break;
        };
        d.swap_rows(t, pr);
        u.swap_rows(t, pr);
        d.swap_cols(t, pc);
        v.swap_cols(t, pc);

        // Clear the pivot row and column; restart whenever a remainder
        // shrinks the pivot.
        'clear: loop {
            for r in (t + 1)..m {
                if d.at(r, t).is_zero() {
                    continue;
                }
                let q = -(d.at(r, t).div_floor(d.at(t, t)));
                d.row_axpy(r, t, &q);
                u.row_axpy(r, t, &q);
                if !d.at(r, t).is_zero() {
                    // remainder is a strictly smaller pivot candidate
                    d.swap_rows(t, r);
                    u.swap_rows(t, r);
                    continue 'clear;
                }
            }
            for c in (t + 1)..n {
                if d.at(t, c).is_zero() {
                    continue;
                }
                let q = -(d.at(t, c).div_floor(d.at(t, t)));
                d.col_axpy(c, t, &q);
                v.col_axpy(c, t, &q);
                if !d.at(t, c).is_zero() {
                    d.swap_cols(t, c);
                    v.swap_cols(t, c);
                    continue 'clear;
                }
            }
            break;
        }
        t += 1;
    }

    // Positive diagonal; transforms absorb the signs.
    for i in 0..m.min(n) {
        if d.at(i, i).is_negative() {
            d.negate_row(i);
            u.negate_row(i);
        }
    }

    // Compact nonzero entries to the front.
    let mut nonzero: Vec<usize> = (0..m.min(n)).filter(|&i| !d.at(i, i).is_zero()).collect();
    let mut write = 0usize;
    for read in nonzero.drain(..) {
        if read != write {
            d.swap_rows(write, read);
            u.swap_rows(write, read);
            d.swap_cols(write, read);
            v.swap_cols(write, read);
        }
        write += 1;
    }
    let rank = write;

    // Enforce the divisibility chain d_i | d_{i+1} with 2x2 fixes:
    // diag(a, b) -> diag(gcd(a,b), lcm(a,b)).
    loop {
        let mut changed = false;
        for i in 0..rank.saturating_sub(1) {
            let j = i + 1;
            let a_i = d.at(i, i).clone();
            let b_j = d.at(j, j).clone();
            if b_j.is_multiple_of(&a_i) {
                continue;
            }
            changed = true;
            // col_i += col_j puts b below the pivot
            d.col_axpy(i, j, &T::one());
            v.col_axpy(i, j, &T::one());
            // Euclidean loop on rows i, j within the 2x2 block.
            while !d.at(j, i).is_zero() {
                let q = -(d.at(i, i).div_floor(d.at(j, i)));
                d.row_axpy(i, j, &q);
                u.row_axpy(i, j, &q);
                d.swap_rows(i, j);
                u.swap_rows(i, j);
            }
            // Block is now upper triangular [[g, x], [0, y]]; g divides x.
            let q = -(d.at(i, j).div_floor(d.at(i, i)));
            d.col_axpy(j, i, &q);
            v.col_axpy(j, i, &q);
            for k in [i, j] {
                if d.at(k, k).is_negative() {
                    d.negate_row(k);
                    u.negate_row(k);
                }
            }
        }
        if !changed {
            break;
        }
    }

    let invariant_factors = (0..rank).map(|i| d.at(i, i).clone()).collect();
    SmithForm {
        u,
        d,
        v,
        invariant_factors,
    }
}

/// Row-style Hermite normal form: returns `(H, U)` with `U·A = H`, `U`
/// unimodular, `H` in row echelon form with positive pivots and entries
/// above each pivot reduced into `[0, pivot)`.
pub fn hermite_normal_form<T: Scalar>(a: &Matrix<T>) -> (Matrix<T>, Matrix<T>) {
    let m = a.rows();
    let n = a.cols();
    let mut h = a.clone();
    let mut u = Matrix::<T>::identity(m);

    let mut pivot_row = 0usize;
    for col in 0..n {
        if pivot_row == m {
            break;
        }
        // Euclidean elimination below the pivot row in this column.
        loop {
            let mut best: Option<usize> = None;
            for r in pivot_row..m {
                if h.at(r, col).is_zero() {
                    continue;
                }
                match best {
                    Some(b) if h.at(b, col).abs() <= h.at(r, col).abs() => {}
                    _ => best = Some(r),
                }
            }
            let Some(b) = best else {
                break;
            };
            h.swap_rows(pivot_row, b);
            u.swap_rows(pivot_row, b);
            let mut any_left = false;
            for r in (pivot_row + 1)..m {
                if h.at(r, col).is_zero() {
                    continue;
                }
                let q = -(h.at(r, col).div_floor(h.at(pivot_row, col)));
                h.row_axpy(r, pivot_row, &q);
                u.row_axpy(r, pivot_row, &q);
                if !h.at(r, col).is_zero() {
                    any_left = true;
                }
            }
            if !any_left {
                break;
            }
        }
        if h.at(pivot_row, col).is_zero() {
            continue;
        }
        if h.at(pivot_row, col).is_negative() {
            h.negate_row(pivot_row);
            u.negate_row(pivot_row);
        }
        // Reduce entries above the pivot into [0, pivot).
        for r in 0..pivot_row {
            let q = -(h.at(r, col).div_floor(h.at(pivot_row, col)));
            h.row_axpy(r, pivot_row, &q);
            u.row_axpy(r, pivot_row, &q);
        }
        pivot_row += 1;
    }
    (h, u)
}

/// Inverse of a unimodular matrix, via `U·M = I` from the Hermite form.
///
/// Returns `None` when `M` is not square or not unimodular.
pub fn unimodular_inverse<T: Scalar>(m: &Matrix<T>) -> Option<Matrix<T>> {
    if !m.is_square() {
        return None;
    }
    let (h, u) = hermite_normal_form(m);
    if h == Matrix::<T>::identity(m.rows()) {
        Some(u)
    } else {
        None
    }
}

/// Why `A·x = b` has no integer solution: in the Smith decomposition the
/// transformed right-hand side fails divisibility at `row` (`divisor` is 0
/// for rows beyond the rank, where the value must vanish).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obstruction {
    pub row: usize,
    #[serde(with = "crate::jsonutil::int_serde")]
    pub divisor: crate::Int,
    #[serde(with = "crate::jsonutil::int_serde")]
    pub value: crate::Int,
}

/// A particular solution together with a basis of the integer kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionSet<T> {
    pub particular: Vec<T>,
    pub kernel_basis: Vec<Vec<T>>,
}

/// Outcome of integer linear-system solving.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome<T> {
    Solution(SolutionSet<T>),
    NoSolution(Obstruction),
}

impl<T> SolveOutcome<T> {
    pub fn solution(self) -> Option<SolutionSet<T>> {
        match self {
            SolveOutcome::Solution(s) => Some(s),
            SolveOutcome::NoSolution(_) => None,
        }
    }

    pub fn is_solvable(&self) -> bool {
        matches!(self, SolveOutcome::Solution(_))
    }
}

/// Solves `A·x = b` over the integers.
///
/// On success the particular solution satisfies `A·x0 = b` exactly and the
/// kernel basis spans `ker(A)` over the integers.
pub fn solve_integer_system(
    a: &crate::IntMatrix,
    b: &[crate::Int],
) -> Result<SolveOutcome<crate::Int>, LinalgError> {
    if a.rows() != b.len() {
        return Err(LinalgError::DimensionMismatch {
            rows: a.rows(),
            len: b.len(),
        });
    }
    let snf = smith_normal_form(a);
    let c = snf.u.mul_vec(b);
    let rank = snf.rank();
    let n = a.cols();

    let mut y = vec![crate::Int::zero(); n];
    for (i, ci) in c.iter().enumerate() {
        if i < rank {
            let d = snf.diagonal(i);
            let (q, r) = ci.div_rem(&d);
            if !r.is_zero() {
                return Ok(SolveOutcome::NoSolution(Obstruction {
                    row: i,
                    divisor: d,
                    value: ci.clone(),
                }));
            }
            y[i] = q;
        } else if !ci.is_zero() {
            return Ok(SolveOutcome::NoSolution(Obstruction {
                row: i,
                divisor: crate::Int::zero(),
                value: ci.clone(),
            }));
        }
    }
    let particular = snf.v.mul_vec(&y);
    let kernel_basis = (rank..n).map(|j| snf.v.col(j)).collect();
    Ok(SolveOutcome::Solution(SolutionSet {
        particular,
        kernel_basis,
    }))
}

/// Determinant by SNF (up to sign: product of invariant factors with the
/// transform signs folded back in). Only used for small sanity checks.
pub fn det<T: Scalar>(a: &Matrix<T>) -> T {
    assert!(a.is_square());
    let n = a.rows();
    if n == 0 {
        return T::one();
    }
    // Fraction-free Gauss-Bareham would be cheaper; cofactor expansion is
    // fine for the 4x4-and-under uses in this crate.
    if n == 1 {
        return a.at(0, 0).clone();
    }
    let mut acc = T::zero();
    for c in 0..n {
        if a.at(0, c).is_zero() {
            continue;
        }
        let mut sub = Matrix::<T>::zeros(n - 1, n - 1);
        for r in 1..n {
            let mut cc = 0;
            for k in 0..n {
                if k == c {
                    continue;
                }
                *sub.at_mut(r - 1, cc) = a.at(r, k).clone();
                cc += 1;
            }
        }
        let term = a.at(0, c).clone() * det(&sub);
        acc = if c % 2 == 0 { acc + term } else { acc - term };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Int, IntMatrix};

    fn mat(rows: Vec<Vec<i64>>) -> IntMatrix {
        IntMatrix::map_bigint(rows)
    }

    fn check_snf(a: &IntMatrix) -> SmithForm<Int> {
        let s = smith_normal_form(a);
        assert_eq!(s.u.mul(a).mul(&s.v), s.d, "U*A*V must equal D exactly");
        assert_eq!(det(&s.u).abs(), Int::from(1), "U unimodular");
        assert_eq!(det(&s.v).abs(), Int::from(1), "V unimodular");
        // positive divisibility chain, zeros trailing
        for i in 0..s.rank() {
            assert!(s.invariant_factors[i] > Int::from(0));
            if i + 1 < s.rank() {
                assert!(s.invariant_factors[i + 1]
                    .is_multiple_of(&s.invariant_factors[i]));
            }
        }
        for r in 0..s.d.rows() {
            for c in 0..s.d.cols() {
                if r != c || r >= s.rank() {
                    assert!(s.d.at(r, c).is_zero());
                }
            }
        }
        s
    }

    #[test]
    fn snf_identity() {
        let s = check_snf(&mat(vec![vec![1, 0], vec![0, 1]]));
        assert_eq!(s.invariant_factors, vec![Int::from(1), Int::from(1)]);
    }

    #[test]
    fn snf_frozen_example() {
        // determinant-divisor oracle: g1 = gcd(2,4,6,8) = 2, g2 = |det| = 8,
        // so the factors are (2, 8/2) = (2, 4).
        let s = check_snf(&mat(vec![vec![2, 4], vec![6, 8]]));
        assert_eq!(s.invariant_factors, vec![Int::from(2), Int::from(4)]);
    }

    #[test]
    fn snf_zero_matrix() {
        let s = check_snf(&IntMatrix::zeros(2, 3));
        assert!(s.invariant_factors.is_empty());
        assert!(s.d.is_zero());
    }

    #[test]
    fn snf_empty_matrices() {
        for (r, c) in [(0, 0), (0, 3), (3, 0)] {
            let s = check_snf(&IntMatrix::from_shape(r, c, vec![]));
            assert!(s.invariant_factors.is_empty());
        }
    }

    #[test]
    fn hnf_gcd_column() {
        let (h, u) = hermite_normal_form(&mat(vec![vec![2], vec![3]]));
        assert_eq!(u.mul(&mat(vec![vec![2], vec![3]])), h);
        assert_eq!(h, mat(vec![vec![1], vec![0]]));
    }

    #[test]
    fn hnf_identity_and_zero() {
        let (h, _) = hermite_normal_form(&mat(vec![vec![1]]));
        assert_eq!(h, mat(vec![vec![1]]));
        let (h, _) = hermite_normal_form(&mat(vec![vec![0, 0]]));
        assert_eq!(h, mat(vec![vec![0, 0]]));
    }

    #[test]
    fn hnf_idempotent() {
        let a = mat(vec![vec![4, 6, 2], vec![6, 3, 9], vec![0, 5, 5]]);
        let (h, u) = hermite_normal_form(&a);
        assert_eq!(u.mul(&a), h);
        let (h2, _) = hermite_normal_form(&h);
        assert_eq!(h2, h);
    }

    #[test]
    fn unimodular_inverse_roundtrip() {
        let m = mat(vec![vec![2, 1], vec![1, 1]]);
        let inv = unimodular_inverse(&m).unwrap();
        assert_eq!(inv.mul(&m), IntMatrix::identity(2));
        assert_eq!(m.mul(&inv), IntMatrix::identity(2));
        assert!(unimodular_inverse(&mat(vec![vec![2, 0], vec![0, 1]])).is_none());
    }

    #[test]
    fn solve_divisibility_obstruction() {
        let out = solve_integer_system(&mat(vec![vec![6]]), &[Int::from(4)]).unwrap();
        match out {
            SolveOutcome::NoSolution(ob) => {
                assert_eq!(ob.divisor, Int::from(6));
                assert_eq!(ob.value, Int::from(4));
            }
            SolveOutcome::Solution(_) => panic!("6x = 4 has no integer solution"),
        }
    }

    #[test]
    fn solve_underdetermined() {
        let a = mat(vec![vec![1, 1]]);
        let out = solve_integer_system(&a, &[Int::from(3)]).unwrap();
        let sol = out.solution().unwrap();
        assert_eq!(a.mul_vec(&sol.particular), vec![Int::from(3)]);
        assert_eq!(sol.kernel_basis.len(), 1);
        let k = &sol.kernel_basis[0];
        assert_eq!(a.mul_vec(k), vec![Int::from(0)]);
        assert_eq!(k[0].abs(), Int::from(1));
        assert_eq!(k[0].clone() + k[1].clone(), Int::from(0));
    }

    #[test]
    fn solve_frozen_full_rank() {
        // brute-force over |x_i| <= 10 finds exactly x = (1, 0)
        let a = mat(vec![vec![2, 4], vec![6, 8]]);
        let out = solve_integer_system(&a, &[Int::from(2), Int::from(6)]).unwrap();
        let sol = out.solution().unwrap();
        assert_eq!(a.mul_vec(&sol.particular), vec![Int::from(2), Int::from(6)]);
        assert!(sol.kernel_basis.is_empty());
        assert_eq!(sol.particular, vec![Int::from(1), Int::from(0)]);
    }

    #[test]
    fn solve_dimension_mismatch() {
        let err = solve_integer_system(&mat(vec![vec![1, 2]]), &[Int::from(1), Int::from(2)]);
        assert!(matches!(err, Err(LinalgError::DimensionMismatch { .. })));
    }
}
