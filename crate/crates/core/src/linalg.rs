//! Dense Gaussian elimination over any [`Scalar`]: exact for rationals,
//! partial-pivoting with a relative tolerance for floats.

use crate::scalar::Scalar;

fn pivot_row<T: Scalar>(a: &[Vec<T>], col: usize, from: usize) -> Option<usize> {
    (from..a.len())
        .filter(|&r| !a[r][col].is_zero())
        .max_by(|&x, &y| {
            a[x][col]
                .abs()
                .partial_cmp(&a[y][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
}

/// Determinant of a square matrix given row by row.
pub fn determinant<T: Scalar>(rows: &[Vec<T>]) -> T {
    let n = rows.len();
    let mut a: Vec<Vec<T>> = rows.to_vec();
    let mut det = T::one();
    for col in 0..n {
        let Some(p) = pivot_row(&a, col, col) else {
            return T::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det = det * pivot.clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() / pivot.clone();
            for c in col..n {
                let v = a[col][c].clone() * factor.clone();
                a[r][c] = a[r][c].clone() - v;
            }
        }
    }
    det
}

/// Rank of a rectangular matrix. Entries below `tol * max|a_ij|` count as zero
/// after elimination; `tol = 0` gives the exact rank over the rationals.
pub fn rank<T: Scalar>(rows: &[Vec<T>], tol: &T) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut a: Vec<Vec<T>> = rows.to_vec();
    let scale = a
        .iter()
        .flatten()
        .map(|x| x.abs())
        .fold(T::zero(), |m, x| if x > m { x } else { m });
    if scale.is_zero() {
        return 0;
    }
    let threshold = tol.clone() * scale;
    let mut rank = 0;
    for col in 0..ncols {
        if rank == a.len() {
            break;
        }
        let Some(p) = pivot_row(&a, col, rank) else {
            continue;
        };
        if a[p][col].abs() <= threshold {
            continue;
        }
        a.swap(p, rank);
        let pivot = a[rank][col].clone();
        for r in rank + 1..a.len() {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() / pivot.clone();
            for c in col..ncols {
                let v = a[rank][c].clone() * factor.clone();
                a[r][c] = a[r][c].clone() - v;
            }
        }
        rank += 1;
    }
    rank
}
