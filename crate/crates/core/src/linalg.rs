//! Dense exact linear algebra over `Q` (small systems only).

use num_traits::{One, Zero};

use crate::rational::Q;

/// Solves `a x = b` for square, nonsingular `a`. Returns `None` if singular.
pub fn solve(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = Q::one() / &a[col][col];
        for k in col..n {
            a[col][k] = &a[col][k] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for k in col..n {
                    let delta = &factor * &a[col][k];
                    a[r][k] -= delta;
                }
                let delta = &factor * &b[col];
                b[r] -= delta;
            }
        }
    }
    Some(b)
}

/// Rank of a rectangular matrix.
pub fn rank(mut a: Vec<Vec<Q>>) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut r = 0;
    for col in 0..cols {
        let Some(pivot) = (r..rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(r, pivot);
        for i in (r + 1)..rows {
            if !a[i][col].is_zero() {
                let factor = &a[i][col] / &a[r][col];
                for k in col..cols {
                    let delta = &factor * &a[r][k];
                    a[i][k] -= delta;
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn solves_small_system() {
        let a = vec![vec![qi(2), qi(1)], vec![qi(1), qi(3)]];
        let x = solve(a, vec![qi(3), qi(5)]).unwrap();
        assert_eq!(x, vec![q(4, 5), q(7, 5)]);
    }

    #[test]
    fn singular_is_none() {
        let a = vec![vec![qi(1), qi(2)], vec![qi(2), qi(4)]];
        assert!(solve(a.clone(), vec![qi(1), qi(1)]).is_none());
        assert_eq!(rank(a), 1);
    }
}
