//! Exact phase-one simplex: finds `x ≥ 0` with `Ax = b` over the rationals.

use num_traits::{Signed, Zero};

use crate::num::Rational;

/// A feasible point of `{x ≥ 0 | Ax = b}`, or `None`. Bland's rule keeps
/// degenerate instances from cycling.
pub fn feasible_point(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    // tableau columns: n originals, m artificials, then the right-hand side
    let width = n + m + 1;
    let mut t: Vec<Vec<Rational>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let neg = b[i].is_negative();
        let mut row = vec![Rational::zero(); width];
        for j in 0..n {
            row[j] = if neg { -&a[i][j] } else { a[i][j].clone() };
        }
        row[n + i] = Rational::from_integer(1.into());
        row[width - 1] = b[i].abs();
        t.push(row);
    }
    // reduced costs of the phase-one objective (sum of artificials)
    let mut obj = vec![Rational::zero(); width];
    for row in &t {
        for j in 0..n {
            obj[j] -= &row[j];
        }
        obj[width - 1] -= &row[width - 1];
    }
    t.push(obj);
    let mut basis: Vec<usize> = (n..n + m).collect();

    while let Some(col) = (0..n + m).find(|&j| t[m][j].is_negative()) {
        let mut pivot: Option<(usize, Rational)> = None;
        for i in 0..m {
            if t[i][col].is_positive() {
                let ratio = &t[i][width - 1] / &t[i][col];
                let better = match &pivot {
                    None => true,
                    Some((p, r)) => ratio < *r || (ratio == *r && basis[i] < basis[*p]),
                };
                if better {
                    pivot = Some((i, ratio));
                }
            }
        }
        // phase one is bounded below by zero, so a pivot row always exists
        let (row, _) = pivot?;
        pivot_on(&mut t, row, col);
        basis[row] = col;
    }
    if !t[m][width - 1].is_zero() {
        return None;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = t[i][width - 1].clone();
        }
    }
    Some(x)
}

fn pivot_on(t: &mut [Vec<Rational>], row: usize, col: usize) {
    let p = t[row][col].clone();
    for v in t[row].iter_mut() {
        if !v.is_zero() {
            *v /= &p;
        }
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row || r[col].is_zero() {
            continue;
        }
        let f = r[col].clone();
        for (v, pv) in r.iter_mut().zip(&pivot_row) {
            if !pv.is_zero() {
                *v -= &f * pv;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational::int;

    fn q(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect()
    }

    #[test]
    fn small_systems() {
        // x + y = 1, x - y = 0
        let x = feasible_point(&q(&[&[1, 1], &[1, -1]]), &[int(1), int(0)]).unwrap();
        assert_eq!(x, vec![Rational::new(1.into(), 2.into()), Rational::new(1.into(), 2.into())]);
        // x + y = -1 has no nonnegative solution
        assert!(feasible_point(&q(&[&[1, 1]]), &[int(-1)]).is_none());
        // redundant rows
        let x = feasible_point(&q(&[&[1, 1, 0], &[2, 2, 0], &[0, 1, 1]]), &[int(2), int(4), int(1)]).unwrap();
        assert_eq!(&x[0] + &x[1], int(2));
        assert_eq!(&x[1] + &x[2], int(1));
    }
}
