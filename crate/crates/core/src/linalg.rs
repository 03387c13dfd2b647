//! Dense exact linear algebra over the rationals.

use num_traits::{One, Zero};

use crate::rational::Rational;

pub type Matrix = Vec<Vec<Rational>>;

/// Reduced row echelon form; returns the pivot column of each nonzero row.
pub fn rref(m: &mut Matrix, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == m.len() {
            break;
        }
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for x in m[row].iter_mut() {
            *x *= &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..m[r].len() {
                    let delta = &f * &m[row][c];
                    m[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

pub fn rank(m: &[Vec<Rational>]) -> usize {
    let ncols = m.first().map_or(0, Vec::len);
    let mut work = m.to_vec();
    rref(&mut work, ncols).len()
}

pub fn rank_i64(m: &[Vec<i64>]) -> usize {
    let work: Matrix = m
        .iter()
        .map(|row| row.iter().map(|&v| Rational::from_integer(v.into())).collect())
        .collect();
    rank(&work)
}

/// Basis of `{x : m x = 0}`, one vector per free column.
pub fn kernel_basis(m: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    let mut work = m.to_vec();
    let pivots = rref(&mut work, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); ncols];
            v[f] = Rational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -work[r][f].clone();
            }
            v
        })
        .collect()
}

/// Some solution of `m x = b`, if one exists.
pub fn solve(m: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let ncols = m.first().map_or(0, Vec::len);
    let mut aug: Matrix = m
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug, ncols + 1);
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = vec![Rational::zero(); ncols];
    for (r, &pc) in pivots.iter().enumerate() {
        x[pc] = aug[r][ncols].clone();
    }
    Some(x)
}

pub fn determinant(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    let mut work = m.to_vec();
    let mut det = Rational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !work[r][col].is_zero()) else {
            return Rational::zero();
        };
        if p != col {
            work.swap(p, col);
            det = -det;
        }
        let pivot = work[col][col].clone();
        det *= &pivot;
        for r in col + 1..n {
            if work[r][col].is_zero() {
                continue;
            }
            let f = &work[r][col] / &pivot;
            let (top, bottom) = work.split_at_mut(r);
            for (x, p) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *x -= &f * p;
            }
        }
    }
    det
}

pub fn mat_vec(m: &[Vec<Rational>], x: &[Rational]) -> Vec<Rational> {
    m.iter()
        .map(|row| row.iter().zip(x).fold(Rational::zero(), |acc, (a, b)| acc + a * b))
        .collect()
}
