//! Dense linear algebra and absorbing-chain solvers over any [`Scalar`].

use std::collections::VecDeque;

use crate::error::AnalysisError;
use crate::scalar::Scalar;

/// Row-major dense square or rectangular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out: Matrix<T> = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let prod = a.clone() * b.clone();
                    let cell = &mut out[(i, j)];
                    *cell = cell.clone() + prod;
                }
            }
        }
        out
    }

    /// `self^k` by repeated squaring.
    pub fn pow(&self, mut k: u64) -> Matrix<T> {
        assert_eq!(self.rows, self.cols, "power of a non-square matrix");
        let mut result = Matrix::identity(self.rows);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                let m = &self[(i, j)];
                if !m.is_zero() {
                    *o = o.clone() + vi.clone() * m.clone();
                }
            }
        }
        out
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `a x = b` by Gauss-Jordan elimination. Exact scalars pick the first
/// nonzero pivot; inexact ones pick the largest magnitude. Fails when a pivot
/// column is (numerically) empty, i.e. when the solution is not unique.
pub fn solve<T: Scalar>(mut a: Matrix<T>, mut b: Vec<T>) -> Result<Vec<T>, AnalysisError> {
    let n = a.rows;
    assert_eq!(a.cols, n, "solve needs a square matrix");
    assert_eq!(b.len(), n);
    for col in 0..n {
        let pivot = if T::EXACT {
            (col..n).find(|&r| !a[(r, col)].is_zero())
        } else {
            (col..n)
                .filter(|&r| !a[(r, col)].is_negligible())
                .max_by(|&x, &y| {
                    a[(x, col)]
                        .abs()
                        .partial_cmp(&a[(y, col)].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
        };
        let p = pivot.ok_or(AnalysisError::SingularSystem)?;
        if p != col {
            for j in 0..n {
                a.data.swap(p * n + j, col * n + j);
            }
            b.swap(p, col);
        }
        let inv = T::one() / a[(col, col)].clone();
        for j in col..n {
            a[(col, j)] = a[(col, j)].clone() * inv.clone();
        }
        b[col] = b[col].clone() * inv;
        for r in 0..n {
            if r == col || a[(r, col)].is_zero() {
                continue;
            }
            let factor = a[(r, col)].clone();
            for j in col..n {
                if a[(col, j)].is_zero() {
                    continue;
                }
                let delta = factor.clone() * a[(col, j)].clone();
                a[(r, j)] = a[(r, j)].clone() - delta;
            }
            let delta = factor * b[col].clone();
            b[r] = b[r].clone() - delta;
        }
    }
    Ok(b)
}

/// Sparse description of a finite Markov chain: `succ[i]` lists `(j, p)`.
/// Entries with the same target are summed by the solvers.
pub type SparseChain<T> = Vec<Vec<(usize, T)>>;

/// States from which `target` is reachable (including target states).
pub fn can_reach<T>(chain: &SparseChain<T>, target: &[bool]) -> Vec<bool> {
    let n = chain.len();
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, succ) in chain.iter().enumerate() {
        for (j, _) in succ {
            rev[*j].push(i);
        }
    }
    let mut seen = target.to_vec();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| target[i]).collect();
    while let Some(j) = queue.pop_front() {
        for &i in &rev[j] {
            if !seen[i] {
                seen[i] = true;
                queue.push_back(i);
            }
        }
    }
    seen
}

/// States that reach `target` with probability one: no state reachable from
/// them (before hitting the target) has the target unreachable.
pub fn almost_surely_reach<T>(chain: &SparseChain<T>, target: &[bool]) -> Vec<bool> {
    let n = chain.len();
    let reach = can_reach(chain, target);
    // bad = states that cannot reach target; propagate backwards through
    // non-target states: anything that can reach a bad state avoiding the
    // target fails.
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, succ) in chain.iter().enumerate() {
        if target[i] {
            continue;
        }
        for (j, _) in succ {
            rev[*j].push(i);
        }
    }
    let mut fails: Vec<bool> = reach.iter().map(|r| !r).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| fails[i]).collect();
    while let Some(j) = queue.pop_front() {
        for &i in &rev[j] {
            if !fails[i] && !target[i] {
                fails[i] = true;
                queue.push_back(i);
            }
        }
    }
    fails.iter().map(|f| !f).collect()
}

/// Exact probability of eventually hitting `target` from every state.
pub fn hitting_probabilities<T: Scalar>(
    chain: &SparseChain<T>,
    target: &[bool],
) -> Result<Vec<T>, AnalysisError> {
    let n = chain.len();
    let reach = can_reach(chain, target);
    let unknown: Vec<usize> = (0..n).filter(|&i| reach[i] && !target[i]).collect();
    let mut index = vec![usize::MAX; n];
    for (k, &i) in unknown.iter().enumerate() {
        index[i] = k;
    }
    let m = unknown.len();
    let mut a = Matrix::<T>::identity(m);
    let mut b = vec![T::zero(); m];
    for (k, &i) in unknown.iter().enumerate() {
        for (j, p) in &chain[i] {
            if target[*j] {
                b[k] = b[k].clone() + p.clone();
            } else if reach[*j] {
                let c = index[*j];
                a[(k, c)] = a[(k, c)].clone() - p.clone();
            }
        }
    }
    let x = solve(a, b)?;
    let mut out = vec![T::zero(); n];
    for i in 0..n {
        if target[i] {
            out[i] = T::one();
        } else if reach[i] {
            out[i] = x[index[i]].clone();
        }
    }
    Ok(out)
}

/// Expected accumulated cost until absorption.
///
/// Each step taken from a non-terminal state costs one; reaching terminal
/// state `i` adds `terminal[i]` (a `Some`). States that do not reach the
/// terminal set almost surely get `None` (infinite expectation).
pub fn expected_absorption_cost<T: Scalar>(
    chain: &SparseChain<T>,
    terminal: &[Option<T>],
) -> Result<Vec<Option<T>>, AnalysisError> {
    let n = chain.len();
    let is_terminal: Vec<bool> = terminal.iter().map(Option::is_some).collect();
    let sure = almost_surely_reach(chain, &is_terminal);
    let unknown: Vec<usize> = (0..n).filter(|&i| sure[i] && !is_terminal[i]).collect();
    let mut index = vec![usize::MAX; n];
    for (k, &i) in unknown.iter().enumerate() {
        index[i] = k;
    }
    let m = unknown.len();
    let mut a = Matrix::<T>::identity(m);
    let mut b = vec![T::one(); m];
    for (k, &i) in unknown.iter().enumerate() {
        for (j, p) in &chain[i] {
            match &terminal[*j] {
                Some(v) => b[k] = b[k].clone() + p.clone() * v.clone(),
                None => {
                    debug_assert!(sure[*j], "successor of an a.s. state must be a.s.");
                    let c = index[*j];
                    a[(k, c)] = a[(k, c)].clone() - p.clone();
                }
            }
        }
    }
    let x = solve(a, b)?;
    Ok((0..n)
        .map(|i| {
            if let Some(v) = &terminal[i] {
                Some(v.clone())
            } else if sure[i] {
                Some(x[index[i]].clone())
            } else {
                None
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Rational};

    #[test]
    fn solves_small_system_exactly() {
        // 2x + y = 3, x - y = 0
        let mut a = Matrix::<Rational>::zeros(2, 2);
        a[(0, 0)] = ratio(2, 1);
        a[(0, 1)] = ratio(1, 1);
        a[(1, 0)] = ratio(1, 1);
        a[(1, 1)] = ratio(-1, 1);
        let x = solve(a, vec![ratio(3, 1), ratio(0, 1)]).unwrap();
        assert_eq!(x, vec![ratio(1, 1), ratio(1, 1)]);
    }

    #[test]
    fn singular_system_rejected() {
        let mut a = Matrix::<Rational>::zeros(2, 2);
        a[(0, 0)] = ratio(1, 1);
        a[(0, 1)] = ratio(1, 1);
        a[(1, 0)] = ratio(2, 1);
        a[(1, 1)] = ratio(2, 1);
        assert_eq!(
            solve(a, vec![ratio(1, 1), ratio(2, 1)]),
            Err(AnalysisError::SingularSystem)
        );
    }

    #[test]
    fn geometric_hitting_time() {
        // state 0 loops with 1/3, else absorbs in 1
        let chain: SparseChain<Rational> = vec![vec![(0, ratio(1, 3)), (1, ratio(2, 3))], vec![(1, ratio(1, 1))]];
        let cost = expected_absorption_cost(&chain, &[None, Some(ratio(0, 1))]).unwrap();
        assert_eq!(cost[0], Some(ratio(3, 2)));
        let fcost = expected_absorption_cost(
            &vec![vec![(0, 1.0 / 3.0), (1, 2.0 / 3.0)], vec![(1, 1.0)]],
            &[None, Some(0.0)],
        )
        .unwrap();
        assert!((fcost[0].unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn unreachable_target_has_infinite_cost_and_zero_probability() {
        let chain: SparseChain<Rational> = vec![
            vec![(1, ratio(1, 2)), (2, ratio(1, 2))],
            vec![(1, ratio(1, 1))],
            vec![(2, ratio(1, 1))],
        ];
        let target = [false, false, true];
        let p = hitting_probabilities(&chain, &target).unwrap();
        assert_eq!(p, vec![ratio(1, 2), ratio(0, 1), ratio(1, 1)]);
        let c = expected_absorption_cost(&chain, &[None, None, Some(ratio(0, 1))]).unwrap();
        assert_eq!(c, vec![None, None, Some(ratio(0, 1))]);
    }

    #[test]
    fn matrix_power_by_squaring_matches_iteration() {
        let mut m = Matrix::<Rational>::zeros(2, 2);
        m[(0, 0)] = ratio(1, 3);
        m[(0, 1)] = ratio(2, 3);
        m[(1, 1)] = ratio(1, 1);
        let mut iter = Matrix::identity(2);
        for _ in 0..70 {
            iter = iter.mul(&m);
        }
        assert_eq!(m.pow(70), iter);
    }
}
