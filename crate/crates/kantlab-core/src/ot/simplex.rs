//! Dense exact simplex for the small auxiliary LPs (the relaxed dual with
//! its violation budget). Standard form `max c.x : A x <= b, x >= 0` with
//! `b >= 0`, so the slack basis starts feasible; Bland's rule guarantees
//! termination.

use crate::rational::Rat;
use num_traits::Zero;

#[derive(Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal(Rat),
    Unbounded,
}

/// Maximize `objective . x` subject to `rows[k] . x <= rhs[k]`, `x >= 0`.
/// All `rhs` must be nonnegative.
pub fn simplex_max(objective: &[Rat], rows: &[Vec<Rat>], rhs: &[Rat]) -> LpOutcome {
    let n = objective.len();
    let m = rows.len();
    assert!(rhs.iter().all(|b| *b >= Rat::zero()), "rhs must be >= 0");
    // Tableau: m rows of [A | I | b], objective row with reduced costs.
    let width = n + m + 1;
    let mut tab: Vec<Vec<Rat>> = Vec::with_capacity(m + 1);
    for k in 0..m {
        let mut row = vec![Rat::zero(); width];
        row[..n].clone_from_slice(&rows[k]);
        row[n + k] = Rat::from_integer(1.into());
        row[width - 1] = rhs[k].clone();
        tab.push(row);
    }
    let mut obj = vec![Rat::zero(); width];
    obj[..n].clone_from_slice(objective);
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut value = Rat::zero();

    loop {
        // Bland: entering column = lowest index with positive reduced cost.
        let Some(enter) = (0..n + m).find(|j| obj[*j] > Rat::zero()) else {
            return LpOutcome::Optimal(value);
        };
        // Leaving row: minimal ratio, ties by lowest basis variable.
        let mut leave: Option<usize> = None;
        let mut best: Option<Rat> = None;
        for r in 0..m {
            if tab[r][enter] > Rat::zero() {
                let ratio = &tab[r][width - 1] / &tab[r][enter];
                let better = match &best {
                    None => true,
                    Some(b) => {
                        ratio < *b || (ratio == *b && basis[r] < basis[leave.unwrap()])
                    }
                };
                if better {
                    best = Some(ratio);
                    leave = Some(r);
                }
            }
        }
        let Some(r) = leave else {
            return LpOutcome::Unbounded;
        };
        // Pivot.
        let pivot = tab[r][enter].clone();
        for x in tab[r].iter_mut() {
            *x /= &pivot;
        }
        for rr in 0..m {
            if rr != r && !tab[rr][enter].is_zero() {
                let factor = tab[rr][enter].clone();
                for j in 0..width {
                    let delta = &factor * &tab[r][j];
                    tab[rr][j] -= delta;
                }
            }
        }
        if !obj[enter].is_zero() {
            let factor = obj[enter].clone();
            for j in 0..width {
                let delta = &factor * &tab[r][j];
                obj[j] -= delta;
            }
            value += &factor * &tab[r][width - 1];
        }
        basis[r] = enter;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    #[test]
    fn textbook_lp() {
        // max 3x + 5y : x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36
        let out = simplex_max(
            &[rat_int(3), rat_int(5)],
            &[
                vec![rat_int(1), rat_int(0)],
                vec![rat_int(0), rat_int(2)],
                vec![rat_int(3), rat_int(2)],
            ],
            &[rat_int(4), rat_int(12), rat_int(18)],
        );
        assert_eq!(out, LpOutcome::Optimal(rat_int(36)));
    }

    #[test]
    fn unbounded_detected() {
        let out = simplex_max(
            &[rat_int(1), rat_int(0)],
            &[vec![rat_int(-1), rat_int(1)]],
            &[rat_int(1)],
        );
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn fractional_optimum() {
        // max x + y : 2x + y <= 1, x + 3y <= 1 -> x = 2/5, y = 1/5
        let out = simplex_max(
            &[rat_int(1), rat_int(1)],
            &[
                vec![rat_int(2), rat_int(1)],
                vec![rat_int(1), rat_int(3)],
            ],
            &[rat_int(1), rat_int(1)],
        );
        assert_eq!(out, LpOutcome::Optimal(rat(3, 5)));
    }
}
