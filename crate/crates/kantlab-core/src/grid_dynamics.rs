//! The level-n grid of `M_n` half-open cells, rotation shifts as cell
//! permutations, orbit counting, and the step potentials.
//!
//! Cell `i` of the level-n grid is the interval `[i/M_n, (i+1)/M_n)`. The
//! rotation by `alpha_n = P_n/M_n` sends cell `i` to cell `i + P_n mod M_n`;
//! since `gcd(P_n, M_n) = 1` the orbit of any cell covers the grid once.

use crate::floor_sum::OrbitCounter;
use crate::number_tower::PrimeTower;
use crate::rational::{to_frac_string, Rat};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("level {0} out of range 1..={1}")]
    LevelOutOfRange(usize, usize),
    #[error("grid modulus M_{level} = {modulus} exceeds u64")]
    ModulusTooLarge { level: usize, modulus: String },
    #[error("dense array of {cells} cells exceeds cap {cap} (set KANTLAB_CELL_CAP to raise)")]
    CellCapExceeded { cells: u64, cap: u64 },
    #[error("orbit length {0} out of range for modulus {1}")]
    OrbitTooLong(i64, u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Cell classification relative to the middle cell (the one containing 1/2;
/// unique since every `M_n` is odd).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionFlag {
    Left,
    Middle,
    Right,
}

/// A grid cell, carrying its level and flat index in `[0, M_level)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellIndex {
    pub level: usize,
    pub flat: u64,
}

/// Arithmetic context of one grid level.
#[derive(Debug, Clone)]
pub struct Grid {
    pub level: usize,
    /// `M_level`
    pub modulus: u64,
    /// `m_level`
    pub prime: u64,
    /// `M_{level-1}` (1 at level 1)
    pub prev_modulus: u64,
    /// `P_level mod M_level`
    pub step: u64,
    /// `P_level^{-1} mod M_level`
    pub inv: u64,
    /// Flat index of the middle cell, `(M_level - 1)/2`
    pub middle: u64,
    primes: Vec<u64>,
}

impl Grid {
    pub fn from_tower(tower: &PrimeTower, level: usize) -> Result<Grid, GridError> {
        if level == 0 || level > tower.depth() {
            return Err(GridError::LevelOutOfRange(level, tower.depth()));
        }
        let modulus = tower
            .product_u64(level)
            .map_err(|_| GridError::ModulusTooLarge {
                level,
                modulus: tower.product(level).to_string(),
            })?;
        let step_big = tower.numerator(level).mod_floor_u64(modulus);
        let m = modulus as i128;
        let inv = crate::floor_sum::mod_inverse(step_big as i128, m) as u64;
        Ok(Grid {
            level,
            modulus,
            prime: tower.prime(level),
            prev_modulus: modulus / tower.prime(level),
            step: step_big,
            inv,
            middle: (modulus - 1) / 2,
            primes: tower.primes()[..level].to_vec(),
        })
    }

    pub fn cells(&self) -> u64 {
        self.modulus
    }

    pub fn region(&self, flat: u64) -> RegionFlag {
        use std::cmp::Ordering::*;
        match flat.cmp(&self.middle) {
            Less => RegionFlag::Left,
            Equal => RegionFlag::Middle,
            Greater => RegionFlag::Right,
        }
    }

    /// Cell weight: +1 on L, 0 on the middle cell, -1 on R.
    pub fn weight(&self, flat: u64) -> i64 {
        match self.region(flat) {
            RegionFlag::Left => 1,
            RegionFlag::Middle => 0,
            RegionFlag::Right => -1,
        }
    }

    /// Apply `t` rotation steps to a cell: `flat + t*P mod M`.
    pub fn shift_cells(&self, flat: u64, t: i64) -> u64 {
        let m = self.modulus as i128;
        let moved = flat as i128 + (t as i128) * (self.step as i128);
        moved.rem_euclid(m) as u64
    }

    /// Left endpoint of a cell as an exact rational.
    pub fn left_endpoint(&self, flat: u64) -> Rat {
        Rat::new(BigInt::from(flat), BigInt::from(self.modulus))
    }

    /// Circle distance between two cells' left endpoints.
    pub fn cell_dist(&self, a: u64, b: u64) -> Rat {
        let d = a.abs_diff(b).min(self.modulus - a.abs_diff(b));
        Rat::new(BigInt::from(d), BigInt::from(self.modulus))
    }

    /// Nested index `(k_1..k_n)` (1-based per level) to flat.
    pub fn nested_to_flat(&self, nested: &[u64]) -> u64 {
        assert_eq!(nested.len(), self.level);
        let mut flat = 0u64;
        for (j, &k) in nested.iter().enumerate() {
            debug_assert!(k >= 1 && k <= self.primes[j]);
            flat = flat * self.primes[j] + (k - 1);
        }
        flat
    }

    /// Flat index to nested `(k_1..k_n)`.
    pub fn flat_to_nested(&self, flat: u64) -> Vec<u64> {
        let mut out = vec![0u64; self.level];
        let mut rest = flat;
        for j in (0..self.level).rev() {
            out[j] = rest % self.primes[j] + 1;
            rest /= self.primes[j];
        }
        out
    }

    fn counter(&self) -> OrbitCounter {
        OrbitCounter::new(self.modulus as i128, self.step as i128)
    }

    /// Orbit balance of Eq-(14) type: `1 + (#L visits - #R visits)` over the
    /// window `j in [0, k)` for `k >= 0`, or `j in {k+1, ..., 0}` for
    /// `k < 0` (the footnote window, with unchanged signs). Middle-cell
    /// visits count for neither side.
    pub fn orbit_balance(&self, flat: u64, k: i64) -> Result<i64, GridError> {
        if k.unsigned_abs() > self.modulus {
            return Err(GridError::OrbitTooLong(k, self.modulus));
        }
        if k == 0 {
            return Ok(1);
        }
        let (start, len) = if k > 0 {
            (flat, k as u64)
        } else {
            (self.shift_cells(flat, k + 1), k.unsigned_abs())
        };
        if len <= 512 {
            let mut acc = 1i64;
            let mut c = start;
            for _ in 0..len {
                acc += self.weight(c);
                c = self.shift_cells(c, 1);
            }
            Ok(acc)
        } else {
            let oc = self.counter();
            let j0 = oc.orbit_index(start as i128);
            let s: i64 = i64::try_from(oc.window_sum(j0, len as i128))
                .expect("window sum fits i64");
            Ok(1 + s)
        }
    }

    /// The finite value of `h` on the pair `(cell, shift_cells(cell, k))`
    /// reached via step count `k`; equals [`Grid::orbit_balance`].
    pub fn h_value(&self, flat: u64, k: i64) -> Result<i64, GridError> {
        self.orbit_balance(flat, k)
    }

    /// `h_+`, the cost value used on the discretized graphs.
    pub fn h_plus(&self, flat: u64, k: i64) -> Result<i64, GridError> {
        Ok(self.h_value(flat, k)?.max(0))
    }

    /// The unique `q` in `[1, M-1]` with `q*P = -1 (mod M)`: applying the
    /// rotation `q` times moves every cell one grid step left.
    pub fn inverse_step(&self) -> u64 {
        self.modulus - self.inv
    }

    /// Dense potential sweep: the unique step function with value 0 on cell
    /// `I_{1..1}` (flat 0) accumulating the cell weights along the full
    /// rotation orbit. Returns `(phi, psi = 1 - phi)`.
    pub fn phi_level(&self, cap: u64) -> Result<(StepFunction, StepFunction), GridError> {
        if self.modulus > cap {
            return Err(GridError::CellCapExceeded {
                cells: self.modulus,
                cap,
            });
        }
        let m = self.modulus as usize;
        let mut phi = vec![0i64; m];
        let mut cell = 0u64;
        let mut acc = 0i64;
        for _ in 0..m {
            phi[cell as usize] = acc;
            acc += self.weight(cell);
            cell = self.shift_cells(cell, 1);
        }
        debug_assert_eq!(acc, 0, "full-orbit weight must close at zero");
        let psi = phi.iter().map(|v| 1 - v).collect();
        Ok((
            StepFunction {
                level: self.level,
                values: phi,
            },
            StepFunction {
                level: self.level,
                values: psi,
            },
        ))
    }

    /// Pointwise potential without a dense sweep; exact at any grid size.
    pub fn phi_at(&self, flat: u64) -> i64 {
        i64::try_from(self.counter().phi_at(flat as i128)).expect("phi fits i64")
    }

    /// Exact `sum_{flat in [lo, hi)} phi(flat)` without a dense sweep.
    pub fn phi_range_sum(&self, lo: u64, hi: u64) -> BigInt {
        self.counter().phi_range_sum(lo as i128, hi as i128)
    }

    /// Oscillation summary of a dense potential (level >= 2): the largest
    /// jump between neighboring cells, and the smallest rise from any
    /// block's first subcell to any block's middle subcell.
    pub fn oscillation_report(&self, phi: &StepFunction) -> OscillationReport {
        let m = self.prime as usize;
        let vals = &phi.values;
        let n = vals.len();
        let mut max_delta = 0i64;
        for c in 0..n {
            let d = (vals[c] - vals[(c + 1) % n]).abs();
            max_delta = max_delta.max(d);
        }
        let blocks = n / m;
        let mut min_mid = i64::MAX;
        let mut max_first = i64::MIN;
        for b in 0..blocks {
            min_mid = min_mid.min(vals[b * m + (m - 1) / 2]);
            max_first = max_first.max(vals[b * m]);
        }
        OscillationReport {
            max_neighbor_delta: max_delta,
            min_half_rise: min_mid - max_first,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub max_neighbor_delta: i64,
    pub min_half_rise: i64,
}

/// An integer-valued function constant on each cell of its level grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepFunction {
    pub level: usize,
    pub values: Vec<i64>,
}

impl StepFunction {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cell average `sum values / M` as an exact rational.
    pub fn mean(&self) -> Rat {
        let total: i64 = self.values.iter().sum();
        Rat::new(BigInt::from(total), BigInt::from(self.values.len() as u64))
    }

    /// CSV rows `flat_index,left_endpoint,value` with exact endpoints.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "flat_index,left_endpoint,value")?;
        let m = self.values.len() as u64;
        for (i, v) in self.values.iter().enumerate() {
            let le = Rat::new(BigInt::from(i as u64), BigInt::from(m));
            writeln!(out, "{},{},{}", i, to_frac_string(&le), v)?;
        }
        Ok(())
    }
}

trait ModFloorU64 {
    fn mod_floor_u64(&self, m: u64) -> u64;
}

impl ModFloorU64 for BigInt {
    fn mod_floor_u64(&self, m: u64) -> u64 {
        use num_integer::Integer;
        let r = self.mod_floor(&BigInt::from(m));
        (&r).try_into().expect("reduced residue fits u64")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number_tower::PrimeTower;

    fn grid(primes: &[u64], level: usize) -> Grid {
        let t = PrimeTower::from_primes(primes).unwrap();
        Grid::from_tower(&t, level).unwrap()
    }

    #[test]
    fn shift_examples_level2() {
        let g = grid(&[5, 11], 2);
        assert_eq!(g.step, 12);
        for flat in [0u64, 7, 54] {
            assert_eq!(g.shift_cells(flat, 5), (flat + 5) % 55);
            assert_eq!(g.shift_cells(flat, 9), (flat + 55 - 2) % 55);
            assert_eq!(g.shift_cells(flat, 23), (flat + 1) % 55);
        }
    }

    #[test]
    fn shift_is_additive_bijection() {
        let g = grid(&[5, 11], 2);
        for t in [-7i64, 3, 20] {
            let mut seen = vec![false; 55];
            for flat in 0..55u64 {
                let im = g.shift_cells(flat, t);
                assert!(!seen[im as usize]);
                seen[im as usize] = true;
                assert_eq!(
                    g.shift_cells(g.shift_cells(flat, t), 5 - t),
                    g.shift_cells(flat, 5)
                );
            }
        }
    }

    #[test]
    fn phi_level_examples() {
        let g = grid(&[5], 1);
        let (phi, psi) = g.phi_level(1 << 20).unwrap();
        assert_eq!(phi.values, vec![0, 1, 2, 2, 1]);
        for c in 0..5 {
            assert_eq!(phi.values[c] + psi.values[c], 1);
        }
        let g = grid(&[11], 1);
        let (phi, _) = g.phi_level(1 << 20).unwrap();
        assert_eq!(phi.values, vec![0, 1, 2, 3, 4, 5, 5, 4, 3, 2, 1]);
    }

    #[test]
    fn phi_pointwise_agrees_with_sweep() {
        for (primes, level) in [(&[5u64, 11][..], 2usize), (&[5, 11, 89][..], 3)] {
            let g = grid(primes, level);
            let (phi, _) = g.phi_level(1 << 24).unwrap();
            for c in 0..g.cells() {
                assert_eq!(g.phi_at(c), phi.values[c as usize], "cell {c}");
            }
        }
    }

    #[test]
    fn inverse_step_examples() {
        assert_eq!(grid(&[5], 1).inverse_step(), 4);
        assert_eq!(grid(&[5, 11], 2).inverse_step(), 32);
        assert_eq!(grid(&[7], 1).inverse_step(), 6); // P = 1 case: M - 1
    }

    #[test]
    fn h_value_examples() {
        let g = grid(&[5], 1);
        assert_eq!(g.h_value(3, 0).unwrap(), 1);
        assert_eq!(g.h_value(0, 1).unwrap(), 2); // I_1 in L
        assert_eq!(g.h_value(3, 1).unwrap(), 0); // I_4 in R
        // negative window {k+1..0} includes the cell itself
        assert_eq!(g.h_value(1, -1).unwrap(), 2); // I_2 in L
        assert_eq!(g.h_value(4, -1).unwrap(), 0); // I_5 in R
    }

    #[test]
    fn orbit_balance_additivity_forward() {
        let g = grid(&[5, 11], 2);
        for flat in [0u64, 13, 40] {
            for j in 0..20i64 {
                for k in j..25i64 {
                    let lhs = g.orbit_balance(flat, k).unwrap() - g.orbit_balance(flat, j).unwrap();
                    let seg =
                        g.orbit_balance(g.shift_cells(flat, j), k - j).unwrap() - 1;
                    assert_eq!(lhs, seg, "flat={flat} j={j} k={k}");
                }
            }
        }
    }

    #[test]
    fn orbit_balance_long_window_matches_walk() {
        let g = grid(&[5, 11, 89], 3);
        let walk = |flat: u64, k: i64| -> i64 {
            let (start, len) = if k >= 0 {
                (flat, k as u64)
            } else {
                (g.shift_cells(flat, k + 1), k.unsigned_abs())
            };
            let mut acc = 1i64;
            let mut c = start;
            for _ in 0..len {
                acc += g.weight(c);
                c = g.shift_cells(c, 1);
            }
            acc
        };
        for flat in [0u64, 1234, 4894] {
            for k in [600i64, 2000, 4895, -600, -2000, -4895] {
                assert_eq!(g.orbit_balance(flat, k).unwrap(), walk(flat, k), "k={k}");
            }
        }
        assert!(g.orbit_balance(0, 4896).is_err());
    }

    #[test]
    fn nested_flat_round_trip() {
        let g = grid(&[5, 11, 89], 3);
        assert_eq!(g.nested_to_flat(&[1, 1, 1]), 0);
        assert_eq!(g.nested_to_flat(&[2, 1, 1]), 11 * 89);
        for flat in [0u64, 1, 977, 4894] {
            assert_eq!(g.nested_to_flat(&g.flat_to_nested(flat)), flat);
        }
    }

    #[test]
    fn oscillation_bound_level2() {
        let g = grid(&[5, 11], 2);
        let (phi, _) = g.phi_level(1 << 20).unwrap();
        let rep = g.oscillation_report(&phi);
        assert!(rep.max_neighbor_delta <= 4 * 25);
        // exhaustive-sweep oracle for the same quantity
        let mut want = 0i64;
        for c in 0..55usize {
            want = want.max((phi.values[c] - phi.values[(c + 1) % 55]).abs());
        }
        assert_eq!(rep.max_neighbor_delta, want);
    }
}
