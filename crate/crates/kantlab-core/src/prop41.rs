//! The second family of interval permutations: fresh within-block zig-zags at
//! each level, propagated upward as block-respecting refinements with no
//! singular bookkeeping. Their dual-pair profiles concentrate a large
//! positive value on a vanishing fraction of cells while each map's
//! transport cost integral stays exactly 1.

use crate::example_builder::{avoids_middle, canonical_tau, BuildError, IntervalPermutation};
use crate::grid_dynamics::{Grid, StepFunction};
use crate::number_tower::PrimeTower;
use crate::rational::Rat;
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// One fresh zig-zag with its reported profile.
#[derive(Debug, Clone)]
pub struct FreshLevel {
    pub level: usize,
    pub perm: IntervalPermutation,
    /// `psi(x) + phi(image(x)) = 1 - defect(x)`: zero on the interior of
    /// each block, 1 on block middles, and a peak of order `m/(2M_prev)` on
    /// the `2*M_prev` boundary subcells per block.
    pub co_quasi: StepFunction,
}

/// The full family at truncation depth.
#[derive(Debug, Clone)]
pub struct Prop41Build {
    pub depth: usize,
    /// Fresh zig-zags `tau_{j,j}` at their own levels, `j = 1..=depth`.
    pub fresh: Vec<FreshLevel>,
    /// `tau_{n,depth}` for `n = 2..=depth`: each fresh map propagated to the
    /// deepest grid. Together with the identity and the single shift these
    /// are the family members of the relaxation counterexample.
    pub family: Vec<IntervalPermutation>,
}

/// Build the fresh level-j zig-zag: within each level-(j-1) block the
/// `M_{j-1}` boundary subcells on each side jump (order-preservingly, with
/// canonical middle-avoiding shift counts) onto the `2*M_{j-1}` subcells
/// around the block middle, the block-middle subcell stays, and the interior
/// halves slide one boundary-width toward the block ends.
pub fn fresh_zigzag(tower: &PrimeTower, level: usize) -> Result<FreshLevel, BuildError> {
    let grid = Grid::from_tower(tower, level)?;
    let m = grid.prime;
    let mp = grid.prev_modulus;
    if m < 2 * mp + 1 {
        return Err(BuildError::PrimeTooSmall {
            level,
            m,
            minimal: 2 * mp + 1,
        });
    }
    let cells = grid.cells() as usize;
    let mut tau = vec![0i64; cells];
    for block in 0..mp {
        let base = block * m;
        // boundary sources and their middle-region gaps (1-based subcells)
        let sources: Vec<u64> = (1..=mp).chain((m - mp + 1)..=m).collect();
        let gaps: Vec<u64> = ((m - 1) / 2 - mp + 1..=(m - 1) / 2)
            .chain((m + 3) / 2..=(m + 3) / 2 + mp - 1)
            .collect();
        debug_assert_eq!(sources.len(), gaps.len());
        for (src, gap) in sources.iter().zip(&gaps) {
            let from = base + src - 1;
            let to = base + gap - 1;
            tau[from as usize] = canonical_tau(&grid, from, to)?;
        }
        // interior halves slide toward the block ends by one boundary width
        for k in (mp + 1)..=((m - 1) / 2) {
            let from = base + k - 1;
            tau[from as usize] = interior_tau(&grid, from, -(mp as i64))?;
        }
        for k in ((m + 3) / 2)..=(m - mp) {
            let from = base + k - 1;
            tau[from as usize] = interior_tau(&grid, from, mp as i64)?;
        }
        // block-middle subcell stays: tau already 0
    }
    let perm = {
        let image = tau
            .iter()
            .enumerate()
            .map(|(i, &t)| grid.shift_cells(i as u64, t))
            .collect();
        IntervalPermutation {
            level,
            tau,
            image,
        }
    };
    perm.verify(&grid, None)?;
    let co_quasi = co_quasi_of(&grid, &perm)?;
    Ok(FreshLevel {
        level,
        perm,
        co_quasi,
    })
}

/// `T^{M_{j-1}}` moves every cell by exactly `M_{j-1}` grid steps, so the
/// interior slides use `tau = +-M_{j-1}` directly; fall back to the other
/// representative if the straight one crosses the middle cell.
fn interior_tau(grid: &Grid, from: u64, t: i64) -> Result<i64, BuildError> {
    if avoids_middle(grid, from, t) {
        Ok(t)
    } else {
        canonical_tau(grid, from, grid.shift_cells(from, t))
    }
}

/// `psi(x) + phi(image(x)) = 1 - defect(x)` per cell.
pub fn co_quasi_of(grid: &Grid, perm: &IntervalPermutation) -> Result<StepFunction, BuildError> {
    let (phi, _) = grid.phi_level(crate::cell_cap())?;
    let values = (0..grid.cells() as usize)
        .map(|i| 1 - (phi.values[i] - phi.values[perm.image[i] as usize]))
        .collect();
    Ok(StepFunction {
        level: grid.level,
        values,
    })
}

/// Propagate a permutation one level down the refinement: every block keeps
/// its shift count except the `|tau|` boundary subcells, which map onto the
/// gaps of the image block, order-preservingly.
pub fn propagate(
    tower: &PrimeTower,
    level: usize,
    parent: &IntervalPermutation,
) -> Result<IntervalPermutation, BuildError> {
    if level != parent.level + 1 {
        return Err(BuildError::LevelMismatch(level, parent.level));
    }
    let grid = Grid::from_tower(tower, level)?;
    let m = grid.prime;
    let cells = grid.cells() as usize;
    let mut tau = vec![0i64; cells];
    for block in 0..grid.prev_modulus {
        let base = block * m;
        let parent_tau = parent.tau[block as usize];
        let shift = parent_tau.unsigned_abs();
        if shift >= m {
            return Err(BuildError::PrimeTooSmall {
                level,
                m,
                minimal: shift + 1,
            });
        }
        let image_base = parent.image[block as usize] * m;
        let (unchanged, changed, gaps): (std::ops::RangeInclusive<u64>, Vec<u64>, Vec<u64>) =
            if parent_tau >= 0 {
                (
                    1..=(m - shift),
                    ((m - shift + 1)..=m).collect(),
                    (1..=shift).collect(),
                )
            } else {
                (
                    (shift + 1)..=m,
                    (1..=shift).collect(),
                    ((m - shift + 1)..=m).collect(),
                )
            };
        for k in unchanged {
            tau[(base + k - 1) as usize] = parent_tau;
        }
        for (src, gap) in changed.iter().zip(&gaps) {
            let from = base + src - 1;
            let to = image_base + gap - 1;
            tau[from as usize] = canonical_tau(&grid, from, to)?;
        }
    }
    let image = tau
        .iter()
        .enumerate()
        .map(|(i, &t)| grid.shift_cells(i as u64, t))
        .collect();
    let perm = IntervalPermutation {
        level,
        tau,
        image,
    };
    perm.verify(&grid, Some(parent))?;
    Ok(perm)
}

/// Build the whole family at truncation depth.
pub fn build_prop41(tower: &PrimeTower, depth: usize) -> Result<Prop41Build, BuildError> {
    let mut fresh = Vec::new();
    for j in 1..=depth {
        fresh.push(fresh_zigzag(tower, j)?);
    }
    let mut family = Vec::new();
    for f in fresh.iter().skip(1) {
        let mut perm = f.perm.clone();
        for level in (f.level + 1)..=depth {
            perm = propagate(tower, level, &perm)?;
        }
        family.push(perm);
    }
    Ok(Prop41Build {
        depth,
        fresh,
        family,
    })
}

/// Concentration summary of one fresh profile.
#[derive(Debug, Clone)]
pub struct ConcentrationProfile {
    /// Fraction of cells with nonzero profile value.
    pub eta: Rat,
    /// Largest profile value.
    pub peak: Rat,
    /// `sum profile / M - 1`; zero for every permutation.
    pub mass_residual: Rat,
}

pub fn concentration_profile(fresh: &FreshLevel) -> ConcentrationProfile {
    let m = fresh.co_quasi.values.len() as u64;
    let nonzero = fresh.co_quasi.values.iter().filter(|v| **v != 0).count() as u64;
    let peak = fresh.co_quasi.values.iter().copied().max().unwrap_or(0);
    ConcentrationProfile {
        eta: Rat::new(BigInt::from(nonzero), BigInt::from(m)),
        peak: Rat::from_integer(BigInt::from(peak)),
        mass_residual: fresh.co_quasi.mean() - Rat::one(),
    }
}

/// Transport cost of the plan riding a permutation graph, with the cost on
/// each arc given by the orbit-count value `h_+`.
pub fn tau_plan_cost(grid: &Grid, perm: &IntervalPermutation) -> Result<Rat, BuildError> {
    let mut total = BigInt::zero();
    for i in 0..grid.cells() {
        total += BigInt::from(grid.h_plus(i, perm.tau[i as usize])?);
    }
    Ok(Rat::new(total, BigInt::from(grid.cells())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn tower(primes: &[u64]) -> PrimeTower {
        PrimeTower::from_primes(primes).unwrap()
    }

    #[test]
    fn fresh_level1_m5() {
        let f = fresh_zigzag(&tower(&[5]), 1).unwrap();
        // co-quasi profile: 2 on the two jumpers, 0 on the sliders, 1 middle
        assert_eq!(f.co_quasi.values, vec![2, 0, 1, 0, 2]);
        let prof = concentration_profile(&f);
        assert_eq!(prof.eta, rat(3, 5));
        assert_eq!(prof.peak, rat_int(2));
        assert_eq!(prof.mass_residual, rat_int(0));
    }

    #[test]
    fn fresh_level1_general_m() {
        let f = fresh_zigzag(&tower(&[11]), 1).unwrap();
        // (M-1)/2 on the jumpers, 0 on the interior, 1 on the middle
        let v = &f.co_quasi.values;
        assert_eq!(v[0], 5);
        assert_eq!(v[10], 5);
        assert_eq!(v[5], 1);
        for k in [1usize, 2, 3, 4, 6, 7, 8, 9] {
            assert_eq!(v[k], 0, "k={k}");
        }
    }

    #[test]
    fn degenerate_level2_is_identity() {
        // m_2 = 2*M_1 + 1: the boundary set equals the gap set, so the
        // order-preserving assignment fixes every cell.
        let f = fresh_zigzag(&tower(&[5, 11]), 2).unwrap();
        assert!(f.perm.tau.iter().all(|t| *t == 0));
        let prof = concentration_profile(&f);
        assert_eq!(prof.eta, rat_int(1));
        assert_eq!(prof.mass_residual, rat_int(0));
    }

    #[test]
    fn nondegenerate_level3_profile() {
        let t = tower(&[5, 11]).extend(111).unwrap();
        assert_eq!(t.prime(3), 199);
        let f = fresh_zigzag(&t, 3).unwrap();
        let prof = concentration_profile(&f);
        // eta <= (2 M_2 + 1)/m_3
        assert!(prof.eta <= rat(2 * 55 + 1, 199));
        assert_eq!(prof.mass_residual, rat_int(0));
        // the peak concentrates at least m_3/(2 M_2) rounded down
        assert!(prof.peak >= rat_int((199 / (2 * 55)) as i64));
    }

    #[test]
    fn family_block_respecting_and_close_to_identity() {
        let t = tower(&[5, 11]).extend(111).unwrap();
        let fam = build_prop41(&t, 3).unwrap();
        assert_eq!(fam.family.len(), 2);
        let g3 = Grid::from_tower(&t, 3).unwrap();
        // tau_{2,3} stays within level-1 blocks, tau_{3,3} within level-2
        assert!(fam.family[0].max_displacement(&g3) < rat(1, 5));
        assert!(fam.family[1].max_displacement(&g3) < rat(1, 55));
        // cost identity for every member
        for perm in &fam.family {
            let quasi_mean: Rat = {
                let (phi, psi) = g3.phi_level(u64::MAX).unwrap();
                let total: i64 = (0..g3.cells() as usize)
                    .map(|i| phi.values[i] + psi.values[perm.image[i] as usize])
                    .sum();
                Rat::new(BigInt::from(total), BigInt::from(g3.cells()))
            };
            assert_eq!(quasi_mean, rat_int(1));
        }
    }
}
