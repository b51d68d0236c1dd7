//! The finite Monge-Kantorovich engine: exact primal/dual transport solver,
//! complementary slackness, the marginal perturbation map, cyclical and
//! strong monotonicity, discretized example costs, and the restricted /
//! relaxed problem variants.

pub mod mcf;
pub mod simplex;

use crate::example_builder::IntervalPermutation;
use crate::grid_dynamics::Grid;
use crate::rational::Rat;
use mcf::MinCostFlow;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use simplex::{simplex_max, LpOutcome};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OtError {
    #[error("marginals do not balance: sum mu = {0}, sum nu = {1}")]
    MarginalMismatch(String, String),
    #[error("negative marginal entry")]
    NegativeMarginal,
    #[error("no finite-cost plan exists")]
    Infeasible,
    #[error("cost matrix {0}x{1} too large for a dense instance")]
    MatrixTooLarge(usize, usize),
    #[error("support pair ({0}, {1}) has infinite cost")]
    InfiniteOnSupport(usize, usize),
    #[error("monotonicity set touches the infinite entry ({0}, {1})")]
    GammaInfinite(usize, usize),
    #[error("graphs assign different finite values {0} and {1} to entry ({2}, {3})")]
    InconsistentGraphValue(String, String, usize, usize),
    #[error("partial transport exceeds a marginal at {0}")]
    PartialMarginalExceeded(usize),
    #[error("relaxed dual is unbounded (a marginal row or column has no support)")]
    Unbounded,
    #[error("internal: {0}")]
    Internal(String),
    #[error(transparent)]
    Grid(#[from] crate::grid_dynamics::GridError),
}

/// Dense cost matrix over `[0, inf]`; `None` encodes the infinite entries,
/// which are absent arcs for the solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    entries: Vec<Option<Rat>>,
}

impl CostMatrix {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        CostMatrix {
            n_rows,
            n_cols,
            entries: vec![None; n_rows * n_cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Option<Rat>>>) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut c = CostMatrix::new(n_rows, n_cols);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), n_cols);
            for (j, v) in row.into_iter().enumerate() {
                c.set(i, j, v);
            }
        }
        c
    }

    /// All-finite matrix from integer costs.
    pub fn from_ints(rows: &[Vec<i64>]) -> Self {
        CostMatrix::from_rows(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|v| Some(Rat::from_integer(BigInt::from(*v))))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&Rat> {
        self.entries[i * self.n_cols + j].as_ref()
    }

    pub fn set(&mut self, i: usize, j: usize, v: Option<Rat>) {
        self.entries[i * self.n_cols + j] = v;
    }
}

/// A nonnegative matrix with prescribed marginals, stored sparsely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportPlan {
    pub n_rows: usize,
    pub n_cols: usize,
    /// `(row, col, mass)` triplets with positive mass.
    pub entries: Vec<(usize, usize, Rat)>,
    pub mu: Vec<Rat>,
    pub nu: Vec<Rat>,
}

impl TransportPlan {
    pub fn mass(&self, i: usize, j: usize) -> Rat {
        self.entries
            .iter()
            .filter(|(a, b, _)| *a == i && *b == j)
            .map(|(_, _, m)| m.clone())
            .sum()
    }

    pub fn row_sums(&self) -> Vec<Rat> {
        let mut out = vec![Rat::zero(); self.n_rows];
        for (i, _, m) in &self.entries {
            out[*i] += m;
        }
        out
    }

    pub fn col_sums(&self) -> Vec<Rat> {
        let mut out = vec![Rat::zero(); self.n_cols];
        for (_, j, m) in &self.entries {
            out[*j] += m;
        }
        out
    }

    /// Total mass.
    pub fn norm(&self) -> Rat {
        self.entries.iter().map(|(_, _, m)| m.clone()).sum()
    }

    /// `<c, pi>`, or `None` if the plan puts mass on an infinite entry.
    pub fn cost(&self, c: &CostMatrix) -> Option<Rat> {
        let mut total = Rat::zero();
        for (i, j, m) in &self.entries {
            total += c.get(*i, *j)? * m;
        }
        Some(total)
    }

    /// Marginal consistency check.
    pub fn is_consistent(&self) -> bool {
        self.row_sums() == self.mu && self.col_sums() == self.nu
    }
}

/// Dual potentials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Potentials {
    pub phi: Vec<Rat>,
    pub psi: Vec<Rat>,
}

impl Potentials {
    /// Dual objective `sum phi.mu + sum psi.nu`.
    pub fn value(&self, mu: &[Rat], nu: &[Rat]) -> Rat {
        let a: Rat = self.phi.iter().zip(mu).map(|(p, m)| p * m).sum();
        let b: Rat = self.psi.iter().zip(nu).map(|(p, m)| p * m).sum();
        a + b
    }

    /// Feasibility for a cost: `phi_i + psi_j <= c_ij` on finite entries.
    pub fn is_feasible(&self, c: &CostMatrix) -> bool {
        for i in 0..c.n_rows {
            for j in 0..c.n_cols {
                if let Some(cij) = c.get(i, j) {
                    if &self.phi[i] + &self.psi[j] > *cij {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// A set of row/column pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    pub pairs: Vec<(usize, usize)>,
}

/// Joint primal/dual solution.
#[derive(Debug, Clone)]
pub struct Solution {
    pub plan: TransportPlan,
    pub potentials: Potentials,
    pub value: Rat,
}

fn check_marginals(mu: &[Rat], nu: &[Rat]) -> Result<(), OtError> {
    if mu.iter().chain(nu.iter()).any(|x| x.is_negative()) {
        return Err(OtError::NegativeMarginal);
    }
    let sm: Rat = mu.iter().cloned().sum();
    let sn: Rat = nu.iter().cloned().sum();
    if sm != sn {
        return Err(OtError::MarginalMismatch(sm.to_string(), sn.to_string()));
    }
    Ok(())
}

/// Exact optimal plan and value (vertex of the transportation polytope).
pub fn solve_primal(
    c: &CostMatrix,
    mu: &[Rat],
    nu: &[Rat],
) -> Result<(TransportPlan, Rat), OtError> {
    let sol = solve_pair(c, mu, nu)?;
    Ok((sol.plan, sol.value))
}

/// Feasible potentials with dual value equal to the primal optimum.
pub fn solve_dual(c: &CostMatrix, mu: &[Rat], nu: &[Rat]) -> Result<(Potentials, Rat), OtError> {
    let sol = solve_pair(c, mu, nu)?;
    Ok((sol.potentials, sol.value))
}

/// One solver pass yielding the plan, the potentials, and the shared value.
pub fn solve_pair(c: &CostMatrix, mu: &[Rat], nu: &[Rat]) -> Result<Solution, OtError> {
    check_marginals(mu, nu)?;
    let (r, s) = (c.n_rows, c.n_cols);
    let total: Rat = mu.iter().cloned().sum();
    let mut mcf = MinCostFlow::new(r + s);
    let mut arc_ids = Vec::new();
    for i in 0..r {
        for j in 0..s {
            if let Some(cost) = c.get(i, j) {
                let id = mcf.add_arc(i, r + j, total.clone(), cost.clone());
                arc_ids.push((i, j, id));
            }
        }
    }
    let mut excess = Vec::with_capacity(r + s);
    excess.extend(mu.iter().cloned());
    excess.extend(nu.iter().map(|x| -x.clone()));
    let value = mcf.solve(excess).ok_or(OtError::Infeasible)?;
    let mut entries = Vec::new();
    for (i, j, id) in &arc_ids {
        let f = mcf.flow(*id);
        if f > Rat::zero() {
            entries.push((*i, *j, f));
        }
    }
    let plan = TransportPlan {
        n_rows: r,
        n_cols: s,
        entries,
        mu: mu.to_vec(),
        nu: nu.to_vec(),
    };
    let potentials = potentials_from_plan(c, &plan)?;
    debug_assert_eq!(potentials.value(mu, nu), value);
    Ok(Solution {
        plan,
        potentials,
        value,
    })
}

/// Derive complementary potentials from an optimal plan by solving the
/// difference-constraint system: `phi_i + psi_j <= c_ij` on finite entries
/// with equality on the support. Normalized so `phi[0] = 0`.
fn potentials_from_plan(c: &CostMatrix, plan: &TransportPlan) -> Result<Potentials, OtError> {
    let (r, s) = (c.n_rows, c.n_cols);
    let n = r + s;
    // z_row(i) = phi_i, z_col(j) = -psi_j; arcs col -> row weight c_ij,
    // support adds row -> col weight -c_ij.
    let mut edges: Vec<(usize, usize, Rat)> = Vec::new();
    for i in 0..r {
        for j in 0..s {
            if let Some(cij) = c.get(i, j) {
                edges.push((r + j, i, cij.clone()));
            }
        }
    }
    for (i, j, _) in &plan.entries {
        let cij = c.get(*i, *j).ok_or(OtError::InfiniteOnSupport(*i, *j))?;
        edges.push((*i, r + j, -cij.clone()));
    }
    // Bellman-Ford from a virtual all-zero source.
    let mut dist = vec![Rat::zero(); n];
    for round in 0..=n {
        let mut improved = false;
        for (u, v, w) in &edges {
            let cand = &dist[*u] + w;
            if cand < dist[*v] {
                dist[*v] = cand;
                improved = true;
            }
        }
        if !improved {
            break;
        }
        if round == n {
            return Err(OtError::Internal(
                "negative cycle while extracting potentials from an optimal plan".into(),
            ));
        }
    }
    let shift = dist[0].clone();
    let phi: Vec<Rat> = (0..r).map(|i| &dist[i] - &shift).collect();
    let psi: Vec<Rat> = (0..s).map(|j| -&dist[r + j] + &shift).collect();
    Ok(Potentials { phi, psi })
}

/// Violation kinds reported by the slackness check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlacknessViolation {
    /// Mass sits where the dual constraint is slack.
    MassOnSlack { i: usize, j: usize },
    /// The potentials exceed the cost somewhere.
    DualInfeasible { i: usize, j: usize },
}

/// List every violation of the complementary slackness conditions; empty iff
/// the pair is jointly optimal (given primal feasibility).
pub fn verify_slackness(
    plan: &TransportPlan,
    pots: &Potentials,
    c: &CostMatrix,
) -> Vec<SlacknessViolation> {
    let mut out = Vec::new();
    for i in 0..c.n_rows {
        for j in 0..c.n_cols {
            if let Some(cij) = c.get(i, j) {
                if &pots.phi[i] + &pots.psi[j] > *cij {
                    out.push(SlacknessViolation::DualInfeasible { i, j });
                }
            }
        }
    }
    for (i, j, m) in &plan.entries {
        if m.is_zero() {
            continue;
        }
        match c.get(*i, *j) {
            None => out.push(SlacknessViolation::MassOnSlack { i: *i, j: *j }),
            Some(cij) => {
                if &pots.phi[*i] + &pots.psi[*j] != *cij {
                    out.push(SlacknessViolation::MassOnSlack { i: *i, j: *j });
                }
            }
        }
    }
    out
}

/// The perturbation map: minimal transport cost as a function of the
/// marginals `(f, g)` in the balanced positive orthant.
pub fn perturbation_value(c: &CostMatrix, f: &[Rat], g: &[Rat]) -> Result<Rat, OtError> {
    let (_, value) = solve_primal(c, f, g)?;
    Ok(value)
}

/// A subgradient of the perturbation map at `(f0, g0)`: the dual optimizer.
pub fn perturbation_subgradient(
    c: &CostMatrix,
    f0: &[Rat],
    g0: &[Rat],
) -> Result<Potentials, OtError> {
    let (pots, _) = solve_dual(c, f0, g0)?;
    Ok(pots)
}

/// Exchange graph edges for the monotonicity checks: `j -> j'` with weight
/// `min over rows i with (i,j) in Gamma of c(i,j') - c(i,j)`.
fn exchange_edges(
    gamma: &SupportSet,
    c: &CostMatrix,
) -> Result<Vec<(usize, usize, Rat)>, OtError> {
    let mut best: std::collections::HashMap<(usize, usize), Rat> = std::collections::HashMap::new();
    for (i, j) in &gamma.pairs {
        let cij = c.get(*i, *j).ok_or(OtError::GammaInfinite(*i, *j))?;
        for jp in 0..c.n_cols {
            if jp == *j {
                continue;
            }
            if let Some(cijp) = c.get(*i, jp) {
                let w = cijp - cij;
                best.entry((*j, jp))
                    .and_modify(|cur| {
                        if w < *cur {
                            *cur = w.clone();
                        }
                    })
                    .or_insert(w);
            }
        }
    }
    Ok(best.into_iter().map(|((a, b), w)| (a, b, w)).collect())
}

/// Cyclical c-monotonicity of a support set, via negative-cycle detection on
/// the exchange graph.
pub fn is_cyclically_monotone(gamma: &SupportSet, c: &CostMatrix) -> Result<bool, OtError> {
    let mut edges = exchange_edges(gamma, c)?;
    edges.sort_by_key(|(a, b, _)| (*a, *b));
    let n = c.n_cols;
    let mut dist = vec![Rat::zero(); n];
    for round in 0..=n {
        let mut improved = false;
        for (u, v, w) in &edges {
            let cand = &dist[*u] + w;
            if cand < dist[*v] {
                dist[*v] = cand;
                improved = true;
            }
        }
        if !improved {
            return Ok(true);
        }
        if round == n {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Witness potentials for strong cyclical c-monotonicity, or `None`. The two
/// notions agree, so a witness exists exactly when the cycle check passes.
pub fn strong_monotone_witness(
    gamma: &SupportSet,
    c: &CostMatrix,
) -> Result<Option<Potentials>, OtError> {
    if !is_cyclically_monotone(gamma, c)? {
        return Ok(None);
    }
    let mut edges = exchange_edges(gamma, c)?;
    edges.sort_by_key(|(a, b, _)| (*a, *b));
    let n = c.n_cols;
    let mut dist = vec![Rat::zero(); n];
    loop {
        let mut improved = false;
        for (u, v, w) in &edges {
            let cand = &dist[*u] + w;
            if cand < dist[*v] {
                dist[*v] = cand;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    let psi = dist;
    let mut phi = vec![Rat::zero(); c.n_rows];
    let mut pinned = vec![false; c.n_rows];
    for (i, j) in &gamma.pairs {
        let cij = c.get(*i, *j).unwrap();
        let val = cij - &psi[*j];
        debug_assert!(!pinned[*i] || phi[*i] == val, "witness ill-defined");
        phi[*i] = val;
        pinned[*i] = true;
    }
    for i in 0..c.n_rows {
        if pinned[i] {
            continue;
        }
        let mut best: Option<Rat> = None;
        for j in 0..c.n_cols {
            if let Some(cij) = c.get(i, j) {
                let v = cij - &psi[j];
                best = Some(match best {
                    None => v,
                    Some(b) => b.min(v),
                });
            }
        }
        phi[i] = best.unwrap_or_else(Rat::zero);
    }
    Ok(Some(Potentials { phi, psi }))
}

/// Assemble the discretized example cost on a level grid: finite entries on
/// the diagonal, on the single-shift graph, and on each supplied permutation
/// graph, with values `h_+` from the orbit counts. Overlapping graphs must
/// agree on shared entries.
pub fn discretized_example_cost(
    grid: &Grid,
    perms: &[&IntervalPermutation],
) -> Result<CostMatrix, OtError> {
    let n = grid.cells();
    if n > 4096 {
        return Err(OtError::MatrixTooLarge(n as usize, n as usize));
    }
    let n = n as usize;
    let mut c = CostMatrix::new(n, n);
    let put = |c: &mut CostMatrix, i: usize, j: usize, v: Rat| -> Result<(), OtError> {
        match c.get(i, j) {
            None => {
                c.set(i, j, Some(v));
                Ok(())
            }
            Some(old) if *old == v => Ok(()),
            Some(old) => Err(OtError::InconsistentGraphValue(
                old.to_string(),
                v.to_string(),
                i,
                j,
            )),
        }
    };
    for i in 0..n {
        let iu = i as u64;
        put(&mut c, i, i, Rat::one())?;
        let js = grid.shift_cells(iu, 1) as usize;
        let vs = Rat::from_integer(BigInt::from(grid.h_plus(iu, 1)?));
        put(&mut c, i, js, vs)?;
        for perm in perms {
            let jt = perm.image[i] as usize;
            let vt = Rat::from_integer(BigInt::from(grid.h_plus(iu, perm.tau[i])?));
            put(&mut c, i, jt, vt)?;
        }
    }
    Ok(c)
}

/// Restricted primal: minimize `<c, pi>` over plans dominated by `cap * pi0`
/// entrywise (equivalently `pi << pi0` with density at most `cap`). The
/// marginals are those of `pi0`.
pub fn restricted_primal(
    c: &CostMatrix,
    pi0: &TransportPlan,
    cap: &Rat,
) -> Result<Rat, OtError> {
    let (r, s) = (pi0.n_rows, pi0.n_cols);
    let mut mcf = MinCostFlow::new(r + s);
    for (i, j, m) in &pi0.entries {
        let cij = c.get(*i, *j).ok_or(OtError::InfiniteOnSupport(*i, *j))?;
        mcf.add_arc(*i, r + j, cap * m, cij.clone());
    }
    let mu = pi0.row_sums();
    let nu = pi0.col_sums();
    let mut excess = Vec::with_capacity(r + s);
    excess.extend(mu);
    excess.extend(nu.into_iter().map(|x| -x));
    mcf.solve(excess).ok_or(OtError::Infeasible)
}

/// Epsilon-relaxed dual: maximize the dual objective over potentials whose
/// constraint violations, integrated against `pi0`, stay within `eps`.
pub fn epsilon_relaxed_dual(
    c: &CostMatrix,
    pi0: &TransportPlan,
    eps: &Rat,
) -> Result<Rat, OtError> {
    let (r, s) = (pi0.n_rows, pi0.n_cols);
    let mu = pi0.row_sums();
    let nu = pi0.col_sums();
    for i in 0..r {
        if mu[i] > Rat::zero() && !pi0.entries.iter().any(|(a, _, m)| *a == i && !m.is_zero()) {
            return Err(OtError::Unbounded);
        }
    }
    // Variables: phi = u - v, psi = w - z (split free parts), s_k >= 0.
    let k = pi0.entries.len();
    let nvars = 2 * r + 2 * s + k;
    let mut objective = vec![Rat::zero(); nvars];
    for i in 0..r {
        objective[i] = mu[i].clone();
        objective[r + i] = -mu[i].clone();
    }
    for j in 0..s {
        objective[2 * r + j] = nu[j].clone();
        objective[2 * r + s + j] = -nu[j].clone();
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (idx, (i, j, _)) in pi0.entries.iter().enumerate() {
        let cij = c.get(*i, *j).ok_or(OtError::InfiniteOnSupport(*i, *j))?;
        let mut row = vec![Rat::zero(); nvars];
        row[*i] = Rat::one();
        row[r + i] = -Rat::one();
        row[2 * r + j] = Rat::one();
        row[2 * r + s + j] = -Rat::one();
        row[2 * r + 2 * s + idx] = -Rat::one();
        rows.push(row);
        rhs.push(cij.clone());
    }
    let mut budget = vec![Rat::zero(); nvars];
    for (idx, (_, _, m)) in pi0.entries.iter().enumerate() {
        budget[2 * r + 2 * s + idx] = m.clone();
    }
    rows.push(budget);
    rhs.push(eps.clone());
    match simplex_max(&objective, &rows, &rhs) {
        LpOutcome::Optimal(v) => Ok(v),
        LpOutcome::Unbounded => Err(OtError::Unbounded),
    }
}

/// Completion feasibility probe: is there a partial transport supported
/// within circle distance `beta` of the diagonal whose sum with `sigma` is a
/// full plan in `Pi(mu, nu)`?
pub fn completion_feasibility(
    grid: &Grid,
    sigma: &TransportPlan,
    beta: &Rat,
    mu: &[Rat],
    nu: &[Rat],
) -> Result<bool, OtError> {
    check_marginals(mu, nu)?;
    let n = grid.cells() as usize;
    let rows = sigma.row_sums();
    let cols = sigma.col_sums();
    let mut residual_row = Vec::with_capacity(n);
    let mut residual_col = Vec::with_capacity(n);
    for i in 0..n {
        let r = &mu[i] - &rows[i];
        if r.is_negative() {
            return Err(OtError::PartialMarginalExceeded(i));
        }
        residual_row.push(r);
    }
    for j in 0..n {
        let r = &nu[j] - &cols[j];
        if r.is_negative() {
            return Err(OtError::PartialMarginalExceeded(j));
        }
        residual_col.push(r);
    }
    let need: Rat = residual_row.iter().cloned().sum();
    let need_cols: Rat = residual_col.iter().cloned().sum();
    if need != need_cols {
        return Ok(false);
    }
    if need.is_zero() {
        return Ok(true);
    }
    // Allowed band: |i - j| circle distance below beta.
    let m = grid.cells();
    let mut width = 0u64;
    while width + 1 <= m / 2
        && &Rat::new(BigInt::from(width + 1), BigInt::from(m)) < beta
    {
        width += 1;
    }
    let mut mcf = MinCostFlow::new(2 * n);
    let total = need.clone();
    for i in 0..n {
        if residual_row[i].is_zero() {
            continue;
        }
        let mut targets: Vec<usize> = Vec::with_capacity(2 * width as usize + 1);
        targets.push(i);
        for d in 1..=(width as i64) {
            targets.push((i as i64 + d).rem_euclid(m as i64) as usize);
            targets.push((i as i64 - d).rem_euclid(m as i64) as usize);
        }
        targets.sort_unstable();
        targets.dedup();
        for j in targets {
            if grid.cell_dist(i as u64, j as u64) < *beta {
                mcf.add_arc(i, n + j, total.clone(), Rat::zero());
            }
        }
    }
    let mut excess = Vec::with_capacity(2 * n);
    excess.extend(residual_row);
    excess.extend(residual_col.into_iter().map(|x| -x));
    Ok(mcf.solve(excess).is_some())
}

/// Brute-force optimum over all permutation plans (uniform marginals): the
/// extreme points of the uniform transportation polytope by Birkhoff.
pub fn brute_force_uniform_optimum(c: &CostMatrix) -> Option<Rat> {
    let n = c.n_rows;
    assert_eq!(n, c.n_cols);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<Rat> = None;
    permute(&mut perm, 0, &mut |p| {
        let mut total = Rat::zero();
        for (i, &j) in p.iter().enumerate() {
            match c.get(i, j) {
                None => return,
                Some(v) => total += v,
            }
        }
        let scaled = total / Rat::from_integer(BigInt::from(n as u64));
        best = Some(match best.take() {
            None => scaled,
            Some(b) => b.min(scaled),
        });
    });
    best
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn uniform(n: usize) -> Vec<Rat> {
        vec![rat(1, n as i64); n]
    }

    #[test]
    fn primal_trivial_cases() {
        let c = CostMatrix::from_ints(&[vec![7]]);
        let (plan, v) = solve_primal(&c, &uniform(1), &uniform(1)).unwrap();
        assert_eq!(v, rat_int(7));
        assert_eq!(plan.entries, vec![(0, 0, rat_int(1))]);

        let c = CostMatrix::from_ints(&[vec![0, 1], vec![1, 0]]);
        let (plan, v) = solve_primal(&c, &uniform(2), &uniform(2)).unwrap();
        assert_eq!(v, rat_int(0));
        assert!(plan.entries.iter().all(|(i, j, _)| i == j));
    }

    #[test]
    fn forced_antidiagonal() {
        let c = CostMatrix::from_rows(vec![
            vec![None, Some(rat_int(1))],
            vec![Some(rat_int(1)), None],
        ]);
        let (plan, v) = solve_primal(&c, &uniform(2), &uniform(2)).unwrap();
        assert_eq!(v, rat_int(1));
        assert!(plan.entries.iter().all(|(i, j, _)| i != j));
    }

    #[test]
    fn infeasible_instance() {
        let c = CostMatrix::from_rows(vec![
            vec![Some(rat_int(1)), None],
            vec![Some(rat_int(1)), None],
        ]);
        assert!(matches!(
            solve_primal(&c, &uniform(2), &uniform(2)),
            Err(OtError::Infeasible)
        ));
    }

    #[test]
    fn dual_equals_primal_and_slackness_empty() {
        let c = CostMatrix::from_ints(&[vec![3, 1, 4], vec![1, 5, 9], vec![2, 6, 5]]);
        let sol = solve_pair(&c, &uniform(3), &uniform(3)).unwrap();
        assert_eq!(sol.potentials.value(&uniform(3), &uniform(3)), sol.value);
        assert!(sol.potentials.is_feasible(&c));
        assert!(verify_slackness(&sol.plan, &sol.potentials, &c).is_empty());
        assert_eq!(sol.potentials.phi[0], rat_int(0));
        let brute = brute_force_uniform_optimum(&c).unwrap();
        assert_eq!(sol.value, brute);
    }

    #[test]
    fn slackness_reports_bad_pair() {
        let c = CostMatrix::from_ints(&[vec![1, 0], vec![0, 1]]);
        let plan = TransportPlan {
            n_rows: 2,
            n_cols: 2,
            entries: vec![(0, 0, rat(1, 2)), (1, 1, rat(1, 2))],
            mu: uniform(2),
            nu: uniform(2),
        };
        let pots = Potentials {
            phi: vec![rat_int(0); 2],
            psi: vec![rat_int(0); 2],
        };
        let report = verify_slackness(&plan, &pots, &c);
        assert_eq!(report.len(), 2);
    }

    #[test]
    fn monotonicity_examples() {
        let c_good = CostMatrix::from_ints(&[vec![0, 1], vec![1, 0]]);
        let diag = SupportSet {
            pairs: vec![(0, 0), (1, 1)],
        };
        assert!(is_cyclically_monotone(&diag, &c_good).unwrap());
        let w = strong_monotone_witness(&diag, &c_good).unwrap().unwrap();
        for (i, j) in &diag.pairs {
            assert_eq!(&w.phi[*i] + &w.psi[*j], *c_good.get(*i, *j).unwrap());
        }
        assert!(w.is_feasible(&c_good));

        let c_bad = CostMatrix::from_ints(&[vec![1, 0], vec![0, 1]]);
        assert!(!is_cyclically_monotone(&diag, &c_bad).unwrap());
        assert!(strong_monotone_witness(&diag, &c_bad).unwrap().is_none());

        let single = SupportSet {
            pairs: vec![(0, 0)],
        };
        assert!(is_cyclically_monotone(&single, &c_bad).unwrap());
    }

    #[test]
    fn perturbation_homogeneous() {
        let c = CostMatrix::from_ints(&[vec![2, 7], vec![4, 1]]);
        let f = vec![rat(1, 3), rat(2, 3)];
        let g = vec![rat(1, 2), rat(1, 2)];
        let base = perturbation_value(&c, &f, &g).unwrap();
        for lam in [rat_int(0), rat_int(2), rat(1, 3)] {
            let lf: Vec<Rat> = f.iter().map(|x| x * &lam).collect();
            let lg: Vec<Rat> = g.iter().map(|x| x * &lam).collect();
            assert_eq!(perturbation_value(&c, &lf, &lg).unwrap(), &base * &lam);
        }
        let sub = perturbation_subgradient(&c, &f, &g).unwrap();
        assert_eq!(sub.value(&f, &g), base);
    }

    #[test]
    fn restricted_primal_reduces_to_primal() {
        let c = CostMatrix::from_ints(&[vec![0, 5], vec![5, 0]]);
        // full-support pi0
        let pi0 = TransportPlan {
            n_rows: 2,
            n_cols: 2,
            entries: vec![
                (0, 0, rat(1, 4)),
                (0, 1, rat(1, 4)),
                (1, 0, rat(1, 4)),
                (1, 1, rat(1, 4)),
            ],
            mu: uniform(2),
            nu: uniform(2),
        };
        let v = restricted_primal(&c, &pi0, &rat_int(4)).unwrap();
        let (_, opt) = solve_primal(&c, &uniform(2), &uniform(2)).unwrap();
        assert_eq!(v, opt);
        // cap 1 forces pi = pi0
        let v1 = restricted_primal(&c, &pi0, &rat_int(1)).unwrap();
        assert_eq!(v1, pi0.cost(&c).unwrap());
    }

    #[test]
    fn relaxed_dual_examples() {
        let c = CostMatrix::from_ints(&[vec![0, 5], vec![5, 0]]);
        let pi0 = TransportPlan {
            n_rows: 2,
            n_cols: 2,
            entries: vec![
                (0, 0, rat(1, 4)),
                (0, 1, rat(1, 4)),
                (1, 0, rat(1, 4)),
                (1, 1, rat(1, 4)),
            ],
            mu: uniform(2),
            nu: uniform(2),
        };
        let d0 = epsilon_relaxed_dual(&c, &pi0, &rat_int(0)).unwrap();
        let (_, opt) = solve_dual(&c, &uniform(2), &uniform(2)).unwrap();
        assert_eq!(d0, opt);
        // monotone in eps
        let d1 = epsilon_relaxed_dual(&c, &pi0, &rat(1, 10)).unwrap();
        let d2 = epsilon_relaxed_dual(&c, &pi0, &rat(1, 2)).unwrap();
        assert!(d0 <= d1 && d1 <= d2);
    }
}
