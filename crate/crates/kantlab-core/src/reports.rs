//! JSON/CSV wire formats shared by the CLI, with exact `"p/q"` scalars.

use crate::example_builder::BuildReport;
use crate::ot::{CostMatrix, Potentials, TransportPlan};
use crate::rational::{from_frac_string, to_frac_string, Rat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version stamp written into every JSON report.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("bad rational literal {0:?}")]
    BadRational(String),
    #[error("ragged cost matrix")]
    Ragged,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn parse_rat(s: &str) -> Result<Rat, WireError> {
    from_frac_string(s).ok_or_else(|| WireError::BadRational(s.to_string()))
}

/// A transport instance: costs as `"p/q"` strings or `"inf"`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct OtInstanceJson {
    pub schema_version: u32,
    pub cost: Vec<Vec<String>>,
    pub mu: Vec<String>,
    pub nu: Vec<String>,
}

impl OtInstanceJson {
    pub fn pack(c: &CostMatrix, mu: &[Rat], nu: &[Rat]) -> Self {
        let cost = (0..c.n_rows)
            .map(|i| {
                (0..c.n_cols)
                    .map(|j| match c.get(i, j) {
                        Some(v) => to_frac_string(v),
                        None => "inf".to_string(),
                    })
                    .collect()
            })
            .collect();
        OtInstanceJson {
            schema_version: SCHEMA_VERSION,
            cost,
            mu: mu.iter().map(to_frac_string).collect(),
            nu: nu.iter().map(to_frac_string).collect(),
        }
    }

    pub fn unpack(&self) -> Result<(CostMatrix, Vec<Rat>, Vec<Rat>), WireError> {
        let n_rows = self.cost.len();
        let n_cols = self.cost.first().map_or(0, |r| r.len());
        let mut c = CostMatrix::new(n_rows, n_cols);
        for (i, row) in self.cost.iter().enumerate() {
            if row.len() != n_cols {
                return Err(WireError::Ragged);
            }
            for (j, s) in row.iter().enumerate() {
                if s.trim() == "inf" {
                    c.set(i, j, None);
                } else {
                    c.set(i, j, Some(parse_rat(s)?));
                }
            }
        }
        let mu = self.mu.iter().map(|s| parse_rat(s)).collect::<Result<_, _>>()?;
        let nu = self.nu.iter().map(|s| parse_rat(s)).collect::<Result<_, _>>()?;
        Ok((c, mu, nu))
    }
}

/// Solver output: value, sparse plan triplets, dual potentials.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct OtSolutionJson {
    pub schema_version: u32,
    pub value: String,
    pub plan: Vec<(usize, usize, String)>,
    pub phi: Vec<String>,
    pub psi: Vec<String>,
}

impl OtSolutionJson {
    pub fn pack(plan: &TransportPlan, pots: &Potentials, value: &Rat) -> Self {
        OtSolutionJson {
            schema_version: SCHEMA_VERSION,
            value: to_frac_string(value),
            plan: plan
                .entries
                .iter()
                .map(|(i, j, m)| (*i, *j, to_frac_string(m)))
                .collect(),
            phi: pots.phi.iter().map(to_frac_string).collect(),
            psi: pots.psi.iter().map(to_frac_string).collect(),
        }
    }
}

/// Per-level build summary.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct BuildReportJson {
    pub schema_version: u32,
    pub level: usize,
    pub modulus: u64,
    pub singular_mass: String,
    pub singular_count: usize,
    pub change_fraction: String,
    pub quasi_cost_csv_path: Option<String>,
}

impl BuildReportJson {
    pub fn pack(report: &BuildReport, csv_path: Option<String>) -> Self {
        BuildReportJson {
            schema_version: SCHEMA_VERSION,
            level: report.level,
            modulus: report.modulus,
            singular_mass: to_frac_string(&report.singular_mass),
            singular_count: report.singular_count,
            change_fraction: to_frac_string(&report.change_fraction),
            quasi_cost_csv_path: csv_path,
        }
    }
}

/// Monotonicity input: explicit support pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GammaJson {
    pub pairs: Vec<(usize, usize)>,
}

/// Top-level run report emitted by `kantlab build` and `kantlab check`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub results: serde_json::Value,
    /// Wall-clock millis; excluded from the determinism contract.
    pub timing_ms: u128,
}

impl RunReport {
    /// Copy with timing zeroed, for byte-identical comparison.
    pub fn deterministic_view(&self) -> RunReport {
        RunReport {
            timing_ms: 0,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::solve_pair;
    use crate::rational::rat;

    #[test]
    fn instance_round_trip() {
        let c = CostMatrix::from_rows(vec![
            vec![Some(rat(1, 2)), None],
            vec![Some(rat(3, 1)), Some(rat(0, 1))],
        ]);
        let mu = vec![rat(1, 2), rat(1, 2)];
        let nu = vec![rat(1, 4), rat(3, 4)];
        let wire = OtInstanceJson::pack(&c, &mu, &nu);
        let text = serde_json::to_string(&wire).unwrap();
        let back: OtInstanceJson = serde_json::from_str(&text).unwrap();
        let (c2, mu2, nu2) = back.unpack().unwrap();
        assert_eq!(c2, c);
        assert_eq!(mu2, mu);
        assert_eq!(nu2, nu);
    }

    #[test]
    fn solution_serializes_exactly() {
        let c = CostMatrix::from_ints(&[vec![0, 1], vec![1, 0]]);
        let mu = vec![rat(1, 2), rat(1, 2)];
        let sol = solve_pair(&c, &mu, &mu).unwrap();
        let wire = OtSolutionJson::pack(&sol.plan, &sol.potentials, &sol.value);
        assert_eq!(wire.value, "0");
        let text = serde_json::to_string(&wire).unwrap();
        let back: OtSolutionJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back, wire);
    }
}
