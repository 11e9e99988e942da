//! File-driven experiment runner for the `polyfix` library.
//!
//! A JSON [`config::ExperimentConfig`] names a polyhedral norm, a map, and
//! the tolerances and sample sizes of a run. [`run::run_experiment`] turns it
//! into a [`report::RunReport`]; [`suite::run_suite`] does so for a whole
//! directory.

pub mod config;
pub mod report;
pub mod run;
pub mod suite;

use polyfix::numerics::{landau, partitions_lcm_set, pow2};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauRow {
    pub n: usize,
    /// Orders of permutations on `n` letters.
    pub orders: Vec<u64>,
    pub g: u64,
    pub two_pow_n_minus_1: u64,
}

pub fn landau_table(max_n: usize) -> polyfix::Result<Vec<LandauRow>> {
    (1..=max_n)
        .map(|n| {
            Ok(LandauRow {
                n,
                orders: partitions_lcm_set(n)?.into_iter().collect(),
                g: landau(n)?,
                two_pow_n_minus_1: pow2(n - 1),
            })
        })
        .collect()
}

pub fn format_landau_table(rows: &[LandauRow]) -> String {
    let mut out = format!("{:>3} {:>8} {:>10}  orders\n", "n", "g(n)", "2^(n-1)");
    for r in rows {
        let orders: Vec<String> = r.orders.iter().map(u64::to_string).collect();
        out.push_str(&format!(
            "{:>3} {:>8} {:>10}  {}\n",
            r.n,
            r.g,
            r.two_pow_n_minus_1,
            orders.join(" ")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landau_rows() {
        let rows = landau_table(5).unwrap();
        assert_eq!(rows[4].orders, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(rows[4].g, 6);
        assert_eq!(rows[4].two_pow_n_minus_1, 16);
        assert!(format_landau_table(&rows).lines().count() == 6);
        assert!(landau_table(21).is_err());
    }
}
