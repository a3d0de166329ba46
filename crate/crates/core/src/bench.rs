//! Empirical approximation ratios against the exact solver on seeded suites.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_traits::Zero;

use crate::generate::{generate, suite_config};
use crate::instance::check_feasible;
use crate::oracle::exact_radius;
use crate::rational::{self, int, Rational};
use crate::solvers::{solve_instance, Variant};

/// Outcome for one suite instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRecord {
    pub variant: Variant,
    pub index: usize,
    pub optimum: Rational,
    /// Radius of the algorithm's solution, if it produced a feasible one.
    pub radius: Option<Rational>,
    pub within_bound: bool,
}

impl BenchRecord {
    /// Radius over optimum; zero optimum with zero radius counts as one.
    pub fn ratio(&self) -> Option<Rational> {
        let r = self.radius.as_ref()?;
        if self.optimum.is_zero() {
            return r.is_zero().then(|| int(1));
        }
        Some(r / &self.optimum)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRow {
    pub variant: Variant,
    pub instances: usize,
    /// Largest finite ratio observed.
    pub max_ratio: Option<Rational>,
    pub bound: u32,
    pub failures: usize,
}

impl BenchRow {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub records: Vec<BenchRecord>,
    pub timings: Vec<(Variant, Duration)>,
}

/// Runs `count` suite instances per variant.
pub fn run_suite(variants: &[Variant], seed: u64, count: usize) -> BenchReport {
    let mut report = BenchReport {
        rows: Vec::new(),
        records: Vec::new(),
        timings: Vec::new(),
    };
    for &variant in variants {
        let start = Instant::now();
        let mut row = BenchRow {
            variant,
            instances: count,
            max_ratio: None,
            bound: variant.ratio(),
            failures: 0,
        };
        for index in 0..count {
            let record = run_one(variant, seed, index);
            if !record.within_bound {
                row.failures += 1;
            }
            if let Some(q) = record.ratio() {
                if row.max_ratio.as_ref().is_none_or(|m| q > *m) {
                    row.max_ratio = Some(q);
                }
            }
            report.records.push(record);
        }
        report.timings.push((variant, start.elapsed()));
        report.rows.push(row);
    }
    report
}

pub fn run_one(variant: Variant, seed: u64, index: usize) -> BenchRecord {
    let inst = generate(&suite_config(variant, seed, index));
    let optimum = exact_radius(&inst).expect("suite instances are feasible and small");
    let radius = solve_instance(&inst, variant)
        .ok()
        .filter(|out| check_feasible(&inst, &out.solution).ok())
        .map(|out| out.solution.radius);
    let bound = int(variant.ratio() as i64) * &optimum;
    let within_bound = radius.as_ref().is_some_and(|r| *r <= bound);
    BenchRecord {
        variant,
        index,
        optimum,
        radius,
        within_bound,
    }
}

fn decimal(q: &Rational) -> String {
    let scaled = (q * int(1000)).round();
    let thousandths = rational::to_u64(&scaled).unwrap_or(0);
    format!("{}.{:03}", thousandths / 1000, thousandths % 1000)
}

/// One line per variant: instances, largest ratio, bound and verdict.
pub fn format_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<26} {:>9} {:>10} {:>12} {:>6} {:>9} {:>6}",
        "variant", "instances", "max_ratio", "exact", "bound", "failures", "status"
    );
    for row in rows {
        let (dec, exact) = match &row.max_ratio {
            Some(q) => (decimal(q), rational::format(q)),
            None => ("-".into(), "-".into()),
        };
        let _ = writeln!(
            out,
            "{:<26} {:>9} {:>10} {:>12} {:>6} {:>9} {:>6}",
            row.variant.name(),
            row.instances,
            dec,
            exact,
            row.bound,
            row.failures,
            if row.passed() { "pass" } else { "FAIL" }
        );
    }
    out
}

/// Comma-separated per-instance data for plotting.
pub fn format_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from("variant,index,optimum,radius,ratio,within_bound\n");
    for r in records {
        let show = |q: Option<&Rational>| q.map(rational::format).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.variant.name(),
            r.index,
            rational::format(&r.optimum),
            show(r.radius.as_ref()),
            show(r.ratio().as_ref()),
            r.within_bound
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_suite() {
        let report = run_suite(&Variant::ALL, 1, 0);
        assert_eq!(report.rows.len(), 4);
        assert!(report.rows.iter().all(|r| r.passed() && r.max_ratio.is_none()));
        assert!(report.records.is_empty());
    }

    #[test]
    fn small_suite_is_deterministic_and_within_bounds() {
        let a = run_suite(&Variant::ALL, 5, 3);
        let b = run_suite(&Variant::ALL, 5, 3);
        assert_eq!(format_table(&a.rows), format_table(&b.rows));
        assert_eq!(format_csv(&a.records), format_csv(&b.records));
        assert!(a.rows.iter().all(BenchRow::passed), "{}", format_table(&a.rows));
    }

    #[test]
    fn ratio_of_zero_optimum() {
        let rec = BenchRecord {
            variant: Variant::SoftUniform,
            index: 0,
            optimum: int(0),
            radius: Some(int(0)),
            within_bound: true,
        };
        assert_eq!(rec.ratio(), Some(int(1)));
        assert_eq!(decimal(&rational::frac(7, 3)), "2.333");
    }
}
