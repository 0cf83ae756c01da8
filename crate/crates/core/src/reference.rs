//! Published performance-index values for the built-in problems, and the
//! machinery to recompute and compare them.

use std::fmt;
use std::thread;

use crate::error::{Error, Result};
use crate::fracops::OrderFunction;
use crate::problem::builtin_example;
use crate::quadrature::{gauss_legendre, DEFAULT_NODES};
use crate::solver::{solve, Approach, SolveOptions, SolveReport};

/// How a computed value is compared with the reported one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparison {
    /// `|computed - reported| <= tol · reported`.
    Relative(f64),
    /// `computed <= bound`, for values at the double-precision floor.
    AtMost(f64),
}

/// Required ordering of a table's cells in the order listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    NonIncreasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCell {
    pub problem: &'static str,
    pub order: &'static str,
    pub approach: Approach,
    pub degree: usize,
    pub reported: f64,
    pub comparison: Comparison,
}

impl fmt::Display for ReferenceCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} approach={} M={} alpha={}",
            self.problem,
            self.approach.number(),
            self.degree,
            self.order
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTable {
    pub name: &'static str,
    pub title: &'static str,
    pub cells: Vec<ReferenceCell>,
    pub monotonicity: Option<Monotonicity>,
}

fn cell(
    problem: &'static str,
    order: &'static str,
    approach: Approach,
    degree: usize,
    reported: f64,
    comparison: Comparison,
) -> ReferenceCell {
    ReferenceCell {
        problem,
        order,
        approach,
        degree,
        reported,
        comparison,
    }
}

/// The floor below which double precision cannot resolve `J`.
pub const PRECISION_FLOOR: f64 = 1e-20;

pub fn reference_tables() -> Vec<ReferenceTable> {
    use Approach::{I, II};
    use Comparison::{AtMost, Relative};
    let sweep = [6.80e-3, 2.33e-3, 1.76e-3, 1.57e-3, 1.56e-3];
    vec![
        ReferenceTable {
            name: "ex1-sweep",
            title: "ex1, approach 2, alpha = sin(t), M = 1..5",
            cells: (1..=5)
                .map(|m| cell("ex1", "sin(t)", II, m, sweep[m - 1], Relative(0.05)))
                .collect(),
            monotonicity: Some(Monotonicity::NonIncreasing),
        },
        ReferenceTable {
            name: "ex1-orders",
            title: "ex1, M = 5, all four orders",
            cells: vec![
                cell("ex1", "1", I, 5, 3.05e-33, AtMost(PRECISION_FLOOR)),
                cell("ex1", "sin(t)", I, 5, 3.26e-33, AtMost(PRECISION_FLOOR)),
                cell("ex1", "t/2", I, 5, 6.89e-33, AtMost(PRECISION_FLOOR)),
                cell("ex1", "t/3", I, 5, 2.08e-33, AtMost(PRECISION_FLOOR)),
                cell("ex1", "1", II, 5, 2.74e-33, AtMost(PRECISION_FLOOR)),
                cell("ex1", "sin(t)", II, 5, 1.56e-3, Relative(0.05)),
                cell("ex1", "t/2", II, 5, 1.71e-4, Relative(0.05)),
                cell("ex1", "t/3", II, 5, 2.50e-5, Relative(0.05)),
            ],
            monotonicity: None,
        },
        ReferenceTable {
            name: "ex2-approach1",
            title: "ex2, approach 1, M = 1, 3, 5, 7",
            cells: [(1, 5.24e-4), (3, 7.59e-6), (5, 4.65e-7), (7, 5.86e-8)]
                .into_iter()
                .map(|(m, j)| cell("ex2", "3/2", I, m, j, Relative(0.10)))
                .collect(),
            monotonicity: Some(Monotonicity::Decreasing),
        },
        ReferenceTable {
            name: "ex3-approach2",
            title: "ex3, approach 2, M = 2, 4, 6, 8",
            cells: [(2, 3.79e-4), (4, 5.42e-7), (6, 1.21e-8), (8, 7.36e-10)]
                .into_iter()
                .map(|(m, j)| cell("ex3", "1.9", II, m, j, Relative(0.10)))
                .collect(),
            monotonicity: Some(Monotonicity::Decreasing),
        },
    ]
}

#[derive(Debug)]
pub struct CellOutcome {
    pub cell: ReferenceCell,
    /// The solver report; also present when Newton did not converge.
    pub report: Option<SolveReport>,
    pub error: Option<String>,
}

impl CellOutcome {
    pub fn performance_index(&self) -> f64 {
        self.report
            .as_ref()
            .map_or(f64::NAN, |r| r.performance_index)
    }

    /// `(computed - reported) / reported`.
    pub fn deviation(&self) -> f64 {
        (self.performance_index() - self.cell.reported) / self.cell.reported
    }

    pub fn passed(&self) -> bool {
        if self.error.is_some() {
            return false;
        }
        match self.cell.comparison {
            Comparison::Relative(tol) => self.deviation().abs() <= tol,
            Comparison::AtMost(bound) => self.performance_index() <= bound,
        }
    }
}

/// Solves one cell with the default quadrature and solver settings.
pub fn run_cell(cell: &ReferenceCell) -> CellOutcome {
    let (report, error) = match solve_cell(cell) {
        Ok(r) => (Some(r), None),
        Err(Error::NonConvergence(r)) => (Some(*r), Some("solver did not converge".to_string())),
        Err(e) => (None, Some(e.to_string())),
    };
    CellOutcome {
        cell: cell.clone(),
        report,
        error,
    }
}

fn solve_cell(cell: &ReferenceCell) -> Result<SolveReport> {
    let problem = builtin_example(cell.problem)?.with_order(OrderFunction::parse(cell.order)?)?;
    let rule = gauss_legendre(DEFAULT_NODES)?;
    solve(
        &problem,
        cell.approach,
        cell.degree,
        &rule,
        &SolveOptions::default(),
    )
}

#[derive(Debug)]
pub struct TableOutcome {
    pub table: ReferenceTable,
    pub cells: Vec<CellOutcome>,
}

impl TableOutcome {
    /// `None` when the table imposes no ordering.
    pub fn monotone(&self) -> Option<bool> {
        let js: Vec<f64> = self
            .cells
            .iter()
            .map(CellOutcome::performance_index)
            .collect();
        self.table.monotonicity.map(|m| {
            js.windows(2).all(|w| match m {
                Monotonicity::NonIncreasing => w[1] <= w[0],
                Monotonicity::Decreasing => w[1] < w[0],
            })
        })
    }

    pub fn passed(&self) -> bool {
        self.cells.iter().all(CellOutcome::passed) && self.monotone().unwrap_or(true)
    }
}

/// Runs every cell of `table`, in parallel, keeping the listed order.
pub fn evaluate_table(table: &ReferenceTable) -> TableOutcome {
    let cells = thread::scope(|s| {
        let handles: Vec<_> = table
            .cells
            .iter()
            .map(|c| s.spawn(move || run_cell(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("cell worker panicked"))
            .collect()
    });
    TableOutcome {
        table: table.clone(),
        cells,
    }
}

pub fn evaluate_all() -> Vec<TableOutcome> {
    reference_tables().iter().map(evaluate_table).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let tables = reference_tables();
        let counts: Vec<usize> = tables.iter().map(|t| t.cells.len()).collect();
        assert_eq!(counts, [5, 8, 4, 4]);
        for t in &tables {
            for c in &t.cells {
                let p = builtin_example(c.problem).unwrap();
                p.with_order(OrderFunction::parse(c.order).unwrap())
                    .unwrap();
            }
        }
    }

    #[test]
    fn comparison_rules() {
        let ok = |j: f64, comparison| {
            let mut report = run_cell(&cell("ex1", "1", Approach::I, 1, 1e-3, comparison));
            report.report.as_mut().unwrap().performance_index = j;
            report.error = None;
            report.passed()
        };
        assert!(ok(1.04e-3, Comparison::Relative(0.05)));
        assert!(!ok(1.06e-3, Comparison::Relative(0.05)));
        assert!(ok(1e-21, Comparison::AtMost(1e-20)));
        assert!(!ok(f64::NAN, Comparison::AtMost(1e-20)));
    }

    #[test]
    fn small_cell_reproduces() {
        let out = run_cell(&reference_tables()[0].cells[0]);
        assert!(out.passed(), "{:?} {:?}", out.report, out.error);
    }
}
