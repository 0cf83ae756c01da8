//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;

use vofoc_core::checks::{identity_cells, operational_matrix_cells, CheckConfig};
use vofoc_core::quadrature::DEFAULT_NODES;
use vofoc_core::reference::{evaluate_table, reference_tables, Comparison, TableOutcome};
use vofoc_core::special::gamma;
use vofoc_core::*;

struct Outcome {
    passed: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            passed: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: String) {
        self.passed &= ok;
        self.details
            .push(format!("{} {detail}", if ok { "ok  " } else { "FAIL" }));
    }
}

fn problem(name: &str, order: &str) -> ControlAffineProblem {
    builtin_example(name)
        .unwrap()
        .with_order(OrderFunction::parse(order).unwrap())
        .unwrap()
}

fn rule() -> QuadratureRule {
    gauss_legendre(DEFAULT_NODES).unwrap()
}

fn run(
    name: &str,
    order: &str,
    approach: Approach,
    m: usize,
) -> std::result::Result<SolveReport, String> {
    solve(
        &problem(name, order),
        approach,
        m,
        &rule(),
        &SolveOptions::default(),
    )
    .map_err(|e| e.to_string())
}

fn exact_recoveries() -> Outcome {
    let mut out = Outcome::new();
    let s = 15.0 * PI.sqrt();
    let cases: [(&str, &str, Approach, usize, Vec<f64>); 4] = [
        ("ex1", "1", Approach::I, 1, vec![1.0, 2.0]),
        ("ex1", "1", Approach::II, 1, vec![1.0, 2.0]),
        ("ex2", "3/2", Approach::II, 1, vec![s / 16.0, s / 8.0]),
        ("ex3", "1.9", Approach::I, 2, vec![4.0, 12.0, 12.0]),
    ];
    for (name, order, approach, m, want) in cases {
        match run(name, order, approach, m) {
            Ok(r) => {
                let err = r
                    .coefficients
                    .iter()
                    .zip(&want)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                out.check(
                    err <= 1e-8 && r.performance_index <= 1e-20,
                    format!(
                        "{name} approach={} M={m}: A={:?} max|dA|={err:.2e} J={:.2e}",
                        approach.number(),
                        r.coefficients.0,
                        r.performance_index
                    ),
                );
            }
            Err(e) => out.check(
                false,
                format!("{name} approach={} M={m}: {e}", approach.number()),
            ),
        }
    }
    for order in problem::EX1_ORDERS {
        for m in 1..=5 {
            match run("ex1", order, Approach::I, m) {
                Ok(r) => out.check(
                    r.performance_index <= 1e-20,
                    format!(
                        "ex1 approach=1 alpha={order} M={m}: J={:.2e}",
                        r.performance_index
                    ),
                ),
                Err(e) => out.check(false, format!("ex1 approach=1 alpha={order} M={m}: {e}")),
            }
        }
    }
    out
}

fn table_outcome(t: &TableOutcome, filter: impl Fn(&reference::ReferenceCell) -> bool) -> Outcome {
    let mut out = Outcome::new();
    let mut js = Vec::new();
    for c in t.cells.iter().filter(|c| filter(&c.cell)) {
        let rule = match c.cell.comparison {
            Comparison::Relative(tol) => format!(
                "dev={:+.2}% (tol {:.0}%)",
                100.0 * c.deviation(),
                100.0 * tol
            ),
            Comparison::AtMost(b) => format!("bound {b:.0e}"),
        };
        out.check(
            c.passed(),
            format!(
                "{}: J={:.3e} reported={:.2e} {rule}{}",
                c.cell,
                c.performance_index(),
                c.cell.reported,
                c.error
                    .as_deref()
                    .map(|e| format!(" [{e}]"))
                    .unwrap_or_default()
            ),
        );
        js.push(c.performance_index());
    }
    if let Some(mono) = t.monotone() {
        out.check(
            mono,
            format!(
                "monotone {:?}: [{}]",
                t.table.monotonicity.unwrap(),
                js.iter()
                    .map(|j| format!("{j:.3e}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        );
    }
    out
}

fn table(name: &str, filter: impl Fn(&reference::ReferenceCell) -> bool) -> Outcome {
    let t = reference_tables()
        .into_iter()
        .find(|t| t.name == name)
        .unwrap();
    table_outcome(&evaluate_table(&t), filter)
}

fn displayed_matrices() -> Outcome {
    let mut out = Outcome::new();
    let sp = PI.sqrt();
    type Entries = Box<dyn Fn(f64) -> Vec<Vec<f64>>>;
    let mut cases: Vec<(String, usize, Entries)> = vec![
        (
            "1".into(),
            1,
            Box::new(|t| vec![vec![t, 0.0], vec![-t / 4.0, t / 2.0]]),
        ),
        (
            "3/2".into(),
            1,
            Box::new(move |t| {
                let p = t.powf(1.5);
                vec![
                    vec![4.0 / (3.0 * sp) * p, 0.0],
                    vec![-2.0 / (5.0 * sp) * p, 8.0 / (15.0 * sp) * p],
                ]
            }),
        ),
        (
            "2".into(),
            2,
            Box::new(|t| {
                let p = t * t;
                vec![
                    vec![p / 2.0, 0.0, 0.0],
                    vec![-p / 6.0, p / 6.0, 0.0],
                    vec![p / 36.0, -p / 12.0, p / 12.0],
                ]
            }),
        ),
    ];
    for a in [0.5, 1.9] {
        cases.push((
            format!("{a}"),
            2,
            Box::new(move |t| {
                let (g1, g2, g3) = (gamma(a + 1.0), gamma(a + 2.0), gamma(a + 3.0));
                let p = t.powf(a);
                vec![
                    vec![p / g1, 0.0, 0.0],
                    vec![(1.0 / (2.0 * g2) - 1.0 / (2.0 * g1)) * p, p / g2, 0.0],
                    vec![
                        (1.0 / (6.0 * g1) - 1.0 / (2.0 * g2) + 2.0 / (3.0 * g3)) * p,
                        (2.0 / g3 - 1.0 / g2) * p,
                        2.0 / g3 * p,
                    ],
                ]
            }),
        ));
    }
    for (order, m, entries) in cases {
        let ev = OperationalMatrixEvaluator::new(
            Arc::new(BernoulliBasis::new(m).unwrap()),
            OrderFunction::parse(&order).unwrap(),
        );
        for t in [0.25, 0.5, 1.0] {
            let p = ev.eval_p(t).unwrap();
            let want = entries(t);
            let err = (0..=m)
                .flat_map(|i| (0..=m).map(move |j| (i, j)))
                .map(|(i, j)| (p[(i, j)] - want[i][j]).abs())
                .fold(0.0, f64::max);
            out.check(
                err <= 1e-12,
                format!("alpha={order} M={m} t={t}: max entry error {err:.2e}"),
            );
        }
    }
    out
}

fn oracle_equivalence() -> Outcome {
    let mut out = Outcome::new();
    for c in operational_matrix_cells(&CheckConfig::default()).unwrap() {
        out.check(
            c.passed(),
            format!("{}: {:.2e} (tol {:.0e})", c.label, c.defect, c.tolerance),
        );
    }
    out
}

fn identities() -> Outcome {
    let mut out = Outcome::new();
    for c in identity_cells(&CheckConfig::default()).unwrap() {
        out.check(
            c.passed() && c.defect <= 1e-6,
            format!("{}: {:.2e} (tol {:.0e})", c.label, c.defect, c.tolerance),
        );
    }
    out
}

fn quadrature_exactness() -> Outcome {
    let mut out = Outcome::new();
    for n in [2usize, 5, 14] {
        let r = gauss_legendre(n).unwrap();
        let worst = (0..2 * n)
            .map(|k| {
                let want = 1.0 / (k as f64 + 1.0);
                (r.integrate_01(|t| t.powi(k as i32)) - want).abs() / want
            })
            .fold(0.0, f64::max);
        out.check(
            worst <= 1e-12,
            format!("N={n}: degree {} max rel error {worst:.2e}", 2 * n - 1),
        );
    }
    out.check(rule().len() == 14, "default node count is 14".into());
    out
}

fn integer_order_consistency() -> Outcome {
    let mut out = Outcome::new();
    let cases: Vec<(&str, &str, usize)> = (1..=5)
        .map(|m| ("ex1", "1", m))
        .chain((2..=6).step_by(2).map(|m| ("ex3", "2", m)))
        .collect();
    for (name, order, m) in cases {
        let p = problem(name, order);
        let traj = |approach| -> std::result::Result<Vec<SamplePoint>, String> {
            let d = DiscretizedProblem::new(&p, approach, m, &rule()).map_err(|e| e.to_string())?;
            let r = solve_discretized(&d, &SolveOptions::default()).map_err(|e| e.to_string())?;
            Ok(sample_solution(&r, &d, 1001))
        };
        match (traj(Approach::I), traj(Approach::II)) {
            (Ok(a), Ok(b)) => {
                let dx = a
                    .iter()
                    .zip(&b)
                    .map(|(p, q)| (p.x - q.x).abs())
                    .fold(0.0, f64::max);
                let du = a
                    .iter()
                    .zip(&b)
                    .map(|(p, q)| (p.u - q.u).abs())
                    .fold(0.0, f64::max);
                out.check(
                    dx <= 1e-10 && du <= 1e-10,
                    format!("{name} alpha={order} M={m}: |dx|={dx:.2e} |du|={du:.2e}"),
                );
            }
            (a, b) => out.check(
                false,
                format!("{name} alpha={order} M={m}: {:?} {:?}", a.err(), b.err()),
            ),
        }
    }
    out
}

fn main() -> ExitCode {
    let ii = |c: &reference::ReferenceCell| c.approach == Approach::II && c.order != "1";
    type Criterion = Box<dyn Fn() -> Outcome>;
    let criteria: Vec<(&str, Criterion)> = vec![
        ("exact recoveries", Box::new(exact_recoveries)),
        (
            "ex1 sin(t) sweep, approach 2",
            Box::new(|| table("ex1-sweep", |_| true)),
        ),
        (
            "ex1 M=5 fractional orders, approach 2",
            Box::new(move || table("ex1-orders", ii)),
        ),
        (
            "ex2 approach 1 sweep",
            Box::new(|| table("ex2-approach1", |_| true)),
        ),
        (
            "ex3 approach 2 sweep",
            Box::new(|| table("ex3-approach2", |_| true)),
        ),
        (
            "displayed operational matrices",
            Box::new(displayed_matrices),
        ),
        (
            "operational matrix vs quadrature oracle",
            Box::new(oracle_equivalence),
        ),
        ("integral/derivative identities", Box::new(identities)),
        ("Gauss-Legendre exactness", Box::new(quadrature_exactness)),
        (
            "integer-order approach agreement",
            Box::new(integer_order_consistency),
        ),
    ];
    let verbose = std::env::args().any(|a| a == "--verbose" || a == "-v");
    let mut failed = 0;
    let mut summary = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let out = f();
        let line = format!(
            "{} {:>2} {name}",
            if out.passed { "PASS" } else { "FAIL" },
            i + 1
        );
        println!("{line}");
        if verbose || !out.passed {
            for d in &out.details {
                println!("       {d}");
            }
        }
        failed += usize::from(!out.passed);
        summary.push(line);
    }
    println!("\nsummary:");
    for line in &summary {
        println!("{line}");
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
