use proptest::prelude::*;

use vofoc_core::problem::EX1_ORDERS;
use vofoc_core::*;

fn problem(name: &str, order: &str) -> ControlAffineProblem {
    builtin_example(name)
        .unwrap()
        .with_order(OrderFunction::parse(order).unwrap())
        .unwrap()
}

fn run(
    p: &ControlAffineProblem,
    approach: Approach,
    m: usize,
) -> (SolveReport, DiscretizedProblem) {
    let d = DiscretizedProblem::new(p, approach, m, &gauss_legendre(14).unwrap()).unwrap();
    (solve_discretized(&d, &SolveOptions::default()).unwrap(), d)
}

#[test]
fn approaches_agree_at_integer_order() {
    for (name, order, ms) in [("ex1", "1", 1..=4), ("ex3", "2", 2..=4)] {
        let p = problem(name, order);
        for m in ms {
            let (r1, d1) = run(&p, Approach::I, m);
            let (r2, d2) = run(&p, Approach::II, m);
            assert!((r1.performance_index - r2.performance_index).abs() <= 1e-10);
            for (a, b) in sample_solution(&r1, &d1, 201)
                .iter()
                .zip(sample_solution(&r2, &d2, 201))
            {
                assert!(
                    (a.x - b.x).abs() <= 1e-10 && (a.u - b.u).abs() <= 1e-10,
                    "{name} M={m}"
                );
            }
        }
    }
}

#[test]
fn exact_recoveries_have_small_residual() {
    let cases = [
        ("ex1", "1", Approach::I, 1),
        ("ex1", "1", Approach::II, 1),
        ("ex2", "3/2", Approach::II, 1),
        ("ex3", "1.9", Approach::I, 2),
    ];
    for (name, order, approach, m) in cases {
        let (r, _) = run(&problem(name, order), approach, m);
        assert!(r.residual <= 1e-8, "{name}: {}", r.residual);
    }
}

#[test]
fn newton_converges_quadratically_near_the_solution() {
    let (r, _) = run(&problem("ex3", "1.9"), Approach::I, 2);
    let h = &r.gradient_history;
    assert!(h.len() >= 4, "{h:?}");
    let tail = &h[h.len() - 4..];
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{h:?}");
}

#[test]
fn sin_order_sweep_is_monotone() {
    let p = problem("ex1", "sin(t)");
    let js: Vec<f64> = (1..=5)
        .map(|m| run(&p, Approach::II, m).0.performance_index)
        .collect();
    assert!(js.windows(2).all(|w| w[1] <= w[0]), "{js:?}");
}

#[test]
fn csv_sampling_is_deterministic() {
    let p = problem("ex1", "t/2");
    let (r1, d1) = run(&p, Approach::II, 3);
    let (r2, d2) = run(&p, Approach::II, 3);
    assert_eq!(r1.coefficients, r2.coefficients);
    assert_eq!(sample_solution(&r1, &d1, 50), sample_solution(&r2, &d2, 50));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solution_never_worse_than_zero_start(
        which in 0usize..6,
        approach in prop_oneof![Just(Approach::I), Just(Approach::II)],
        m in 1usize..=4,
    ) {
        let (name, order) = [
            ("ex1", EX1_ORDERS[0]),
            ("ex1", EX1_ORDERS[1]),
            ("ex1", EX1_ORDERS[2]),
            ("ex1", EX1_ORDERS[3]),
            ("ex2", "3/2"),
            ("ex3", "1.9"),
        ][which];
        let (r, d) = run(&problem(name, order), approach, m);
        let j0 = d.performance_index(&vec![0.0; m + 1]).unwrap();
        prop_assert!(r.performance_index <= j0, "{} > {}", r.performance_index, j0);
    }

    #[test]
    fn state_is_affine_in_coefficients(
        a in prop::collection::vec(-3.0f64..3.0, 4),
        b in prop::collection::vec(-3.0f64..3.0, 4),
        t in 0.01f64..=1.0,
        approach in prop_oneof![Just(Approach::I), Just(Approach::II)],
    ) {
        let p = problem("ex3", "1.9");
        let d = DiscretizedProblem::new(&p, approach, 3, &gauss_legendre(14).unwrap()).unwrap();
        let zero = d.state(&[0.0; 4], t);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let lhs = d.state(&sum, t) - zero;
        let rhs = (d.state(&a, t) - zero) + (d.state(&b, t) - zero);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}
