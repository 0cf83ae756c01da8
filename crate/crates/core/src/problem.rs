//! Control-affine problems
//!
//! ```text
//! min J = ∫_0^1 cost(t, x, u) dt
//! s.t. D^{α(t)} x = drift(t, x, D^{α_1(t)} x, …, D^{α_s(t)} x) + gain(t) u
//!      x^{(i)}(0) = init[i],  i = 0..n-1
//! ```
//!
//! with Caputo derivatives of variable order, plus the `key = value` file
//! format and the built-in examples.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expression, Symbol};
use crate::fracops::OrderFunction;

/// Minimum `|gain(t)|` accepted on the validation grid.
pub const GAIN_FLOOR: f64 = 1e-10;

/// The four orders used with `ex1`: `1`, `sin(t)`, `t/2`, `t/3`.
pub const EX1_ORDERS: [&str; 4] = ["1", "sin(t)", "t/2", "t/3"];

/// Textual form of a problem, as stored in a problem file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemDefinition {
    pub name: String,
    pub cost: String,
    pub drift: String,
    pub gain: String,
    pub alpha: String,
    pub alpha_j: Vec<String>,
    pub init: Vec<f64>,
    pub n: u32,
    pub exact_state: Option<String>,
    pub exact_control: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ControlAffineProblem {
    name: String,
    cost: Expression,
    drift: Expression,
    gain: Expression,
    order: OrderFunction,
    sub_orders: Vec<OrderFunction>,
    init: Vec<f64>,
    n: u32,
    exact_state: Option<Expression>,
    exact_control: Option<Expression>,
}

fn parse_field(field: &str, src: &str) -> Result<Expression> {
    Expression::parse(src).map_err(|e| Error::validation(field, e.to_string()))
}

fn parse_order(field: &str, src: &str) -> Result<OrderFunction> {
    OrderFunction::parse(src).map_err(|e| match e {
        Error::Validation { message, .. } => Error::validation(field, message),
        other => Error::validation(field, other.to_string()),
    })
}

impl ControlAffineProblem {
    pub fn from_definition(def: &ProblemDefinition) -> Result<Self> {
        let s = def.alpha_j.len();
        let cost = parse_field("cost", &def.cost)?;
        cost.check_symbols("cost", |sym| {
            matches!(sym, Symbol::T | Symbol::X | Symbol::U | Symbol::Alpha)
        })?;
        let drift = parse_field("drift", &def.drift)?;
        drift.check_symbols("drift", |sym| match sym {
            Symbol::T | Symbol::X | Symbol::Alpha => true,
            Symbol::D(k) => k <= s,
            Symbol::U => false,
        })?;
        let gain = parse_field("gain", &def.gain)?;
        gain.check_symbols("gain", |sym| sym == Symbol::T)?;

        let order = parse_order("alpha", &def.alpha)?;
        let sub_orders = def
            .alpha_j
            .iter()
            .enumerate()
            .map(|(j, src)| parse_order(&format!("alpha_j[{}]", j + 1), src))
            .collect::<Result<Vec<_>>>()?;

        let exact = |field: &str, src: &Option<String>| -> Result<Option<Expression>> {
            src.as_deref()
                .map(|src| {
                    let e = parse_field(field, src)?;
                    e.check_symbols(field, |sym| matches!(sym, Symbol::T | Symbol::Alpha))?;
                    Ok(e)
                })
                .transpose()
        };

        let problem = Self {
            name: def.name.clone(),
            cost,
            drift,
            gain,
            order,
            sub_orders,
            init: def.init.clone(),
            n: def.n,
            exact_state: exact("exact_state", &def.exact_state)?,
            exact_control: exact("exact_control", &def.exact_control)?,
        };
        problem.validate()?;
        Ok(problem)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("n", "must be a positive integer"));
        }
        if self.order.ceiling() != self.n {
            return Err(Error::validation(
                "n",
                format!(
                    "n = {} but max ceil(alpha(t)) = {} for alpha = `{}`",
                    self.n,
                    self.order.ceiling(),
                    self.order.expression()
                ),
            ));
        }
        if self.init.len() != self.n as usize {
            return Err(Error::validation(
                "init",
                format!(
                    "expected {} initial values, got {}",
                    self.n,
                    self.init.len()
                ),
            ));
        }
        if let Some(v) = self.init.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation("init", format!("non-finite value {v}")));
        }
        for k in 0..=1000 {
            let t = k as f64 / 1000.0;
            let b = self.gain.eval_t(t);
            if b.is_nan() || b.abs() < GAIN_FLOOR {
                return Err(Error::validation(
                    "gain",
                    format!("b(t) = {b} at t = {t}; the gain must not vanish on [0, 1]"),
                ));
            }
        }
        let mut chain: Vec<&OrderFunction> = self.sub_orders.iter().collect();
        chain.push(&self.order);
        for (j, pair) in chain.windows(2).enumerate() {
            if !pair[0].below_on_grid(pair[1]) {
                return Err(Error::validation(
                    format!("alpha_j[{}]", j + 1),
                    format!(
                        "`{}` must stay strictly below `{}` on (0, 1]",
                        pair[0].expression(),
                        pair[1].expression()
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Replaces `α(t)` and re-validates.
    pub fn with_order(&self, order: OrderFunction) -> Result<Self> {
        let mut p = self.clone();
        p.order = order;
        p.validate()?;
        Ok(p)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cost(&self) -> &Expression {
        &self.cost
    }

    pub fn drift(&self) -> &Expression {
        &self.drift
    }

    pub fn gain(&self) -> &Expression {
        &self.gain
    }

    pub fn order(&self) -> &OrderFunction {
        &self.order
    }

    pub fn sub_orders(&self) -> &[OrderFunction] {
        &self.sub_orders
    }

    pub fn init(&self) -> &[f64] {
        &self.init
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn has_exact_solution(&self) -> bool {
        self.exact_state.is_some() && self.exact_control.is_some()
    }

    pub fn exact_state(&self, t: f64) -> Option<f64> {
        let alpha = self.order.value(t);
        self.exact_state.as_ref().map(|e| {
            e.eval(&Bindings {
                t,
                alpha,
                ..Default::default()
            })
        })
    }

    pub fn exact_control(&self, t: f64) -> Option<f64> {
        let alpha = self.order.value(t);
        self.exact_control.as_ref().map(|e| {
            e.eval(&Bindings {
                t,
                alpha,
                ..Default::default()
            })
        })
    }

    pub fn definition(&self) -> ProblemDefinition {
        ProblemDefinition {
            name: self.name.clone(),
            cost: self.cost.source().to_string(),
            drift: self.drift.source().to_string(),
            gain: self.gain.source().to_string(),
            alpha: self.order.expression().source().to_string(),
            alpha_j: self
                .sub_orders
                .iter()
                .map(|o| o.expression().source().to_string())
                .collect(),
            init: self.init.clone(),
            n: self.n,
            exact_state: self.exact_state.as_ref().map(|e| e.source().to_string()),
            exact_control: self.exact_control.as_ref().map(|e| e.source().to_string()),
        }
    }

    /// Renders the problem in the file format read by [`parse_problem`].
    pub fn to_file_string(&self) -> String {
        let def = self.definition();
        let mut out = String::new();
        let _ = writeln!(out, "name = {}", def.name);
        let _ = writeln!(out, "cost = {}", def.cost);
        let _ = writeln!(out, "drift = {}", def.drift);
        let _ = writeln!(out, "gain = {}", def.gain);
        let _ = writeln!(out, "alpha = {}", def.alpha);
        for a in &def.alpha_j {
            let _ = writeln!(out, "alpha_j = {a}");
        }
        let init: Vec<String> = def.init.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "init = {}", init.join(", "));
        let _ = writeln!(out, "n = {}", def.n);
        if let Some(s) = &def.exact_state {
            let _ = writeln!(out, "exact_state = {s}");
        }
        if let Some(s) = &def.exact_control {
            let _ = writeln!(out, "exact_control = {s}");
        }
        out
    }
}

/// Parses problem-file text. `default_name` is used when no `name` key is present.
pub fn parse_problem(text: &str, default_name: &str) -> Result<ControlAffineProblem> {
    let mut def = ProblemDefinition {
        name: default_name.to_string(),
        ..Default::default()
    };
    let mut seen: Vec<&str> = Vec::new();
    let mut n = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = format!("line {}", lineno + 1);
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::validation(&at, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if key != "alpha_j" {
            if seen.contains(&key) {
                return Err(Error::validation(key, format!("duplicate key on {at}")));
            }
            seen.push(key);
        }
        match key {
            "name" => def.name = value.to_string(),
            "cost" => def.cost = value.to_string(),
            "drift" => def.drift = value.to_string(),
            "gain" => def.gain = value.to_string(),
            "alpha" => def.alpha = value.to_string(),
            "alpha_j" => def.alpha_j.push(value.to_string()),
            "init" => {
                def.init = value
                    .split(',')
                    .map(|v| {
                        v.trim().parse::<f64>().map_err(|_| {
                            Error::validation(
                                "init",
                                format!("`{}` is not a real number", v.trim()),
                            )
                        })
                    })
                    .collect::<Result<_>>()?;
            }
            "n" => {
                n = Some(value.parse::<u32>().map_err(|_| {
                    Error::validation("n", format!("`{value}` is not a positive integer"))
                })?)
            }
            "exact_state" => def.exact_state = Some(value.to_string()),
            "exact_control" => def.exact_control = Some(value.to_string()),
            other => return Err(Error::validation(other, format!("unknown key on {at}"))),
        }
    }
    for required in ["cost", "drift", "gain", "alpha", "init", "n"] {
        if !seen.contains(&required) {
            return Err(Error::validation(required, "missing"));
        }
    }
    def.n = n.expect("checked above");
    ControlAffineProblem::from_definition(&def)
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<ControlAffineProblem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("problem");
    parse_problem(&text, stem)
}

fn ex1_definition() -> ProblemDefinition {
    ProblemDefinition {
        name: "ex1".into(),
        cost: "(x - t^2)^2 + (u - t^(2 - alpha)*exp(-t)/gamma(3 - alpha) + exp(t^2 - t)/2)^2"
            .into(),
        drift: "exp(x)".into(),
        gain: "2*exp(t)".into(),
        alpha: "1".into(),
        alpha_j: vec![],
        init: vec![0.0],
        n: 1,
        exact_state: Some("t^2".into()),
        exact_control: Some("t^(2 - alpha)*exp(-t)/gamma(3 - alpha) - exp(t^2 - t)/2".into()),
    }
}

fn ex2_definition() -> ProblemDefinition {
    ProblemDefinition {
        name: "ex2".into(),
        cost: "(x - t^(5/2))^4 + (1 + t^2)*(u + t^6 - 15*sqrt(pi)/8*t)^2".into(),
        drift: "t*x^2".into(),
        gain: "1".into(),
        alpha: "3/2".into(),
        alpha_j: vec![],
        init: vec![0.0, 0.0],
        n: 2,
        exact_state: Some("t^(5/2)".into()),
        exact_control: Some("-t^6 + 15*sqrt(pi)/8*t".into()),
    }
}

fn ex3_definition() -> ProblemDefinition {
    ProblemDefinition {
        name: "ex3".into(),
        cost: "exp(t)*(x - t^4 + t - 1)^2 + (1 + t^2)*(u + 1 - t + t^4 - 8000/(77*gamma(1/10))*t^(21/10))^2"
            .into(),
        drift: "x".into(),
        gain: "1".into(),
        alpha: "1.9".into(),
        alpha_j: vec![],
        init: vec![1.0, -1.0],
        n: 2,
        exact_state: Some("t^4 - t + 1".into()),
        exact_control: Some("-t^4 + 8000/(77*gamma(1/10))*t^(21/10) + t - 1".into()),
    }
}

/// The built-in problems `ex1`, `ex2`, `ex3`; each has exact solutions and optimal `J = 0`.
///
/// `ex1` defaults to `α ≡ 1`; use [`ControlAffineProblem::with_order`] for the others in
/// [`EX1_ORDERS`].
pub fn builtin_examples() -> BTreeMap<&'static str, ControlAffineProblem> {
    [
        ("ex1", ex1_definition()),
        ("ex2", ex2_definition()),
        ("ex3", ex3_definition()),
    ]
    .into_iter()
    .map(|(k, def)| {
        (
            k,
            ControlAffineProblem::from_definition(&def).expect("built-in problems are valid"),
        )
    })
    .collect()
}

pub fn builtin_example(name: &str) -> Result<ControlAffineProblem> {
    builtin_examples()
        .remove(name)
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))
}
