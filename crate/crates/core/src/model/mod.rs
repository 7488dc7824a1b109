//! Decision models: an expression language over inputs `x1..xd`, its evaluators, and the
//! exact game for finite discrete inputs.

mod ast;
mod enumerate;
mod parser;

use serde::{Deserialize, Serialize};

pub use ast::{BinOp, CmpOp, Expr, Func};
pub use enumerate::{exact_game, DiscreteGameResult, MAX_OUTCOMES, MAX_WORK};
pub use parser::{is_keyword, parse, parse_with_names};

use crate::error::{Error, Result};
use crate::transform::DistributionSpec;

/// A parsed model file.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    d: usize,
    inputs: Vec<String>,
    distribution: DistributionSpec,
    expression: String,
    expr: Expr,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    d: usize,
    #[serde(default)]
    inputs: Vec<String>,
    distribution: DistributionSpec,
    expression: String,
}

impl Model {
    /// `inputs` may be empty (names default to `x1..xd`).
    pub fn new(d: usize, inputs: Vec<String>, distribution: DistributionSpec, expression: &str) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConfig("a model needs at least one input".into()));
        }
        if distribution.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: distribution.dim(),
            });
        }
        if !inputs.is_empty() {
            check_names(d, &inputs)?;
        }
        let expr = parse_with_names(expression, &inputs)?;
        if expr.max_var() > d {
            return Err(Error::UnknownIdentifier(format!(
                "x{} (the model has {d} inputs)",
                expr.max_var()
            )));
        }
        Ok(Self {
            d,
            inputs,
            distribution,
            expression: expression.to_string(),
            expr,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text)?;
        Self::new(f.d, f.inputs, f.distribution, &f.expression)
    }

    pub fn to_json(&self) -> String {
        let f = ModelFile {
            d: self.d,
            inputs: self.inputs.clone(),
            distribution: self.distribution.clone(),
            expression: self.expression.clone(),
        };
        serde_json::to_string_pretty(&f).expect("serializable")
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Input names; `x1..xd` when none were given.
    pub fn input_names(&self) -> Vec<String> {
        if self.inputs.is_empty() {
            (1..=self.d).map(|i| format!("x{i}")).collect()
        } else {
            self.inputs.clone()
        }
    }

    pub fn distribution(&self) -> &DistributionSpec {
        &self.distribution
    }

    pub fn expression(&self) -> &str {
        &self.expression
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x.len())?;
        self.expr.eval(x)
    }

    pub fn exact_game(&self) -> Result<DiscreteGameResult> {
        exact_game(&self.expr, &self.distribution)
    }

    fn check_point(&self, n: usize) -> Result<()> {
        if n != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: n,
            });
        }
        Ok(())
    }
}

fn check_names(d: usize, names: &[String]) -> Result<()> {
    if names.len() != d {
        return Err(Error::InvalidConfig(format!("expected {d} input names, got {}", names.len())));
    }
    for (k, name) in names.iter().enumerate() {
        let mut chars = name.chars();
        let valid = chars.next().is_some_and(|c| c.is_alphabetic() || c == '_')
            && chars.all(|c| c.is_alphanumeric() || c == '_');
        if !valid || is_keyword(name) {
            return Err(Error::InvalidConfig(format!("'{name}' cannot name an input")));
        }
        // `xN` must keep meaning input N
        if let Some(i) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
            if i != k + 1 {
                return Err(Error::InvalidConfig(format!("input {} cannot be named '{name}'", k + 1)));
            }
        }
        if names[..k].contains(name) {
            return Err(Error::InvalidConfig(format!("input name '{name}' repeated")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{shapley_all, Coalition};
    use crate::scalar::{ExactValue, Rational};
    use crate::transform::Marginal;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn bernoulli(d: usize) -> DistributionSpec {
        DistributionSpec::independent(vec![Marginal::Bernoulli { p: ExactValue(q(1, 2)) }; d]).unwrap()
    }

    const PROPOSITIONAL: &str = "(x1 and x2) or ((not x1) and x3)";

    #[test]
    fn parse_shapes() {
        let e = parse("x1 + x1*x2").unwrap();
        assert_eq!(
            e,
            Expr::Bin(
                BinOp::Add,
                Box::new(Expr::Var(1)),
                Box::new(Expr::Bin(BinOp::Mul, Box::new(Expr::Var(1)), Box::new(Expr::Var(2))))
            )
        );
        let e = parse(PROPOSITIONAL).unwrap();
        assert!(matches!(e, Expr::Or(..)));
        assert_eq!(e.to_string(), "x1 and x2 or not x1 and x3");
        assert_eq!(parse(&e.to_string()).unwrap(), e);
        // unary minus binds tighter than ^
        assert_eq!(parse("-x1^2").unwrap().eval(&[3.0]).unwrap(), 9.0);
        assert_eq!(parse("-(x1^2)").unwrap().eval(&[3.0]).unwrap(), -9.0);
        assert_eq!(parse("2 ≤ x1").unwrap(), parse("2 <= x1").unwrap());
        assert_eq!(parse("1.5e1").unwrap(), Expr::Num(q(15, 1)));
    }

    #[test]
    fn parse_errors() {
        match parse("x1 ^ 2.5") {
            Err(Error::Parse { line, column, expected, .. }) => {
                assert_eq!((line, column), (1, 6));
                assert_eq!(expected, "integer");
            }
            other => panic!("{other:?}"),
        }
        match parse("x1 +\n  * x2") {
            Err(Error::Parse { line, column, expected, .. }) => {
                assert_eq!((line, column), (2, 3));
                assert!(expected.contains("number"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("y + 1"), Err(Error::UnknownIdentifier(_))));
        assert!(matches!(parse("x0"), Err(Error::UnknownIdentifier(_))));
        assert!(matches!(parse("log(x1)"), Err(Error::UnknownIdentifier(_))));
        assert!(matches!(parse("sin(x1, x2)"), Err(Error::Arity { expected: 1, found: 2, .. })));
        assert!(matches!(parse("if(x1, 2)"), Err(Error::Arity { expected: 3, .. })));
        assert!(matches!(parse("(x1"), Err(Error::Parse { .. })));
        assert!(matches!(parse(""), Err(Error::Parse { .. })));
        assert!(matches!(parse("x1 < x2 < x3"), Err(Error::Parse { .. })));
        assert!(matches!(parse("x1 # 2"), Err(Error::Parse { .. })));
        let dist = DistributionSpec::uniform(2);
        assert!(matches!(Model::new(2, vec![], dist, "x3"), Err(Error::UnknownIdentifier(_))));
    }

    #[test]
    fn evaluation() {
        let e = parse(PROPOSITIONAL).unwrap();
        assert_eq!(e.eval(&[1.0, 1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(e.eval(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(parse("x1 + x1*x2").unwrap().eval(&[0.5, -1.0]).unwrap(), 0.0);
        assert!(matches!(parse("1 / (x1 - 1)").unwrap().eval(&[1.0]), Err(Error::DivisionByZero)));
        assert!(matches!(
            parse("1 / x1").unwrap().eval_exact(&[q(0, 1)]),
            Err(Error::DivisionByZero)
        ));
        let e = parse("if(x1 >= 0.5, abs(x2), exp(0)) + cos(0) - sin(0)").unwrap();
        assert_eq!(e.eval(&[0.7, -2.0]).unwrap(), 3.0);
        assert_eq!(e.eval(&[0.1, -2.0]).unwrap(), 2.0);
        assert_eq!(parse("x1 / 3").unwrap().eval_exact(&[q(1, 1)]).unwrap(), q(1, 3));
        assert!(matches!(parse("exp(x1)").unwrap().eval_exact(&[q(1, 1)]), Err(Error::NotRational(_))));
    }

    #[test]
    fn polynomial_degree() {
        assert_eq!(parse("x1 + x1*x2").unwrap().polynomial_degree(), Some(2));
        assert_eq!(parse("(x1 - x2^2)^3 / 4").unwrap().polynomial_degree(), Some(6));
        assert_eq!(parse("7").unwrap().polynomial_degree(), Some(0));
        assert_eq!(parse("x1 / x2").unwrap().polynomial_degree(), None);
        assert_eq!(parse("sin(x1)").unwrap().polynomial_degree(), None);
    }

    #[test]
    fn propositional_game() {
        let r = exact_game(&parse(PROPOSITIONAL).unwrap(), &bernoulli(3)).unwrap();
        let expect = [q(0, 1), q(0, 1), q(1, 16), q(1, 16), q(1, 8), q(1, 8), q(1, 8), q(1, 4)];
        // cardinality listing ∅, {1}, {2}, {3}, {1,2}, {1,3}, {2,3}, {1,2,3}
        let order: [&[usize]; 8] = [&[], &[1], &[2], &[3], &[1, 2], &[1, 3], &[2, 3], &[1, 2, 3]];
        for (ix, v) in order.iter().zip(&expect) {
            assert_eq!(r.game.value(Coalition::from_indices(3, ix).unwrap()), v, "{ix:?}");
        }
        assert_eq!(r.mean, q(1, 2));
        assert_eq!(r.variance, q(1, 4));
        // efficiency: the Shapley effects sum to the variance
        let total: Rational = shapley_all(&r.game).into_iter().sum();
        assert_eq!(total, q(1, 4));
    }

    #[test]
    fn small_games() {
        let r = exact_game(&parse("x1 or x2").unwrap(), &bernoulli(2)).unwrap();
        assert_eq!(*r.game.value(Coalition::from_indices(2, &[1]).unwrap()), q(1, 16));
        assert_eq!(*r.game.value(Coalition::from_indices(2, &[2]).unwrap()), q(1, 16));
        assert_eq!(r.variance, q(3, 16));
        let r = exact_game(&parse("3").unwrap(), &bernoulli(2)).unwrap();
        assert!(r.game.values().iter().all(|v| *v == q(0, 1)));
        assert_eq!(r.mean, q(3, 1));
    }

    #[test]
    fn total_variance_law_with_joint_pmf() {
        // dependent pair: P(0,0) = 1/2, P(1,1) = 1/4, P(1,0) = 1/4; Y = x1 + 2 x2
        let json = r#"{"d": 2, "inputs": ["a", "b"], "expression": "a + 2*b",
            "distribution": {"joint_pmf": [
                {"x": [0, 0], "p": "1/2"}, {"x": [1, 1], "p": "1/4"}, {"x": [1, 0], "p": 0.25}]}}"#;
        let m = Model::from_json(json).unwrap();
        let r = m.exact_game().unwrap();
        // Y takes 0 (1/2), 3 (1/4), 1 (1/4): mean 1, E[Y²] = 10/4
        assert_eq!(r.mean, q(1, 1));
        assert_eq!(r.variance, q(3, 2));
        // E[Y|x1]: x1=0 → 0, x1=1 → 2 (each w.p. 1/2) ⇒ Var = 1; E[Var(Y|x1)] = ½·1 = 1/2
        assert_eq!(*r.game.value(Coalition::from_indices(2, &[1]).unwrap()), q(1, 1));
        // E[Y|x2]: x2=1 → 3 (1/4), x2=0 → 1/3 (3/4) ⇒ Var = 9/4 + 1/12 − 1 = 4/3
        assert_eq!(*r.game.value(Coalition::from_indices(2, &[2]).unwrap()), q(4, 3));
        let back = Model::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn enumeration_guards() {
        let dist = DistributionSpec::uniform(2);
        assert!(matches!(
            exact_game(&parse("x1").unwrap(), &dist),
            Err(Error::ContinuousUnsupported)
        ));
        assert!(matches!(
            exact_game(&parse("sin(x1)").unwrap(), &bernoulli(1)),
            Err(Error::NotRational(_))
        ));
        assert!(matches!(
            exact_game(&parse("x1").unwrap(), &bernoulli(15)),
            Err(Error::TooManyOutcomes { .. })
        ));
    }

    #[test]
    fn model_names() {
        let dist = DistributionSpec::uniform(2);
        let m = Model::new(2, vec!["age".into(), "x2".into()], dist.clone(), "age * x2").unwrap();
        assert_eq!(m.eval(&[2.0, 3.0]).unwrap(), 6.0);
        assert!(m.eval(&[1.0]).is_err());
        assert!(Model::new(2, vec!["x2".into(), "b".into()], dist.clone(), "1").is_err());
        assert!(Model::new(2, vec!["and".into(), "b".into()], dist.clone(), "1").is_err());
        assert!(Model::new(2, vec!["a".into(), "a".into()], dist, "1").is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (1usize..=4).prop_map(Expr::Var),
            (0i64..200, prop_oneof![Just(1i64), Just(4), Just(10)])
                .prop_map(|(n, d)| Expr::Num(q(n, d))),
        ];
        leaf.prop_recursive(5, 40, 3, |inner| {
            let b = |e: Expr| Box::new(e);
            prop_oneof![
                inner.clone().prop_map(move |e| Expr::Neg(b(e))),
                (inner.clone(), 0u32..4).prop_map(move |(e, n)| Expr::Pow(b(e), n)),
                (inner.clone(), inner.clone(), 0usize..4).prop_map(move |(x, y, k)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][k];
                    Expr::Bin(op, b(x), b(y))
                }),
                (inner.clone(), inner.clone(), 0usize..5).prop_map(move |(x, y, k)| {
                    let op = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq][k];
                    Expr::Cmp(op, b(x), b(y))
                }),
                inner.clone().prop_map(move |e| Expr::Not(b(e))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::And(b(x), b(y))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Or(b(x), b(y))),
                (inner.clone(), 0usize..4).prop_map(move |(e, k)| {
                    Expr::Call([Func::Sin, Func::Cos, Func::Exp, Func::Abs][k], vec![e])
                }),
                (inner.clone(), inner.clone(), inner).prop_map(|(c, x, y)| Expr::Call(Func::If, vec![c, x, y])),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let text = e.to_string();
            let back = parse(&text).unwrap();
            prop_assert_eq!(&back, &e);
            let squeezed: String = text.split_whitespace().collect();
            prop_assert_eq!(back.to_string().split_whitespace().collect::<String>(), squeezed);
        }
    }
}
