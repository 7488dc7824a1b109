//! Fairness constraints over attributions, judged on error intervals.
//!
//! A verdict is `pass` when the whole interval `[value − bound, value + bound]` of every
//! operand satisfies the constraint, `fail` when none of it does, and `indeterminate`
//! otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Coalition, Game};
use crate::scalar::Scalar;

/// `ε = −ln 0.8`: the ratio band `(0.8, 1.25)`, by analogy with the four-fifths rule on
/// selection rates. Applied here to attribution ratios, it is a proposal, not that rule.
pub fn disparate_impact_epsilon() -> f64 {
    -(0.8f64).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Constraint {
    /// `Sh_subset ≤ tau`.
    Threshold { subset: Vec<usize>, tau: f64 },
    /// `e^{−ε} ≤ Sh_a / Sh_b ≤ e^{ε}`.
    Ratio { a: Vec<usize>, b: Vec<usize>, epsilon: f64 },
    /// `|Sh_a − Sh_b| ≤ delta`.
    Difference { a: Vec<usize>, b: Vec<usize>, delta: f64 },
}

impl Constraint {
    pub fn disparate_impact(a: Vec<usize>, b: Vec<usize>) -> Self {
        Self::Ratio {
            a,
            b,
            epsilon: disparate_impact_epsilon(),
        }
    }

    /// Parses a JSON array of constraints.
    pub fn list_from_json(text: &str) -> Result<Vec<Self>> {
        let list: Vec<Self> = serde_json::from_str(text)?;
        for c in &list {
            c.validate()?;
        }
        Ok(list)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConstraint(m));
        let subsets: Vec<&Vec<usize>> = match self {
            Self::Threshold { subset, tau } => {
                if !(tau.is_finite() && *tau >= 0.0) {
                    return bad(format!("threshold tau must be finite and ≥ 0, got {tau}"));
                }
                vec![subset]
            }
            Self::Ratio { a, b, epsilon } => {
                if !(epsilon.is_finite() && *epsilon > 0.0) {
                    return bad(format!("ratio epsilon must be finite and > 0, got {epsilon}"));
                }
                vec![a, b]
            }
            Self::Difference { a, b, delta } => {
                if !(delta.is_finite() && *delta >= 0.0) {
                    return bad(format!("difference delta must be finite and ≥ 0, got {delta}"));
                }
                vec![a, b]
            }
        };
        for s in subsets {
            if s.is_empty() {
                return bad("constraint subsets must be nonempty".into());
            }
            if s.contains(&0) {
                return bad("subset indices are 1-based".into());
            }
        }
        Ok(())
    }
}

/// An attribution with its error bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Attribution {
    pub subset: Coalition,
    pub value: f64,
    pub error_bound: f64,
}

impl Attribution {
    pub fn exact(subset: Coalition, value: f64) -> Self {
        Self {
            subset,
            value,
            error_bound: 0.0,
        }
    }

    fn interval(&self) -> (f64, f64) {
        (self.value - self.error_bound, self.value + self.error_bound)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub constraint: Constraint,
    pub status: Status,
    /// Slack at the point values: positive when satisfied, negative when violated.
    /// Absent when the point value is undefined (zero denominator).
    pub margin: Option<f64>,
    pub inputs: Vec<Attribution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

fn lookup(attributions: &[Attribution], indices: &[usize]) -> Result<Attribution> {
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    attributions
        .iter()
        .find(|a| a.subset.indices() == sorted)
        .cloned()
        .ok_or_else(|| {
            let names: Vec<String> = sorted.iter().map(usize::to_string).collect();
            Error::MissingAttribution(format!("{{{}}}", names.join(",")))
        })
}

/// Three-valued status of "interval `[lo, hi]` lies inside `[min, max]`".
fn within(lo: f64, hi: f64, min: f64, max: f64) -> Status {
    if lo >= min && hi <= max {
        Status::Pass
    } else if hi < min || lo > max {
        Status::Fail
    } else {
        Status::Indeterminate
    }
}

pub fn check(constraint: &Constraint, attributions: &[Attribution]) -> Result<Verdict> {
    constraint.validate()?;
    let verdict = |status, margin, inputs, diagnostic| Verdict {
        constraint: constraint.clone(),
        status,
        margin,
        inputs,
        diagnostic,
    };
    Ok(match constraint {
        Constraint::Threshold { subset, tau } => {
            let x = lookup(attributions, subset)?;
            let (lo, hi) = x.interval();
            verdict(within(lo, hi, f64::NEG_INFINITY, *tau), Some(tau - x.value), vec![x], None)
        }
        Constraint::Difference { a, b, delta } => {
            let (xa, xb) = (lookup(attributions, a)?, lookup(attributions, b)?);
            let ((la, ha), (lb, hb)) = (xa.interval(), xb.interval());
            let (lo, hi) = (la - hb, ha - lb);
            let margin = delta - (xa.value - xb.value).abs();
            verdict(within(lo, hi, -delta, *delta), Some(margin), vec![xa, xb], None)
        }
        Constraint::Ratio { a, b, epsilon } => {
            let (xa, xb) = (lookup(attributions, a)?, lookup(attributions, b)?);
            let ((la, ha), (lb, hb)) = (xa.interval(), xb.interval());
            if lb <= 0.0 && hb >= 0.0 {
                let msg = format!(
                    "the interval [{lb}, {hb}] of the denominator contains 0; the ratio is unbounded"
                );
                return Ok(verdict(Status::Indeterminate, None, vec![xa, xb], Some(msg)));
            }
            let corners = [la / lb, la / hb, ha / lb, ha / hb];
            let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ratio = xa.value / xb.value;
            let margin = (ratio > 0.0).then(|| epsilon - ratio.ln().abs());
            let status = within(lo, hi, (-epsilon).exp(), epsilon.exp());
            verdict(status, margin, vec![xa, xb], None)
        }
    })
}

/// `Sh₁/Sh₂ = (val(1) + ṽal(2)) / (ṽal(1) + val(2))` with `ṽal(u) = σ² − val(u)`, for `d = 2`.
pub fn two_input_ratio<T: Scalar>(game: &Game<T>) -> Result<T> {
    if game.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: game.dim(),
        });
    }
    let v1 = game.value(Coalition::singleton(2, 1)?).clone();
    let v2 = game.value(Coalition::singleton(2, 2)?).clone();
    let s2 = game.full_value().clone();
    let num = v1.clone() + (s2.clone() - v2.clone());
    let den = (s2 - v1) + v2;
    if den.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::shapley;
    use crate::scalar::Rational;
    use proptest::prelude::*;

    fn c(d: usize, ix: &[usize]) -> Coalition {
        Coalition::from_indices(d, ix).unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn propositional() -> Vec<Attribution> {
        vec![
            Attribution::exact(c(3, &[1]), 1.0 / 32.0),
            Attribution::exact(c(3, &[2]), 3.0 / 32.0),
            Attribution::exact(c(3, &[3]), 3.0 / 32.0),
        ]
    }

    #[test]
    fn threshold_and_ratio() {
        let atts = propositional();
        let t = Constraint::Threshold { subset: vec![1], tau: 0.05 };
        let v = check(&t, &atts).unwrap();
        assert_eq!(v.status, Status::Pass);
        assert!((v.margin.unwrap() - (0.05 - 1.0 / 32.0)).abs() < 1e-15);
        let r = Constraint::Ratio { a: vec![2], b: vec![3], epsilon: 0.1 };
        let v = check(&r, &atts).unwrap();
        assert_eq!(v.status, Status::Pass);
        assert_eq!(v.margin, Some(0.1));
        // the enumerated propositional game gives Sh₁ = 1/16, which exceeds 0.05
        let enumerated = [Attribution::exact(c(3, &[1]), 1.0 / 16.0)];
        assert_eq!(check(&t, &enumerated).unwrap().status, Status::Fail);
        let fail = Constraint::Threshold { subset: vec![2], tau: 0.05 };
        assert_eq!(check(&fail, &atts).unwrap().status, Status::Fail);
        let straddle = Constraint::Threshold { subset: vec![1], tau: 0.03 };
        let est = [Attribution { subset: c(1, &[1]), value: 0.029, error_bound: 0.005 }];
        assert_eq!(check(&straddle, &est).unwrap().status, Status::Indeterminate);
    }

    #[test]
    fn ratio_denominator_at_zero() {
        let atts = [
            Attribution::exact(c(2, &[1]), 0.1),
            Attribution { subset: c(2, &[2]), value: 0.01, error_bound: 0.02 },
        ];
        let v = check(&Constraint::disparate_impact(vec![1], vec![2]), &atts).unwrap();
        assert_eq!(v.status, Status::Indeterminate);
        assert!(v.diagnostic.unwrap().contains("contains 0"));
        assert!((disparate_impact_epsilon().exp() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn difference() {
        let atts = propositional();
        let d = Constraint::Difference { a: vec![1], b: vec![2], delta: 0.02 };
        assert_eq!(check(&d, &atts).unwrap().status, Status::Fail);
        let d = Constraint::Difference { a: vec![3], b: vec![2], delta: 0.0 };
        assert_eq!(check(&d, &atts).unwrap().status, Status::Pass);
    }

    #[test]
    fn json_and_errors() {
        let text = r#"[{"kind": "threshold", "subset": [1], "tau": 0.05},
            {"kind": "ratio", "a": [2], "b": [3], "epsilon": 0.1},
            {"kind": "difference", "a": [1, 2], "b": [3], "delta": 0.02}]"#;
        let list = Constraint::list_from_json(text).unwrap();
        assert_eq!(list.len(), 3);
        let missing = check(&list[2], &propositional());
        assert!(matches!(missing, Err(Error::MissingAttribution(s)) if s == "{1,2}"));
        assert!(Constraint::list_from_json(r#"[{"kind": "ratio", "a": [1], "b": [2], "epsilon": 0}]"#).is_err());
        assert!(Constraint::list_from_json(r#"[{"kind": "threshold", "subset": [], "tau": 1}]"#).is_err());
        assert!(Constraint::list_from_json(r#"[{"kind": "median", "subset": [1]}]"#).is_err());
    }

    #[test]
    fn two_input_ratios() {
        // "x1 or x2" on Bernoulli(1/2)²
        let sym = Game::from_values(2, vec![q(0, 1), q(1, 16), q(1, 16), q(3, 16)]).unwrap();
        assert_eq!(two_input_ratio(&sym).unwrap(), q(1, 1));
        // x1 + x1 x2 on U(-1,1)²
        let g = Game::from_values(2, vec![q(0, 1), q(1, 3), q(0, 1), q(4, 9)]).unwrap();
        assert_eq!(two_input_ratio(&g).unwrap(), q(7, 1));
        let degenerate = Game::from_values(2, vec![q(0, 1), q(1, 2), q(0, 1), q(1, 2)]).unwrap();
        assert!(matches!(two_input_ratio(&degenerate), Err(Error::ZeroDenominator)));
    }

    proptest! {
        #[test]
        fn ratio_matches_shapley(v1 in 0i64..50, v2 in 0i64..50, extra in 0i64..50) {
            let s2 = v1.max(v2) + extra;
            let g = Game::from_values(2, vec![q(0, 1), q(v1, 7), q(v2, 7), q(s2, 7)]).unwrap();
            let sh2 = shapley(&g, 2).unwrap();
            match two_input_ratio(&g) {
                Ok(r) => prop_assert_eq!(r, shapley(&g, 1).unwrap() / sh2),
                Err(_) => prop_assert_eq!(sh2, q(0, 1)),
            }
        }

        #[test]
        fn shrinking_bounds_is_monotone(value in 0.0f64..0.2, bound in 0.0f64..0.1, shrink in 0.0f64..1.0,
                                        tau in 0.0f64..0.2, b in 0.01f64..0.2) {
            let make = |e: f64| vec![
                Attribution { subset: c(2, &[1]), value, error_bound: e },
                Attribution { subset: c(2, &[2]), value: b, error_bound: e / 4.0 },
            ];
            for cons in [
                Constraint::Threshold { subset: vec![1], tau },
                Constraint::Ratio { a: vec![1], b: vec![2], epsilon: 0.3 },
                Constraint::Difference { a: vec![1], b: vec![2], delta: tau },
            ] {
                let wide = check(&cons, &make(bound)).unwrap().status;
                let narrow = check(&cons, &make(bound * shrink)).unwrap().status;
                if wide != Status::Indeterminate {
                    prop_assert_eq!(wide, narrow);
                }
            }
        }
    }
}
