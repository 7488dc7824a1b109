//! End-to-end use of the public API: model file → game or expansion → attributions → verdicts.

use soa_core::fairness::{check, Attribution, Constraint, Status};
use soa_core::game::{shapley_all, shapley_owen, shapley_permutation, Coalition};
use soa_core::model::Model;
use soa_core::pce::SparseConfig;
use soa_core::scalar::{format_rational, Rational};
use soa_core::spectral::{analyze, ElementaryTable, Route};

const PROPOSITIONAL: &str = r#"{"d": 3, "inputs": ["x1", "x2", "x3"],
  "distribution": {"marginals": [{"type": "bernoulli", "p": "1/2"},
    {"type": "bernoulli", "p": "1/2"}, {"type": "bernoulli", "p": "1/2"}]},
  "expression": "(x1 and x2) or ((not x1) and x3)"}"#;

fn c(d: usize, idx: &[usize]) -> Coalition {
    Coalition::from_indices(d, idx).unwrap()
}

#[test]
fn discrete_model_to_exact_attributions() {
    let model = Model::from_json(PROPOSITIONAL).unwrap();
    let r = model.exact_game().unwrap();
    assert_eq!(format_rational(&r.variance), "1/4");

    let sh = shapley_all(&r.game);
    let shown: Vec<String> = sh.iter().map(format_rational).collect();
    assert_eq!(shown, ["1/16", "3/32", "3/32"]);
    for i in 1..=3 {
        assert_eq!(shapley_permutation(&r.game, i).unwrap(), sh[i - 1]);
    }
    let total: Rational = sh.iter().cloned().sum();
    assert_eq!(total, r.variance);

    let pair = shapley_owen(&r.game, c(3, &[2, 3])).unwrap();
    assert_eq!(format_rational(&pair), "0");
}

#[test]
fn exact_attributions_feed_verdicts() {
    let r = Model::from_json(PROPOSITIONAL).unwrap().exact_game().unwrap();
    let sh = shapley_all(&r.game);
    let attrs: Vec<Attribution> = (1..=3)
        .map(|i| Attribution::exact(c(3, &[i]), soa_core::scalar::rational_to_f64(&sh[i - 1])))
        .collect();

    let tight = Constraint::Threshold { subset: vec![1], tau: 0.05 };
    assert_eq!(check(&tight, &attrs).unwrap().status, Status::Fail);
    let loose = Constraint::Threshold { subset: vec![1], tau: 0.1 };
    assert_eq!(check(&loose, &attrs).unwrap().status, Status::Pass);
    // Sh_2 / Sh_3 = 1 sits well inside the four-fifths band.
    let ratio = Constraint::disparate_impact(vec![2], vec![3]);
    assert_eq!(check(&ratio, &attrs).unwrap().status, Status::Pass);
}

#[test]
fn continuous_model_through_table() {
    let json = r#"{"d": 3, "distribution": {"marginals": [
        {"type": "uniform", "a": -1, "b": 1}, {"type": "uniform", "a": -1, "b": 1},
        {"type": "uniform", "a": -1, "b": 1}]},
      "expression": "x1 + x1*x2 + 0.5*x3"}"#;
    let model = Model::from_json(json).unwrap();
    let mut table = ElementaryTable::precompute(3, 1).unwrap();
    let subsets = [c(3, &[1]), c(3, &[3]), c(3, &[1, 2])];
    let f = |x: &[f64]| model.eval(x);
    let a = analyze(&f, model.distribution(), &SparseConfig::default(), &subsets, &mut table).unwrap();
    assert!(matches!(a.route, Route::SingleExpansion));
    // Supports {1,2} were missing from an order-1 table and got added on demand.
    assert!(table.covers(c(3, &[1, 2])));

    let expected = [7.0 / 18.0, 1.0 / 12.0, 1.0 / 9.0];
    for (res, want) in a.results.iter().zip(expected) {
        assert!((res.estimate - want).abs() < 1e-10, "{:?}: {} vs {want}", res.subset, res.estimate);
        assert!((res.estimate - want).abs() <= res.error_bound + 1e-12);
    }
}

#[test]
fn table_survives_both_formats() {
    let t = ElementaryTable::precompute(4, 3).unwrap();
    let from_json = ElementaryTable::from_json(&t.to_json()).unwrap();
    let from_bytes = ElementaryTable::from_bytes(&t.to_bytes().unwrap()).unwrap();
    for back in [from_json, from_bytes] {
        assert_eq!(back.len(), t.len());
        let v = back.get(c(4, &[1, 2, 3]), c(4, &[2])).unwrap();
        assert_eq!(format_rational(v), "1/3");
    }
}
