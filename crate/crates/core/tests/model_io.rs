mod common;

use bnnv_core::model::{parse_model, serialize_model, ModelError};
use bnnv_core::random::{random_model, ModelShape};
use rand::Rng;

const TINY: &str = r#"{
  "version": 1,
  "input": {"dim": 2, "lb": 0, "ub": 3},
  "binarizer": {"alpha": [1, -1], "gamma": [0, 0], "mu": [1.5, 1.5], "sigma": [1, 1]},
  "blocks": [{"A": [[1, -1]], "b": [-0.5], "alpha": [0.12], "gamma": [0.1], "mu": [-0.1], "sigma": [2]}],
  "output": {"A": [[1], [-1]], "b": [-0.5, 0.2]}
}"#;

fn edit(path: &[&str], value: serde_json::Value) -> String {
    let mut doc: serde_json::Value = serde_json::from_str(TINY).unwrap();
    let mut cur = &mut doc;
    for key in &path[..path.len() - 1] {
        cur = match key.parse::<usize>() {
            Ok(i) => &mut cur[i],
            Err(_) => &mut cur[*key],
        };
    }
    let last = path[path.len() - 1];
    match last.parse::<usize>() {
        Ok(i) => cur[i] = value,
        Err(_) => cur[last] = value,
    }
    doc.to_string()
}

#[test]
fn random_models_round_trip() {
    let mut rng = common::rng(300);
    for i in 0..100 {
        let model = if i % 3 == 0 {
            let n = rng.gen_range(1..=8);
            let w = rng.gen_range(1..=6);
            random_model(&mut rng, &ModelShape::binary(n, &[w], 3))
        } else {
            common::small_model(&mut rng, 8, 8, 4, 6)
        };
        let text = serialize_model(&model);
        assert!(text.ends_with('\n'));
        let back = parse_model(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(serialize_model(&back), text);
    }
}

#[test]
fn tiny_document_parses() {
    let model = parse_model(TINY).unwrap();
    assert_eq!(model.input_dim, 2);
    assert_eq!(model.num_labels(), 2);
    assert_eq!(model.input_values(), vec![0, 1, 2, 3]);
}

#[test]
fn malformed_documents_are_rejected() {
    let cases = [
        (edit(&["version"], 2.into()), "version"),
        (edit(&["blocks", "0", "A", "0", "0"], 0.into()), "weight"),
        (edit(&["blocks", "0", "A", "0", "0"], serde_json::json!(1.0)), "weight"),
        (edit(&["blocks", "0", "sigma", "0"], 0.into()), "sigma"),
        (edit(&["binarizer", "sigma", "1"], serde_json::json!(-1)), "sigma"),
        (edit(&["blocks", "0", "A", "0"], serde_json::json!([1])), "dimension"),
        (edit(&["output", "b"], serde_json::json!([0.0])), "dimension"),
        (edit(&["input", "lb"], 5.into()), "domain"),
        (edit(&["extra"], 1.into()), "json"),
        (edit(&["output", "A"], serde_json::json!([[1]])), "dimension"),
        (edit(&["blocks"], serde_json::json!([])), "dimension"),
    ];
    for (text, what) in cases {
        let err = parse_model(&text).unwrap_err();
        let ok = match what {
            "version" => matches!(err, ModelError::Version(2)),
            "weight" => matches!(err, ModelError::Weight(_)),
            "sigma" => matches!(err, ModelError::Sigma(_)),
            "dimension" => matches!(err, ModelError::Dimension(_)),
            "domain" => matches!(err, ModelError::EmptyDomain { .. }),
            _ => matches!(err, ModelError::Json(_)),
        };
        assert!(ok, "{what}: {err:?}");
    }
}

#[test]
fn binary_models_need_the_sign_domain() {
    let mut doc: serde_json::Value = serde_json::from_str(TINY).unwrap();
    doc.as_object_mut().unwrap().remove("binarizer");
    assert!(matches!(
        parse_model(&doc.to_string()),
        Err(ModelError::NonBinaryDomain { lb: 0, ub: 3 })
    ));
    doc["input"]["lb"] = (-1).into();
    doc["input"]["ub"] = 1.into();
    let model = parse_model(&doc.to_string()).unwrap();
    assert_eq!(model.input_values(), vec![-1, 1]);
    assert!(model.forward(&[0, 1]).is_err());
}

#[test]
fn inputs_outside_the_domain_are_rejected() {
    let model = parse_model(TINY).unwrap();
    assert!(matches!(model.forward(&[4, 0]), Err(ModelError::OutOfDomain { .. })));
    assert!(matches!(model.forward(&[1]), Err(ModelError::Dimension(_))));
}

#[test]
fn saliency_matches_brute_force() {
    let mut rng = common::rng(301);
    for _ in 0..50 {
        let model = common::small_model(&mut rng, 6, 5, 2, 4);
        let (x, label) = common::labelled_image(&mut rng, &model);
        let values = model.input_values();
        let margin = |y: &[i64]| {
            let s = model.forward(y).unwrap().scores;
            let other = (0..s.len()).filter(|&j| j != label).map(|j| s[j]).fold(f64::NEG_INFINITY, f64::max);
            s[label] - other
        };
        let base = margin(&x);
        let drops: Vec<f64> = (0..model.input_dim)
            .map(|i| {
                [values[0], values[values.len() - 1]]
                    .iter()
                    .map(|&v| {
                        let mut y = x.clone();
                        y[i] = v;
                        base - margin(&y)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let rank = model.saliency_rank(&x).unwrap();
        let mut sorted = rank.clone();
        sorted.sort();
        assert_eq!(sorted, (0..model.input_dim).collect::<Vec<_>>());
        for w in rank.windows(2) {
            let (a, b) = (drops[w[0]], drops[w[1]]);
            assert!(a > b || (a == b && w[0] < w[1]), "{rank:?} {drops:?}");
        }
    }
}
