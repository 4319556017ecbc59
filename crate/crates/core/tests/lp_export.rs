mod common;

use std::collections::HashMap;

use bnnv_core::lowering::export_ilp;
use bnnv_core::model::{parse_model, BnnModel};
use bnnv_core::properties::PropertyInstance;
use bnnv_core::Error;
use rand::Rng;

struct Lp {
    rows: Vec<(String, Vec<(i64, String)>, String, i64)>,
    bounds: HashMap<String, (i64, i64)>,
    binaries: Vec<String>,
    generals: Vec<String>,
}

fn parse_lp(text: &str) -> Lp {
    let mut lp = Lp {
        rows: Vec::new(),
        bounds: HashMap::new(),
        binaries: Vec::new(),
        generals: Vec::new(),
    };
    let mut section = "";
    for line in text.lines() {
        if line.starts_with('\\') {
            continue;
        }
        if !line.starts_with(' ') {
            section = match line {
                "Minimize" | "Subject To" | "Bounds" | "General" | "Binary" | "End" => line,
                _ => panic!("unknown section {line}"),
            };
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match section {
            "Subject To" => {
                let name = toks[0].trim_end_matches(':').to_string();
                let n = toks.len();
                let (op, rhs) = (toks[n - 2].to_string(), toks[n - 1].parse().unwrap());
                let mut terms = Vec::new();
                let (mut sign, mut coef) = (1, 1);
                for t in &toks[1..n - 2] {
                    match *t {
                        "+" => sign = 1,
                        "-" => sign = -1,
                        _ => match t.parse::<i64>() {
                            Ok(c) => coef = c,
                            Err(_) => {
                                terms.push((sign * coef, t.to_string()));
                                sign = 1;
                                coef = 1;
                            }
                        },
                    }
                }
                lp.rows.push((name, terms, op, rhs));
            }
            "Bounds" => {
                assert_eq!((toks[1], toks[3]), ("<=", "<="));
                lp.bounds.insert(toks[2].to_string(), (toks[0].parse().unwrap(), toks[4].parse().unwrap()));
            }
            "General" => lp.generals.push(toks[0].to_string()),
            "Binary" => lp.binaries.push(toks[0].to_string()),
            _ => {}
        }
    }
    lp
}

impl Lp {
    /// Names of rows violated by `values`.
    fn violated(&self, values: &HashMap<String, i64>) -> Vec<String> {
        let mut bad = Vec::new();
        for (name, terms, op, rhs) in &self.rows {
            let lhs: i64 = terms.iter().map(|(c, v)| c * values[v]).sum();
            let ok = match op.as_str() {
                ">=" => lhs >= *rhs,
                "<=" => lhs <= *rhs,
                "=" => lhs == *rhs,
                _ => panic!("{op}"),
            };
            if !ok {
                bad.push(name.clone());
            }
        }
        for v in &self.binaries {
            if !(0..=1).contains(&values[v]) {
                bad.push(v.clone());
            }
        }
        for (v, &(lo, hi)) in &self.bounds {
            if !(lo..=hi).contains(&values[v]) {
                bad.push(v.clone());
            }
        }
        bad
    }
}

/// Scores scaled by 100, exact for biases on a grid of hundredths.
fn beats(model: &BnnModel, last: &[bool], j: usize, l: usize) -> bool {
    let score = |i: usize| {
        let s: i64 = model.output.weights[i]
            .iter()
            .zip(last)
            .map(|(&a, &b)| if b { a as i64 } else { -(a as i64) })
            .sum();
        100 * s + (model.output.bias[i] * 100.0).round() as i64
    };
    if j < l {
        score(j) >= score(l)
    } else {
        score(j) > score(l)
    }
}

/// The variable assignment induced by evaluating the model on `image + tau`.
fn assignment(model: &BnnModel, image: &[i64], label: usize, tau: &[i64]) -> (HashMap<String, i64>, bool) {
    let x: Vec<i64> = image.iter().zip(tau).map(|(a, t)| a + t).collect();
    let act = model.forward(&x).unwrap();
    let mut v = HashMap::new();
    let put = |layer: usize, bits: &[bool], v: &mut HashMap<String, i64>| {
        for (i, &b) in bits.iter().enumerate() {
            v.insert(format!("b{layer}_{i}"), i64::from(b));
            v.insert(format!("nb{layer}_{i}"), i64::from(!b));
            v.insert(format!("x{layer}_{i}"), if b { 1 } else { -1 });
        }
    };
    put(0, &act.input_bits, &mut v);
    for (k, layer) in act.layers.iter().enumerate() {
        put(k + 1, layer, &mut v);
    }
    for (i, &t) in tau.iter().enumerate() {
        v.insert(format!("t_{i}"), t);
    }
    for j in (0..model.num_labels()).filter(|&j| j != label) {
        let d = beats(model, act.last_layer(), j, label);
        v.insert(format!("d_{j}"), i64::from(d));
        v.insert(format!("nd_{j}"), i64::from(!d));
    }
    (v, act.label != label)
}

fn export(model: &BnnModel, image: &[i64], label: usize, epsilon: i64) -> String {
    let prop = PropertyInstance::Robustness {
        image: image.to_vec(),
        label,
        epsilon,
        pixel_subset: None,
    };
    export_ilp(model, &prop).unwrap()
}

#[test]
fn forward_assignments_satisfy_exactly_the_adversarial_points() {
    let mut rng = common::rng(400);
    let mut adversarial = 0;
    for _ in 0..40 {
        let model = common::small_model(&mut rng, 3, 4, 3, 4);
        let (image, label) = common::labelled_image(&mut rng, &model);
        let epsilon = rng.gen_range(0..=2);
        let lp = parse_lp(&export(&model, &image, label, epsilon));
        let range: Vec<i64> = (-epsilon..=epsilon).collect();
        for tau in common::all_inputs(&range, model.input_dim) {
            let x: Vec<i64> = image.iter().zip(&tau).map(|(a, t)| a + t).collect();
            if model.check_input(&x).is_err() {
                continue;
            }
            let (mut values, adv) = assignment(&model, &image, label, &tau);
            let bad = lp.violated(&values);
            if adv {
                adversarial += 1;
                assert!(bad.is_empty(), "{bad:?}");
            } else {
                assert_eq!(bad, vec!["misclassified".to_string()]);
            }
            // any single flipped bit breaks some row
            let key = format!("b{}_{}", rng.gen_range(0..=model.blocks.len()), 0);
            let old = values[&key];
            let nb = format!("n{key}");
            let xk = format!("x{}", &key[1..]);
            values.insert(key.clone(), 1 - old);
            values.insert(nb, old);
            values.insert(xk, if old == 1 { -1 } else { 1 });
            assert!(!lp.violated(&values).iter().all(|r| r == "misclassified"), "{key}");
        }
    }
    assert!(adversarial > 0);
}

#[test]
fn sections_and_variables_are_declared() {
    let mut rng = common::rng(401);
    let model = common::small_model(&mut rng, 4, 4, 2, 3);
    let (image, label) = common::labelled_image(&mut rng, &model);
    let text = export(&model, &image, label, 1);
    let order: Vec<&str> = text.lines().filter(|l| !l.starts_with(' ') && !l.starts_with('\\')).collect();
    assert_eq!(order, ["Minimize", "Subject To", "Bounds", "General", "Binary", "End"]);
    let lp = parse_lp(&text);
    let declared: Vec<&String> = lp.binaries.iter().chain(&lp.generals).collect();
    for (_, terms, _, _) in &lp.rows {
        for (_, v) in terms {
            assert!(declared.contains(&v), "{v} undeclared");
        }
    }
    assert!(lp.rows.iter().any(|r| r.0 == "misclassified"));
}

#[test]
fn example_neuron_row_has_threshold_minus_one() {
    let text = r#"{
        "version": 1,
        "input": {"dim": 2, "lb": 0, "ub": 3},
        "binarizer": {"alpha": [1, 1], "gamma": [0, 0], "mu": [1.5, 1.5], "sigma": [1, 1]},
        "blocks": [{"A": [[1, -1]], "b": [-0.5], "alpha": [0.12], "gamma": [0.1], "mu": [-0.1], "sigma": [2]}],
        "output": {"A": [[1], [-1]], "b": [-0.5, 0.2]}
    }"#;
    let model = parse_model(text).unwrap();
    let label = model.classify(&[3, 0]).unwrap();
    let lp = export(&model, &[3, 0], label, 0);
    let row = lp.lines().find(|l| l.starts_with(" n1_0_on:")).unwrap();
    assert!(row.starts_with(" n1_0_on: x0_0 - x0_1 +"), "{row}");
    assert!(row.ends_with(">= -1"), "{row}");
}

#[test]
fn zero_epsilon_fixes_every_perturbation() {
    let mut rng = common::rng(402);
    let model = common::small_model(&mut rng, 5, 3, 2, 3);
    let (image, label) = common::labelled_image(&mut rng, &model);
    let lp = parse_lp(&export(&model, &image, label, 0));
    for i in 0..model.input_dim {
        let t = format!("t_{i}");
        assert_eq!(lp.bounds[&t], (0, 0));
        assert!(lp.rows.iter().any(|r| r.0 == format!("fix_t_{i}") && r.3 == 0));
    }
}

#[test]
fn only_robustness_is_exported() {
    let mut rng = common::rng(403);
    let model = common::small_model(&mut rng, 3, 3, 2, 3);
    let prop = PropertyInstance::Equivalence {
        model_b: Box::new(model.clone()),
    };
    assert!(matches!(export_ilp(&model, &prop), Err(Error::UnsupportedProperty(_))));
}
