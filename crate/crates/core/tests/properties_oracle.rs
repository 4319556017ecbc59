mod common;

use bnnv_core::model::BnnModel;
use bnnv_core::oracle::{brute_force_equivalence, brute_force_robustness, brute_force_universal, DEFAULT_CAP};
use bnnv_core::properties::{
    check_property, required_count, validate_equivalence, validate_robustness, validate_universal, CheckConfig,
    PropertyInstance, Verdict, Witness,
};
use bnnv_core::random::{random_model, ModelShape};
use bnnv_core::Error;
use rand::Rng;

fn cfg() -> CheckConfig {
    CheckConfig::default()
}

fn robustness(model: &BnnModel, image: &[i64], label: usize, epsilon: i64, subset: Option<Vec<usize>>) -> Verdict {
    let prop = PropertyInstance::Robustness {
        image: image.to_vec(),
        label,
        epsilon,
        pixel_subset: subset,
    };
    check_property(model, &prop, &cfg()).unwrap().verdict
}

fn universal(model: &BnnModel, images: &[Vec<i64>], labels: &[usize], epsilon: i64, rho: f64) -> Verdict {
    let prop = PropertyInstance::Universal {
        images: images.to_vec(),
        labels: labels.to_vec(),
        epsilon,
        rho,
    };
    check_property(model, &prop, &cfg()).unwrap().verdict
}

fn equivalence(a: &BnnModel, b: &BnnModel) -> Verdict {
    let prop = PropertyInstance::Equivalence {
        model_b: Box::new(b.clone()),
    };
    check_property(a, &prop, &cfg()).unwrap().verdict
}

fn same_kind(a: &Verdict, b: &Verdict) -> bool {
    a.holds() == b.holds() && a.is_counterexample() == b.is_counterexample()
}

#[test]
fn robustness_agrees_with_oracle() {
    let mut rng = common::rng(100);
    let mut counts = [0usize; 2];
    for _ in 0..150 {
        let model = common::small_model(&mut rng, 4, 5, 3, 4);
        let (image, label) = common::labelled_image(&mut rng, &model);
        let epsilon = rng.gen_range(0..=2);
        let sat = robustness(&model, &image, label, epsilon, None);
        let oracle = brute_force_robustness(&model, &image, label, epsilon, DEFAULT_CAP).unwrap();
        assert!(same_kind(&sat, &oracle), "{sat:?} vs {oracle:?}\n{model:?}");
        if let Verdict::Counterexample {
            witness: Witness::Robustness { tau, degenerate, .. },
        } = &sat
        {
            validate_robustness(&model, &image, label, epsilon, None, tau).unwrap();
            assert!(!degenerate);
        }
        counts[usize::from(sat.holds())] += 1;
    }
    assert!(counts[0] > 10 && counts[1] > 10, "{counts:?}");
}

#[test]
fn zero_epsilon_holds_for_correct_labels() {
    let mut rng = common::rng(101);
    for _ in 0..40 {
        let model = common::small_model(&mut rng, 5, 5, 2, 4);
        let (image, label) = common::labelled_image(&mut rng, &model);
        assert!(robustness(&model, &image, label, 0, None).holds());
    }
}

#[test]
fn wrong_label_is_a_degenerate_counterexample() {
    let mut rng = common::rng(102);
    let model = common::small_model(&mut rng, 4, 4, 2, 3);
    let (image, label) = common::labelled_image(&mut rng, &model);
    let wrong = (label + 1) % model.num_labels();
    match robustness(&model, &image, wrong, 1, None) {
        Verdict::Counterexample {
            witness: Witness::Robustness { tau, degenerate, label: got, .. },
        } => {
            assert!(degenerate);
            assert!(tau.iter().all(|&t| t == 0));
            assert_eq!(got, label);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn robustness_is_monotone_in_epsilon() {
    let mut rng = common::rng(103);
    for _ in 0..30 {
        let model = common::small_model(&mut rng, 4, 5, 2, 3);
        let (image, label) = common::labelled_image(&mut rng, &model);
        let verdicts: Vec<bool> = (0..=3).map(|e| robustness(&model, &image, label, e, None).holds()).collect();
        for w in verdicts.windows(2) {
            assert!(w[0] || !w[1], "{verdicts:?}");
        }
    }
}

#[test]
fn pixel_subset_matches_restricted_enumeration() {
    let mut rng = common::rng(104);
    for _ in 0..40 {
        let model = common::small_model(&mut rng, 5, 4, 2, 3);
        let (image, label) = common::labelled_image(&mut rng, &model);
        let subset: Vec<usize> = (0..model.input_dim).filter(|_| rng.gen_bool(0.5)).collect();
        let epsilon = rng.gen_range(1..=2);
        let sat = robustness(&model, &image, label, epsilon, Some(subset.clone()));
        let taus = common::all_inputs(&(-epsilon..=epsilon).collect::<Vec<_>>(), subset.len());
        let expected = taus.iter().any(|t| {
            let mut x = image.clone();
            for (&i, &d) in subset.iter().zip(t) {
                x[i] += d;
            }
            model.check_input(&x).is_ok() && model.classify(&x).unwrap() != label
        });
        assert_eq!(sat.is_counterexample(), expected);
        if let Verdict::Counterexample {
            witness: Witness::Robustness { tau, .. },
        } = &sat
        {
            validate_robustness(&model, &image, label, epsilon, Some(&subset), tau).unwrap();
        }
    }
}

#[test]
fn universal_agrees_with_oracle() {
    let mut rng = common::rng(105);
    let mut counts = [0usize; 2];
    for _ in 0..100 {
        let model = common::small_model(&mut rng, 3, 4, 2, 3);
        let n = rng.gen_range(1..=4);
        let (images, labels): (Vec<_>, Vec<_>) = (0..n).map(|_| common::labelled_image(&mut rng, &model)).unzip();
        let epsilon = rng.gen_range(0..=2);
        let rho = [0.25, 0.5, 0.75, 1.0][rng.gen_range(0..4)];
        let sat = universal(&model, &images, &labels, epsilon, rho);
        let oracle = brute_force_universal(&model, &images, &labels, epsilon, rho, DEFAULT_CAP).unwrap();
        assert!(same_kind(&sat, &oracle), "{sat:?} vs {oracle:?}");
        if let Verdict::Counterexample {
            witness: Witness::Universal { tau, required, .. },
        } = &sat
        {
            assert_eq!(*required, required_count(rho, n));
            validate_universal(&model, &images, &labels, epsilon, *required, tau).unwrap();
        }
        counts[usize::from(sat.holds())] += 1;
    }
    assert!(counts[0] > 5 && counts[1] > 5, "{counts:?}");
}

#[test]
fn single_image_universal_reduces_to_robustness() {
    // with one image the shared domain is the single image's domain
    let mut rng = common::rng(106);
    for _ in 0..40 {
        let model = common::small_model(&mut rng, 4, 4, 2, 3);
        let (image, label) = common::labelled_image(&mut rng, &model);
        let epsilon = rng.gen_range(0..=2);
        let u = universal(&model, &[image.clone()], &[label], epsilon, 1.0);
        let r = robustness(&model, &image, label, epsilon, None);
        assert_eq!(u.holds(), r.holds());
    }
}

#[test]
fn required_count_rounds_up_with_snap() {
    assert_eq!(required_count(0.5, 4), 2);
    assert_eq!(required_count(0.3, 10), 3);
    assert_eq!(required_count(0.7, 10), 7);
    assert_eq!(required_count(0.51, 4), 3);
    assert_eq!(required_count(1.0, 3), 3);
    assert_eq!(required_count(0.0, 3), 0);
}

#[test]
fn nonpositive_rho_is_rejected() {
    let mut rng = common::rng(107);
    let model = common::small_model(&mut rng, 3, 3, 2, 3);
    let (image, label) = common::labelled_image(&mut rng, &model);
    let prop = PropertyInstance::Universal {
        images: vec![image.clone()],
        labels: vec![label],
        epsilon: 0,
        rho: 0.0,
    };
    assert!(matches!(check_property(&model, &prop, &cfg()), Err(Error::InvalidProperty(_))));
    assert!(brute_force_universal(&model, &[image], &[label], 0, f64::NAN, 10).is_err());
}

#[test]
fn rho_above_one_holds_trivially() {
    let mut rng = common::rng(115);
    let model = common::small_model(&mut rng, 3, 3, 2, 3);
    let (image, label) = common::labelled_image(&mut rng, &model);
    assert!(universal(&model, &[image.clone()], &[label], 2, 1.5).holds());
    assert!(brute_force_universal(&model, &[image], &[label], 2, 1.5, DEFAULT_CAP).unwrap().holds());
}

#[test]
fn equivalence_with_itself_holds() {
    let mut rng = common::rng(108);
    for _ in 0..20 {
        let model = common::small_model(&mut rng, 4, 5, 3, 4);
        assert!(equivalence(&model, &model).holds());
        let n = rng.gen_range(1..=6);
        let binary = random_model(&mut rng, &ModelShape::binary(n, &[4, 3], 3));
        assert!(equivalence(&binary, &binary).holds());
    }
}

#[test]
fn scaled_batch_norm_is_equivalent() {
    // scaling alpha and sigma by the same positive factor keeps every cut point
    let mut rng = common::rng(109);
    for _ in 0..20 {
        let a = common::small_model(&mut rng, 4, 5, 2, 3);
        let mut b = a.clone();
        for block in &mut b.blocks {
            for (alpha, sigma) in block.bn.alpha.iter_mut().zip(block.bn.sigma.iter_mut()) {
                *alpha *= 2.0;
                *sigma *= 2.0;
            }
        }
        assert!(equivalence(&a, &b).holds());
        assert!(brute_force_equivalence(&a, &b, DEFAULT_CAP).unwrap().holds());
    }
}

#[test]
fn perturbed_models_agree_with_oracle() {
    let mut rng = common::rng(110);
    let mut counts = [0usize; 2];
    for round in 0..80 {
        let a = if round % 2 == 0 {
            common::small_model(&mut rng, 4, 5, 2, 3)
        } else {
            let n = rng.gen_range(1..=7);
            random_model(&mut rng, &ModelShape::binary(n, &[5, 4], 3))
        };
        let mut b = a.clone();
        match rng.gen_range(0..3) {
            0 => {
                let j = rng.gen_range(0..b.output.bias.len());
                b.output.bias[j] += [-1.0, -0.5, 0.5, 1.0][rng.gen_range(0..4)];
            }
            1 => {
                let blk = rng.gen_range(0..b.blocks.len());
                let i = rng.gen_range(0..b.blocks[blk].weights.len());
                let j = rng.gen_range(0..b.blocks[blk].weights[i].len());
                b.blocks[blk].weights[i][j] *= -1;
            }
            _ => {
                let i = rng.gen_range(0..b.output.weights.len());
                let j = rng.gen_range(0..b.output.weights[i].len());
                b.output.weights[i][j] *= -1;
            }
        }
        let sat = equivalence(&a, &b);
        let oracle = brute_force_equivalence(&a, &b, DEFAULT_CAP).unwrap();
        assert!(same_kind(&sat, &oracle), "{sat:?} vs {oracle:?}");
        if let Verdict::Counterexample {
            witness: Witness::Equivalence { input, .. },
        } = &sat
        {
            validate_equivalence(&a, &b, input).unwrap();
        }
        counts[usize::from(sat.holds())] += 1;
    }
    assert!(counts[0] > 5 && counts[1] > 5, "{counts:?}");
}

#[test]
fn incompatible_models_are_rejected() {
    let mut rng = common::rng(111);
    let a = random_model(&mut rng, &ModelShape::new(3, &[2], 2, 0, 3));
    let b = random_model(&mut rng, &ModelShape::new(4, &[2], 2, 0, 3));
    let prop = PropertyInstance::Equivalence { model_b: Box::new(b) };
    assert!(matches!(check_property(&a, &prop, &cfg()), Err(Error::Incompatible(_))));
    let c = random_model(&mut rng, &ModelShape::new(3, &[2], 3, 0, 3));
    let prop = PropertyInstance::Equivalence { model_b: Box::new(c) };
    assert!(matches!(check_property(&a, &prop, &cfg()), Err(Error::Incompatible(_))));
}

#[test]
fn robustness_needs_a_binarizer() {
    let mut rng = common::rng(112);
    let model = random_model(&mut rng, &ModelShape::binary(3, &[2], 2));
    let prop = PropertyInstance::Robustness {
        image: vec![1, -1, 1],
        label: 0,
        epsilon: 1,
        pixel_subset: None,
    };
    assert!(matches!(check_property(&model, &prop, &cfg()), Err(Error::MissingBinarizer)));
    assert!(matches!(
        brute_force_robustness(&model, &[1, -1, 1], 0, 1, DEFAULT_CAP),
        Err(Error::MissingBinarizer)
    ));
}

#[test]
fn invalid_instances_are_rejected() {
    let mut rng = common::rng(113);
    let model = random_model(&mut rng, &ModelShape::new(3, &[2], 2, 0, 3));
    let bad_label = PropertyInstance::Robustness {
        image: vec![0, 1, 2],
        label: 2,
        epsilon: 1,
        pixel_subset: None,
    };
    assert!(matches!(
        check_property(&model, &bad_label, &cfg()),
        Err(Error::LabelOutOfRange { label: 2, labels: 2 })
    ));
    let bad_pixel = PropertyInstance::Robustness {
        image: vec![0, 1, 7],
        label: 0,
        epsilon: 1,
        pixel_subset: None,
    };
    assert!(check_property(&model, &bad_pixel, &cfg()).is_err());
    let bad_subset = PropertyInstance::Robustness {
        image: vec![0, 1, 2],
        label: model.classify(&[0, 1, 2]).unwrap(),
        epsilon: 1,
        pixel_subset: Some(vec![3]),
    };
    assert!(matches!(check_property(&model, &bad_subset, &cfg()), Err(Error::InvalidProperty(_))));
}

#[test]
fn oracle_cap_is_reported() {
    let mut rng = common::rng(114);
    let model = random_model(&mut rng, &ModelShape::new(12, &[2], 2, 0, 10));
    let image = vec![5; 12];
    let label = model.classify(&image).unwrap();
    assert!(matches!(
        brute_force_robustness(&model, &image, label, 2, 1000),
        Err(Error::OracleCap { cap: 1000, .. })
    ));
}
