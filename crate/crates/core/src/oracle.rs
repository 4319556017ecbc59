//! Exhaustive enumeration over the reference evaluator.

use rayon::prelude::*;

use crate::encoder::perturbation_domains;
use crate::model::BnnModel;
use crate::properties::{check_compatible, required_count, Verdict, Witness};
use crate::Error;

pub const DEFAULT_CAP: u64 = 10_000_000;

/// Number of points in a box, or `None` past `u64`.
fn box_size(domains: &[(i64, i64)]) -> Option<u64> {
    domains
        .iter()
        .try_fold(1u64, |acc, &(lo, hi)| acc.checked_mul((hi - lo + 1) as u64))
}

/// The `index`-th point of a box in lexicographic order (first coordinate
/// most significant).
fn point(domains: &[(i64, i64)], mut index: u64) -> Vec<i64> {
    let mut p = vec![0; domains.len()];
    for (i, &(lo, hi)) in domains.iter().enumerate().rev() {
        let width = (hi - lo + 1) as u64;
        p[i] = lo + (index % width) as i64;
        index /= width;
    }
    p
}

/// First point of the box satisfying `pred`, searched in parallel.
fn find_first<F>(domains: &[(i64, i64)], cap: u64, pred: F) -> Result<Option<Vec<i64>>, Error>
where
    F: Fn(&[i64]) -> bool + Sync,
{
    let size = box_size(domains).filter(|&s| s <= cap).ok_or(Error::OracleCap {
        size: box_size(domains),
        cap,
    })?;
    Ok((0..size)
        .into_par_iter()
        .map(|i| point(domains, i))
        .find_first(|p| pred(p)))
}

/// Enumerates all `tau` with `|tau_i| <= epsilon` that keep the image in
/// the input domain.
pub fn brute_force_robustness(
    model: &BnnModel,
    image: &[i64],
    label: usize,
    epsilon: i64,
    cap: u64,
) -> Result<Verdict, Error> {
    if model.binarizer.is_none() {
        return Err(Error::MissingBinarizer);
    }
    if epsilon < 0 {
        return Err(Error::InvalidProperty(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    model.check_input(image)?;
    if label >= model.num_labels() {
        return Err(Error::LabelOutOfRange {
            label,
            labels: model.num_labels(),
        });
    }
    let domains = perturbation_domains(model, &[image], epsilon, None);
    let hit = find_first(&domains, cap, |tau| {
        let x: Vec<i64> = image.iter().zip(tau).map(|(a, t)| a + t).collect();
        model.forward_unchecked(&x).label != label
    })?;
    Ok(match hit {
        None => Verdict::Holds,
        Some(tau) => {
            let input: Vec<i64> = image.iter().zip(&tau).map(|(a, t)| a + t).collect();
            Verdict::Counterexample {
                witness: Witness::Robustness {
                    label: model.forward_unchecked(&input).label,
                    degenerate: tau.iter().all(|&t| t == 0),
                    tau,
                    input,
                },
            }
        }
    })
}

pub fn brute_force_universal(
    model: &BnnModel,
    images: &[Vec<i64>],
    labels: &[usize],
    epsilon: i64,
    rho: f64,
    cap: u64,
) -> Result<Verdict, Error> {
    if images.is_empty() || images.len() != labels.len() {
        return Err(Error::InvalidProperty("universal robustness needs one label per image and at least one image".into()));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidProperty(format!("rho must be positive, got {rho}")));
    }
    if model.binarizer.is_none() {
        return Err(Error::MissingBinarizer);
    }
    for (x, &l) in images.iter().zip(labels) {
        model.check_input(x)?;
        if l >= model.num_labels() {
            return Err(Error::LabelOutOfRange {
                label: l,
                labels: model.num_labels(),
            });
        }
    }
    if epsilon < 0 {
        return Err(Error::InvalidProperty(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let required = required_count(rho, images.len());
    let refs: Vec<&[i64]> = images.iter().map(Vec::as_slice).collect();
    let domains = perturbation_domains(model, &refs, epsilon, None);
    let predict = |tau: &[i64]| -> Vec<usize> {
        images
            .iter()
            .map(|x| {
                let y: Vec<i64> = x.iter().zip(tau).map(|(a, t)| a + t).collect();
                model.forward_unchecked(&y).label
            })
            .collect()
    };
    let count = |pred: &[usize]| pred.iter().zip(labels).filter(|(p, l)| p != l).count();
    let hit = find_first(&domains, cap, |tau| count(&predict(tau)) >= required)?;
    Ok(match hit {
        None => Verdict::Holds,
        Some(tau) => {
            let predicted = predict(&tau);
            Verdict::Counterexample {
                witness: Witness::Universal {
                    misclassified: count(&predicted),
                    labels: predicted,
                    tau,
                    required,
                },
            }
        }
    })
}

pub fn brute_force_equivalence(a: &BnnModel, b: &BnnModel, cap: u64) -> Result<Verdict, Error> {
    check_compatible(a, b)?;
    let domains = vec![(a.input_lb, a.input_ub); a.input_dim];
    let binary = a.binarizer.is_none();
    // binary models read -1/1; map the box [-1, 1] onto its two corners
    let domains = if binary { vec![(0, 1); a.input_dim] } else { domains };
    let to_input = |p: &[i64]| -> Vec<i64> {
        if binary {
            p.iter().map(|&v| 2 * v - 1).collect()
        } else {
            p.to_vec()
        }
    };
    let hit = find_first(&domains, cap, |p| {
        let x = to_input(p);
        a.forward_unchecked(&x).label != b.forward_unchecked(&x).label
    })?;
    Ok(match hit {
        None => Verdict::Holds,
        Some(p) => {
            let input = to_input(&p);
            Verdict::Counterexample {
                witness: Witness::Equivalence {
                    label_a: a.forward_unchecked(&input).label,
                    label_b: b.forward_unchecked(&input).label,
                    input,
                },
            }
        }
    })
}
