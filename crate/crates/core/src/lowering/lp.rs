//! LP-format export of robustness queries with big-M indicator rows.

use std::fmt::Write as _;

use super::{neuron_threshold, pair_threshold, strict_pair_threshold, NeuronThreshold};
use crate::encoder::pixel_threshold;
use crate::model::BnnModel;
use crate::properties::PropertyInstance;
use crate::Error;

/// A linear row `sum coef * var (>=|<=|=) rhs`.
struct Row {
    name: String,
    terms: Vec<(i64, String)>,
    op: &'static str,
    rhs: i64,
}

fn fmt_row(out: &mut String, row: &Row) {
    write!(out, " {}:", row.name).unwrap();
    for (k, (c, v)) in row.terms.iter().enumerate() {
        let sign = if *c < 0 { "-" } else if k == 0 { "" } else { "+" };
        let mag = c.abs();
        let sep = if sign.is_empty() { "" } else { " " };
        if mag == 1 {
            write!(out, " {sign}{sep}{v}").unwrap();
        } else {
            write!(out, " {sign}{sep}{mag} {v}").unwrap();
        }
    }
    writeln!(out, " {} {}", row.op, row.rhs).unwrap();
}

/// Rows making `bit = 1` iff `sum terms >= c`, given `|sum terms| <= span`.
fn indicator(rows: &mut Vec<Row>, name: &str, terms: Vec<(i64, String)>, c: i64, span: i64, bit: &str, nbit: &str) {
    let m = span + c.abs() + 1;
    let mut on = terms.clone();
    on.push((m, nbit.to_string()));
    rows.push(Row {
        name: format!("{name}_on"),
        terms: on,
        op: ">=",
        rhs: c,
    });
    let mut off = terms;
    off.push((-m, bit.to_string()));
    rows.push(Row {
        name: format!("{name}_off"),
        terms: off,
        op: "<=",
        rhs: c - 1,
    });
}

fn fixed(rows: &mut Vec<Row>, name: &str, var: &str, value: i64) {
    rows.push(Row {
        name: name.to_string(),
        terms: vec![(1, var.to_string())],
        op: "=",
        rhs: value,
    });
}

struct Vars<'a> {
    binaries: &'a mut Vec<String>,
    generals: &'a mut Vec<String>,
    bounds: &'a mut Vec<String>,
}

/// Binary `bL_i`, its complement `nbL_i` and the signed copy `xL_i`.
fn layer_vars(rows: &mut Vec<Row>, vars: &mut Vars<'_>, layer: usize, width: usize) {
    for i in 0..width {
        let (b, nb, x) = (format!("b{layer}_{i}"), format!("nb{layer}_{i}"), format!("x{layer}_{i}"));
        rows.push(Row {
            name: format!("link{layer}_{i}"),
            terms: vec![(1, x.clone()), (-2, b.clone())],
            op: "=",
            rhs: -1,
        });
        rows.push(Row {
            name: format!("comp{layer}_{i}"),
            terms: vec![(1, b.clone()), (1, nb.clone())],
            op: "=",
            rhs: 1,
        });
        vars.bounds.push(format!(" -1 <= {x} <= 1"));
        vars.generals.push(x);
        vars.binaries.push(b);
        vars.binaries.push(nb);
    }
}

/// Writes the robustness query as an integer program whose feasible points
/// are exactly the adversarial perturbations.
///
/// Layer `L` bits are binaries `bL_i` with complements `nbL_i` and signed
/// copies `xL_i = 2 bL_i - 1`; layer 0 is the binarized input. Perturbations
/// are general integers `t_i`; `d_j` says label `j` beats the given label.
pub fn export_ilp(model: &BnnModel, prop: &PropertyInstance) -> Result<String, Error> {
    let PropertyInstance::Robustness {
        image,
        label,
        epsilon,
        pixel_subset,
    } = prop
    else {
        return Err(Error::UnsupportedProperty(prop.kind().to_string()));
    };
    let bn = model.binarizer.as_ref().ok_or(Error::MissingBinarizer)?;
    model.check_input(image)?;
    if *label >= model.num_labels() {
        return Err(Error::LabelOutOfRange {
            label: *label,
            labels: model.num_labels(),
        });
    }
    if *epsilon < 0 {
        return Err(Error::InvalidProperty(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let domains = crate::encoder::perturbation_domains(model, &[image], *epsilon, pixel_subset.as_deref());
    let mut rows = Vec::new();
    let mut binaries = Vec::new();
    let mut generals = Vec::new();
    let mut bounds = Vec::new();

    // perturbation and binarized input
    layer_vars(&mut rows, &mut Vars { binaries: &mut binaries, generals: &mut generals, bounds: &mut bounds }, 0, model.input_dim);
    for (i, &(lo, hi)) in domains.iter().enumerate() {
        let t = format!("t_{i}");
        if lo == hi {
            fixed(&mut rows, &format!("fix_t_{i}"), &t, lo);
        }
        bounds.push(format!(" {lo} <= {t} <= {hi}"));
        generals.push(t.clone());
        let (b, nb) = (format!("b0_{i}"), format!("nb0_{i}"));
        let span = lo.abs().max(hi.abs());
        match pixel_threshold(bn, i, model.input_lb, model.input_ub) {
            NeuronThreshold::Geq(c) => {
                indicator(&mut rows, &format!("pix{i}"), vec![(1, t)], c - image[i], span, &b, &nb);
            }
            NeuronThreshold::Leq(c) => {
                indicator(&mut rows, &format!("pix{i}"), vec![(-1, t)], image[i] - c, span, &b, &nb);
            }
            NeuronThreshold::Const(v) => fixed(&mut rows, &format!("pix{i}"), &b, i64::from(v)),
        }
    }

    // internal blocks
    for (k, block) in model.blocks.iter().enumerate() {
        layer_vars(&mut rows, &mut Vars { binaries: &mut binaries, generals: &mut generals, bounds: &mut bounds }, k + 1, block.out_dim());
        for i in 0..block.out_dim() {
            let (b, nb) = (format!("b{}_{i}", k + 1), format!("nb{}_{i}", k + 1));
            let name = format!("n{}_{i}", k + 1);
            match neuron_threshold(block, i).folded() {
                Some((negate, c)) => {
                    let sign = if negate { -1 } else { 1 };
                    let terms = block.weights[i]
                        .iter()
                        .enumerate()
                        .map(|(j, &a)| (sign * a as i64, format!("x{k}_{j}")))
                        .collect();
                    indicator(&mut rows, &name, terms, c, block.in_dim() as i64, &b, &nb);
                }
                None => {
                    let v = matches!(neuron_threshold(block, i), NeuronThreshold::Const(true));
                    fixed(&mut rows, &name, &b, i64::from(v));
                }
            }
        }
    }

    // some other label reaches the top: w_j >= w_l for j < l, w_j > w_l for j > l
    let last = model.blocks.len();
    let out = &model.output;
    let mut adv = Vec::new();
    for j in (0..model.num_labels()).filter(|j| j != label) {
        let k = if j < *label {
            pair_threshold(out, j, *label)
        } else {
            strict_pair_threshold(out, j, *label)
        };
        let terms: Vec<(i64, String)> = out.weights[j]
            .iter()
            .zip(&out.weights[*label])
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(p, (&a, &b))| ((a - b) as i64, format!("x{last}_{p}")))
            .collect();
        let (d, nd) = (format!("d_{j}"), format!("nd_{j}"));
        rows.push(Row {
            name: format!("dcomp_{j}"),
            terms: vec![(1, d.clone()), (1, nd.clone())],
            op: "=",
            rhs: 1,
        });
        indicator(&mut rows, &format!("beat{j}"), terms, k, 2 * out.in_dim() as i64, &d, &nd);
        adv.push((1, d.clone()));
        binaries.push(d);
        binaries.push(nd);
    }
    rows.push(Row {
        name: "misclassified".into(),
        terms: adv,
        op: ">=",
        rhs: 1,
    });

    let mut text = String::new();
    writeln!(text, "\\ robustness of label {label} at epsilon {epsilon}").unwrap();
    writeln!(text, "Minimize").unwrap();
    writeln!(text, " obj: 0 t_0").unwrap();
    writeln!(text, "Subject To").unwrap();
    for r in &rows {
        fmt_row(&mut text, r);
    }
    writeln!(text, "Bounds").unwrap();
    for b in &bounds {
        writeln!(text, "{b}").unwrap();
    }
    writeln!(text, "General").unwrap();
    for g in &generals {
        writeln!(text, " {g}").unwrap();
    }
    writeln!(text, "Binary").unwrap();
    for b in &binaries {
        writeln!(text, " {b}").unwrap();
    }
    writeln!(text, "End").unwrap();
    Ok(text)
}
