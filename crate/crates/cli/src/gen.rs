use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bnnv_core::random::{random_image, random_model, ModelShape};
use bnnv_core::{serialize_model, BnnModel};

use crate::args::{GenArgs, GenSuiteArgs, ShapeArgs};
use crate::{format_image, write_text, CliError, Image, Outcome};

pub(crate) fn shape(a: &ShapeArgs) -> Result<ModelShape, CliError> {
    let [input, widths @ .., labels] = a.dims.as_slice() else {
        return Err(CliError::Usage("--dims needs at least input size, one width and a label count".into()));
    };
    if widths.is_empty() || a.dims.contains(&0) {
        return Err(CliError::Usage(format!("--dims {:?} needs positive sizes and at least one block", a.dims)));
    }
    if *labels < 2 {
        return Err(CliError::Usage("a model needs at least two labels".into()));
    }
    if a.domain == "binary" {
        return Ok(ModelShape::binary(*input, widths, *labels));
    }
    let bad = || CliError::Usage(format!("--domain must be `LB:UB` or `binary`, got `{}`", a.domain));
    let (lb, ub) = a.domain.split_once(':').ok_or_else(bad)?;
    let (lb, ub): (i64, i64) = (lb.trim().parse().map_err(|_| bad())?, ub.trim().parse().map_err(|_| bad())?);
    if lb > ub {
        return Err(bad());
    }
    Ok(ModelShape::new(*input, widths, *labels, lb, ub))
}

fn labelled(rng: &mut ChaCha8Rng, model: &BnnModel) -> Image {
    let pixels = random_image(rng, model);
    let label = model.forward(&pixels).expect("random images are in the domain").label;
    Image {
        pixels,
        label: Some(label),
    }
}

pub fn cmd_gen(a: &GenArgs) -> Result<Outcome, CliError> {
    let shape = shape(&a.shape)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let model = random_model(&mut rng, &shape);
    let text = serialize_model(&model);
    if let Some(path) = &a.image {
        write_text(path, &format_image(&labelled(&mut rng, &model)))?;
    }
    match &a.output {
        Some(path) => {
            write_text(path, &text)?;
            Ok(Outcome::ok(String::new()))
        }
        None => Ok(Outcome::ok(text)),
    }
}

/// Writes `inst_NNN.json` and `inst_NNN.img` pairs; each image carries the
/// model's own prediction as its label.
pub fn cmd_gen_suite(a: &GenSuiteArgs) -> Result<Outcome, CliError> {
    let shape = shape(&a.shape)?;
    std::fs::create_dir_all(&a.dir).map_err(|source| CliError::Io {
        path: a.dir.clone(),
        source,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut listing = String::new();
    for i in 0..a.count {
        let model = random_model(&mut rng, &shape);
        let image = labelled(&mut rng, &model);
        let stem = format!("inst_{i:03}");
        let dir = Path::new(&a.dir);
        write_text(&dir.join(format!("{stem}.json")), &serialize_model(&model))?;
        write_text(&dir.join(format!("{stem}.img")), &format_image(&image))?;
        listing.push_str(&stem);
        listing.push('\n');
    }
    Ok(Outcome::ok(listing))
}
