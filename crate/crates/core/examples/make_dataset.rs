//! Write datasets in the generic `MIPD` format.
//!
//! With no arguments, writes a synthetic Gaussian-blob pair to `train.mipd`
//! and `test.mipd` in the current directory. With two arguments, converts a
//! headerless CSV of `label,feature_1,...,feature_d` rows:
//!
//!     cargo run --release --example make_dataset -- in.csv out.mipd [classes]
//!
//! Features are written as given; standardize them before exporting if the
//! model should see zero-mean, unit-variance inputs.

use mep_prune::dataset::{make_synthetic, save_dataset, standardize, Dataset, Split};
use mep_prune::Error;

fn main() -> mep_prune::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.as_slice() {
        [] => {
            let (mut tr, mut te) = make_synthetic(10, 64, 500, 4.0, 0)?;
            standardize(&mut tr, &mut te);
            save_dataset(&tr, "train.mipd")?;
            save_dataset(&te, "test.mipd")?;
            println!(
                "wrote train.mipd ({}) and test.mipd ({})",
                tr.len(),
                te.len()
            );
        }
        [input, output, rest @ ..] => {
            let data = from_csv(
                input,
                rest.first()
                    .map(|c| c.parse().expect("classes must be an integer")),
            )?;
            save_dataset(&data, output)?;
            println!(
                "wrote {output}: {} samples, {} features, {} classes",
                data.len(),
                data.dim(),
                data.num_classes()
            );
        }
        _ => {
            eprintln!("usage: make_dataset [in.csv out.mipd [classes]]");
            std::process::exit(1);
        }
    }
    Ok(())
}

fn from_csv(path: &str, classes: Option<usize>) -> mep_prune::Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut labels = Vec::new();
    let mut features = Vec::new();
    let mut dim = None;
    for row in reader.records() {
        let row = row?;
        let bad =
            |what: &str| Error::InvalidInput(format!("{path}: line {}: {what}", labels.len() + 1));
        let label: u32 = row
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("bad label"))?;
        let values = row
            .iter()
            .skip(1)
            .map(|s| s.trim().parse::<f32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad("bad feature"))?;
        if *dim.get_or_insert(values.len()) != values.len() {
            return Err(bad("row length differs from the first row"));
        }
        labels.push(label);
        features.extend(values);
    }
    let classes = classes.unwrap_or_else(|| labels.iter().max().map_or(0, |&m| m as usize + 1));
    Dataset::new(features, dim.unwrap_or(0), labels, classes, Split::Train)
}
