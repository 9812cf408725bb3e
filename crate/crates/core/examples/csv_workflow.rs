//! CSV in, model JSON out, predictions from the reloaded model.

use beta_survival::data::{read_dataset_path, ReadOptions};
use beta_survival::linear::{fit_linear, FitConfig};
use beta_survival::model_io::{ModelFile, SavedModel};
use beta_survival::simgen::gen_table1_mixture;
use beta_survival::{Result, RiskModel};

fn main() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let csv_path = dir.path().join("cohorts.csv");
    gen_table1_mixture(2_000, 4, 5)?.write_csv_path(&csv_path)?;

    let (data, ingest) = read_dataset_path(&csv_path, &ReadOptions::training())?;
    println!("read {} rows, features {:?}, {} missing cells", ingest.rows, data.feature_names, ingest.missing_cells);

    let (model, _) = fit_linear(&data.observations, &FitConfig::default())?;
    let model = model.with_feature_names(data.feature_names.clone());
    let file = ModelFile::new(SavedModel::BetaLogisticLinear(model), data.schema.clone())?;
    let model_path = dir.path().join("model.json");
    file.save(&model_path)?;

    let reloaded = ModelFile::load(&model_path)?;
    assert_eq!(reloaded, file);
    for o in data.observations.iter().take(3) {
        let p = reloaded.model.beta_params(&o.features).expect("beta model")?;
        println!(
            "x = {:?}: alpha {:.4}, beta {:.4}, P(T <= 4) = {:.4}",
            o.features,
            p.alpha,
            p.beta,
            reloaded.model.risk_score(&o.features, 4)?
        );
    }
    Ok(())
}
