use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use beta_survival::data::{read_dataset_path, FeatureSchema, ReadOptions};
use beta_survival::linear::LinearBetaLogistic;
use beta_survival::model_io::{ModelFile, SavedModel};
use beta_survival::sbg;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beta-survival"))
        .args(args)
        .output()
        .expect("run beta-survival")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Work(tempfile::TempDir);

impl Work {
    fn new() -> Self {
        Self(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn uniform_model(&self) -> PathBuf {
        let p = self.path("uniform.json");
        ModelFile::new(
            SavedModel::BetaLogisticLinear(LinearBetaLogistic::zeros(1).with_feature_names(vec!["x".into()])),
            FeatureSchema::numeric(&["x"]),
        )
        .unwrap()
        .save(&p)
        .unwrap();
        p
    }
}

#[test]
fn simulate_table1_layout() {
    let w = Work::new();
    let out = w.path("d.csv");
    let o = run(&["simulate", "--generator", "table1", "--n", "30000", "--horizon", "4", "--seed", "7", "--out", s(&out)]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,censored,group_normal,group_right_skewed,group_u_shaped"
    );
    assert_eq!(lines.count(), 90_000);
    assert!(String::from_utf8_lossy(&o.stderr).contains("censored fraction"));
}

#[test]
fn train_linear_writes_two_coefficient_blocks() {
    let w = Work::new();
    let data = w.path("d.csv");
    assert!(run(&["simulate", "--generator", "table1", "--n", "500", "--horizon", "4", "--out", s(&data)]).status.success());
    let model = w.path("m.json");
    let o = run(&["train", "--model", "betalogistic-linear", "--data", s(&data), "--out-model", s(&model)]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("final loss") && stdout.contains("iterations"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    let d = 3;
    let n = v["gamma_a"].as_array().unwrap().len() + v["gamma_b"].as_array().unwrap().len() + 2;
    assert_eq!(n, 2 * (d + 1));
    assert!(v["intercept_a"].is_f64() && v["intercept_b"].is_f64());
}

#[test]
fn geometric_loss_not_below_beta_logistic_loss() {
    let w = Work::new();
    let data = w.path("d.csv");
    assert!(run(&["simulate", "--generator", "table1", "--n", "5000", "--horizon", "6", "--seed", "2", "--out", s(&data)]).status.success());
    let (geo, beta) = (w.path("geo.json"), w.path("beta.json"));
    assert!(run(&["train", "--model", "geometric", "--data", s(&data), "--out-model", s(&geo)]).status.success());
    assert!(run(&["train", "--model", "betalogistic-linear", "--data", s(&data), "--out-model", s(&beta)]).status.success());

    let (ds, _) = read_dataset_path(&data, &ReadOptions::training()).unwrap();
    let obs = &ds.observations;
    let SavedModel::Geometric(g) = ModelFile::load(&geo).unwrap().model else { panic!() };
    let SavedModel::BetaLogisticLinear(b) = ModelFile::load(&beta).unwrap().model else { panic!() };
    let geo_nll = g.neg_log_likelihood(obs).unwrap();
    let params: Vec<_> = obs.iter().map(|o| b.predict_params(&o.features).unwrap()).collect();
    let beta_nll = sbg::neg_log_likelihood(obs, &params).unwrap();
    assert!(geo_nll >= beta_nll - 1e-6 * beta_nll.abs(), "geometric {geo_nll} vs beta {beta_nll}");
}

#[test]
fn predict_uniform_prior_survival() {
    let w = Work::new();
    let model = w.uniform_model();
    let data = w.write("x.csv", "x\n0.3\n-2\n");
    let o = run(&["predict", "--model", s(&model), "--data", s(&data), "--horizon", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "alpha,beta,p_event_by_h,s_1,s_2,s_3");
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(&v[..2], &[1.0, 1.0]);
        assert!((v[2] - 0.75).abs() < 1e-15);
        for (got, want) in v[3..].iter().zip([0.5, 1.0 / 3.0, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
    }
}

#[test]
fn predict_empty_input_gives_header_only() {
    let w = Work::new();
    let model = w.uniform_model();
    for (name, text) in [("zero.csv", ""), ("header.csv", "x\n")] {
        let data = w.write(name, text);
        let out = w.path("p.csv");
        let o = run(&["predict", "--model", s(&model), "--data", s(&data), "--horizon", "2", "--out", s(&out)]);
        assert!(o.status.success(), "{name}");
        assert_eq!(fs::read_to_string(&out).unwrap(), "alpha,beta,p_event_by_h,s_1,s_2\n");
    }
}

#[test]
fn predict_dimension_mismatch_exits_3() {
    let w = Work::new();
    let model = w.uniform_model();
    let data = w.write("x.csv", "x,y\n1,2\n");
    assert_eq!(run(&["predict", "--model", s(&model), "--data", s(&data), "--horizon", "2"]).status.code(), Some(3));
}

#[test]
fn predict_keeps_ids_and_row_order() {
    let w = Work::new();
    let model = w.uniform_model();
    let data = w.write("x.csv", "id,x\nb,1\na,2\nc,3\n");
    let o = run(&["predict", "--model", s(&model), "--data", s(&data), "--ids-column", "id", "--horizon", "1"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let ids: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["b", "a", "c"]);
}

#[test]
fn rank_ties_keep_input_order_and_ranks_ascend() {
    let w = Work::new();
    let model = w.path("m.json");
    let mut m = LinearBetaLogistic::zeros(1).with_feature_names(vec!["x".into()]);
    m.gamma_a = vec![0.8];
    ModelFile::new(SavedModel::BetaLogisticLinear(m), FeatureSchema::numeric(&["x"]))
        .unwrap()
        .save(&model)
        .unwrap();
    let data = w.write("x.csv", "name,x\nlow,-1\ntwin1,0.5\ntwin2,0.5\nhigh,2\n");
    for h in ["1", "4"] {
        let o = run(&["rank", "--model", s(&model), "--data", s(&data), "--ids-column", "name", "--horizon", h]);
        assert!(o.status.success());
        let text = String::from_utf8(o.stdout).unwrap();
        let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
        let ranks: Vec<usize> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
        assert_eq!(ranks, [1, 2, 3, 4]);
        let ids: Vec<&str> = rows.iter().map(|r| r[0]).collect();
        let t1 = ids.iter().position(|&i| i == "twin1").unwrap();
        assert_eq!(ids[t1 + 1], "twin2");
        assert_eq!(rows[t1][4], rows[t1 + 1][4]);
    }
}

#[test]
fn rank_rejects_point_models() {
    let w = Work::new();
    let data = w.write("d.csv", "t,censored,x\n1,0,1\n2,0,0\n3,1,1\n1,0,0\n");
    let model = w.path("g.json");
    assert!(run(&["train", "--model", "geometric", "--data", s(&data), "--out-model", s(&model)]).status.success());
    assert_eq!(run(&["rank", "--model", s(&model), "--data", s(&data), "--horizon", "2"]).status.code(), Some(3));
}

#[test]
fn eval_perfect_model_and_layout() {
    let w = Work::new();
    let mut text = String::from("t,censored,x\n");
    for i in 0..200 {
        if i % 2 == 0 {
            text.push_str("1,0,1\n");
        } else {
            text.push_str("5,1,0\n");
        }
    }
    let data = w.write("d.csv", &text);
    let (beta, logit) = (w.path("beta.json"), w.path("logit.json"));
    assert!(run(&["train", "--model", "betalogistic-linear", "--data", s(&data), "--out-model", s(&beta)]).status.success());
    assert!(run(&["train", "--model", "logistic", "--horizon", "1", "--data", s(&data), "--out-model", s(&logit)]).status.success());
    let o = run(&["eval", "--model", s(&beta), "--model", s(&logit), "--data", s(&data), "--horizons", "1,3"]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "horizon,model,auc,n_effective");
    assert_eq!(lines.len(), 5);
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[2].parse::<f64>().unwrap(), 1.0, "{line}");
        assert_eq!(cells[3], "200");
    }
}

#[test]
fn categorical_vocabulary_is_persisted() {
    let w = Work::new();
    let data = w.write(
        "d.csv",
        "t,censored,plan,x\n1,0,basic,0.1\n3,1,pro,0.4\n2,0,basic,0.9\n3,1,team,0.2\n1,0,pro,0.5\n2,0,team,0.3\n",
    );
    let model = w.path("m.json");
    assert!(run(&["train", "--model", "betalogistic-linear", "--data", s(&data), "--out-model", s(&model)]).status.success());
    let file = ModelFile::load(&model).unwrap();
    assert!(file.schema.n_features() >= 3);
    let new_rows = w.write("new.csv", "plan,x\npro,0.4\nbasic,0.1\n");
    let o = run(&["predict", "--model", s(&model), "--data", s(&new_rows), "--horizon", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);
}

#[test]
fn posterior_subcommand_writes_report() {
    let w = Work::new();
    let data = w.path("d.csv");
    assert!(run(&["simulate", "--generator", "sweep", "--n", "4000", "--horizon", "3", "--noise", "0.1", "--seed", "4", "--out", s(&data)]).status.success());
    let o = run(&["posterior", "--data", s(&data), "--horizons", "1,2", "--d-projected", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("horizon,beta_logistic_var,laplace_diag_var,laplace_full_var"));
    assert_eq!(out.lines().count(), 3);
}
