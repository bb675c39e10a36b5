use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use taco_core::classifier::{save_model, CnnModel, CnnShape};
use taco_core::features::{write_features, FiltrationBank, LabeledDataset, LabeledRow};

fn taco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_taco"))
        .args(args)
        .env("TACO_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Points on a sphere (Fibonacci lattice) of radius `r` centered at `c`.
fn sphere(n: usize, r: f64, c: [f64; 3]) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            [c[0] + r * rho * t.cos(), c[1] + r * rho * t.sin(), c[2] + r * z]
        })
        .collect()
}

fn write_cloud(path: &Path, pts: &[[f64; 3]]) {
    let text: String = pts.iter().map(|q| format!("{} {} {}\n", q[0], q[1], q[2])).collect();
    fs::write(path, text).unwrap();
}

#[test]
fn usage_errors_exit_one() {
    let o = taco(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(taco(&["eval", "--model"]).status.code(), Some(1));
    assert_eq!(taco(&["--help"]).status.code(), Some(0));
    let o = taco(&["model-info", "--model", "/nonexistent/model.tmdl"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_check_reports_matches() {
    let o = taco(&["oracle-check", "--trials", "200", "--max-dim", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("200/200 matches"), "{}", stdout(&o));
}

#[test]
fn eval_on_three_row_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let bank = FiltrationBank::custom("ONE", vec!["height:0,0,1".parse().unwrap()]).unwrap();
    // a linear model that votes "b" exactly when the first feature is positive
    let shape = CnnShape {
        input_len: 36,
        stages: vec![],
        n_classes: 2,
    };
    let mut model = CnnModel::init(shape, vec!["a".into(), "b".into()], 0).unwrap();
    let w = model.fc_weights_mut();
    w.fill(0.0);
    w[0] = -1.0;
    w[36] = 1.0;
    for b in &mut model.params[2 * 36..] {
        *b = 0.0;
    }
    model.bank_hash = bank.hash();
    model.preset = "ONE".into();
    let model_path = dir.path().join("m.tmdl");
    save_model(&model_path, &model).unwrap();

    let row = |label: &str, x: f64| {
        let mut values = vec![0.0; 36];
        values[0] = x;
        LabeledRow {
            label: label.into(),
            values,
        }
    };
    let ds = LabeledDataset::new(&bank, vec![row("a", -1.0), row("b", 1.0), row("b", -1.0)]).unwrap();
    let feat = dir.path().join("f.feat");
    write_features(&feat, &ds).unwrap();

    let csv = dir.path().join("per_class.csv");
    let o = taco(&["eval", "--model", p(&model_path), "--features", p(&feat), "--per-class", p(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    // 2 of 3 correct; recalls 1 and 1/2
    assert!(text.contains("OA: 66.67%"), "{text}");
    assert!(text.contains("mAcc: 75.00%"), "{text}");
    let per_class = fs::read_to_string(&csv).unwrap();
    assert!(per_class.contains("a,0.500000,1.000000,1"), "{per_class}");
    assert!(per_class.contains("b,1.000000,0.500000,2"), "{per_class}");

    let o = taco(&["predict", "--model", p(&model_path), "--input", p(&feat)]);
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines[0], "row,label,predicted,probability");
    assert!(lines[3].starts_with("2,b,a,"), "{lines:?}");
}

#[test]
fn corrupt_and_voxelize() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.xyz");
    write_cloud(&input, &sphere(100, 0.5, [0.0; 3]));
    let out = dir.path().join("low.xyz");
    let o = taco(&["corrupt", "--kind", "downsample", "--severity", "low", "--seed", "3", p(&input), p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# corruption kind=downsample severity=low seed=3"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 90);
    assert_eq!(
        taco(&["corrupt", "--kind", "melt", "--severity", "low", p(&input), p(&out)]).status.code(),
        Some(1)
    );

    let vol = dir.path().join("s.tbv");
    let o = taco(&["voxelize", p(&input), p(&vol), "--voxel-size", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read(&vol).unwrap().starts_with(b"TBV1"));
    assert!(stdout(&o).contains("dims 4x4x4"), "{}", stdout(&o));

    let gray = dir.path().join("s.tgv");
    let o = taco(&["diagram", p(&vol), "--filtration", "radial:c14", "--gray-out", p(&gray)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read(&gray).unwrap().starts_with(b"TGV1"));
    let essential: Vec<String> = stdout(&o).lines().filter(|l| l.ends_with("true")).map(str::to_string).collect();
    assert_eq!(essential.len(), 1);
    assert!(essential[0].starts_with("0 "));
}

#[test]
fn featurize_train_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = String::from("path,label\n");
    for i in 0..4 {
        let name = format!("one_{i}.xyz");
        write_cloud(&dir.path().join(&name), &sphere(200 + 10 * i, 0.5, [0.0; 3]));
        manifest.push_str(&format!("{name},one\n"));
        let name = format!("two_{i}.xyz");
        let mut pts = sphere(100 + 5 * i, 0.3, [-0.6, 0.0, 0.0]);
        pts.extend(sphere(100 + 5 * i, 0.3, [0.6, 0.0, 0.0]));
        write_cloud(&dir.path().join(&name), &pts);
        manifest.push_str(&format!("{name},two\n"));
    }
    fs::write(dir.path().join("manifest.csv"), manifest).unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"voxel_size": 0.2, "bank": "MN40", "seed": 1,
            "training": {"max_epochs": 60, "batch_size": 8, "learning_rate": 0.003, "channels": [4, 3, 2], "seed": 1}}"#,
    )
    .unwrap();
    let feat = dir.path().join("train.feat");
    let o = taco(&[
        "featurize",
        "--config",
        p(&cfg),
        "--manifest",
        p(&dir.path().join("manifest.csv")),
        "--out",
        p(&feat),
        "--workers",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&feat).unwrap();
    let header: Vec<&str> = text.lines().take(4).collect();
    assert!(header[0].starts_with("#tacofeat v1"));
    assert!(header[1].starts_with("#bank MN40 "));
    assert_eq!(header[2], "#dim 1728");
    assert!(header[3].starts_with("#config {") && header[3].contains("\"voxel_size\":0.2"));

    let model = dir.path().join("m.tmdl");
    let o = taco(&["train", "--features", p(&feat), "--out", p(&model)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("trained on 8 rows, 2 classes"));

    let o = taco(&["eval", "--model", p(&model), "--features", p(&feat)]);
    assert!(stdout(&o).contains("OA: 100.00%"), "{}", stdout(&o));

    let o = taco(&["predict", "--model", p(&model), "--input", p(&dir.path().join("two_1.xyz"))]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("two "), "{}", stdout(&o));

    let o = taco(&["model-info", "--model", p(&model)]);
    let info = stdout(&o);
    assert!(info.contains("classes (2): one, two"));
    assert!(info.contains("conv1.weight: [4, 1, 3]"));
    assert!(info.contains("fc.weight: [2, 3456]"));
    assert!(info.contains("config: {"));

    // a model from another bank refuses these features
    let other = dir.path().join("other.feat");
    fs::write(&other, text.replacen("#bank MN40 ", "#bank MN40 ffff", 1)).unwrap();
    assert_eq!(
        taco(&["eval", "--model", p(&model), "--features", p(&other)]).status.code(),
        Some(1)
    );
}
