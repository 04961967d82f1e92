use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lf_core::{load_lf, save_lf, LfDims, LightField4D};
use mdfn::{Mdfn, MdfnConfig};
use mdfn_train::synthetic::synthetic_lf;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lfmdfn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn smoke_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.cfg")
}

fn write_dataset(dir: &Path, count: u64, spatial: usize) {
    fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        let lf = synthetic_lf(LfDims::new(7, 7, spatial, spatial, 1), 100 + i).unwrap();
        save_lf(&lf, &dir.join(format!("lf{i}.lf4d"))).unwrap();
    }
}

fn tiny_model(dir: &Path, tweak: impl FnOnce(&mut Mdfn)) -> PathBuf {
    let cfg = MdfnConfig { n: 2, c: 8, dfb_mid_channels: 8, rb_mid_channels: 8, ..MdfnConfig::default() };
    let mut m = Mdfn::new(cfg).unwrap();
    tweak(&mut m);
    let path = dir.join("model.mdfn");
    m.save(&path).unwrap();
    path
}

#[test]
fn train_rejects_missing_dataset_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere");
    let out = run(&["train", "--config", s(&smoke_config()), "--dataset", s(&missing), "--out", s(&dir.path().join("run"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(s(&missing)));
}

#[test]
fn train_validates_config_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "r=3\n").unwrap();
    let out = run(&["train", "--config", s(&cfg), "--out", s(&dir.path().join("run"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("r=3"));
    assert!(!dir.path().join("run").exists());
}

#[test]
fn smoke_training_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_dataset(&data, 2, 20);
    let run_dir = dir.path().join("run");
    let out = run(&[
        "train",
        "--config",
        s(&smoke_config()),
        "--dataset",
        s(&data),
        "--out",
        s(&run_dir),
        "--deterministic",
        "--quiet",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = fs::read_to_string(run_dir.join("loss.csv")).unwrap();
    assert_eq!(log.lines().count(), 11);
    for name in ["ckpt_00000005.mdfn", "ckpt_00000010.mdfn", "final.mdfn"] {
        assert!(run_dir.join(name).exists(), "{name}");
    }

    // the trained checkpoint evaluates and super-resolves
    let report = dir.path().join("report.json");
    let out = run(&["eval", "--checkpoint", s(&run_dir.join("final.mdfn")), "--dataset", s(&data), "--out", s(&report), "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["method"], "model");
    assert!(v["parameters"].as_u64().unwrap() > 0);

    let out = run(&["eval", "--checkpoint", s(&run_dir.join("final.mdfn")), "--dataset", s(&data), "--scale", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_eval_reports_inf_and_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_dataset(&data, 3, 16);
    let csv = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    let out = run(&["eval", "--oracle", "--dataset", s(&data), "--out", s(&csv), "--format", "csv"]);
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("inf/1.000") && table.contains("excluded"), "{table}");
    run(&["eval", "--oracle", "--dataset", s(&data), "--out", s(&json), "--format", "json"]);

    let csv_text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = csv_text.lines().collect();
    assert_eq!(lines[0], "name,psnr,ssim");
    assert_eq!(lines.len(), 5);
    let v: Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let rows = v["rows"].as_array().unwrap();
    for (line, row) in lines[1..4].iter().zip(rows) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0], row["name"]);
        assert_eq!(f[1], "inf");
        assert_eq!(row["psnr"], "inf");
        assert_eq!(f[2].parse::<f64>().unwrap(), row["ssim"].as_f64().unwrap());
        assert_eq!(f[2], "1");
    }
    assert_eq!(v["inf_excluded"], 3);
}

#[test]
fn bicubic_eval_means_recompute_from_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_dataset(&data, 3, 16);
    let csv = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    assert!(run(&["eval", "--bicubic", "--dataset", s(&data), "--out", s(&csv)]).status.success());
    assert!(run(&["eval", "--bicubic", "--dataset", s(&data), "--out", s(&json), "--format", "json"]).status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|x| x.parse().unwrap()).collect())
        .collect();
    let (body, mean) = rows.split_at(3);
    for k in 0..2 {
        let m = body.iter().map(|r| r[k]).sum::<f64>() / 3.0;
        assert!((m - mean[0][k]).abs() < 1e-9);
    }
    let v: Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    for (row, want) in v["rows"].as_array().unwrap().iter().zip(body) {
        assert_eq!(row["psnr"].as_f64().unwrap(), want[0]);
        assert_eq!(row["ssim"].as_f64().unwrap(), want[1]);
    }
    assert_eq!(v["mean"]["psnr"].as_f64().unwrap(), mean[0][0]);
}

#[test]
fn eval_requires_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&dir.path().join("d"), 1, 16);
    assert_eq!(run(&["eval", "--dataset", s(&dir.path().join("d"))]).status.code(), Some(2));
}

#[test]
fn superresolve_shapes_determinism_and_unwritable_output() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = tiny_model(dir.path(), |_| {});
    let input = dir.path().join("in.lf4d");
    save_lf(&synthetic_lf(LfDims::new(7, 7, 24, 24, 1), 5).unwrap(), &input).unwrap();
    let (a, b) = (dir.path().join("a.lf4d"), dir.path().join("b.lf4d"));
    for out in [&a, &b] {
        let o = run(&["sr", "--checkpoint", s(&ckpt), "--input", s(&input), "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(load_lf(&a).unwrap().dims(), LfDims::new(7, 7, 48, 48, 1));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    // a regular file where the output directory should be
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, b"").unwrap();
    let o = run(&["sr", "--checkpoint", s(&ckpt), "--input", s(&input), "--out", s(&blocker.join("x.lf4d"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn superresolve_rgb_keeps_colour() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = tiny_model(dir.path(), |_| {});
    let input = dir.path().join("in.lf4d");
    save_lf(&synthetic_lf(LfDims::new(5, 5, 10, 10, 3), 6).unwrap(), &input).unwrap();
    let out = dir.path().join("views");
    assert!(run(&["sr", "--checkpoint", s(&ckpt), "--input", s(&input), "--out", s(&out)]).status.success());
    let sr = load_lf(&out).unwrap();
    assert_eq!(sr.dims(), LfDims::new(5, 5, 20, 20, 3));
}

fn filter_dump(dir: &Path, ckpt: &Path) -> Value {
    let input = dir.join("in.lf4d");
    save_lf(&synthetic_lf(LfDims::new(7, 7, 12, 12, 1), 7).unwrap(), &input).unwrap();
    let png = dir.join("filters.png");
    let o = run(&["filters", "--checkpoint", s(ckpt), "--input", s(&input), "--view", "3,3", "--pixel", "5,6", "--out", s(&png)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let img = image::open(&png).unwrap();
    assert!(img.width() > 0 && img.width() == img.height());
    serde_json::from_str(&fs::read_to_string(dir.join("filters.json")).unwrap()).unwrap()
}

#[test]
fn filter_inspection_dumps_normalized_tiles() {
    let dir = tempfile::tempdir().unwrap();
    let v = filter_dump(dir.path(), &tiny_model(dir.path(), |_| {}));
    let tiles = v["filters"].as_array().unwrap();
    assert_eq!(tiles.len(), 4);
    for t in tiles {
        let taps = t["taps"].as_array().unwrap();
        assert_eq!(taps.len(), 5);
        let sum: f64 = taps.iter().flat_map(|r| r.as_array().unwrap()).map(|x| x.as_f64().unwrap()).sum();
        assert_eq!(taps[0].as_array().unwrap().len(), 5);
        assert!((sum - 1.0).abs() < 1e-5);
    }
}

#[test]
fn zeroed_filter_head_gives_uniform_tiles() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = tiny_model(dir.path(), |m| {
        m.params.get_mut("dfb.conv2.weight").unwrap().data_mut().fill(0.0);
        m.params.get_mut("dfb.conv2.bias").unwrap().data_mut().fill(0.0);
    });
    let v = filter_dump(dir.path(), &ckpt);
    for t in v["filters"].as_array().unwrap() {
        for x in t["taps"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()) {
            assert!((x.as_f64().unwrap() - 0.04).abs() < 1e-7);
        }
    }
}

#[test]
fn filter_inspection_rejects_bad_indices() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = tiny_model(dir.path(), |_| {});
    let input = dir.path().join("in.lf4d");
    save_lf(&synthetic_lf(LfDims::new(7, 7, 8, 8, 1), 7).unwrap(), &input).unwrap();
    let png = dir.path().join("f.png");
    for (view, pixel) in [("7,0", "0,0"), ("0,0", "0,8")] {
        let o = run(&["filters", "--checkpoint", s(&ckpt), "--input", s(&input), "--view", view, "--pixel", pixel, "--out", s(&png)]);
        assert_eq!(o.status.code(), Some(2));
    }
}

#[test]
fn epi_export() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.lf4d");
    save_lf(&synthetic_lf(LfDims::new(5, 6, 9, 11, 1), 8).unwrap(), &input).unwrap();
    let png = dir.path().join("epi.png");
    assert!(run(&["epi", "--input", s(&input), "--kind", "h", "--fixed", "2,4", "--out", s(&png)]).status.success());
    let img = image::open(&png).unwrap();
    assert_eq!((img.height(), img.width()), (6, 11));
    assert!(run(&["epi", "--input", s(&input), "--kind", "v", "--fixed", "1,3", "--out", s(&png), "--scale", "3"]).status.success());
    let img = image::open(&png).unwrap();
    assert_eq!((img.height(), img.width()), (15, 27));

    let flat = dir.path().join("flat.lf4d");
    save_lf(&LightField4D::filled(LfDims::new(5, 5, 8, 8, 1), 0.5).unwrap(), &flat).unwrap();
    assert!(run(&["epi", "--input", s(&flat), "--kind", "h", "--fixed", "0,0", "--out", s(&png)]).status.success());
    let img = image::open(&png).unwrap().to_luma8();
    assert!(img.pixels().all(|p| p.0[0] == 128));

    let o = run(&["epi", "--input", s(&input), "--kind", "h", "--fixed", "5,0", "--out", s(&png)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn params_reports_default_total() {
    let o = run(&["params"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().last().unwrap().contains("430317"), "{text}");
}

#[test]
fn synth_writes_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("synth");
    let o = run(&["synth", "--out", s(&out), "--count", "2", "--spatial", "16", "--channels", "3"]);
    assert!(o.status.success());
    let lf = load_lf(&out.join("synth_001.lf4d")).unwrap();
    assert_eq!(lf.dims(), LfDims::new(7, 7, 16, 16, 3));
}
