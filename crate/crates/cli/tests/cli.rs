use std::path::Path;
use std::process::{Command, Output};

use gicband_core::SimSetting;

fn gicband(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gicband"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_pair(path: &Path, setting: &SimSetting) {
    let (a, b) = setting.draw(0).unwrap();
    let mut text = String::from("t1,t2\n");
    for i in 0..a.n().max(b.n()) {
        let x = a.values().get(i).map_or(String::new(), |v| format!("{v:.17e}"));
        let y = b.values().get(i).map_or(String::new(), |v| format!("{v:.17e}"));
        text.push_str(&format!("{x},{y}\n"));
    }
    std::fs::write(path, text).unwrap();
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn direct_gic_band_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_pair(&data, &SimSetting::setting1(400, 1, 3));
    let out = dir.path().join("band.json");
    let o = gicband(&[
        "band",
        "--input",
        data.to_str().unwrap(),
        "--cols",
        "t1,t2",
        "--method",
        "direct",
        "--scale",
        "gic",
        "--m",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["method"], "direct");
    assert_eq!(v["scale"], "gic");
    assert_eq!(v["m"].as_f64(), Some(1.0));
    let n = v["grid"].as_array().unwrap().len();
    for key in ["lower", "center", "upper"] {
        assert_eq!(v[key].as_array().unwrap().len(), n);
    }
    for i in 0..n {
        let (l, c, u) = (
            v["lower"][i].as_f64().unwrap(),
            v["center"][i].as_f64().unwrap(),
            v["upper"][i].as_f64().unwrap(),
        );
        assert!(-1.0 < l && l <= c && c <= u);
    }
}

#[test]
fn all_methods_write_one_file_each_and_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_pair(&data, &SimSetting::setting1(300, 1, 4));
    let run = |stem: &str| {
        let out = dir.path().join(format!("{stem}.csv"));
        let o = gicband(&[
            "band",
            "--input",
            data.to_str().unwrap(),
            "--method",
            "all",
            "--scale",
            "ratio",
            "--format",
            "csv",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run("a");
    run("b");
    for m in ["plugin", "direct", "pointwise_lognormal", "worldbank_bootstrap"] {
        let a = std::fs::read(dir.path().join(format!("a.{m}.csv"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("b.{m}.csv"))).unwrap();
        assert_eq!(a, b, "{m}");
        assert!(a.starts_with(b"p,lower,center,upper\n"));
    }
}

#[test]
fn qte_and_log_scales_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_pair(&data, &SimSetting::setting2(300, 1, 5));
    for scale in ["qte", "log"] {
        let o = gicband(&["band", "--input", data.to_str().unwrap(), "--method", "plugin", "--scale", scale]);
        assert_eq!(o.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["method"], "plugin");
        assert!(v["details"]["critical_value"].as_f64().unwrap() > 1.3);
    }
}

#[test]
fn two_input_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "x\n".to_string() + &(1..=200).map(|i| format!("{}\n", i)).collect::<String>()).unwrap();
    std::fs::write(&b, "y\n".to_string() + &(1..=150).map(|i| format!("{}\n", 2 * i)).collect::<String>()).unwrap();
    let o = gicband(&["ate", "--input", a.to_str().unwrap(), "--input", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((v["n1"].as_u64(), v["n2"].as_u64()), (Some(200), Some(150)));
    // means 100.5 and 151
    assert!((v["ate"].as_f64().unwrap() + 50.5).abs() < 1.0);
}

#[test]
fn exit_codes() {
    let o = gicband(&["band", "--input", "/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));

    let o = gicband(&["band", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("zero.csv");
    std::fs::write(&data, "a,b\n1,2\n0,3\n4,5\n").unwrap();
    let o = gicband(&["band", "--input", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));

    let data = dir.path().join("ok.csv");
    write_pair(&data, &SimSetting::setting1(100, 1, 1));
    for bad in [["--m", "1.5"], ["--level", "1.0"], ["--grid", "5"], ["--scale-policy", "fixed:0"]] {
        let mut args = vec!["band", "--input", data.to_str().unwrap()];
        args.extend(bad);
        assert_eq!(gicband(&args).status.code(), Some(2), "{bad:?}");
    }

    assert_eq!(gicband(&["--help"]).status.code(), Some(0));
}

#[test]
fn estimate_cs_needs_enough_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("tiny.csv");
    std::fs::write(&data, "a,b\n1,2\n2,3\n3,5\n4,4\n5,9\n6,7\n7,8\n").unwrap();
    let o = gicband(&[
        "band",
        "--input",
        data.to_str().unwrap(),
        "--method",
        "plugin",
        "--scale-policy",
        "estimate_cs",
        "--grid",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_prints_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("setting1.toml");
    std::fs::write(
        &cfg,
        "setting = \"setting1\"\nn = [100, 200]\nreps = 8\nseed = 3\nmethods = [\"direct\", \"worldbank\"]\n",
    )
    .unwrap();
    let out = dir.path().join("report.json");
    let o = gicband(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.lines().next().unwrap().contains("direct"));
    let v = json(&out);
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[1]["n"], 200);
    assert_eq!(v[0]["methods"][0]["method"], "direct");

    std::fs::write(&cfg, "n = 100\nunknown_key = 1\n").unwrap();
    assert_eq!(gicband(&["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn qq_export_formats() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_pair(&data, &SimSetting::setting1(500, 1, 6));
    let out = dir.path().join("qq.csv");
    let o = gicband(&["qq", "--input", data.to_str().unwrap(), "--format", "csv", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("series,p,x,y\n"));
    assert_eq!(text.lines().count(), 1 + 500 * 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("location_scale_plausible"));
}
