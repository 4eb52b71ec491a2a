use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
methods = ["spsafs", "sfs", "exhaustive", "full"]
repetitions = 3
root_seed = 5

[dataset.synthetic]
n = 120
p = 8
informative = [1, 4, 6]
noise_sd = 1.0
task = "classification"
seed = 9

[model]
kind = "gaussian_nb"

[spsafs]
iterations = 50
"#;

fn spsa_fs(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spsa-fs"));
    cmd.args(args).env_remove("SPSA_FS_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn table(dir: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(dir.join("table.csv")).unwrap();
    reader.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn run_writes_table_with_exhaustive_lowest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let res = spsa_fs(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", "2"], &[]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = table(&out);
    assert_eq!(rows.len(), 4);
    let mean = |r: &Vec<String>| r[3].parse::<f64>().unwrap();
    let exhaustive = rows.iter().find(|r| r[0] == "exhaustive").unwrap();
    assert!(rows.iter().all(|r| mean(exhaustive) <= mean(r)), "{rows:?}");

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["cells"].as_array().unwrap().len(), 12);
    for cell in summary["cells"].as_array().unwrap() {
        assert_eq!(cell["schema_version"], 1);
        assert_eq!(cell["status"], "ok");
    }
}

#[test]
fn single_method_single_repetition_gives_one_trace() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace(r#"methods = ["spsafs", "sfs", "exhaustive", "full"]"#, r#"methods = ["bspsa"]"#)
        .replace("repetitions = 3", "repetitions = 1")
        + "\n[bspsa]\niterations = 37\n";
    let cfg = write_config(dir.path(), "one.toml", &text);
    let out = dir.path().join("out");
    let res = spsa_fs(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(res.status.code(), Some(0));
    let traces: Vec<_> = fs::read_dir(out.join("traces")).unwrap().collect();
    assert_eq!(traces.len(), 1);
    let text = fs::read_to_string(out.join("traces/bspsa-r0.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,y_plus,y_minus,gain_used,running_best_loss,mask_plus_hex,mask_minus_hex"
    );
    assert_eq!(lines.count(), 37);
}

#[test]
fn missing_csv_exits_2_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
methods = ["full"]
[dataset.csv]
path = "nowhere/data.csv"
[dataset.csv.schema]
target = "class"
task = "classification"
[model]
kind = "gaussian_nb"
"#;
    let cfg = write_config(dir.path(), "csv.toml", text);
    let res = spsa_fs(&["run", "--config", &cfg], &[]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("nowhere/data.csv"));
}

#[test]
fn validate_config_reports_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), "ok.toml", SMALL);
    assert_eq!(spsa_fs(&["validate-config", "--config", &ok], &[]).status.code(), Some(0));

    let bad = write_config(dir.path(), "bad.toml", &SMALL.replace("iterations = 50", "iterations = 50\nwindow = 2"));
    let res = spsa_fs(&["validate-config", "--config", &bad], &[]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("spsafs.window"));

    let wide = write_config(dir.path(), "wide.toml", &SMALL.replace("p = 8", "p = 24"));
    let res = spsa_fs(&["validate-config", "--config", &wide], &[]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("methods[2]"));
}

#[test]
fn env_var_sets_default_out_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("repetitions = 3", "repetitions = 1");
    let cfg = write_config(dir.path(), "small.toml", &text);
    let env_out = dir.path().join("from-env");
    let res = spsa_fs(
        &["run", "--config", &cfg, "--seed", "77", "--print-effective-config"],
        &[("SPSA_FS_OUT", &env_out)],
    );
    assert_eq!(res.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("root_seed = 77"), "{stdout}");
    assert!(stdout.contains("from-env"));
    assert!(env_out.join("table.csv").exists());
}

#[test]
fn rank_and_regress_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let rank = r#"
methods = ["correlation", "spsafs", "full"]
repetitions = 2
[dataset.synthetic]
n = 100
p = 12
informative = [1, 2]
noise_sd = 0.5
task = "classification"
[model]
kind = "gaussian_nb"
[rank]
m_list = [1, 4, 12]
[spsafs]
iterations = 30
"#;
    let cfg = write_config(dir.path(), "rank.toml", rank);
    let out = dir.path().join("rank");
    let res = spsa_fs(&["rank", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(out.join("rank.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "method,m,model,mean_loss,sd");
    assert_eq!(text.lines().count(), 1 + 3 + 3 + 1);
    let at_p: Vec<&str> = text.lines().filter(|l| l.contains(",12,")).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(at_p.len(), 3);
    assert!(at_p.iter().all(|v| *v == at_p[0]));

    // noiseless linear target: once both informative features are in, 1-R2 is zero
    let regress = r#"
methods = ["correlation", "sfs", "spsafs", "full"]
repetitions = 2
[dataset.synthetic]
n = 80
p = 10
informative = [1, 2]
noise_sd = 0.0
task = "regression"
[model]
kind = "ols"
[spsafs]
iterations = 40
"#;
    let cfg = write_config(dir.path(), "regress.toml", regress);
    let out = dir.path().join("regress");
    let res = spsa_fs(&["regress", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let mut reader = csv::Reader::from_path(out.join("curve.csv")).unwrap();
    let rows: Vec<Vec<String>> = reader.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 10 + 10 + 10 + 1);
    let full: Vec<&Vec<String>> = rows.iter().filter(|r| r[1] == "100").collect();
    assert_eq!(full.len(), 4);
    assert!(full.iter().all(|r| r[3] == full[0][3]));
    for method in ["correlation", "sfs"] {
        let at20 = rows.iter().find(|r| r[0] == method && r[1] == "20").unwrap();
        assert!(at20[3].parse::<f64>().unwrap() < 1e-9, "{at20:?}");
    }

    let res = spsa_fs(&["regress", "--config", &write_config(dir.path(), "cls.toml", rank)], &[]);
    assert_eq!(res.status.code(), Some(2));
}
