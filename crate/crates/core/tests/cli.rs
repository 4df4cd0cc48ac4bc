use std::fs;
use std::path::Path;

use resonance::cli::run;
use serde_json::Value;

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (i32, String) {
    let out = dir.join(name);
    let mut argv = vec!["resonance", "--output", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    let code = run(argv);
    (code, fs::read_to_string(&out).unwrap_or_default())
}

fn records(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn ratio_at_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "r.jsonl", &["ratio", "--N", "2"]);
    assert_eq!(code, 0);
    let r = &records(&text)[0];
    assert!((r["lambda_max"].as_f64().unwrap() - 1.353_553_4).abs() < 1e-7);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["config"]["args"]["N"], 2);
    assert_eq!(r["provenance"]["constant_c_zero"], true);
}

#[test]
fn validation_and_usage_errors() {
    assert_eq!(run(["resonance", "ratio", "--N", "0"]), 2);
    assert_eq!(run(["resonance", "ratio"]), 2);
    assert_eq!(run(["resonance", "nonsense"]), 2);
    assert_eq!(run(["resonance", "petersson-check", "--k", "13", "--m", "1", "--n", "1"]), 2);
    assert_eq!(run(["resonance", "hunt-chid", "--N", "100", "--X", "1e12"]), 2);
    assert_eq!(run(["resonance", "ratio", "--N", "100000"]), 3);
}

#[test]
fn petersson_record() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "p.jsonl", &["petersson-check", "--k", "128", "--m", "1", "--n", "1"]);
    assert_eq!(code, 0);
    let r = &records(&text)[0];
    assert!((r["value"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
    assert_eq!(r["delta"], 1);
}

#[test]
fn csv_output_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(
        dir.path(),
        "w.csv",
        &["--format", "csv", "weights", "--kind", "w", "--from", "0.5", "--to", "1.5", "--points", "3"],
    );
    assert_eq!(code, 0);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("schema_version,record,kind,value,x,config,provenance"));
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# defaults\n[global]\nseed = 9\n[charsum-check]\nn = 3\nz = 1000\n").unwrap();
    let (code, text) = run_to(dir.path(), "c.jsonl", &["--config", cfg.to_str().unwrap(), "charsum-check", "--z", "2000"]);
    assert_eq!(code, 0);
    let r = &records(&text)[0];
    assert_eq!(r["n"], 3);
    assert_eq!(r["z"], 2000);
    assert_eq!(r["config"]["seed"], 9);

    fs::write(&cfg, "[ratio]\nN 5\n").unwrap();
    assert_eq!(run(["resonance", "--config", cfg.to_str().unwrap(), "ratio"]), 2);
}

#[test]
fn missing_config_is_io_error() {
    assert_eq!(run(["resonance", "--config", "/nonexistent/x.conf", "ratio", "--N", "3"]), 1);
}

#[test]
fn export_table_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "t.txt", &["export-table", "--N", "200", "--scheme", "dirichlet-signed", "--window", "3,30"]);
    assert_eq!(code, 0);
    let t = resonance::resonator::read_table(text.as_bytes()).unwrap();
    assert_eq!(t.n_max(), 200);
    assert!(t.is_odd_supported());
    assert!(t.get(3).unwrap() < 0.0);
}

#[test]
fn caches_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let (code, _) = run_to(
        dir.path(),
        "w.jsonl",
        &["--cache-dir", cache.to_str().unwrap(), "weights", "--kind", "w", "--points", "2"],
    );
    assert_eq!(code, 0);
    let text = fs::read_to_string(cache.join("wweight.cache")).unwrap();
    assert!(text.starts_with("# wweight.cache v1"));
    let second: Vec<&str> = text.lines().nth(1).unwrap().split(' ').collect();
    assert_eq!(second, ["0", "1"]);
}

#[test]
fn reports_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = ["hunt-chid", "--N", "1000", "--window", "3,20", "--X", "20000", "--budget", "30", "--baseline", "50", "--seed", "4"];
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let mut args = vec!["--threads", threads];
        args.extend_from_slice(&cmd);
        let (code, text) = run_to(dir.path(), &format!("h{threads}.jsonl"), &args);
        assert_eq!(code, 0);
        outputs.push(text);
    }
    assert_eq!(outputs[0], outputs[1]);
}
