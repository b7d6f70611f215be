use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treebolic")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn pebble_csv_has_one_row_per_event() {
    let o = run(&["pebble", "-p", "2", "-q", "2", "-P", "3", "-Q", "3", "-n", "1000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,tag,blue_index,red_index,height_float,X_n");
    assert_eq!(lines.len(), 1002);
    assert!(lines[1].starts_with("0,Both,0,0,0.000000000000,1"));
    assert!(text.ends_with('\n'));
}

#[test]
fn pebble_zero_events_is_the_initial_row() {
    let o = run(&["pebble", "-p", "2", "-q", "2", "-P", "3", "-Q", "3", "-n", "0", "--initial", "4"]);
    assert_eq!(stdout(&o).lines().collect::<Vec<_>>(), ["n,tag,blue_index,red_index,height_float,X_n", "0,Both,0,0,0.000000000000,4"]);
}

#[test]
fn pebble_periodic_example_stays_small() {
    let o = run(&["pebble", "-p", "6;3", "-q", "2;4", "-P", "3", "-Q", "4", "-n", "100000", "--format", "json"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["max"], "6");
    assert_eq!(v["rows"].as_array().unwrap().len(), 100_001);
}

#[test]
fn pebble_exact_column() {
    let o = run(&["pebble", "-p", "2", "-q", "2", "-P", "3", "-Q", "3", "-n", "2", "--exact"]);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert!(rows[0].ends_with(",height_exact"));
    assert!(rows[2].ends_with(",2^1") && rows[3].ends_with(",3^1"));
}

#[test]
fn pebble_rejects_bad_specs() {
    assert_eq!(run(&["pebble", "-p", "2", "-q", "1", "-P", "3", "-Q", "3"]).status.code(), Some(4));
    assert_eq!(run(&["pebble", "-p", "1;", "-q", "2", "-P", "3", "-Q", "3"]).status.code(), Some(4));
    assert_eq!(run(&["pebble", "-p", "2"]).status.code(), Some(4));
}

#[test]
fn decide_verdicts() {
    let bs = json(&run(&["decide", "--bs", "2", "3"]));
    assert_eq!(bs["verdict"], "No");
    let bs = json(&run(&["decide", "--bs", "8", "4"]));
    assert_eq!(bs["verdict"], "Yes");
    assert_eq!(bs["certificate"]["r"], 2);

    let c2 = json(&run(&["decide", "2", "2", "4", "4"]));
    assert_eq!(c2["verdict"], "EmbeddableC2");
    assert_eq!(c2["quasiisometry"], "QI");
    assert_eq!((c2["certificate"]["r"].as_u64(), c2["certificate"]["s"].as_u64(), c2["certificate"]["t"].as_u64()), (Some(2), Some(1), Some(2)));

    assert_eq!(json(&run(&["decide", "2", "4", "3", "3"]))["verdict"], "EmbeddableC1");
    assert_eq!(json(&run(&["decide", "2", "2", "3", "3"]))["verdict"], "NotEmbeddable");
    assert_eq!(json(&run(&["decide", "2", "3/2", "4", "9/4"]))["verdict"], "EmbeddableC2");
}

#[test]
fn bad_input_exits_four() {
    assert_eq!(run(&["decide", "1", "2", "3", "3"]).status.code(), Some(4));
    assert_eq!(run(&["decide", "2", "2", "3"]).status.code(), Some(4));
    assert_eq!(run(&["decide", "--bs", "2", "3", "4"]).status.code(), Some(4));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(4));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn build_verify_common_base_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["build-verify", "2", "2", "4", "4", "--depth", "8", "--samples", "300", "-o", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["distortion"]["additive_constant"], "1*log(4)");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert_eq!(v["treebolic_certificate"]["seed"], 1);
    for f in ["tree_map.txt", "word_map.txt", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }

    // the saved tree map feeds the boundary command
    let map = dir.path().join("tree_map.txt");
    let b = json(&run(&["boundary", "--map", map.to_str().unwrap(), "--len", "4"]));
    assert_eq!(b["round_trip_exact"], true);
    let table = run(&["boundary", "--map", map.to_str().unwrap(), "--len", "4", "--table"]);
    assert!(stdout(&table).starts_with("source p=2 q=2 len=4"));
}

#[test]
fn build_verify_identity_is_trivial() {
    let v = json(&run(&["build-verify", "2", "2", "2", "2", "--depth", "6", "--samples", "200"]));
    assert_eq!(v["distortion"]["additive_constant"], "0");
    assert_eq!(v["distortion"]["height_deviation"], "0");
    assert_eq!(v["treebolic_certificate"]["a"], 0.0);
    assert_eq!(v["treebolic_certificate"]["b"], 0.0);
    assert_eq!(v["passed"], true);
}

#[test]
fn build_verify_refuses_non_embeddable() {
    let o = run(&["build-verify", "2", "2", "3", "3"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NotEmbeddable"));
    assert!(o.stdout.is_empty());
}

#[test]
fn build_verify_rejects_oversized_knobs() {
    assert_eq!(run(&["build-verify", "2", "2", "4", "4", "--depth", "40"]).status.code(), Some(4));
    assert_eq!(run(&["build-verify", "2", "2", "4", "4", "--depth", "4", "--word-len", "5"]).status.code(), Some(4));
}

#[test]
fn outputs_are_reproducible() {
    let args = ["build-verify", "2", "4", "2", "2", "--depth", "6", "--samples", "200", "--seed", "9"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn treebolic_check_records_seed() {
    let o = run(&["treebolic-check", "2", "4", "2", "2", "--depth", "3", "--samples", "500", "--seed", "42"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["certificate"]["seed"], 42);
    assert_eq!(v["certificate"]["pairs_checked"], 500);
    assert!(v["certificate"]["witnesses"].as_array().unwrap().is_empty());
    assert!(v["certificate"]["max_D_deviation"].as_f64().unwrap() <= 2.0 * v["certificate"]["b"].as_f64().unwrap() + 1e-9);
}
