use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cosma-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn plan_cube() {
    let v = json(&["plan", "--m", "16", "--n", "16", "--k", "16", "--p", "64", "--S", "16"]);
    assert_eq!(v["grid"]["pm"], 4);
    assert_eq!(v["grid"]["pn"], 4);
    assert_eq!(v["grid"]["pk"], 4);
    assert_eq!(v["predicted_q"], 48.0);
    assert_eq!(
        (v["a"].as_u64(), v["b"].as_u64(), v["s"].as_u64(), v["t"].as_u64()),
        (Some(4), Some(4), Some(1), Some(4))
    );
    assert_eq!(v["costs"].as_array().unwrap().len(), 4);
}

#[test]
fn plan_single_rank_moves_nothing() {
    let v = json(&["plan", "--m", "5", "--n", "6", "--k", "7", "--p", "1", "--S", "200"]);
    assert_eq!(v["inter_rank_words"], 0.0);
    assert_eq!(v["idle"], 0);
}

#[test]
fn plan_infeasible_exits_two() {
    let out = run(&["plan", "--m", "16", "--n", "16", "--k", "16", "--p", "4", "--S", "16"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn bad_machine_exits_two() {
    let out = run(&["plan", "--p", "4", "--S", "1000", "--delta", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn strategy_filter() {
    let v = json(&["plan", "--p", "64", "--S", "16", "--strategy", "2.5d"]);
    let costs = v["costs"].as_array().unwrap();
    assert_eq!(costs.len(), 1);
    assert_eq!(costs[0]["strategy"], "2.5D");
    assert_eq!(run(&["plan", "--strategy", "summa"]).status.code(), Some(2));
}

#[test]
fn simulate_cube_matches_prediction() {
    let v = json(&["simulate", "--p", "64", "--S", "16", "--seed", "3"]);
    assert_eq!(v["correct"], true);
    assert_eq!(v["stats"]["summary"]["max_words"], 48);
    assert_eq!(v["measured_over_predicted"], 1.0);
    assert_eq!(
        v["stats"]["summary"]["total_sent"],
        v["stats"]["summary"]["total_received"]
    );
}

#[test]
fn simulate_single_rank_and_ragged() {
    let v = json(&["simulate", "--m", "5", "--n", "4", "--k", "6", "--p", "1", "--S", "100"]);
    assert_eq!(v["stats"]["summary"]["total_sent"], 0);
    assert_eq!(v["measured_over_predicted"], 0.0);
    let v = json(&["simulate", "--m", "7", "--n", "5", "--k", "9", "--p", "6", "--S", "40"]);
    assert_eq!(v["correct"], true);
    assert_eq!(v["stats"]["ranks"].as_array().unwrap().len(), 6);
}

#[test]
fn simulate_is_reproducible_across_modes_and_threads() {
    let args = [
        "simulate", "--m", "13", "--n", "11", "--k", "9", "--p", "10", "--S", "60", "--seed", "5",
    ];
    let a = run(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_cosma-lab"))
        .args(args)
        .args(["--mode", "sequential"])
        .output()
        .unwrap();
    let c = Command::new(env!("CARGO_BIN_EXE_cosma-lab"))
        .args(args)
        .env("COSMA_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn simulate_csv_has_one_row_per_rank() {
    let out = run(&[
        "simulate", "--m", "8", "--n", "8", "--k", "8", "--p", "5", "--S", "64", "--format", "csv",
    ]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers[0], "rank");
    assert!(headers.contains(&"words_sent".to_string()));
    assert_eq!(rdr.records().count(), 5);
}

#[test]
fn compare_csv_columns_are_stable() {
    let out = run(&[
        "compare", "--m", "16", "--n", "16", "--k", "16", "--p", "16", "--S", "48", "--format", "csv",
    ]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["m", "n", "k", "p", "S", "strategy", "q", "l", "rounds", "q_over_cosma"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(&rows[0][5], "2D");
    assert_eq!(rows[0][6].parse::<f64>().unwrap(), 144.0);
}

#[test]
fn compare_sweep_trends_towards_root_three() {
    let n = (1u64 << 24).to_string();
    let v = json(&[
        "compare",
        "--m",
        &n,
        "--n",
        &n,
        "--k",
        &n,
        "--p",
        "4096",
        "--sweep",
        "7",
        "--strategy",
        "recursive",
    ]);
    let ratios: Vec<f64> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["q_over_cosma"].as_f64().unwrap())
        .collect();
    assert_eq!(ratios.len(), 7);
    let last = *ratios.last().unwrap();
    assert!((last - 3f64.sqrt()).abs() < (ratios[0] - 3f64.sqrt()).abs());
    assert!((last - 3f64.sqrt()).abs() < 0.1, "{ratios:?}");
}

#[test]
fn pebble_small_cases() {
    let v = json(&["pebble", "--m", "1", "--n", "1", "--k", "1", "--S", "3"]);
    assert_eq!(v["optimal"], 3);
    assert_eq!(v["greedy_total"], 3);
    let v = json(&["pebble", "--m", "1", "--n", "1", "--k", "2", "--S", "3"]);
    assert_eq!(v["optimal"], 5);
    let v = json(&["pebble", "--m", "2", "--n", "2", "--k", "2", "--S", "4"]);
    assert!(v["optimal"].as_u64().unwrap() <= v["greedy_total"].as_u64().unwrap());
}

#[test]
fn pebble_validates_a_move_file() {
    let dir = std::env::temp_dir().join(format!("cosma-lab-moves-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("good.txt");
    std::fs::write(&good, "# one product\nL A 1 1\nL B 1 1\nC C 1 1 1\nS C 1 1 1\n").unwrap();
    let v = json(&[
        "pebble",
        "--m",
        "1",
        "--n",
        "1",
        "--k",
        "1",
        "--S",
        "3",
        "--moves",
        good.to_str().unwrap(),
    ]);
    assert_eq!(v["moves"]["loads"], 2);
    assert_eq!(v["moves"]["stores"], 1);
    let bad = dir.join("bad.txt");
    std::fs::write(&bad, "C C 1 1 1\n").unwrap();
    let out = run(&[
        "pebble",
        "--m",
        "1",
        "--n",
        "1",
        "--k",
        "1",
        "--S",
        "3",
        "--moves",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn pebble_limits() {
    let out = run(&["pebble", "--m", "1", "--n", "1", "--k", "1", "--S", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["pebble", "--m", "4", "--n", "4", "--k", "4", "--S", "8"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seq_report_and_schedule_dump() {
    let path = std::env::temp_dir().join(format!("cosma-lab-sched-{}.csv", std::process::id()));
    let v = json(&[
        "seq",
        "--m",
        "4",
        "--n",
        "6",
        "--k",
        "8",
        "--S",
        "10",
        "--schedule-csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(v["total"], 184);
    assert_eq!(v["tile"]["a"], 2);
    assert_eq!(v["tile"]["b"], 3);
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["tile", "i_start", "i_end", "j_start", "j_end"]
    );
    assert_eq!(rdr.records().count(), 4);
    std::fs::remove_file(path).unwrap();
}

#[test]
fn text_output_is_readable() {
    let out = run(&["plan", "--p", "64", "--S", "16", "--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("4x4x4"));
    assert!(text.contains("COSMA"));
}
