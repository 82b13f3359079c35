use std::path::Path;
use std::process::{Command, Output};

use paraocp::csv_io::{read_file, read_table, write_table};
use paraocp::{ConvergenceRow, HistoryRow};

fn paraocp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paraocp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn converge_writes_a_table_that_reads_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv.csv");
    let run = paraocp(&[
        "converge",
        "--example",
        "5.1",
        "--levels",
        "2,4",
        "--out",
        path_str(&out),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );

    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("level,h,tau,dof,err_y_final,err_u_spacetime,order_y,order_u\n"));
    let rows: Vec<ConvergenceRow> = read_file(&out).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].order_y, None);
    assert!(rows[1].order_y.is_some());
    assert!(rows[1].err_y_final < rows[0].err_y_final);

    let mut again = Vec::new();
    write_table(&mut again, &rows).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), text);
}

#[test]
fn one_level_leaves_orders_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one.csv");
    let run = paraocp(&[
        "converge",
        "--example",
        "5.2",
        "--levels",
        "4",
        "--out",
        path_str(&out),
    ]);
    assert!(run.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.ends_with(",,"), "{row}");
}

#[test]
fn iterate_history_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hist.csv");
    let run = paraocp(&[
        "iterate",
        "--example",
        "5.1",
        "--n",
        "2",
        "--kmax",
        "300",
        "--out",
        path_str(&out),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let rows: Vec<HistoryRow> = read_file(&out).unwrap();
    assert_eq!(rows.len(), 300);
    assert_eq!(rows[0].k, 1);
    let dist: Vec<f64> = rows.iter().map(|r| r.hnorm_to_star.unwrap()).collect();
    assert!(dist.windows(2).all(|d| d[1] <= d[0] * (1.0 + 1e-12)));
    assert!(dist[299] < dist[0]);
}

#[test]
fn bench_and_box_run() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench.csv");
    let run = paraocp(&[
        "bench",
        "--example",
        "5.2",
        "--n",
        "4",
        "--k",
        "5",
        "--threads",
        "1,2",
        "--out",
        path_str(&bench),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let text = std::fs::read_to_string(&bench).unwrap();
    assert_eq!(text.lines().count(), 3);

    let boxed = dir.path().join("box.csv");
    let run = paraocp(&[
        "box",
        "--example",
        "5.1",
        "--n",
        "2",
        "--lower",
        "-0.1",
        "--upper",
        "0.5",
        "--kmax",
        "50",
        "--out",
        path_str(&boxed),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let text = std::fs::read_to_string(&boxed).unwrap();
    assert!(text.starts_with("k,hnorm_increment_sq,box_gap,state_norm,p_min,p_max\n"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn bad_input_fails_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    for args in [
        vec!["converge", "--example", "5.3", "--out", path_str(&out)],
        vec![
            "converge",
            "--example",
            "5.1",
            "--levels",
            "8,4",
            "--out",
            path_str(&out),
        ],
        vec![
            "box",
            "--example",
            "5.1",
            "--n",
            "2",
            "--lower",
            "1",
            "--upper",
            "0",
            "--out",
            path_str(&out),
        ],
        vec![
            "iterate",
            "--example",
            "5.1",
            "--n",
            "2",
            "--gamma",
            "2.5",
            "--out",
            path_str(&out),
        ],
    ] {
        let run = paraocp(&args);
        assert!(!run.status.success(), "{args:?}");
        let err = String::from_utf8_lossy(&run.stderr);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
}

#[test]
fn sixteen_digit_rounding_on_read() {
    let rows = vec![HistoryRow {
        k: 1,
        hnorm_to_star: Some(std::f64::consts::PI / 7.0),
        hnorm_increment_sq: 1.0 / 3.0,
    }];
    let mut buf = Vec::new();
    write_table(&mut buf, &rows).unwrap();
    let back: Vec<HistoryRow> = read_table(buf.as_slice()).unwrap();
    let rounded = |v: f64| format!("{v:.15e}").parse::<f64>().unwrap();
    assert_eq!(
        back[0].hnorm_to_star,
        Some(rounded(std::f64::consts::PI / 7.0))
    );
    assert_eq!(back[0].hnorm_increment_sq, rounded(1.0 / 3.0));
}
