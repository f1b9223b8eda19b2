use std::io::Write;

use convexmix::signals::{load_csv, read_trajectory, write_trajectory, TrajectoryRow};
use convexmix::{Error, SignalSample};
use proptest::prelude::*;

fn write_file(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(body.as_bytes()).unwrap();
    path
}

fn row(t: usize, s: SignalSample, lambda: f64, cum_loss: f64) -> TrajectoryRow {
    TrajectoryRow {
        t,
        y: s.y,
        yhat1: s.yhat1,
        yhat2: s.yhat2,
        lambda,
        rho: (lambda / (1.0 - lambda)).ln(),
        yhat: 0.0,
        e: 0.0,
        cum_loss,
        best_beta_prefix: 1.0,
        best_loss_prefix: 0.0,
        regret: cum_loss,
        norm_regret: cum_loss / t as f64,
        bound_norm: 152.0 / t as f64,
        in_range: true,
        projected: t % 2 == 0,
    }
}

#[test]
fn clips_out_of_range_cells() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_file(&dir, "a.csv", "y,yhat1,yhat2\n0.7,0.2,-0.1\n");
    let (samples, clips) = load_csv(&p, 0.5).unwrap();
    assert_eq!(samples, vec![SignalSample { y: 0.5, yhat1: 0.2, yhat2: -0.1 }]);
    assert_eq!(clips, 1);
}

#[test]
fn in_bound_rows_pass_through() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_file(&dir, "a.csv", "y,yhat1,yhat2\n0.1,0.2,0.3\n-0.4, -0.5 ,0\n");
    let (samples, clips) = load_csv(&p, 0.5).unwrap();
    assert_eq!(clips, 0);
    assert_eq!(samples[1], SignalSample { y: -0.4, yhat1: -0.5, yhat2: 0.0 });
}

#[test]
fn malformed_inputs_name_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("missing.csv", "y,yhat1,yhat2\n0.1,0.2,0.3\n0.1,0.2\n", 2),
        ("extra.csv", "y,yhat1,yhat2\n0.1,0.2,0.3,0.4\n", 1),
        ("text.csv", "y,yhat1,yhat2\n0.1,0.2,0.3\n0.1,abc,0.3\n", 2),
        ("header.csv", "y,yhat1\n0.1,0.2\n", 0),
        ("empty.csv", "", 0),
        ("header_only.csv", "y,yhat1,yhat2\n", 0),
    ];
    for (name, body, want) in cases {
        let p = write_file(&dir, name, body);
        match load_csv(&p, 1.0) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, want, "{name}"),
            other => panic!("{name}: expected parse error, got {other:?}"),
        }
    }
    assert!(matches!(load_csv(dir.path().join("nope.csv"), 1.0), Err(Error::Io { .. })));
}

#[test]
fn two_step_case1_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let rows = [
        row(1, SignalSample { y: 0.5, yhat1: 0.5, yhat2: -0.5 }, 0.5, 0.25),
        row(2, SignalSample { y: 0.5, yhat1: 0.5, yhat2: 0.5 }, 0.502_499_979_166_875, 0.25),
    ];
    write_trajectory(&rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("t,y,yhat1,yhat2,lambda,rho,yhat,e,cum_loss,"));
    let back = read_trajectory(&path).unwrap();
    assert_eq!(back.iter().map(|r| r.cum_loss).collect::<Vec<_>>(), vec![0.25, 0.25]);
    assert_eq!(back, rows);
}

#[test]
fn empty_trajectory_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(write_trajectory(&[], dir.path().join("x.csv")).is_err());
}

#[test]
fn missing_trajectory_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_file(&dir, "t.csv", "t,y,yhat1\n1,0,0\n");
    let err = read_trajectory(&p).unwrap_err().to_string();
    assert!(err.contains("yhat2"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectory_roundtrip_is_exact(
        cells in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 1e-6f64..0.999_999), 1..40)
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows: Vec<_> = cells
            .iter()
            .enumerate()
            .map(|(i, &(y, a, b, l))| row(i + 1, SignalSample { y, yhat1: a, yhat2: b }, l, i as f64 * 0.1))
            .collect();
        write_trajectory(&rows, &path).unwrap();
        let back = read_trajectory(&path).unwrap();
        prop_assert_eq!(&back, &rows);

        // the echoed input columns reload as the same samples through the input reader
        let input = dir.path().join("in.csv");
        let mut body = String::from("y,yhat1,yhat2\n");
        for r in &back {
            body.push_str(&format!("{},{},{}\n",
                convexmix::signals::fmt_real(r.y),
                convexmix::signals::fmt_real(r.yhat1),
                convexmix::signals::fmt_real(r.yhat2)));
        }
        std::fs::write(&input, body).unwrap();
        let (samples, clips) = load_csv(&input, 1.0).unwrap();
        prop_assert_eq!(clips, 0);
        let expected: Vec<_> = rows.iter().map(|r| r.sample()).collect();
        prop_assert_eq!(samples, expected);
    }
}
