//! End-to-end checks of the `keydyn` binary: exit-code contract, file
//! outputs, and pipeline composition over the documented formats.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn keydyn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_keydyn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Fresh scratch directory per test.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("keydyn-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_log(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const GOOD_LOG: &str =
    "# keydyn-log v1 user=alice phase=prompted\n0,P,0\n0,R,80\n1,P,130\n1,R,210\n";

#[test]
fn validate_exit_codes() {
    let dir = scratch("validate");
    write_log(&dir, "good.log", GOOD_LOG);
    let out = keydyn(&["validate", "--input", "good.log"], &dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("strokes=2 "));

    write_log(
        &dir,
        "orphan.log",
        "# keydyn-log v1 user=alice phase=prompted\n0,P,0\n0,R,80\n17,P,90\n",
    );
    let out = keydyn(&["validate", "--input", "orphan.log"], &dir);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("OrphanStroke stroke_id=17"),
        "{}",
        stderr(&out)
    );

    let out = keydyn(&["validate", "--input", "nope.log"], &dir);
    assert_eq!(code(&out), 2);

    let out = keydyn(&["validate"], &dir);
    assert_eq!(code(&out), 2, "clap usage errors exit 2");
}

#[test]
fn train_is_deterministic_and_validates_ranges() {
    let dir = scratch("train");
    keydyn(
        &[
            "synth",
            "--users",
            "2",
            "--strokes",
            "300",
            "--seed",
            "9",
            "--out-dir",
            "c",
        ],
        &dir,
    );
    let log = "c/u00_prompted.log";

    let out = keydyn(
        &[
            "train", "--input", log, "--range", "0:200", "--out", "a.model",
        ],
        &dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = keydyn(
        &[
            "train", "--input", log, "--range", "0:200", "--out", "b.model",
        ],
        &dir,
    );
    assert_eq!(code(&out), 0);
    assert_eq!(
        fs::read(dir.join("a.model")).unwrap(),
        fs::read(dir.join("b.model")).unwrap(),
        "same inputs must give byte-identical model files"
    );
    let text = fs::read_to_string(dir.join("a.model")).unwrap();
    assert!(text.starts_with("keydyn-model v1\nuser=u00\n"));

    let out = keydyn(
        &[
            "train", "--input", log, "--range", "0:3", "--out", "x.model",
        ],
        &dir,
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("InsufficientData"));

    let out = keydyn(
        &[
            "train", "--input", log, "--range", "9to9", "--out", "x.model",
        ],
        &dir,
    );
    assert_eq!(code(&out), 2, "malformed range is a usage error");

    let out = keydyn(
        &[
            "train", "--input", log, "--range", "0:999", "--out", "x.model",
        ],
        &dir,
    );
    assert_eq!(code(&out), 1, "out-of-bounds range is a data error");
    assert!(stderr(&out).contains("OutOfRange"));

    let out = keydyn(
        &["train", "--input", log, "--nu", "7", "--out", "x.model"],
        &dir,
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn auth_exit_codes_follow_outcome() {
    let dir = scratch("auth");
    keydyn(
        &[
            "synth",
            "--users",
            "2",
            "--strokes",
            "800",
            "--seed",
            "11",
            "--out-dir",
            "c",
        ],
        &dir,
    );
    keydyn(
        &[
            "train",
            "--input",
            "c/u00_prompted.log",
            "--range",
            "0:600",
            "--out",
            "u00.model",
        ],
        &dir,
    );

    let own = keydyn(
        &[
            "auth",
            "--model",
            "u00.model",
            "--input",
            "c/u00_prompted.log",
            "--block-size",
            "50",
        ],
        &dir,
    );
    assert_eq!(code(&own), 0, "{}", stderr(&own));
    assert!(stdout(&own).contains("outcome=DataExhausted"));

    let impostor = keydyn(
        &[
            "auth",
            "--model",
            "u00.model",
            "--input",
            "c/u01_prompted.log",
            "--block-size",
            "50",
        ],
        &dir,
    );
    assert_eq!(code(&impostor), 1);
    assert!(stdout(&impostor).contains("outcome=Rejected blocks=1"));

    let bad = keydyn(
        &[
            "auth",
            "--model",
            "u00.model",
            "--input",
            "c/u01_prompted.log",
            "--threshold",
            "1.5",
        ],
        &dir,
    );
    assert_eq!(code(&bad), 2);

    fs::write(dir.join("garbage.model"), "not a model\n").unwrap();
    let corrupt = keydyn(
        &[
            "auth",
            "--model",
            "garbage.model",
            "--input",
            "c/u01_prompted.log",
        ],
        &dir,
    );
    assert_eq!(code(&corrupt), 1);
    assert!(stderr(&corrupt).contains("CorruptModel"));
}

#[test]
fn synth_writes_cohort_files() {
    let dir = scratch("synth");
    let out = keydyn(
        &[
            "synth",
            "--users",
            "20",
            "--strokes",
            "40",
            "--seed",
            "1",
            "--out-dir",
            "c",
        ],
        &dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let names: Vec<String> = fs::read_dir(dir.join("c"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.len(), 41, "40 logs plus cohort.txt");
    assert!(names.contains(&"cohort.txt".to_string()));
    assert!(names.contains(&"u19_freestyle.log".to_string()));

    let out = keydyn(&["synth", "--users", "1", "--out-dir", "d"], &dir);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("TooFewUsers"));
}

#[test]
fn eval_reports_have_table_shape() {
    let dir = scratch("eval");
    keydyn(
        &[
            "synth",
            "--users",
            "3",
            "--strokes",
            "2000",
            "--seed",
            "5",
            "--out-dir",
            "c",
        ],
        &dir,
    );

    let out = keydyn(
        &[
            "eval",
            "--cohort-dir",
            "c",
            "--protocol",
            "initial",
            "--out",
            "i.report",
            "--markdown",
            "i.md",
        ],
        &dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = fs::read_to_string(dir.join("i.report")).unwrap();
    assert!(report.starts_with("keydyn-report v1\nprotocol=initial\n"));
    let rows: Vec<&str> = report
        .lines()
        .filter(|l| l.starts_with("prompted,") || l.starts_with("freestyle,"))
        .collect();
    assert_eq!(rows.len(), 8, "2 phases x 4 block sizes:\n{report}");
    assert!(fs::read_to_string(dir.join("i.md"))
        .unwrap()
        .contains("### prompted phase"));

    let out = keydyn(
        &[
            "eval",
            "--cohort-dir",
            "c",
            "--protocol",
            "kfold",
            "--folds",
            "5",
            "--out",
            "k.report",
        ],
        &dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = fs::read_to_string(dir.join("k.report")).unwrap();
    let rows: Vec<&str> = report
        .lines()
        .filter(|l| l.starts_with("prompted,") || l.starts_with("freestyle,"))
        .collect();
    assert_eq!(rows.len(), 2, "one row per phase:\n{report}");

    let out = keydyn(
        &[
            "eval",
            "--cohort-dir",
            "absent",
            "--protocol",
            "initial",
            "--out",
            "x.report",
        ],
        &dir,
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn eval_notes_users_missing_a_phase() {
    let dir = scratch("missing-phase");
    keydyn(
        &[
            "synth",
            "--users",
            "3",
            "--strokes",
            "2000",
            "--seed",
            "8",
            "--out-dir",
            "c",
        ],
        &dir,
    );
    fs::remove_file(dir.join("c/u01_freestyle.log")).unwrap();
    let out = keydyn(
        &[
            "eval",
            "--cohort-dir",
            "c",
            "--protocol",
            "initial",
            "--out",
            "r",
        ],
        &dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = fs::read_to_string(dir.join("r")).unwrap();
    assert!(report.contains("users=3\nskipped_users=u01\n"), "{report}");
    assert!(report.contains(",2,")); // cells run on the remaining pair
}

#[test]
fn pipeline_intermediates_reparse() {
    // every file a command writes must be readable by its producer's parser
    let dir = scratch("pipeline");
    keydyn(
        &[
            "synth",
            "--users",
            "2",
            "--strokes",
            "2000",
            "--seed",
            "3",
            "--out-dir",
            "c",
        ],
        &dir,
    );
    let log_text = fs::read_to_string(dir.join("c/u01_freestyle.log")).unwrap();
    let log = keydyn_core::parse_log(&log_text).unwrap();
    assert_eq!(log.stroke_count(), 2000);
    assert_eq!(log.user_id(), "u01");

    let cohort =
        keydyn_core::parse_cohort(&fs::read_to_string(dir.join("c/cohort.txt")).unwrap()).unwrap();
    assert_eq!(cohort.profiles.len(), 2);

    keydyn(
        &[
            "train",
            "--input",
            "c/u01_freestyle.log",
            "--range",
            "0:1500",
            "--out",
            "m",
        ],
        &dir,
    );
    let model = keydyn_core::parse_model(&fs::read_to_string(dir.join("m")).unwrap()).unwrap();
    assert_eq!(model.train_user, "u01");

    keydyn(
        &[
            "eval",
            "--cohort-dir",
            "c",
            "--protocol",
            "initial",
            "--out",
            "r",
        ],
        &dir,
    );
    let report = keydyn_core::parse_report(&fs::read_to_string(dir.join("r")).unwrap()).unwrap();
    assert_eq!(report.meta.users, 2);
}
