use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_borelknn"));
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("BORELKNN_")) {
        cmd.env_remove(k);
    }
    cmd.args(args).envs(env.iter().copied()).output().unwrap()
}

fn ok(args: &[&str]) -> Vec<u8> {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn iris() -> String {
    data("iris.csv").to_string_lossy().into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    for args in [
        &["--help"][..],
        &["--version"],
        &["cv", "--help"],
        &["help"],
    ] {
        assert_eq!(run(args).status.code(), Some(0), "{args:?}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["ann", "--input", "x.csv"]).status.code(), Some(1));
    assert_eq!(run(&["cv", "--variant", "sideways"]).status.code(), Some(1));
    assert_eq!(run(&["cv", "--seed", "minus-one"]).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_two() {
    let out = run(&["cv", "--input", "/no/such/file.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    assert_eq!(run(&["cv"]).status.code(), Some(2));
    assert_eq!(
        run(&["cv", "--input", &iris(), "--kmax", "500"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn reduce_then_cv_is_deterministic() {
    let iris = iris();
    let reduce = ok(&["reduce", "--input", &iris]);
    let text = String::from_utf8(reduce.clone()).unwrap();
    assert!(text.starts_with("# borelknn reduce v1 d=4 bits=16 group_size=4\n"));
    assert_eq!(text.lines().count(), 152);
    assert_eq!(reduce, ok(&["reduce", "--input", &iris]));

    let cv = ["cv", "--input", &iris, "--variant", "both", "--seed", "1"];
    let first = ok(&cv);
    assert_eq!(first, ok(&cv));
    let text = String::from_utf8(first).unwrap();
    assert!(text
        .lines()
        .any(|l| l == "k,original_accuracy,reduced_accuracy"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 21);
}

#[test]
fn thread_count_does_not_change_output() {
    let iris = iris();
    for cmd in [
        vec!["cv", "--input", iris.as_str(), "--format", "json"],
        vec!["reduce", "--input", iris.as_str(), "--group-size", "2"],
        vec!["instability", "--gaussian", "300", "--dim", "4", "--k", "5"],
        vec![
            "consistency",
            "--rule",
            "adversarial",
            "--n-grid",
            "50,200",
            "--trials",
            "3",
            "--test-size",
            "500",
        ],
    ] {
        let one = ok(&[&cmd[..], &["--threads", "1"]].concat());
        let four = ok(&[&cmd[..], &["--threads", "4"]].concat());
        assert_eq!(one, four, "{cmd:?}");
    }
}

#[test]
fn reduced_files_feed_classify() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("iris.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let (mut train, mut test) = (vec![header], vec![header]);
    for (i, l) in lines.enumerate() {
        if i % 5 == 4 {
            test.push(l)
        } else {
            train.push(l)
        }
    }
    let (tr, te) = (dir.path().join("train.csv"), dir.path().join("test.csv"));
    std::fs::write(&tr, train.join("\n") + "\n").unwrap();
    std::fs::write(&te, test.join("\n") + "\n").unwrap();
    let (trc, tec) = (
        dir.path().join("train.codes"),
        dir.path().join("test.codes"),
    );
    let s = |p: &Path| p.to_string_lossy().into_owned();
    ok(&["reduce", "--input", &s(&tr), "--output", &s(&trc)]);
    ok(&[
        "reduce",
        "--input",
        &s(&te),
        "--fit",
        &s(&tr),
        "--output",
        &s(&tec),
    ]);

    let from_codes = ok(&[
        "classify",
        "--train",
        &s(&trc),
        "--test",
        &s(&tec),
        "--k",
        "5",
        "--format",
        "json",
    ]);
    let from_csv = ok(&[
        "classify",
        "--train",
        &s(&tr),
        "--test",
        &s(&te),
        "--k",
        "5",
        "--variant",
        "reduced",
        "--format",
        "json",
    ]);
    let result =
        |b: &[u8]| serde_json::from_slice::<serde_json::Value>(b).unwrap()["result"].clone();
    assert_eq!(result(&from_codes), result(&from_csv));
    assert_eq!(
        result(&from_codes)["predictions"].as_array().unwrap().len(),
        30
    );
}

#[test]
fn precedence_is_flags_env_config_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "seed = 5\nformat = \"json\"\n[cv]\nkmax = 3\nfolds = 5\n",
    )
    .unwrap();
    let iris = iris();
    let seed = |args: &[&str], env: &[(&str, &str)]| {
        let out = run_env(args, env);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["config"]["cv"]["k_max"], 3);
        v["seed"].as_u64().unwrap()
    };
    let base = [
        "cv",
        "--input",
        iris.as_str(),
        "--config",
        cfg.to_str().unwrap(),
    ];
    assert_eq!(seed(&base, &[]), 5);
    assert_eq!(seed(&base, &[("BORELKNN_SEED", "9")]), 9);
    assert_eq!(
        seed(
            &[&base[..], &["--seed", "11"]].concat(),
            &[("BORELKNN_SEED", "9")]
        ),
        11
    );

    std::fs::write(&cfg, "colour = \"red\"\n").unwrap();
    assert_eq!(run(&base).status.code(), Some(2));
}

#[test]
fn out_dir_collects_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let out_s = out.to_string_lossy().into_owned();
    let stdout = ok(&[
        "cv",
        "--input",
        &iris(),
        "--out-dir",
        &out_s,
        "--format",
        "json",
    ]);
    assert!(stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("cv.json")).unwrap()).unwrap();
    assert_eq!(v["tool"], "borelknn");
}

#[test]
fn stored_index_answers_like_a_fresh_one() {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("iris.idx");
    let iris = iris();
    let idx = index.to_string_lossy().into_owned();
    let fresh = ok(&[
        "ann",
        "--build",
        "--audit",
        "--query",
        "--input",
        &iris,
        "--queries",
        &iris,
        "--k",
        "3",
        "--index-out",
        &idx,
    ]);
    let stored = ok(&[
        "ann",
        "--audit",
        "--query",
        "--index-in",
        &idx,
        "--queries",
        &iris,
        "--k",
        "3",
    ]);
    let fresh = String::from_utf8(fresh).unwrap();
    let stored = String::from_utf8(stored).unwrap();
    assert!(fresh.ends_with(&stored), "stored:\n{stored}");
    assert!(stored.contains("queries,k,c,satisfied,rate,worst_ratio,mean_ratio\n150,3,0.5,150,1,"));
}
