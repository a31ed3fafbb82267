use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn defx(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_defx"))
        .current_dir(dir)
        .args(args)
        .arg("--quiet")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = defx(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

const THREE_SYMBOLS: &str = r#"{"id":"s1","paper_id":"p1","text":"A , C and v denote X , Y and Z respectively .","tokens":[{"text":"A","start":0,"end":1},{"text":",","start":2,"end":3},{"text":"C","start":4,"end":5},{"text":"and","start":6,"end":9},{"text":"v","start":10,"end":11},{"text":"denote","start":12,"end":18},{"text":"X","start":19,"end":20},{"text":",","start":21,"end":22},{"text":"Y","start":23,"end":24},{"text":"and","start":25,"end":28},{"text":"Z","start":29,"end":30},{"text":"respectively","start":31,"end":43},{"text":".","start":44,"end":45}],"symbols":[{"id":"T1","tokens":[0]},{"id":"T2","tokens":[2]},{"id":"T3","tokens":[4]}],"links":[{"symbol_id":"T1","fragments":[[6,6]]},{"symbol_id":"T2","fragments":[[8,8]]},{"symbol_id":"T3","fragments":[[10,10]]}]}
"#;

fn fixture(dir: &Path) {
    std::fs::write(dir.join("three.jsonl"), THREE_SYMBOLS).unwrap();
}

#[test]
fn every_subcommand_documents_its_flags() {
    let dir = tempfile::tempdir().unwrap();
    let subcommands = [
        "ingest",
        "stats",
        "mine",
        "split",
        "expand",
        "train",
        "predict",
        "eval",
        "iaa",
        "convert-scierc",
        "align-answers",
        "synth",
        "config",
    ];
    for sc in subcommands {
        let out = defx(dir.path(), &[sc, "--help"]);
        assert!(out.status.success(), "{sc} --help");
        let text = String::from_utf8(out.stdout).unwrap();
        let lines: Vec<&str> = text.lines().map(str::trim).collect();
        for (i, line) in lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.starts_with("--"))
        {
            let mut words = line.split_whitespace().peekable();
            let flag = words.next().unwrap();
            if flag == "--help" || flag == "--version" {
                continue;
            }
            words.next_if(|w| w.starts_with('<'));
            // clap puts the description on the next line in its long layout
            let next = lines.get(i + 1).copied().unwrap_or("");
            let described = words.next().is_some_and(|w| !w.starts_with('['))
                || (!next.is_empty() && !next.starts_with('-'));
            assert!(described, "{sc}: {flag} has no description: {line:?}");
        }
    }
}

#[test]
fn expand_three_symbol_sentence() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let r = ok(
        dir.path(),
        &["expand", "--input", "three.jsonl", "--output", "s.jsonl"],
    );
    assert_eq!(r["samples"], 3);
    let text = std::fs::read_to_string(dir.path().join("s.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(r["config_hash"].as_str().unwrap().len() == 64);

    ok(
        dir.path(),
        &[
            "expand",
            "--input",
            "three.jsonl",
            "--output",
            "m.jsonl",
            "--render-markers",
        ],
    );
    let marked = std::fs::read_to_string(dir.path().join("m.jsonl")).unwrap();
    assert_eq!(marked.matches("</s>SYMBOL</s>").count(), 3);
}

#[test]
fn split_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "synth",
            "--output",
            "c.jsonl",
            "--sentences",
            "200",
            "--papers",
            "10",
        ],
    );
    for out in ["a", "b"] {
        ok(
            dir.path(),
            &[
                "split",
                "--input",
                "c.jsonl",
                "--output",
                out,
                "--by-paper",
                "--seed",
                "7",
            ],
        );
    }
    for part in ["train.jsonl", "dev.jsonl", "test.jsonl"] {
        let a = std::fs::read(dir.path().join("a").join(part)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(part)).unwrap();
        assert_eq!(a, b, "{part}");
    }
    let r = ok(
        dir.path(),
        &[
            "split",
            "--input",
            "c.jsonl",
            "--output",
            "s",
            "--by-sentence",
        ],
    );
    assert_eq!(r["mode"], "by-sentence");
}

#[test]
fn errors_are_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = defx(dir.path(), &["stats", "--input", "missing.jsonl"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    let line = err.lines().last().unwrap();
    let v: Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["error"], "E_CORPUS");

    std::fs::write(dir.path().join("bad.jsonl"), "{not json}\n").unwrap();
    let out = defx(
        dir.path(),
        &["expand", "--input", "bad.jsonl", "--output", "x"],
    );
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"], "E_CORPUS");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.cfg"),
        "# local\nseed = 5\ntrain.epochs = 3\n",
    )
    .unwrap();
    let out = defx(dir.path(), &["--config", "c.cfg", "config", "show"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 5\n") && text.contains("train.epochs = 3\n"));
    let out = defx(
        dir.path(),
        &["--config", "c.cfg", "--seed", "9", "config", "show"],
    );
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("seed = 9\n"));

    std::fs::write(dir.path().join("bad.cfg"), "train.epoch = 3\n").unwrap();
    let out = defx(dir.path(), &["--config", "bad.cfg", "config", "show"]);
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"], "E_CONFIG");
}

#[test]
fn config_show_lists_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = defx(dir.path(), &["config", "show"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for key in [
        "seed",
        "split.mode",
        "train.epochs",
        "train.lr",
        "predict.gate",
        "answers.policy",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{key} = "))),
            "{key}"
        );
    }
}

#[test]
fn scierc_round_trip_through_ingest() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let r = ok(
        dir.path(),
        &[
            "convert-scierc",
            "--input",
            "three.jsonl",
            "--output",
            "d.json",
        ],
    );
    assert_eq!(r["relations"], 3);
    let r = ok(
        dir.path(),
        &[
            "ingest",
            "--format",
            "scierc",
            "--input",
            "d.json",
            "--output",
            "back.jsonl",
        ],
    );
    assert_eq!(r["links"], 3);
    ok(
        dir.path(),
        &[
            "convert-scierc",
            "--input",
            "back.jsonl",
            "--output",
            "d2.json",
        ],
    );
    let a = std::fs::read(dir.path().join("d.json")).unwrap();
    let b = std::fs::read(dir.path().join("d2.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ingest_brat_directory() {
    let dir = tempfile::tempdir().unwrap();
    let brat = dir.path().join("brat");
    std::fs::create_dir(&brat).unwrap();
    std::fs::write(brat.join("d1.txt"), "where x is the input .\n").unwrap();
    std::fs::write(
        brat.join("d1.ann"),
        "T1\tSymbol 6 7\tx\nT2\tDefinition 15 20\tinput\nR1\tDefinition-of Arg1:T2 Arg2:T1\n",
    )
    .unwrap();
    let out = defx(
        dir.path(),
        &[
            "ingest", "--format", "brat", "--input", "brat", "--output", "c.jsonl",
        ],
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "{stderr}");
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["sentences"], 1);
    assert!(dir.path().join("c.jsonl.lint.jsonl").exists());
}

#[test]
fn align_answers_first_occurrence() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    std::fs::write(
        dir.path().join("a.jsonl"),
        concat!(
            r#"{"sentence_id":"s1","symbol_ordinal":1,"answer":"SYMBOL1 is defined as X."}"#,
            "\n",
            r#"{"sentence_id":"s1","symbol_ordinal":2,"answer":"SYMBOL2 has no definition."}"#,
            "\n"
        ),
    )
    .unwrap();
    let r = ok(
        dir.path(),
        &[
            "align-answers",
            "--input",
            "three.jsonl",
            "--answers",
            "a.jsonl",
            "--output",
            "o.jsonl",
        ],
    );
    assert_eq!(r["statuses"]["aligned"], 1);
    assert_eq!(r["statuses"]["negative"], 1);
    let text = std::fs::read_to_string(dir.path().join("o.jsonl")).unwrap();
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["labels"][6], "B-DEF");
}

#[test]
fn mine_ranks_documents() {
    let dir = tempfile::tempdir().unwrap();
    let docs = dir.path().join("docs");
    std::fs::create_dir(&docs).unwrap();
    std::fs::write(docs.join("a.txt"), "x, and y").unwrap();
    std::fs::write(
        docs.join("b.txt"),
        "A and B are X and Y respectively, and more",
    )
    .unwrap();
    let r = ok(dir.path(), &["mine", "--format", "brat", "--input", "docs"]);
    assert_eq!(r["top"][0]["doc_id"], "b");
    assert_eq!(r["top"][0]["respectively"], 1);
}
