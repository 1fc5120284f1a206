use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use topgraph::top_ir::{read_examples, read_partial_examples, SupervisionMode};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topgraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new(count: usize) -> Self {
        let f = Fixture {
            dir: tempfile::tempdir().unwrap(),
        };
        ok(&["synth", "--count", &count.to_string(), "--seed", "4", "--out", p(&f.path("data.tsv"))]);
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn train(&self, out: &str, extra: &[&str]) -> String {
        let data = self.path("data.tsv");
        let ckpt = self.path(out);
        let mut args = vec![
            "train", "--train", p(&data), "--out", p(&ckpt), "--steps", "20",
            "--set", "dim=8", "--set", "ffn_dim=8", "--set", "biaffine_dim=8", "--set", "warmup_steps=2",
        ];
        args.extend_from_slice(extra);
        ok(&args)
    }
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["split", "--input", "x"]), 1);
}

#[test]
fn split_sizes_and_round_trip() {
    let f = Fixture::new(101);
    let prefix = f.path("out");
    let stdout = ok(&["split", "--input", p(&f.path("data.tsv")), "--percent", "2/49/49", "--seed", "3", "--out-prefix", p(&prefix)]);
    // 2.02 -> 2, 49.49 -> 49 twice, remainder to the first 49.
    assert_eq!(stdout, "full\t2\nterm\t50\nnonterm\t49\n");
    let mut total = 0;
    for (name, mode) in [
        ("full", SupervisionMode::Full),
        ("term", SupervisionMode::TerminalOnly),
        ("nonterm", SupervisionMode::NonterminalOnly),
    ] {
        let text = fs::read_to_string(f.path(&format!("out.{name}.tsv"))).unwrap();
        let rows = read_partial_examples(&text).unwrap();
        assert!(rows.iter().all(|r| r.tree.mode() == mode));
        total += rows.len();
    }
    assert_eq!(total, 101);

    assert_eq!(
        code(&["split", "--input", p(&f.path("data.tsv")), "--percent", "50/50/1", "--out-prefix", p(&prefix)]),
        1
    );
}

#[test]
fn full_split_is_the_input_with_a_mode_column() {
    let f = Fixture::new(30);
    let prefix = f.path("all");
    ok(&["split", "--input", p(&f.path("data.tsv")), "--percent", "100/0/0", "--out-prefix", p(&prefix)]);
    let input = fs::read_to_string(f.path("data.tsv")).unwrap();
    let full = fs::read_to_string(f.path("all.full.tsv")).unwrap();
    let stripped: String = full.lines().map(|l| l.strip_prefix("FULL\t").unwrap().to_string() + "\n").collect();
    assert_eq!(stripped, input);
    assert_eq!(fs::read_to_string(f.path("all.term.tsv")).unwrap(), "");
}

#[test]
fn gold_scores_evaluate_perfectly() {
    let f = Fixture::new(50);
    let dump = f.path("gold.dump.tsv");
    let report = ok(&["eval", "--data", p(&f.path("data.tsv")), "--gold-scores", "--dump", p(&dump)]);
    assert!(report.contains("exact_match\t1.0000\n"), "{report}");
    assert_eq!(fs::read_to_string(&dump).unwrap().lines().count(), 50);
}

#[test]
fn train_eval_and_recount() {
    let f = Fixture::new(80);
    let stdout = f.train("m.ckpt", &[]);
    assert!(stdout.contains("steps\t20"));
    let trace = fs::read_to_string(f.path("m.ckpt.loss.csv")).unwrap();
    assert_eq!(trace.lines().count(), 21);
    assert!(trace.starts_with("step,loss\n1,"));

    let data = f.path("data.tsv");
    let dump = f.path("dump.tsv");
    let report = ok(&["eval", "--model", p(&f.path("m.ckpt")), "--data", p(&data), "--dump", p(&dump)]);

    // Recount exact match from the dump.
    let gold = read_examples(&fs::read_to_string(&data).unwrap()).unwrap();
    let dumped = fs::read_to_string(&dump).unwrap();
    let mut correct = 0;
    for (row, g) in dumped.lines().zip(&gold) {
        let cols: Vec<&str> = row.split('\t').collect();
        assert_eq!(cols.len(), 5);
        correct += usize::from(cols[1] == g.tree.to_string());
    }
    let want = format!("exact_match\t{:.4}\n", correct as f64 / gold.len() as f64);
    assert!(report.contains(&want), "{report} vs {want}");
}

#[test]
fn runs_are_reproducible() {
    let f = Fixture::new(40);
    f.train("a.ckpt", &["--seed", "9"]);
    f.train("b.ckpt", &["--seed", "9"]);
    f.train("c.ckpt", &["--seed", "10"]);
    let a = fs::read(f.path("a.ckpt")).unwrap();
    assert_eq!(a, fs::read(f.path("b.ckpt")).unwrap());
    assert_ne!(a, fs::read(f.path("c.ckpt")).unwrap());
    assert_eq!(
        fs::read(f.path("a.ckpt.loss.csv")).unwrap(),
        fs::read(f.path("b.ckpt.loss.csv")).unwrap()
    );
    let data = f.path("data.tsv");
    let eval = |ckpt: &str, dump: &str| {
        let r = ok(&["eval", "--model", p(&f.path(ckpt)), "--data", p(&data), "--dump", p(&f.path(dump))]);
        (r, fs::read(f.path(dump)).unwrap())
    };
    assert_eq!(eval("a.ckpt", "a.tsv"), eval("b.ckpt", "b.tsv"));
}

#[test]
fn config_file_and_flag_precedence() {
    let f = Fixture::new(20);
    let cfg = f.path("run.cfg");
    fs::write(&cfg, "# desk run\nsteps = 7\nseed=3\nlayers=1\n").unwrap();
    // The --steps flag set by the helper wins over the file.
    f.train("m.ckpt", &["--config", p(&cfg)]);
    let header = fs::read(f.path("m.ckpt")).unwrap();
    let header = String::from_utf8_lossy(&header[..400]).to_string();
    assert!(header.contains("config steps=20\n"));
    assert!(header.contains("config seed=3\n"));
    assert!(header.contains("config layers=1\n"));

    fs::write(&cfg, "nonsense\n").unwrap();
    let data = f.path("data.tsv");
    assert_eq!(code(&["train", "--train", p(&data), "--out", p(&f.path("x")), "--config", p(&cfg)]), 1);
    assert_eq!(code(&["train", "--train", p(&data), "--out", p(&f.path("x")), "--set", "heads=3"]), 1);
}

#[test]
fn data_errors_exit_with_two() {
    let f = Fixture::new(20);
    let empty = f.path("empty.tsv");
    fs::write(&empty, "").unwrap();
    assert_eq!(code(&["train", "--train", p(&empty), "--out", p(&f.path("m"))]), 2);
    let broken = f.path("broken.tsv");
    fs::write(&broken, "a\tb\t[IN:X a ]\n").unwrap();
    assert_eq!(code(&["stats", "--data", p(&broken)]), 2);
    assert_eq!(code(&["eval", "--data", p(&f.path("missing.tsv")), "--gold-scores"]), 2);

    // A vocabulary that does not match the checkpoint.
    f.train("m.ckpt", &[]);
    let vocab = f.path("other.vocab");
    fs::write(&vocab, "IN:ELSEWHERE\t1\n").unwrap();
    let out = run(&["eval", "--model", p(&f.path("m.ckpt")), "--data", p(&f.path("data.tsv")), "--vocab", p(&vocab)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("vocabulary hash mismatch"));
}

#[test]
fn diverging_training_exits_with_three() {
    let f = Fixture::new(20);
    let out = run(&[
        "train", "--train", p(&f.path("data.tsv")), "--out", p(&f.path("m")), "--steps", "30",
        "--set", "optimizer=sgd", "--set", "learning_rate=1e30", "--set", "clip_norm=0",
        "--set", "warmup_steps=0",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn score_files_decode_like_the_model() {
    let f = Fixture::new(30);
    f.train("m.ckpt", &[]);
    let ckpt = f.path("m.ckpt");
    let data = f.path("data.tsv");
    let scores = f.path("scores.jsonl");
    ok(&["convert", "--to", "scores", "--model", p(&ckpt), "--data", p(&data), "--out", p(&scores)]);
    let direct = ok(&["decode", "--model", p(&ckpt), "--input", p(&data)]);
    let via_files = ok(&["decode", "--scores", p(&scores)]);
    // Scores pass through f64 text, so compare everything but the total.
    let strip = |s: &str| -> Vec<String> {
        s.lines()
            .map(|l| {
                let c: Vec<&str> = l.split('\t').collect();
                format!("{}\t{}\t{}\t{}", c[0], c[1], c[3], c[4])
            })
            .collect()
    };
    assert_eq!(strip(&direct), strip(&via_files));

    let audit = ok(&["oracle-audit", "--scores", p(&scores), "--bound", "4"]);
    assert!(audit.contains("audited\t0\n"));
    assert!(audit.contains("skipped_too_large\t30\n"));

    let empty = f.path("none.jsonl");
    fs::write(&empty, "").unwrap();
    let audit = ok(&["oracle-audit", "--scores", p(&empty)]);
    assert!(audit.starts_with("audited\t0\nskipped_too_large\t0\n"));
    assert!(audit.contains("exact_fraction\tn/a\n"));
}

#[test]
fn convert_and_stats() {
    let f = Fixture::new(25);
    let data = f.path("data.tsv");
    let vocab = f.path("v.txt");
    ok(&["convert", "--to", "vocab", "--data", p(&data), "--out", p(&vocab)]);
    let v = topgraph::Vocabulary::from_text(&fs::read_to_string(&vocab).unwrap()).unwrap();
    let parses = f.path("parses.txt");
    ok(&["convert", "--to", "parses", "--data", p(&data), "--vocab", p(&vocab), "--out", p(&parses)]);
    let text = fs::read_to_string(&parses).unwrap();
    let gold = read_examples(&fs::read_to_string(&data).unwrap()).unwrap();
    let blocks: Vec<&str> = text.split("#tokens=").skip(1).collect();
    assert_eq!(blocks.len(), gold.len());
    for (block, ex) in blocks.iter().zip(&gold) {
        let parse = topgraph::mapping::read_parse(&format!("#tokens={block}"), &v).unwrap();
        let tree = topgraph::parse_to_top(&parse, &ex.tokens).unwrap();
        assert_eq!(tree, ex.tree);
    }
    let stats = ok(&["stats", "--data", p(&data)]);
    assert!(stats.starts_with("examples\t25\nmode.FULL\t25\n"), "{stats}");
    let term = f.path("t");
    ok(&["split", "--input", p(&data), "--percent", "0/100/0", "--out-prefix", p(&term)]);
    let stats = ok(&["stats", "--data", p(&f.path("t.term.tsv"))]);
    assert!(stats.contains("mode.TERM\t25\n"));
}
