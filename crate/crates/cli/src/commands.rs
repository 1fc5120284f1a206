use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topgraph::decoder::{
    decode_with, ChildOrder, DecodeOptions, DecodeResult, ScoreFile, ScoreMatrix,
};
use topgraph::mapping::{parse_to_top, top_to_parse, write_parse};
use topgraph::pipeline::{
    audit, corpus_stats, evaluate, gold_scores, predictions_tsv, split_counts, Prediction,
    PipelineError,
};
use topgraph::scorer::{save_checkpoint, train as fit, TrainConfig, TrainExample};
use topgraph::symbol_table::{build_vocabulary, build_vocabulary_partial, Vocabulary};
use topgraph::synth::grammar_tree;
use topgraph::top_ir::{
    read_partial_examples, scan_examples, write_example_line, write_partial_line, Example,
};
use topgraph::Score;

use crate::io::{self, CliError};
use crate::{
    AuditArgs, ConvertArgs, DecodeArgs, DecodeOpts, EvalArgs, Order, SplitArgs, StatsArgs,
    SynthArgs, Target, TrainArgs,
};

fn options(o: &DecodeOpts) -> DecodeOptions {
    DecodeOptions {
        unused_order: match o.unused_order {
            Order::Asc => ChildOrder::Ascending,
            Order::Desc => ChildOrder::Descending,
        },
        widen_root_candidates: o.widen_root_candidates,
    }
}

/// Strict dataset reader that keeps line numbers.
fn read_dataset(path: &Path) -> Result<Vec<(usize, Example)>, CliError> {
    let (ok, bad) = scan_examples(&io::read(path)?);
    match bad.first() {
        Some(e) => Err(CliError::Data(format!("{}: {e}", path.display()))),
        None => Ok(ok),
    }
}

fn parse_percent(s: &str) -> Result<[u32; 3], CliError> {
    let parts: Vec<&str> = s.split('/').collect();
    let bad = || CliError::Usage(format!("--percent expects S/T/N, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = [0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| bad())?;
    }
    Ok(out)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn split(a: SplitArgs) -> Result<(), CliError> {
    let percent = parse_percent(&a.percent)?;
    let examples: Vec<Example> = read_dataset(&a.input)?.into_iter().map(|(_, e)| e).collect();
    let buckets = topgraph::pipeline::split(&examples, percent, a.seed).map_err(|e| match e {
        PipelineError::BadPercentages(_) => CliError::Usage(e.to_string()),
        other => CliError::data(other),
    })?;
    for (bucket, name) in buckets.iter().zip(["full", "term", "nonterm"]) {
        let text: String = bucket.iter().map(|e| write_partial_line(e) + "\n").collect();
        io::write(&with_suffix(&a.out_prefix, &format!(".{name}.tsv")), text)?;
    }
    let counts = split_counts(examples.len(), percent).expect("checked above");
    println!("full\t{}\nterm\t{}\nnonterm\t{}", counts[0], counts[1], counts[2]);
    Ok(())
}

/// Defaults, then the config file, then the dedicated flags, then `--set`.
fn train_config(a: &TrainArgs) -> Result<TrainConfig, CliError> {
    let mut c = TrainConfig::default();
    let usage = |e: topgraph::scorer::ScorerError| CliError::Usage(e.to_string());
    if let Some(path) = &a.config {
        for (i, line) in io::read(path)?.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected key=value", path.display(), i + 1))
            })?;
            c.set(k.trim(), v.trim()).map_err(usage)?;
        }
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = a.steps {
        c.steps = v;
    }
    if let Some(v) = a.learning_rate {
        c.learning_rate = v;
    }
    if let Some(v) = a.batch_size {
        c.batch_size = v;
    }
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        c.set(k, v).map_err(usage)?;
    }
    c.validate().map_err(usage)?;
    Ok(c)
}

pub fn train(a: TrainArgs) -> Result<(), CliError> {
    let config = train_config(&a)?;
    let mut corpus = Vec::new();
    for path in &a.train {
        let examples = read_partial_examples(&io::read(path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        corpus.extend(examples.into_iter().map(|e| TrainExample {
            tokens: e.tokens,
            tree: e.tree,
        }));
    }
    let vocab = match &a.vocab {
        Some(p) => io::load_vocab(p)?,
        None => build_vocabulary_partial(corpus.iter().map(|e| &e.tree)).map_err(CliError::data)?,
    };
    let (model, trace) = fit::<f32>(&corpus, vocab, &config)?;
    io::write(&a.out, save_checkpoint(&model))?;
    let trace_path = a.loss_trace.unwrap_or_else(|| with_suffix(&a.out, ".loss.csv"));
    io::write(&trace_path, trace.to_csv())?;
    println!(
        "examples\t{}\nsteps\t{}\nfinal_loss\t{}\nparameters\t{}",
        corpus.len(),
        trace.losses.len(),
        trace.losses.last().copied().unwrap_or(f64::NAN),
        model.params.parameter_count()
    );
    Ok(())
}

fn prediction<T: Score>(line: usize, tokens: &[String], out: DecodeResult<T>) -> Prediction<T> {
    Prediction {
        line,
        tree: parse_to_top(&out.parse, tokens),
        total_score: out.total_score,
        repairs: out.diagnostics.unused_depth_repairs,
        root_candidates: out.diagnostics.root_candidates,
    }
}

fn read_score_files(path: &Path) -> Result<Vec<(usize, ScoreFile)>, CliError> {
    io::read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            ScoreFile::from_json(l)
                .map(|f| (i + 1, f))
                .map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn to_matrix(path: &Path, line: usize, f: &ScoreFile) -> Result<ScoreMatrix<f64>, CliError> {
    f.to_matrix().map_err(|e| {
        let code = CliError::from(e);
        let msg = format!("{}:{line}: {code}", path.display());
        match code {
            CliError::Numeric(_) => CliError::Numeric(msg),
            _ => CliError::Data(msg),
        }
    })
}

pub fn decode(a: DecodeArgs) -> Result<(), CliError> {
    let opts = options(&a.opts);
    let text = if let Some(model_path) = &a.model {
        let model = io::load_model(model_path)?;
        let input = a.input.as_ref().expect("clap requires --input with --model");
        let mut preds = Vec::new();
        for (line, tokens) in io::read_queries(&io::read(input)?) {
            let out = model.decode(&tokens, &opts)?;
            preds.push(prediction(line, &tokens, out));
        }
        predictions_tsv(&preds)
    } else {
        let path = a.scores.as_ref().expect("clap requires --scores without --model");
        let mut preds = Vec::new();
        for (line, f) in read_score_files(path)? {
            let m = to_matrix(path, line, &f)?;
            let out = decode_with(&m, &opts)?;
            preds.push(prediction(line, &f.tokens, out));
        }
        predictions_tsv(&preds)
    };
    io::write_or_print(a.out.as_deref(), &text)
}

fn check_vocab(expected: &Vocabulary, path: Option<&Path>) -> Result<(), CliError> {
    if let Some(p) = path {
        let found = io::load_vocab(p)?;
        if found.hash() != expected.hash() {
            return Err(CliError::data(PipelineError::VocabMismatch {
                expected: expected.hash(),
                found: found.hash(),
            }));
        }
    }
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<(), CliError> {
    let gold = read_dataset(&a.data)?;
    let opts = options(&a.opts);
    let (report, dump) = if let Some(model_path) = &a.model {
        let model = io::load_model(model_path)?;
        check_vocab(&model.vocab, a.vocab.as_deref())?;
        let (r, p) = evaluate(&gold, |e| model.decode(&e.tokens, &opts)).map_err(CliError::data)?;
        (r, predictions_tsv(&p))
    } else {
        let vocab = match &a.vocab {
            Some(p) => io::load_vocab(p)?,
            None => build_vocabulary(gold.iter().map(|(_, e)| &e.tree)).map_err(CliError::data)?,
        };
        let (r, p) = evaluate(&gold, |e| -> Result<_, CliError> {
            let m = gold_scores(&e.tree, &vocab).map_err(CliError::data)?;
            Ok(decode_with(&m, &opts)?)
        })
        .map_err(CliError::data)?;
        (r, predictions_tsv(&p))
    };
    if let Some(p) = &a.dump {
        io::write(p, dump)?;
    }
    io::write_or_print(a.report.as_deref(), &report.to_text())
}

pub fn oracle_audit(a: AuditArgs) -> Result<(), CliError> {
    let report = if let Some(model_path) = &a.model {
        let model = io::load_model(model_path)?;
        let input = a.input.as_ref().expect("clap requires --input with --model");
        let mut matrices = Vec::new();
        for (_, tokens) in io::read_queries(&io::read(input)?) {
            matrices.push(model.scores(&tokens)?.map(|s| s as f64));
        }
        audit(matrices, a.bound)?
    } else {
        let path = a.scores.as_ref().expect("clap requires --scores without --model");
        let mut matrices = Vec::new();
        for (line, f) in read_score_files(path)? {
            matrices.push(to_matrix(path, line, &f)?);
        }
        audit(matrices, a.bound)?
    };
    print!("{}", report.to_text());
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<(), CliError> {
    let examples = read_partial_examples(&io::read(&a.data)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.data.display())))?;
    let vocab = match &a.vocab {
        Some(p) => io::load_vocab(p)?,
        None => build_vocabulary_partial(examples.iter().map(|e| &e.tree)).map_err(CliError::data)?,
    };
    print!("{}", corpus_stats(&examples, &vocab).to_text());
    Ok(())
}

pub fn convert(a: ConvertArgs) -> Result<(), CliError> {
    let text = match a.to {
        Target::Vocab => {
            let examples = read_partial_examples(&io::read(&a.data)?)
                .map_err(|e| CliError::Data(format!("{}: {e}", a.data.display())))?;
            build_vocabulary_partial(examples.iter().map(|e| &e.tree))
                .map_err(CliError::data)?
                .to_text()
        }
        Target::Parses => {
            let gold = read_dataset(&a.data)?;
            let vocab = match &a.vocab {
                Some(p) => io::load_vocab(p)?,
                None => build_vocabulary(gold.iter().map(|(_, e)| &e.tree)).map_err(CliError::data)?,
            };
            let hash = vocab.hash();
            let mut out = String::new();
            for (line, ex) in &gold {
                let ns = topgraph::build_node_set(&ex.tokens, &vocab);
                let parse = top_to_parse(&ex.tree, &ns)
                    .map_err(|source| CliError::data(PipelineError::Mapping { line: *line, source }))?;
                out.push_str(&write_parse(&parse, &hash));
            }
            out
        }
        Target::Scores => {
            let model_path = a
                .model
                .as_ref()
                .ok_or_else(|| CliError::Usage("--to scores needs --model".into()))?;
            let model = io::load_model(model_path)?;
            let hash = model.vocab.hash();
            let mut out = String::new();
            for (_, tokens) in io::read_queries(&io::read(&a.data)?) {
                let m = model.scores(&tokens)?;
                out.push_str(&ScoreFile::from_matrix(&m, &tokens, &hash).to_json());
                out.push('\n');
            }
            out
        }
    };
    io::write(&a.out, text)
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut out = String::new();
    for _ in 0..a.count {
        let tree = grammar_tree(&mut rng);
        let tokens: Vec<String> = tree.tokens().iter().map(|s| s.to_string()).collect();
        let ex = Example {
            raw: tokens.join(" "),
            tokens,
            tree,
        };
        out.push_str(&write_example_line(&ex));
        out.push('\n');
    }
    io::write(&a.out, out)
}
