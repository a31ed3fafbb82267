use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use defx::corpus::{
    compute_stats, lint_annotations, load_brat, load_jsonl, mine_coordination, save_jsonl,
    split_corpus, CorpusError, LintConfig, LintWarning, PunctTokenizer, SplitMode, Tokenizer,
    WhitespaceTokenizer,
};
use defx::eval::{bucket_report, compute_iaa, evaluate_with, Averaging};
use defx::interop::{
    from_scierc, number_symbols, read_answers, read_scierc, to_scierc, write_scierc, AnswerAligner,
    AnswerAlignment, AnswerConfig, FirstOccurrence, InteractiveChooser, OccurrenceChooser,
};
use defx::synthetic::{generate, SyntheticConfig};
use defx::tagger::{predict, read_model, train, write_model};
use defx::targeting::{
    expand_targets_with, mask_symbols, merge_predictions, read_samples, write_samples,
};
use defx::{AnnotatedSentence, SparseEncoder, TagLabel, TargetSample};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{PipelineConfig, Policy, TokenizerKind};
use crate::{
    AlignArgs, Coded, Command, ConvertArgs, EvalArgs, ExpandArgs, Format, IaaArgs, IngestArgs,
    MineArgs, PredictArgs, SplitArgs, StatsArgs, SynthArgs, TrainArgs,
};

/// One line of `predict` output.
#[derive(Debug, Serialize, Deserialize)]
struct PredictionLine {
    sentence_id: String,
    sample_index: usize,
    labels: Vec<TagLabel>,
    has_definition_prob: f64,
}

#[derive(Serialize)]
struct AlignmentLine<'a> {
    sentence_id: &'a str,
    symbol_ordinal: usize,
    #[serde(flatten)]
    alignment: AnswerAlignment,
}

/// Folds subcommand flags into the configuration.
pub fn apply_flags(cfg: &mut PipelineConfig, command: &Command) {
    match command {
        Command::Split(a) => {
            if a.by_sentence {
                cfg.split.mode = SplitMode::BySentence;
            } else if a.by_paper {
                cfg.split.mode = SplitMode::ByPaper;
            }
            if let Some(f) = a.dev_fraction {
                cfg.split.dev_fraction = f;
            }
            if let Some(f) = a.test_fraction {
                cfg.split.test_fraction = f;
            }
        }
        Command::Train(a) => {
            let t = &mut cfg.train;
            t.epochs = a.epochs.unwrap_or(t.epochs);
            t.batch_size = a.batch_size.unwrap_or(t.batch_size);
            t.max_seq_len = a.max_seq_len.unwrap_or(t.max_seq_len);
            t.learning_rate = a.lr.unwrap_or(t.learning_rate);
            t.l2_lambda = a.l2.unwrap_or(t.l2_lambda);
            t.classifier_loss_weight = a.lambda_cls.unwrap_or(t.classifier_loss_weight);
            cfg.min_count = a.min_count.unwrap_or(cfg.min_count);
        }
        Command::Predict(a) => cfg.gate |= a.gate,
        Command::Eval(a) => cfg.max_symbols = a.max_symbols.unwrap_or(cfg.max_symbols),
        Command::AlignAnswers(a) => cfg.policy = a.policy.unwrap_or(cfg.policy),
        _ => {}
    }
}

pub fn dispatch(cfg: &PipelineConfig, command: Command) -> anyhow::Result<Value> {
    match command {
        Command::Ingest(a) => ingest(cfg, a),
        Command::Stats(a) => stats(a),
        Command::Mine(a) => mine(a),
        Command::Split(a) => split(cfg, a),
        Command::Expand(a) => expand(cfg, a),
        Command::Train(a) => train_cmd(cfg, a),
        Command::Predict(a) => predict_cmd(cfg, a),
        Command::Eval(a) => eval(cfg, a),
        Command::Iaa(a) => iaa(a),
        Command::ConvertScierc(a) => convert(a),
        Command::AlignAnswers(a) => align(cfg, a),
        Command::Synth(a) => synth(cfg, a),
        Command::Config { .. } => unreachable!("handled before dispatch"),
    }
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).map_err(|e| Coded::io(format!("{}: {e}", path.display())))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Coded::io(format!("{}: {e}", dir.display())))?;
    }
    let f = File::create(path).map_err(|e| Coded::io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn corpus(path: &Path) -> anyhow::Result<Vec<AnnotatedSentence>> {
    let c = load_jsonl(path)?;
    info!("read {} sentences from {}", c.len(), path.display());
    Ok(c)
}

fn samples(path: &Path) -> anyhow::Result<Vec<TargetSample>> {
    let s = read_samples(open(path)?).with_context(|| path.display().to_string())?;
    info!("read {} samples from {}", s.len(), path.display());
    Ok(s)
}

/// `(text, ann)` pairs: every `.txt` of a directory in name order, or the
/// single file given.
fn brat_pairs(input: &Path, ann: Option<&Path>) -> anyhow::Result<Vec<(PathBuf, PathBuf)>> {
    if input.is_dir() {
        let mut texts: Vec<PathBuf> = std::fs::read_dir(input)
            .map_err(|e| Coded::io(format!("{}: {e}", input.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        texts.sort();
        if texts.is_empty() {
            return Err(Coded::input(format!("no .txt files in {}", input.display())).into());
        }
        Ok(texts
            .into_iter()
            .map(|t| {
                let a = t.with_extension("ann");
                (t, a)
            })
            .collect())
    } else {
        let a = ann.map_or_else(|| input.with_extension("ann"), Path::to_path_buf);
        Ok(vec![(input.to_path_buf(), a)])
    }
}

fn ingest(cfg: &PipelineConfig, a: IngestArgs) -> anyhow::Result<Value> {
    let tokenizer: Box<dyn Tokenizer> = match cfg.tokenizer {
        TokenizerKind::Punct => Box::new(PunctTokenizer),
        TokenizerKind::Whitespace => Box::new(WhitespaceTokenizer),
    };
    let sentences = match a.format {
        Format::Jsonl => corpus(&a.input)?,
        Format::Scierc => from_scierc(&read_scierc(open(&a.input)?)?)?,
        Format::Brat => {
            let pairs = brat_pairs(&a.input, a.ann.as_deref())?;
            let docs: Vec<Vec<AnnotatedSentence>> = pairs
                .par_iter()
                .map(|(t, n)| load_brat(t, n, tokenizer.as_ref()))
                .collect::<Result<_, CorpusError>>()?;
            docs.concat()
        }
    };
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = sentences.iter().find(|s| !seen.insert(s.id.as_str())) {
        return Err(Coded::input(format!("duplicate sentence id {:?}", dup.id)).into());
    }

    let lint = LintConfig {
        operator_names: a.operators.clone(),
        ..LintConfig::default()
    };
    let warnings: Vec<LintWarning> = sentences
        .par_iter()
        .map(|s| lint_annotations(s, &lint))
        .collect::<Vec<_>>()
        .concat();
    let mut by_kind: BTreeMap<String, usize> = BTreeMap::new();
    for w in &warnings {
        *by_kind
            .entry(
                serde_json::to_value(w.kind)?
                    .as_str()
                    .unwrap_or("?")
                    .to_string(),
            )
            .or_default() += 1;
    }

    save_jsonl(&a.output, &sentences)?;
    let lint_path = a
        .lint_report
        .unwrap_or_else(|| with_suffix(&a.output, ".lint.jsonl"));
    let mut w = create(&lint_path)?;
    for warning in &warnings {
        serde_json::to_writer(&mut w, warning)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    if !warnings.is_empty() {
        warn!(
            "{} lint warnings, see {}",
            warnings.len(),
            lint_path.display()
        );
    }

    Ok(json!({
        "command": "ingest",
        "output": a.output,
        "lint_report": lint_path,
        "sentences": sentences.len(),
        "symbols": sentences.iter().map(|s| s.symbols.len()).sum::<usize>(),
        "links": sentences.iter().map(|s| s.links.len()).sum::<usize>(),
        "lint_warnings": by_kind,
    }))
}

fn stats(a: StatsArgs) -> anyhow::Result<Value> {
    let c = corpus(&a.input)?;
    let st = compute_stats(&c);
    eprint!("{}", st.to_table());
    if let Some(out) = &a.output {
        write_json(out, &st)?;
    }
    Ok(json!({ "command": "stats", "sentences": c.len(), "stats": st }))
}

/// Joins tokens with spaces, except before closing punctuation.
fn detokenize(words: &[String]) -> String {
    let mut out = String::new();
    for w in words {
        let closing = matches!(w.as_str(), "," | "." | ";" | ":" | ")" | "]" | "?" | "!");
        if !out.is_empty() && !closing {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}

fn mine(a: MineArgs) -> anyhow::Result<Value> {
    let docs: Vec<(String, String)> = match a.format {
        Format::Jsonl => {
            let mut order: Vec<String> = Vec::new();
            let mut texts: HashMap<String, Vec<String>> = HashMap::new();
            for s in corpus(&a.input)? {
                let entry = texts.entry(s.paper_id.clone()).or_insert_with(|| {
                    order.push(s.paper_id.clone());
                    Vec::new()
                });
                entry.push(s.text);
            }
            order
                .into_iter()
                .map(|p| {
                    let t = texts.remove(&p).unwrap_or_default().join(" ");
                    (p, t)
                })
                .collect()
        }
        Format::Scierc => read_scierc(open(&a.input)?)?
            .into_iter()
            .map(|r| {
                let text = r
                    .sentences
                    .iter()
                    .map(|s| detokenize(s))
                    .collect::<Vec<_>>();
                (r.doc_key, text.join(" "))
            })
            .collect(),
        Format::Brat => brat_pairs(&a.input, None)?
            .into_iter()
            .map(|(t, _)| {
                let id = t
                    .file_stem()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned();
                std::fs::read_to_string(&t)
                    .map(|text| (id, text))
                    .map_err(|e| Coded::io(format!("{}: {e}", t.display())).into())
            })
            .collect::<anyhow::Result<_>>()?,
    };
    let ranking = mine_coordination(&docs);
    if let Some(out) = &a.output {
        write_json(out, &ranking)?;
    }
    let top: Vec<_> = ranking.iter().take(a.top).collect();
    Ok(json!({ "command": "mine", "documents": ranking.len(), "top": top }))
}

fn split(cfg: &PipelineConfig, a: SplitArgs) -> anyhow::Result<Value> {
    let c = corpus(&a.input)?;
    let parts = split_corpus(&c, &cfg.split)?;
    std::fs::create_dir_all(&a.output)
        .map_err(|e| Coded::io(format!("{}: {e}", a.output.display())))?;
    let mut summary = serde_json::Map::new();
    for (name, part) in [
        ("train", &parts.train),
        ("dev", &parts.dev),
        ("test", &parts.test),
    ] {
        let path = a.output.join(format!("{name}.jsonl"));
        save_jsonl(&path, part)?;
        let mut papers: Vec<&str> = part.iter().map(|s| s.paper_id.as_str()).collect();
        papers.sort_unstable();
        papers.dedup();
        summary.insert(
            name.into(),
            json!({ "path": path, "sentences": part.len(), "papers": papers.len() }),
        );
    }
    let mode = match cfg.split.mode {
        SplitMode::ByPaper => "by-paper",
        SplitMode::BySentence => "by-sentence",
    };
    Ok(json!({ "command": "split", "mode": mode, "splits": summary }))
}

fn expand(cfg: &PipelineConfig, a: ExpandArgs) -> anyhow::Result<Value> {
    let c = corpus(&a.input)?;
    let out: Vec<TargetSample> = c
        .par_iter()
        .map(|s| expand_targets_with(s, &cfg.projection))
        .collect::<Vec<_>>()
        .concat();
    let mut w = create(&a.output)?;
    write_samples(&mut w, &out, a.render_markers)
        .with_context(|| format!("writing {}", a.output.display()))?;
    Ok(json!({
        "command": "expand",
        "output": a.output,
        "sentences": c.len(),
        "samples": out.len(),
        "with_definition": out.iter().filter(|s| s.has_definition).count(),
    }))
}

fn train_cmd(cfg: &PipelineConfig, a: TrainArgs) -> anyhow::Result<Value> {
    let train_set = samples(&a.input)?;
    let dev_set = match &a.dev {
        Some(p) => samples(p)?,
        None => Vec::new(),
    };
    let encoder = SparseEncoder::fit(&train_set, cfg.min_count, cfg.encoder.clone())?;
    info!("{} features", encoder.dictionary.len());
    let report = train(&train_set, &dev_set, &encoder, &cfg.train)?;

    let enc_path = a
        .dictionary
        .unwrap_or_else(|| with_suffix(&a.output, ".features"));
    let mut w = create(&enc_path)?;
    encoder
        .write(&mut w)
        .with_context(|| format!("writing {}", enc_path.display()))?;
    write_model(&report.model, create(&a.output)?)?;
    if let Some(h) = &a.history {
        write_json(h, &report.history)?;
    }
    let best = report.history.iter().find(|r| r.epoch == report.best_epoch);
    Ok(json!({
        "command": "train",
        "model": a.output,
        "dictionary": enc_path,
        "train_samples": train_set.len(),
        "dev_samples": dev_set.len(),
        "features": encoder.dictionary.len(),
        "dictionary_hash": report.model.dictionary_hash,
        "epochs_run": report.history.len(),
        "best_epoch": report.best_epoch,
        "objective": best.map(|r| r.objective),
        "dev_macro_f1": best.and_then(|r| r.dev_macro_f1),
        "truncated": report.truncated,
    }))
}

fn load_encoder_and_model(
    model: &Path,
    dictionary: Option<PathBuf>,
) -> anyhow::Result<(SparseEncoder, defx::CrfModel)> {
    let enc_path = dictionary.unwrap_or_else(|| with_suffix(model, ".features"));
    let encoder =
        SparseEncoder::read(open(&enc_path)?).with_context(|| enc_path.display().to_string())?;
    let hash = encoder.dictionary.fingerprint();
    let m = read_model(open(model)?, Some(&hash)).with_context(|| model.display().to_string())?;
    Ok((encoder, m))
}

fn predict_cmd(cfg: &PipelineConfig, a: PredictArgs) -> anyhow::Result<Value> {
    let input = samples(&a.input)?;
    let (encoder, model) = load_encoder_and_model(&a.model, a.dictionary)?;
    let preds = predict(&model, &input, &encoder, cfg.gate)?;

    let mut w = create(&a.output)?;
    for (s, p) in input.iter().zip(&preds) {
        let line = PredictionLine {
            sentence_id: s.sentence_id.clone(),
            sample_index: s.sample_index,
            labels: p.labels.clone(),
            has_definition_prob: p.has_definition_prob,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;

    let mut defs = None;
    if let Some(path) = &a.definitions {
        let labels: Vec<Vec<TagLabel>> = preds.iter().map(|p| p.labels.clone()).collect();
        let merged = merge_predictions(&input, &labels)?;
        let mut w = create(path)?;
        for m in &merged {
            serde_json::to_writer(&mut w, m)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        defs = Some(merged.len());
    }
    Ok(json!({
        "command": "predict",
        "output": a.output,
        "samples": input.len(),
        "gate": cfg.gate,
        "with_definition": preds.iter().filter(|p| p.labels.contains(&TagLabel::BDef)).count(),
        "definitions": defs,
    }))
}

fn read_predictions(path: &Path) -> anyhow::Result<Vec<PredictionLine>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p = serde_json::from_str(&line)
            .map_err(|e| Coded::input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(p);
    }
    Ok(out)
}

fn eval(cfg: &PipelineConfig, a: EvalArgs) -> anyhow::Result<Value> {
    let gold = samples(&a.gold)?;
    let preds = read_predictions(&a.input)?;
    let mut by_key: HashMap<(&str, usize), &PredictionLine> = HashMap::new();
    for p in &preds {
        if by_key
            .insert((p.sentence_id.as_str(), p.sample_index), p)
            .is_some()
        {
            return Err(Coded::input(format!(
                "duplicate prediction for {}#{}",
                p.sentence_id, p.sample_index
            ))
            .into());
        }
    }
    if preds.len() != gold.len() {
        return Err(Coded::input(format!(
            "{} predictions for {} gold samples",
            preds.len(),
            gold.len()
        ))
        .into());
    }
    let (mut g, mut p, mut counts) = (Vec::new(), Vec::new(), Vec::new());
    for s in &gold {
        let labels = s.labels.clone().ok_or_else(|| {
            Coded::input(format!(
                "gold sample {}#{} has no labels",
                s.sentence_id, s.sample_index
            ))
        })?;
        let pred = by_key
            .get(&(s.sentence_id.as_str(), s.sample_index))
            .ok_or_else(|| {
                Coded::input(format!(
                    "no prediction for {}#{}",
                    s.sentence_id, s.sample_index
                ))
            })?;
        g.push(labels);
        p.push(pred.labels.clone());
        counts.push(s.symbol_count());
    }
    let averaging = if a.per_sample {
        Averaging::PerSample
    } else {
        Averaging::Pooled
    };
    let report = evaluate_with(&g, &p, &counts, averaging)?;
    let buckets = bucket_report(&report, cfg.max_symbols);

    let table = format!("{}\n{}", report.to_table(), buckets.to_table());
    match &a.table {
        Some(path) => write_text(path, &table)?,
        None => eprint!("{table}"),
    }
    let full = json!({ "report": report, "buckets": buckets });
    if let Some(out) = &a.output {
        write_json(out, &full)?;
    }
    if let Some(csv) = &a.emit_plot_data {
        write_text(csv, &buckets.to_csv())?;
    }
    Ok(json!({
        "command": "eval",
        "samples": report.samples,
        "macro_precision": report.macro_precision,
        "macro_recall": report.macro_recall,
        "macro_f1": report.macro_f1,
        "per_class": report.per_class,
        "flags": report.flags,
    }))
}

fn iaa(a: IaaArgs) -> anyhow::Result<Value> {
    let first = corpus(&a.input)?;
    let second = corpus(&a.other)?;
    let report = compute_iaa(&first, &second)?;
    if let Some(out) = &a.output {
        write_json(out, &report)?;
    }
    Ok(json!({ "command": "iaa", "report": report }))
}

fn convert(a: ConvertArgs) -> anyhow::Result<Value> {
    let c = corpus(&a.input)?;
    let records = to_scierc(&c);
    let mut w = create(&a.output)?;
    write_scierc(&mut w, &records).with_context(|| format!("writing {}", a.output.display()))?;
    Ok(json!({
        "command": "convert-scierc",
        "output": a.output,
        "documents": records.len(),
        "sentences": c.len(),
        "relations": records.iter().flat_map(|r| &r.relations).map(Vec::len).sum::<usize>(),
    }))
}

fn align(cfg: &PipelineConfig, a: AlignArgs) -> anyhow::Result<Value> {
    let c = corpus(&a.input)?;
    let by_id: HashMap<&str, &AnnotatedSentence> = c.iter().map(|s| (s.id.as_str(), s)).collect();
    let answers = read_answers(open(&a.answers)?)?;
    let aligner = AnswerAligner::new(&AnswerConfig::default())?;

    let stdin = std::io::stdin();
    let mut interactive;
    let mut first = FirstOccurrence;
    let chooser: &mut dyn OccurrenceChooser = match cfg.policy {
        Policy::FirstOccurrence => &mut first,
        Policy::Interactive => {
            interactive = InteractiveChooser::new(stdin.lock(), std::io::stderr());
            &mut interactive
        }
    };

    let mut w = create(&a.output)?;
    let mut statuses: BTreeMap<String, usize> = BTreeMap::new();
    for rec in &answers {
        let s = by_id
            .get(rec.sentence_id.as_str())
            .ok_or_else(|| Coded::input(format!("unknown sentence {:?}", rec.sentence_id)))?;
        let masked = mask_symbols(s);
        let tokens = number_symbols(&masked.tokens, &masked.symbol_positions);
        let alignment = aligner
            .align(&tokens, rec.symbol_ordinal, &rec.answer, chooser)
            .with_context(|| format!("sentence {}", rec.sentence_id))?;
        let status = serde_json::to_value(alignment.status)?;
        *statuses
            .entry(status.as_str().unwrap_or("?").to_string())
            .or_default() += 1;
        let line = AlignmentLine {
            sentence_id: &rec.sentence_id,
            symbol_ordinal: rec.symbol_ordinal,
            alignment,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(json!({
        "command": "align-answers",
        "output": a.output,
        "answers": answers.len(),
        "statuses": statuses,
    }))
}

fn synth(cfg: &PipelineConfig, a: SynthArgs) -> anyhow::Result<Value> {
    let sc = SyntheticConfig {
        sentences: a.sentences,
        papers: a.papers,
        seed: cfg.seed,
    };
    let c = generate(&sc);
    save_jsonl(&a.output, &c)?;
    Ok(json!({
        "command": "synth",
        "output": a.output,
        "sentences": c.len(),
        "papers": a.papers,
    }))
}
