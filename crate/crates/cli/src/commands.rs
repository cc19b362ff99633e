use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chronovec::align::align_chain;
use chronovec::checkpoint::Checkpoint;
use chronovec::cooc::{count_pairs, count_pairs_whole};
use chronovec::corpus::{build_vocabulary, load_corpus, PeriodizedCorpus, Vocabulary};
use chronovec::embedding::{read_embeddings, write_embeddings, EmbeddingSet, Method, Space};
use chronovec::eval::neighbors::{neighbors_report, trajectory_report};
use chronovec::eval::{
    known_shift_benchmark, norm_frequency_correlation, read_similarity_pairs, read_word_list,
    semantic_displacement, similarity_benchmark, smoothness_curve, smoothness_grid_report, temporal_neighbors,
    trajectory_export, EvalReport, PeriodPolicy,
};
use chronovec::methods::{build_embeddings, tsgns_set, tsgns_train_epochs, MethodConfig};
use chronovec::sgns::{init_model, Mode};
use chronovec::synthetic::generate;
use chronovec::Scalar;
use serde_json::json;

use crate::cli::{AlignCommand, Command, EvalCommand, Format, GlobalArgs, InputArgs, PeriodPair};
use crate::config::{Precision, RunConfig};
use crate::error::CliError;
use crate::provenance::Provenance;

type Result<T> = std::result::Result<T, CliError>;

/// Calls `$f::<f32>` or `$f::<f64>` per the configured precision.
macro_rules! with_precision {
    ($p:expr, $f:ident($($arg:expr),* $(,)?)) => {
        match $p {
            Precision::F32 => $f::<f32>($($arg),*),
            Precision::F64 => $f::<f64>($($arg),*),
        }
    };
}

pub struct Context {
    pub config: RunConfig,
    pub global: GlobalArgs,
    pub argv: Vec<String>,
}

impl Context {
    pub fn new(global: GlobalArgs, argv: Vec<String>) -> Result<Self> {
        let mut config = match &global.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = global.seed {
            config.set_seed(seed);
        }
        if let Some(w) = global.workers {
            config.method.train.workers = w;
        }
        if let Some(grid) = &global.alpha_grid {
            config.eval.smoothness.alphas = grid.clone();
        }
        if let Some(k) = global.top_k {
            config.eval.top_k = k;
        }
        Ok(Context { config, global, argv })
    }

    fn provenance(&self) -> Provenance {
        Provenance::new(self.argv.clone(), self.config.hash(), self.config.seed())
    }

    fn out(&self) -> Result<&Path> {
        self.global
            .out
            .as_deref()
            .ok_or_else(|| CliError::Usage("this command needs --out".into()))
    }

    fn load_corpus(&self, input: &InputArgs) -> Result<PeriodizedCorpus> {
        let c = &self.config.corpus;
        let inputs = if input.inputs.is_empty() { &c.inputs } else { &input.inputs };
        if inputs.is_empty() {
            return Err(CliError::Usage("no corpus given; pass --input or set corpus.inputs".into()));
        }
        let (corpus, stats) = load_corpus(inputs, c.format, &c.spec()?, &c.filter(), c.on_malformed)?;
        if stats.malformed > 0 {
            log::warn!(
                "skipped {} malformed line(s), first at {}",
                stats.malformed,
                stats.malformed_examples.first().map(String::as_str).unwrap_or("?")
            );
        }
        Ok(corpus)
    }

    fn vocabulary(&self, corpus: &PeriodizedCorpus, path: Option<&Path>) -> Result<Vocabulary> {
        match path {
            Some(p) => {
                let f = File::open(p).map_err(|e| CliError::io(p, e))?;
                let v = Vocabulary::read_tsv(BufReader::new(f))?;
                if v.is_empty() {
                    return Err(CliError::Data(format!("{}: empty vocabulary", p.display())));
                }
                Ok(v)
            }
            None => Ok(build_vocabulary(corpus, self.config.vocab.min_count, self.config.vocab.max_vocab)?),
        }
    }

    /// Writes `body` to `--out`, or stdout when absent.
    fn emit(&self, body: &str) -> Result<()> {
        match &self.global.out {
            Some(p) => std::fs::write(p, body).map_err(|e| CliError::io(p, e)),
            None => {
                print!("{body}");
                Ok(())
            }
        }
    }

    fn emit_report(&self, mut report: EvalReport) -> Result<()> {
        self.provenance().stamp_report(&mut report);
        let body = render(&report, self.global.format);
        self.emit(&body)
    }
}

fn render(report: &EvalReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Text => report.to_text(),
        Format::Csv => report.to_csv(),
        Format::Svg => report.to_svg(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn read_set(path: &Path) -> Result<EmbeddingSet<f64>> {
    Ok(read_embeddings(path)?)
}

fn period_of(set: &EmbeddingSet<f64>, label: &str) -> Result<usize> {
    set.period_index(label).ok_or_else(|| {
        CliError::Data(format!("unknown period {label:?}; the file has {}", set.periods().join(", ")))
    })
}

fn pair_of(set: &EmbeddingSet<f64>, p: &PeriodPair) -> Result<(usize, usize)> {
    let from = match &p.from {
        Some(l) => period_of(set, l)?,
        None => 0,
    };
    let to = match &p.to {
        Some(l) => period_of(set, l)?,
        None => set.num_periods() - 1,
    };
    Ok((from, to))
}

fn word_list(path: &Path) -> Result<Vec<String>> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(read_word_list(BufReader::new(f))?)
}

fn required(arg: &Option<PathBuf>, fallback: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    arg.clone()
        .or_else(|| fallback.clone())
        .ok_or_else(|| CliError::Usage(format!("{what} is required")))
}

pub fn run(ctx: &mut Context, command: Command) -> Result<()> {
    match command {
        Command::Ingest { input } => ingest(ctx, &input),
        Command::Vocab { input } => vocab(ctx, &input),
        Command::Count { input, vocab } => count(ctx, &input, vocab.vocab.as_deref()),
        Command::Train {
            method,
            input,
            vocab,
            checkpoint,
            checkpoint_every,
            resume,
        } => {
            let out = ctx.out()?.to_path_buf();
            let tagged_only = checkpoint.is_some() || resume.is_some();
            if tagged_only && method != Method::Tsgns {
                return Err(CliError::Usage("--checkpoint and --resume apply to tsgns only".into()));
            }
            if checkpoint_every == Some(0) {
                return Err(CliError::Usage("--checkpoint-every must be positive".into()));
            }
            let corpus = ctx.load_corpus(&input)?;
            let vocab = ctx.vocabulary(&corpus, vocab.vocab.as_deref())?;
            let ck = CheckpointArgs {
                save: checkpoint,
                every: checkpoint_every,
                resume,
            };
            with_precision!(ctx.config.precision, train(ctx, method, &corpus, &vocab, &ck, &out))
        }
        Command::Align {
            kind: AlignCommand::Procrustes { emb, maps },
        } => align(ctx, &emb, maps.as_deref()),
        Command::Eval { kind } => eval(ctx, kind),
        Command::Export { emb, provenance } => export(ctx, &emb, provenance),
        Command::Pipeline { input } => pipeline(ctx, &input),
        Command::Synth { truth } => synth(ctx, truth.as_deref()),
    }
}

fn ingest(ctx: &Context, input: &InputArgs) -> Result<()> {
    let corpus = ctx.load_corpus(input)?;
    for (label, seg) in corpus.segments() {
        log::info!("period {label}: {} records", seg.len());
    }
    let mut buf = ctx.provenance().header().into_bytes();
    corpus.write_tsv(&mut buf).expect("writing to memory");
    ctx.emit(&String::from_utf8(buf).expect("corpus text is UTF-8"))
}

fn vocab(ctx: &Context, input: &InputArgs) -> Result<()> {
    let corpus = ctx.load_corpus(input)?;
    let v = ctx.vocabulary(&corpus, None)?;
    log::info!("{} words with min_count {}", v.len(), ctx.config.vocab.min_count);
    let mut buf = ctx.provenance().header().into_bytes();
    v.write_tsv(&mut buf).expect("writing to memory");
    ctx.emit(&String::from_utf8(buf).expect("vocabulary text is UTF-8"))
}

fn count(ctx: &Context, input: &InputArgs, vocab_path: Option<&Path>) -> Result<()> {
    let corpus = ctx.load_corpus(input)?;
    let vocab = ctx.vocabulary(&corpus, vocab_path)?;
    let window = ctx.config.method.window;
    let tables = match ctx.global.period.as_deref() {
        Some("all") => vec![count_pairs_whole(&corpus, &vocab, window)?],
        Some(label) => {
            let t = corpus
                .labels()
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| CliError::Data(format!("unknown period {label:?}")))?;
            vec![count_pairs(&corpus, &vocab, window, t)?]
        }
        None => (0..corpus.num_periods())
            .map(|t| count_pairs(&corpus, &vocab, window, t))
            .collect::<chronovec::Result<_>>()?,
    };
    let mut buf = ctx.provenance().header().into_bytes();
    for c in &tables {
        c.write_tsv(&vocab, &mut buf).expect("writing to memory");
    }
    ctx.emit(&String::from_utf8(buf).expect("count text is UTF-8"))
}

struct CheckpointArgs {
    save: Option<PathBuf>,
    every: Option<u32>,
    resume: Option<PathBuf>,
}

fn train<T: Scalar>(
    ctx: &mut Context,
    method: Method,
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    ck: &CheckpointArgs,
    out: &Path,
) -> Result<()> {
    let mut set: EmbeddingSet<T> = if method == Method::Tsgns {
        train_tagged(ctx, corpus, vocab, ck)?
    } else {
        build_embeddings(method, corpus, vocab, &ctx.config.method)?
    };
    ctx.provenance().stamp_set(&mut set);
    write_embeddings(&set, out)?;
    log::info!("wrote {} x {} {method} vectors to {}", set.num_rows(), set.dim(), out.display());
    Ok(())
}

fn train_tagged<T: Scalar>(
    ctx: &mut Context,
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    ck: &CheckpointArgs,
) -> Result<EmbeddingSet<T>> {
    let (mut model, config, mut done) = match &ck.resume {
        Some(path) => {
            let c = Checkpoint::<T>::load(path)?;
            if c.words != vocab.words() || c.labels != corpus.labels() {
                return Err(CliError::Data(format!(
                    "{} was trained on a different vocabulary or period layout",
                    path.display()
                )));
            }
            let start = c.remaining_epochs()?.start;
            let mut config = c.config;
            config.train.workers = ctx.config.method.train.workers;
            log::info!("resuming after epoch {start} of {}", config.train.epochs);
            (c.model, config, start)
        }
        None => {
            let m = &ctx.config.method;
            let model = init_model(vocab.len(), corpus.num_periods(), m.dim, Mode::Tagged, m.tagged_contexts, m.train.seed)?;
            (model, m.clone(), 0)
        }
    };
    // The artifacts describe the schedule that actually ran.
    ctx.config.method = config.clone();
    let total = config.train.epochs;
    let step = ck.every.unwrap_or(total);
    while done < total {
        let end = (done + step).min(total);
        tsgns_train_epochs(&mut model, corpus, vocab, &config, done..end)?;
        done = end;
        if let Some(path) = &ck.save {
            let c = Checkpoint {
                model,
                words: vocab.words().to_vec(),
                labels: corpus.labels().to_vec(),
                config: config.clone(),
                epochs_done: done,
            };
            c.save(path)?;
            log::info!("checkpoint after epoch {done} at {}", path.display());
            model = c.model;
        }
    }
    let mut set = tsgns_set(&model, corpus, vocab, &config)?;
    set.set_meta("dim", config.dim.to_string());
    set.set_meta("epochs", config.train.epochs.to_string());
    Ok(set)
}

fn align(ctx: &Context, emb: &Path, maps_path: Option<&Path>) -> Result<()> {
    let out = ctx.out()?;
    let set = read_set(emb)?;
    if set.space() == Space::Shared {
        log::warn!("{} already shares one space across periods", emb.display());
    }
    let (mut aligned, maps) = align_chain(&set)?;
    for m in &maps {
        if m.degenerate {
            log::warn!("rotation {} -> {} is not unique", m.source_period, m.target_period);
        }
    }
    ctx.provenance().stamp_set(&mut aligned);
    write_embeddings(&aligned, out)?;
    if let Some(path) = maps_path {
        let mut w = create(path)?;
        let mut text = ctx.provenance().header();
        for m in &maps {
            text.push_str(&m.to_text());
        }
        w.write_all(text.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

fn eval(ctx: &Context, kind: EvalCommand) -> Result<()> {
    let cfg = &ctx.config.eval;
    let report = match kind {
        EvalCommand::Smoothness { input, methods, probes } => {
            let corpus = ctx.load_corpus(&input)?;
            let mut sc = cfg.smoothness.clone();
            if !probes.is_empty() {
                sc.probe_words = probes;
            }
            if let Some(label) = &ctx.global.period {
                sc.t = corpus
                    .labels()
                    .iter()
                    .position(|l| l == label)
                    .ok_or_else(|| CliError::Data(format!("unknown period {label:?}")))?;
            }
            let methods = if methods.is_empty() { cfg.smoothness_methods.clone() } else { methods };
            if methods.is_empty() {
                return Err(CliError::Usage("no methods to compare".into()));
            }
            let mut curves = Vec::new();
            for m in methods {
                let mc = &ctx.config.method;
                curves.push(with_precision!(ctx.config.precision, smoothness_curve(m, &corpus, &sc, mc))?);
            }
            smoothness_grid_report(&curves)
        }
        EvalCommand::Similarity { emb, pairs } => {
            let set = read_set(&emb)?;
            let path = required(&pairs, &cfg.similarity_pairs, "--pairs (or eval.similarity_pairs)")?;
            let f = File::open(&path).map_err(|e| CliError::io(&path, e))?;
            let pairs = read_similarity_pairs(BufReader::new(f))?;
            let policy: PeriodPolicy = ctx.global.period.as_deref().unwrap_or(&cfg.similarity_period).parse()?;
            similarity_benchmark(&set, &pairs, &policy)?.report(&policy)
        }
        EvalCommand::Norms {
            emb,
            input,
            vocab,
            words,
        } => {
            let set = read_set(&emb)?;
            let corpus = ctx.load_corpus(&input)?;
            let v = ctx.vocabulary(&corpus, vocab.vocab.as_deref())?;
            let list = match words.as_ref().or(cfg.norm_words.as_ref()) {
                Some(p) => Some(word_list(p)?),
                None => None,
            };
            norm_frequency_correlation(&set, &corpus, &v, list.as_deref())?
        }
        EvalCommand::Displacement { emb, periods } => {
            let set = read_set(&emb)?;
            let (t0, t1) = pair_of(&set, &periods)?;
            semantic_displacement(&set, t0, t1, cfg.top_k)?.report()
        }
        EvalCommand::Shifts {
            emb,
            periods,
            shifted,
            control,
        } => {
            let set = read_set(&emb)?;
            let (t0, t1) = pair_of(&set, &periods)?;
            let shifted = word_list(&required(&shifted, &cfg.shifted, "--shifted (or eval.shifted)")?)?;
            let control = word_list(&required(&control, &cfg.control, "--control (or eval.control)")?)?;
            known_shift_benchmark(&set, t0, t1, &shifted, &control)?.report(&set.periods()[t0], &set.periods()[t1])
        }
        EvalCommand::Neighbors { emb, word, targets } => {
            let set = read_set(&emb)?;
            let label = ctx
                .global
                .period
                .as_deref()
                .ok_or_else(|| CliError::Usage("eval neighbors needs --period".into()))?;
            let t = period_of(&set, label)?;
            let targets: Vec<usize> = targets.iter().map(|l| period_of(&set, l)).collect::<Result<_>>()?;
            let found = temporal_neighbors(&set, &word, t, cfg.top_k, &targets)?;
            neighbors_report(&word, label, &found)
        }
        EvalCommand::Trajectory { emb, word, periods } => {
            let set = read_set(&emb)?;
            let periods: Vec<usize> = if periods.is_empty() {
                (0..set.num_periods()).collect()
            } else {
                periods.iter().map(|l| period_of(&set, l)).collect::<Result<_>>()?
            };
            let points = trajectory_export(&set, &word, &periods, cfg.top_k)?;
            trajectory_report(&word, &points)
        }
    };
    ctx.emit_report(report)
}

fn export(ctx: &Context, emb: &Path, provenance: bool) -> Result<()> {
    if provenance {
        let p = Provenance::read(emb)?;
        let body = match ctx.global.format {
            Format::Json => {
                let v = json!({
                    "command": p.command_line(),
                    "argv": p.argv,
                    "config_hash": p.config_hash,
                    "seed": p.seed,
                    "version": p.version,
                });
                serde_json::to_string_pretty(&v).expect("json serializes") + "\n"
            }
            _ => p.command_line() + "\n",
        };
        return ctx.emit(&body);
    }
    // word2vec text layout, one line per observed (word, period) key.
    let set = read_set(emb)?;
    let only = ctx.global.period.as_deref().map(|l| period_of(&set, l)).transpose()?;
    let keys: Vec<(usize, usize)> = (0..set.num_periods())
        .filter(|t| only.is_none_or(|o| o == *t))
        .flat_map(|t| (0..set.num_words()).map(move |i| (i, t)))
        .filter(|&(i, t)| set.is_observed(i, t))
        .collect();
    let mut body = format!("{} {}\n", keys.len(), set.dim());
    for (i, t) in keys {
        let name = if only.is_some() {
            set.words()[i].clone()
        } else {
            format!("{}_{}", set.words()[i], set.periods()[t])
        };
        body.push_str(&name);
        for x in set.vector(i, t).to_dense(set.dim()) {
            body.push_str(&format!(" {x:.8e}"));
        }
        body.push('\n');
    }
    ctx.emit(&body)
}

fn pipeline(ctx: &Context, input: &InputArgs) -> Result<()> {
    let dir = ctx.out()?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let corpus = ctx.load_corpus(input)?;
    let vocab = ctx.vocabulary(&corpus, None)?;
    let write = |name: &str, text: &str| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))
    };
    write("config.toml", &ctx.config.to_toml())?;
    let mut buf = ctx.provenance().header().into_bytes();
    vocab.write_tsv(&mut buf).expect("writing to memory");
    write("vocab.tsv", &String::from_utf8(buf).expect("vocabulary text is UTF-8"))?;
    if ctx.config.pipeline.methods.is_empty() {
        return Err(CliError::Usage("pipeline.methods is empty".into()));
    }
    for &method in &ctx.config.pipeline.methods {
        log::info!("pipeline: {method}");
        let mc = &ctx.config.method;
        let set = with_precision!(ctx.config.precision, pipeline_embeddings(ctx, method, &corpus, &vocab, mc, dir))?;
        for (name, mut report) in pipeline_reports(ctx, &set, &corpus, &vocab)? {
            ctx.provenance().stamp_report(&mut report);
            write(&format!("{method}.{name}.json"), &(report.to_json() + "\n"))?;
        }
    }
    Ok(())
}

/// Trains, aligns when configured, writes `<method>.emb` and returns the
/// vectors at double precision for evaluation.
fn pipeline_embeddings<T: Scalar>(
    ctx: &Context,
    method: Method,
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    config: &MethodConfig,
    dir: &Path,
) -> Result<EmbeddingSet<f64>> {
    let mut set: EmbeddingSet<T> = build_embeddings(method, corpus, vocab, config)?;
    if set.space() == Space::Independent && ctx.config.pipeline.align {
        set = align_chain(&set)?.0;
    }
    ctx.provenance().stamp_set(&mut set);
    let path = dir.join(format!("{method}.emb"));
    write_embeddings(&set, &path)?;
    Ok(read_embeddings(&path)?)
}

fn pipeline_reports(
    ctx: &Context,
    set: &EmbeddingSet<f64>,
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
) -> Result<Vec<(&'static str, EvalReport)>> {
    let cfg = &ctx.config.eval;
    let mut out = Vec::new();
    let last = set.num_periods() - 1;
    if set.space() != Space::Independent {
        out.push(("displacement", semantic_displacement(set, 0, last, cfg.top_k)?.report()));
        if let (Some(s), Some(c)) = (&cfg.shifted, &cfg.control) {
            let b = known_shift_benchmark(set, 0, last, &word_list(s)?, &word_list(c)?)?;
            out.push(("shifts", b.report(&set.periods()[0], &set.periods()[last])));
        }
    }
    if let Some(p) = &cfg.similarity_pairs {
        let f = File::open(p).map_err(|e| CliError::io(p, e))?;
        let pairs = read_similarity_pairs(BufReader::new(f))?;
        let policy: PeriodPolicy = cfg.similarity_period.parse()?;
        out.push(("similarity", similarity_benchmark(set, &pairs, &policy)?.report(&policy)));
    }
    if set.num_periods() >= 3 && !set.is_sparse() {
        let list = cfg.norm_words.as_deref().map(word_list).transpose()?;
        out.push(("norms", norm_frequency_correlation(set, corpus, vocab, list.as_deref())?));
    }
    Ok(out)
}

fn synth(ctx: &Context, truth: Option<&Path>) -> Result<()> {
    let out = ctx.out()?;
    let s = generate(&ctx.config.synth)?;
    log::info!(
        "{} records over [{}, {}) in periods of {} years",
        s.records.len(),
        s.spec.start_year(),
        s.spec.end_year(),
        s.spec.period_length()
    );
    let mut w = create(out)?;
    w.write_all(ctx.provenance().header().as_bytes())
        .and_then(|_| s.write_ngrams(&mut w))
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(out, e))?;
    if let Some(path) = truth {
        let v = json!({
            "year_start": s.spec.start_year(),
            "year_end": s.spec.end_year(),
            "period_length": s.spec.period_length(),
            "labels": s.spec.labels(),
            "shifts": s.shifts,
            "trending": s.trending,
            "drifts": s.drifts,
            "stable": s.stable,
            "provenance": ctx.provenance(),
        });
        let text = serde_json::to_string_pretty(&v).expect("json serializes") + "\n";
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}
