//! The `pivotsmith` command-line tool.
//!
//! Every subcommand reads standard input and writes standard output when its
//! file flags are omitted or given as `-`. Usage errors exit with status 2,
//! data errors with status 1.

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::combine::combine_tables;
use crate::error::Error;
use crate::eval::{bleu4, DecodeConfig, Decoder};
use crate::features::{annotate_table, Scorer};
use crate::morph::{FcCounter, FcModel, LexiconBuilder, MorphFeature, MorphLexicon, RuleMapping};
use crate::table::{
    parse_phrase_table, parse_reordering_table, write_phrase_table, write_reordering_entry,
    Alignment, EntryReader, EntryWriter, LogLinearWeights, Manifest, ParseOptions, Phrase,
};
use crate::triangulate::{
    filter_top_n, pivot_stream, PivotConfig, PivotSizeEstimator, SortOptions, DEFAULT_TOP_N,
};

#[derive(Parser, Debug)]
#[command(
    name = "pivotsmith",
    version,
    about = "Phrase-table triangulation for pivot translation"
)]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Scratch directory for external sorting (overrides PIVOTSMITH_TMPDIR).
    #[arg(long, global = true)]
    tmpdir: Option<PathBuf>,
    /// In-memory buffer per external sorter, in MiB.
    #[arg(long, global = true, default_value_t = 128)]
    sort_buffer_mb: usize,
    /// Log progress to standard error.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Triangulate source-pivot and pivot-target tables.
    Pivot(PivotArgs),
    /// Keep the top-n candidates per source phrase.
    Filter(FilterArgs),
    /// Append connectivity or morphology scores as extra features.
    Annotate(AnnotateArgs),
    /// Build a morphological lexicon from tagged corpora.
    Lexicon(LexiconArgs),
    /// Print a rules file, or test one value pair against it.
    RulesCheck(RulesCheckArgs),
    /// Train a feature-combination translation model.
    FcTrain(FcTrainArgs),
    /// Merge tables, keeping duplicate pairs as separate entries.
    Combine(CombineArgs),
    /// Translate tokenized sentences with a monotone decoder.
    Decode(DecodeArgs),
    /// Score hypotheses against references with corpus BLEU-4.
    Bleu(BleuArgs),
    /// Summarize a phrase table.
    Stats(StatsArgs),
    /// Count the pairs a pivot join would compute, without computing them.
    EstimateSize(EstimateArgs),
}

#[derive(Args, Debug)]
struct PivotArgs {
    /// Source-pivot table.
    #[arg(long)]
    sp: Option<PathBuf>,
    /// Pivot-target table.
    #[arg(long)]
    pt: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    top_n: usize,
    #[arg(long)]
    weights_sp: Option<PathBuf>,
    #[arg(long)]
    weights_pt: Option<PathBuf>,
    /// Drop composed pairs with fewer projected alignment links.
    #[arg(long, default_value_t = 0)]
    min_links: usize,
    /// Source-pivot reordering table; only checked for well-formedness.
    #[arg(long)]
    reordering_sp: Option<PathBuf>,
    /// Pivot-target reordering table.
    #[arg(long, requires = "reordering_out")]
    reordering_pt: Option<PathBuf>,
    /// Where to write the composed reordering table.
    #[arg(long, requires = "reordering_pt")]
    reordering_out: Option<PathBuf>,
    #[arg(long, default_value_t = Phrase::DEFAULT_MAX_LEN)]
    max_phrase_len: usize,
}

#[derive(Args, Debug)]
struct FilterArgs {
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    top_n: usize,
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Conn,
    Rules,
    Induced,
}

#[derive(Args, Debug)]
struct AnnotateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Rules file (default: the bundled Arabic-Hebrew mapping).
    #[arg(long, conflicts_with = "fc_model")]
    rules: Option<PathBuf>,
    /// Swap the source and target columns of the rules.
    #[arg(long)]
    transpose_rules: bool,
    #[arg(long)]
    fc_model: Option<PathBuf>,
    #[arg(long)]
    src_lex: Option<PathBuf>,
    #[arg(long)]
    tgt_lex: Option<PathBuf>,
    /// Features for rule scoring, e.g. `gen,num,det,pos`.
    #[arg(long, default_value = "gen,num,det,pos")]
    features: String,
    /// Column names as `NAME_S,NAME_T`.
    #[arg(long)]
    names: Option<String>,
}

#[derive(Args, Debug)]
struct LexiconArgs {
    /// Tagged corpora; counts are added across files.
    #[arg(short, long)]
    input: Vec<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Include POS in feature-combination tags.
    #[arg(long)]
    pos_in_fc: bool,
}

#[derive(Args, Debug)]
struct RulesCheckArgs {
    /// Rules file (default: the bundled mapping).
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    transpose: bool,
    /// `FEATURE SRC_VALUE TGT_VALUE` to test.
    #[arg(num_args = 3, value_names = ["FEATURE", "SRC_VALUE", "TGT_VALUE"])]
    pair: Vec<String>,
}

#[derive(Args, Debug)]
struct FcTrainArgs {
    /// Tokenized source sentences, one per line.
    #[arg(long)]
    src: PathBuf,
    /// Tokenized target sentences, one per line.
    #[arg(long)]
    tgt: PathBuf,
    /// `i-j` alignments, one line per sentence pair.
    #[arg(long)]
    align: PathBuf,
    #[arg(long)]
    src_lex: PathBuf,
    #[arg(long)]
    tgt_lex: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CombineArgs {
    /// Input as `FILE=NAME`; NAME defaults to the file stem. `-=NAME` reads stdin.
    #[arg(short, long, required = true, allow_hyphen_values = true)]
    input: Vec<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = Phrase::DEFAULT_MAX_LEN)]
    max_phrase_len: usize,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    unknown_penalty: f64,
}

#[derive(Args, Debug)]
struct BleuArgs {
    #[arg(long)]
    hyp: Option<PathBuf>,
    /// Reference file, line-aligned with the hypotheses; repeatable.
    #[arg(long = "ref", required = true)]
    refs: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = Phrase::DEFAULT_MAX_LEN)]
    max_phrase_len: usize,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    sp: PathBuf,
    #[arg(long)]
    pt: PathBuf,
    #[arg(long, default_value_t = Phrase::DEFAULT_MAX_LEN)]
    max_phrase_len: usize,
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("pivotsmith: --threads must be at least 1");
            return 2;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("pivotsmith: cannot start worker threads: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("pivotsmith: {msg}");
            2
        }
        Err(Failure::Data(msg)) => {
            eprintln!("pivotsmith: {msg}");
            1
        }
    }
}

enum Failure {
    Usage(String),
    Data(String),
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Prefixes an error with the file it came from.
trait Context<T> {
    fn at(self, what: &dyn std::fmt::Display) -> CliResult<T>;
}

impl<T, E: Into<Error>> Context<T> for std::result::Result<T, E> {
    fn at(self, what: &dyn std::fmt::Display) -> CliResult<T> {
        self.map_err(|e| Failure::Data(format!("{what}: {}", e.into())))
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn label(path: Option<&Path>) -> String {
    match path {
        Some(p) if p != Path::new("-") => p.display().to_string(),
        _ => "<stdin>".into(),
    }
}

fn is_stdin(path: Option<&Path>) -> bool {
    path.is_none_or(|p| p == Path::new("-"))
}

fn open_in(path: Option<&Path>) -> CliResult<Box<dyn BufRead>> {
    if is_stdin(path) {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let p = path.expect("file path");
    let f = File::open(p).at(&p.display())?;
    Ok(Box::new(BufReader::with_capacity(1 << 16, f)))
}

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) if p != Path::new("-") => {
            let f = File::create(p).at(&p.display())?;
            Ok(Box::new(BufWriter::with_capacity(1 << 16, f)))
        }
        _ => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

/// Rejects commands that would read standard input more than once.
/// `inputs` default to stdin when absent; `optional` ones are skipped.
fn one_stdin(inputs: &[Option<&Path>], optional: &[Option<&Path>]) -> CliResult {
    let optional = optional.iter().filter(|p| p.is_some());
    if inputs
        .iter()
        .chain(optional)
        .filter(|p| is_stdin(**p))
        .count()
        > 1
    {
        return Err(usage("at most one input can come from standard input"));
    }
    Ok(())
}

fn read_weights(path: Option<&Path>) -> CliResult<LogLinearWeights> {
    match path {
        None => Ok(LogLinearWeights::default()),
        Some(p) => LogLinearWeights::parse(open_in(Some(p))?).at(&label(Some(p))),
    }
}

fn read_table(path: Option<&Path>, max_len: usize) -> CliResult<crate::table::PhraseTable> {
    let opts = ParseOptions {
        max_phrase_len: max_len,
    };
    parse_phrase_table(open_in(path)?, &opts).at(&label(path))
}

fn entry_reader(path: Option<&Path>, max_len: usize) -> CliResult<EntryReader<Box<dyn BufRead>>> {
    let opts = ParseOptions {
        max_phrase_len: max_len,
    };
    EntryReader::new(open_in(path)?, opts).at(&label(path))
}

fn dispatch(cli: &Cli) -> CliResult {
    let sort = SortOptions {
        tmpdir: cli.tmpdir.clone(),
        budget: cli.sort_buffer_mb.max(1) << 20,
    };
    match &cli.command {
        Command::Pivot(a) => pivot(a, &sort),
        Command::Filter(a) => filter(a),
        Command::Annotate(a) => annotate(a),
        Command::Lexicon(a) => lexicon(a),
        Command::RulesCheck(a) => rules_check(a),
        Command::FcTrain(a) => fc_train(a),
        Command::Combine(a) => combine(a),
        Command::Decode(a) => decode(a),
        Command::Bleu(a) => bleu(a),
        Command::Stats(a) => stats(a),
        Command::EstimateSize(a) => estimate(a),
    }
}

fn pivot(a: &PivotArgs, sort: &SortOptions) -> CliResult {
    if a.top_n == 0 {
        return Err(usage("--top-n must be at least 1"));
    }
    let sp_path = a.sp.as_deref();
    let pt_path = Some(a.pt.as_path());
    one_stdin(&[sp_path, pt_path], &[a.reordering_pt.as_deref()])?;
    let cfg = PivotConfig {
        top_n: a.top_n,
        weights_sp: read_weights(a.weights_sp.as_deref())?,
        weights_pt: read_weights(a.weights_pt.as_deref())?,
        min_alignment_links: a.min_links,
        ..PivotConfig::default()
    };
    if let Some(p) = &a.reordering_sp {
        let t = parse_reordering_table(open_in(Some(p))?).at(&p.display())?;
        info!(
            "{}: {} reordering entries (not used by the composition)",
            p.display(),
            t.len()
        );
    }
    let pt_reo = match &a.reordering_pt {
        Some(p) => Some(parse_reordering_table(open_in(Some(p))?).at(&label(Some(p)))?),
        None => None,
    };

    let mut sp = entry_reader(sp_path, a.max_phrase_len)?;
    let mut pt = entry_reader(pt_path, a.max_phrase_len)?;
    let sp_manifest = sp.manifest().clone();
    let pt_manifest = pt.manifest().clone();
    let mut out =
        EntryWriter::new(open_out(a.output.as_deref())?, &Manifest::new()).at(&"output")?;
    let mut reo_out = match &a.reordering_out {
        Some(p) => Some(open_out(Some(p))?),
        None => None,
    };
    let stats = pivot_stream(
        sp.by_ref(),
        &sp_manifest,
        pt.by_ref(),
        &pt_manifest,
        &cfg,
        sort,
        pt_reo.as_ref(),
        |o| {
            out.write_entry(&o.entry)?;
            if let (Some(w), Some(r)) = (reo_out.as_mut(), o.reordering.as_ref()) {
                write_reordering_entry(w, r)?;
            }
            Ok(())
        },
    )
    .map_err(|e| Failure::Data(format!("pivot: {e}")))?;
    out.finish().at(&"output")?;
    if let Some(mut w) = reo_out {
        w.flush().at(&"reordering output")?;
    }
    info!(
        "pivot: sp {}/{} kept, pt {}/{} kept, {} shared pivots, {} contributions, {} pairs written, {} spilled runs",
        stats.sp_kept,
        stats.sp_entries,
        stats.pt_kept,
        stats.pt_entries,
        stats.shared_pivots,
        stats.contributions,
        stats.emitted,
        stats.spilled_runs
    );
    Ok(())
}

fn filter(a: &FilterArgs) -> CliResult {
    if a.top_n == 0 {
        return Err(usage("--top-n must be at least 1"));
    }
    one_stdin(&[a.input.as_deref()], &[a.weights.as_deref()])?;
    let weights = read_weights(a.weights.as_deref())?;
    let table = read_table(a.input.as_deref(), Phrase::DEFAULT_MAX_LEN)?;
    let kept = filter_top_n(&table, &weights, a.top_n).at(&"filter")?;
    write_phrase_table(&kept, open_out(a.output.as_deref())?).at(&"output")
}

fn read_lexicon(path: Option<&Path>, flag: &str) -> CliResult<MorphLexicon> {
    let p = path.ok_or_else(|| usage(format!("{flag} is required for this scorer")))?;
    MorphLexicon::read(open_in(Some(p))?).at(&label(Some(p)))
}

fn annotate(a: &AnnotateArgs) -> CliResult {
    let features = MorphFeature::parse_set(&a.features).map_err(|e| usage(e.to_string()))?;
    one_stdin(
        &[a.input.as_deref()],
        &[&a.src_lex, &a.tgt_lex, &a.rules, &a.fc_model].map(|p| p.as_deref()),
    )?;
    let (src_lex, tgt_lex, rules, model);
    let scorer = match a.kind {
        Kind::Conn => Scorer::Connectivity,
        Kind::Rules => {
            src_lex = read_lexicon(a.src_lex.as_deref(), "--src-lex")?;
            tgt_lex = read_lexicon(a.tgt_lex.as_deref(), "--tgt-lex")?;
            let r = match &a.rules {
                Some(p) => RuleMapping::load(open_in(Some(p))?).at(&p.display())?,
                None => RuleMapping::bundled(),
            };
            rules = if a.transpose_rules { r.transposed() } else { r };
            Scorer::Rules {
                src_lex: &src_lex,
                tgt_lex: &tgt_lex,
                rules: &rules,
                features: &features,
            }
        }
        Kind::Induced => {
            src_lex = read_lexicon(a.src_lex.as_deref(), "--src-lex")?;
            tgt_lex = read_lexicon(a.tgt_lex.as_deref(), "--tgt-lex")?;
            let p = a
                .fc_model
                .as_deref()
                .ok_or_else(|| usage("--fc-model is required for --kind induced"))?;
            model = FcModel::read(open_in(Some(p))?).at(&p.display())?;
            Scorer::Induced {
                src_lex: &src_lex,
                tgt_lex: &tgt_lex,
                model: &model,
            }
        }
    };
    let (default_s, default_t) = scorer.default_names();
    let names = match &a.names {
        None => (default_s.to_string(), default_t.to_string()),
        Some(n) => match n.split_once(',') {
            Some((s, t)) if !s.trim().is_empty() && !t.trim().is_empty() => {
                (s.trim().to_string(), t.trim().to_string())
            }
            _ => return Err(usage("--names expects `NAME_S,NAME_T`")),
        },
    };
    let table = read_table(a.input.as_deref(), Phrase::DEFAULT_MAX_LEN)?;
    let out = annotate_table(table, &scorer, (&names.0, &names.1)).at(&"annotate")?;
    write_phrase_table(&out, open_out(a.output.as_deref())?).at(&"output")
}

fn lexicon(a: &LexiconArgs) -> CliResult {
    let inputs: Vec<Option<&Path>> = if a.input.is_empty() {
        vec![None]
    } else {
        a.input.iter().map(|p| Some(p.as_path())).collect()
    };
    one_stdin(&inputs, &[])?;
    let mut builder = LexiconBuilder::new().with_pos_in_fc(a.pos_in_fc);
    for p in inputs {
        builder.add_corpus(open_in(p)?).at(&label(p))?;
    }
    builder
        .finish()
        .write(open_out(a.output.as_deref())?)
        .at(&"output")
}

fn rules_check(a: &RulesCheckArgs) -> CliResult {
    let rules = match &a.rules {
        Some(p) => RuleMapping::load(open_in(Some(p))?).at(&label(Some(p)))?,
        None => RuleMapping::bundled(),
    };
    let rules = if a.transpose {
        rules.transposed()
    } else {
        rules
    };
    let mut out = open_out(None)?;
    if let [f, s, t] = a.pair.as_slice() {
        let f: MorphFeature = f.parse().map_err(|e: Error| usage(e.to_string()))?;
        let verdict = if rules.allows(f, s, t) {
            "allowed"
        } else {
            "rejected"
        };
        writeln!(out, "{f}\t{s}\t{t}\t{verdict}").at(&"output")?;
        return out.flush().at(&"output");
    }
    rules.write(&mut out).at(&"output")
}

fn fc_train(a: &FcTrainArgs) -> CliResult {
    one_stdin(
        &[&a.src, &a.tgt, &a.align, &a.src_lex, &a.tgt_lex].map(|p| Some(p.as_path())),
        &[],
    )?;
    let src_lex = read_lexicon(Some(&a.src_lex), "--src-lex")?;
    let tgt_lex = read_lexicon(Some(&a.tgt_lex), "--tgt-lex")?;
    let mut src = open_in(Some(&a.src))?.lines();
    let mut tgt = open_in(Some(&a.tgt))?.lines();
    let mut align = open_in(Some(&a.align))?.lines();
    let split = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    let mut counter = FcCounter::new();
    let mut line = 0usize;
    loop {
        line += 1;
        match (src.next(), tgt.next(), align.next()) {
            (None, None, None) => break,
            (Some(s), Some(t), Some(l)) => {
                let s = s.at(&a.src.display())?;
                let t = t.at(&a.tgt.display())?;
                let l = l.at(&a.align.display())?;
                let alignment = Alignment::parse(&l)
                    .map_err(|e| Error::parse(line, e.to_string()))
                    .at(&a.align.display())?;
                counter
                    .add_sentence(&split(&s), &split(&t), &alignment, &src_lex, &tgt_lex)
                    .map_err(|e| Error::parse(line, e.to_string()))
                    .at(&a.align.display())?;
            }
            _ => {
                return Err(Failure::Data(format!(
                    "sentence/alignment count mismatch at line {line}: source, target and alignment files differ in length"
                )))
            }
        }
    }
    info!("fc-train: {} sentence pairs", counter.sentences());
    counter
        .finish()
        .write(open_out(a.output.as_deref())?)
        .at(&"output")
}

fn combine(a: &CombineArgs) -> CliResult {
    let mut specs = Vec::new();
    for spec in &a.input {
        let (file, name) = match spec.rsplit_once('=') {
            Some((f, n)) => (PathBuf::from(f), n.to_string()),
            None => {
                let f = PathBuf::from(spec);
                let stem = f
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .filter(|s| !s.is_empty() && spec != "-")
                    .ok_or_else(|| usage(format!("give `{spec}` a name as FILE=NAME")))?;
                (f, stem)
            }
        };
        specs.push((file, name));
    }
    let paths: Vec<Option<&Path>> = specs.iter().map(|(f, _)| Some(f.as_path())).collect();
    one_stdin(&paths, &[])?;
    let mut tables = Vec::with_capacity(specs.len());
    for (file, name) in specs {
        tables.push((read_table(Some(&file), Phrase::DEFAULT_MAX_LEN)?, name));
    }
    let out = combine_tables(tables).map_err(|e| match e {
        Error::Invalid(m) => usage(m),
        e => Failure::Data(format!("combine: {e}")),
    })?;
    write_phrase_table(&out, open_out(a.output.as_deref())?).at(&"output")
}

fn read_lines(path: Option<&Path>) -> CliResult<Vec<Vec<String>>> {
    open_in(path)?
        .lines()
        .map(|l| l.map(|l| l.split_whitespace().map(String::from).collect()))
        .collect::<io::Result<_>>()
        .at(&label(path))
}

fn decode(a: &DecodeArgs) -> CliResult {
    if a.max_phrase_len == 0 {
        return Err(usage("--max-phrase-len must be at least 1"));
    }
    one_stdin(
        &[Some(a.table.as_path()), a.input.as_deref()],
        &[a.weights.as_deref()],
    )?;
    let table = read_table(
        Some(&a.table),
        Phrase::DEFAULT_MAX_LEN.max(a.max_phrase_len),
    )?;
    let cfg = DecodeConfig {
        weights: read_weights(a.weights.as_deref())?,
        max_phrase_len: a.max_phrase_len,
        unknown_word_penalty: a.unknown_penalty,
    };
    let decoder = Decoder::new(&table, &cfg).at(&"decode")?;
    let sentences = read_lines(a.input.as_deref())?;
    let mut out = open_out(a.output.as_deref())?;
    for d in decoder.decode_all(&sentences) {
        writeln!(out, "{}", d.tokens.join(" ")).at(&"output")?;
    }
    out.flush().at(&"output")
}

fn bleu(a: &BleuArgs) -> CliResult {
    let mut paths: Vec<Option<&Path>> = vec![a.hyp.as_deref()];
    paths.extend(a.refs.iter().map(|p| Some(p.as_path())));
    one_stdin(&paths, &[])?;
    let hyps = read_lines(a.hyp.as_deref())?;
    let mut refs: Vec<Vec<Vec<String>>> = vec![Vec::new(); hyps.len()];
    for p in &a.refs {
        let lines = read_lines(Some(p))?;
        if lines.len() != hyps.len() {
            return Err(Failure::Data(format!(
                "{}: {} lines, but the hypothesis file has {}",
                p.display(),
                lines.len(),
                hyps.len()
            )));
        }
        for (slot, l) in refs.iter_mut().zip(lines) {
            slot.push(l);
        }
    }
    let s = bleu4(&hyps, &refs).at(&"bleu")?;
    let mut out = open_out(None)?;
    let p = s.precisions;
    writeln!(out, "BLEU = {:.6}", s.bleu)
        .and_then(|_| {
            writeln!(
                out,
                "precisions = {:.6} {:.6} {:.6} {:.6}",
                p[0], p[1], p[2], p[3]
            )
        })
        .and_then(|_| {
            writeln!(
                out,
                "BP = {:.6} (hyp_len = {}, ref_len = {})",
                s.brevity_penalty, s.hyp_len, s.ref_len
            )
        })
        .and_then(|_| out.flush())
        .at(&"output")
}

const BINS: usize = 10;

fn stats(a: &StatsArgs) -> CliResult {
    let path = a.input.as_deref();
    let mut reader = entry_reader(path, a.max_phrase_len)?;
    let manifest = reader.manifest().clone();
    let names: Vec<&str> = manifest.names().collect();
    let mut entries = 0u64;
    let mut links = 0u64;
    let mut sources: HashSet<Phrase> = HashSet::new();
    let mut targets: HashSet<Phrase> = HashSet::new();
    let mut src_lens: BTreeMap<usize, u64> = BTreeMap::new();
    // per feature: bins over [0, 1] plus one overflow bin
    let mut hist = vec![[0u64; BINS + 1]; names.len()];
    let mut range = vec![(f64::INFINITY, f64::NEG_INFINITY, 0.0f64); names.len()];
    for e in reader.by_ref() {
        let e = e.at(&label(path))?;
        entries += 1;
        links += e.alignment.len() as u64;
        *src_lens.entry(e.src.len()).or_default() += 1;
        for (i, v) in e.scores.values().enumerate() {
            let bin = if v > 1.0 {
                BINS
            } else {
                ((v * BINS as f64) as usize).min(BINS - 1)
            };
            hist[i][bin] += 1;
            let r = &mut range[i];
            *r = (r.0.min(v), r.1.max(v), r.2 + v);
        }
        if !sources.contains(&e.src) {
            sources.insert(e.src.clone());
        }
        if !targets.contains(&e.tgt) {
            targets.insert(e.tgt);
        }
    }
    let mut out = open_out(None)?;
    let mut text = String::new();
    let _ = writeln!(text, "entries\t{entries}");
    let _ = writeln!(text, "distinct_sources\t{}", sources.len());
    let _ = writeln!(text, "distinct_targets\t{}", targets.len());
    let _ = writeln!(text, "alignment_links\t{links}");
    let _ = writeln!(text, "features\t{}", names.join(" "));
    let lens: Vec<String> = src_lens.iter().map(|(l, n)| format!("{l}:{n}")).collect();
    let _ = writeln!(text, "source_lengths\t{}", lens.join(" "));
    let edges: Vec<String> = (0..BINS)
        .map(|b| {
            format!(
                "[{:.1},{:.1}{}",
                b as f64 / BINS as f64,
                (b + 1) as f64 / BINS as f64,
                if b + 1 == BINS { "]" } else { ")" }
            )
        })
        .chain(std::iter::once(">1".to_string()))
        .collect();
    let _ = writeln!(text, "histogram_bins\t{}", edges.join(" "));
    for (i, name) in names.iter().enumerate() {
        let (lo, hi, sum) = range[i];
        let counts: Vec<String> = hist[i].iter().map(u64::to_string).collect();
        if entries == 0 {
            let _ = writeln!(text, "{name}\tmin=- max=- mean=-\t{}", counts.join(" "));
        } else {
            let _ = writeln!(
                text,
                "{name}\tmin={lo:.6} max={hi:.6} mean={:.6}\t{}",
                sum / entries as f64,
                counts.join(" ")
            );
        }
    }
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .at(&"output")
}

fn estimate(a: &EstimateArgs) -> CliResult {
    one_stdin(&[Some(a.sp.as_path()), Some(a.pt.as_path())], &[])?;
    let mut est = PivotSizeEstimator::new();
    let mut seen = 0u64;
    for e in entry_reader(Some(&a.sp), a.max_phrase_len)? {
        est.add_sp(&e.at(&a.sp.display())?);
        seen += 1;
    }
    for e in entry_reader(Some(&a.pt), a.max_phrase_len)? {
        est.add_pt(&e.at(&a.pt.display())?);
        seen += 1;
    }
    info!("estimate-size: {seen} entries read");
    let mut out = open_out(None)?;
    writeln!(out, "{}", est.estimate())
        .and_then(|_| out.flush())
        .at(&"output")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["pivotsmith", "no-such-command"]), 2);
        assert_eq!(run(["pivotsmith", "filter", "--bogus"]), 2);
        assert_eq!(run(["pivotsmith", "--help"]), 0);
    }

    #[test]
    fn missing_file_exits_1() {
        assert_eq!(
            run(["pivotsmith", "stats", "-i", "/nonexistent/table.pt"]),
            1
        );
    }
}
