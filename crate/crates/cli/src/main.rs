use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use discocat::cfg::{translate, Cfg, InferenceMode};
use discocat::eval::{format_reports, load_dataset, run_experiment, Aggregate, Kind, ModelId, NgramModel, Resources};
use discocat::logic::{BoolSpace, Model};
use discocat::pregroup::{is_grammatical, parse_type, Lexicon};
use discocat::regression::{multistep_learn, read_training, resolve_training, MultistepConfig};
use discocat::space::{build_space, format_sig9, tokenize_corpus, SpaceConfig, VectorSpace, Weighting, Window};
use discocat::tensor::{
    compose_baseline, compose_reduced, learn_relation_kronecker, learn_relation_sum, read_relation_instances,
    read_tensor_file, write_tensor_file, Baseline, Tensor,
};

#[derive(Parser)]
#[command(name = "dcc", version, about = "Categorical compositional distributional semantics toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a sentence against a pregroup lexicon.
    Parse {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, default_value = "s")]
        target: String,
        sentence: String,
    },
    /// Translate a context-free grammar into pregroup dictionaries.
    TranslateCfg {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Full)]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a co-occurrence vector space from a corpus.
    BuildSpace {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 2000)]
        basis_size: usize,
        /// Tokens either side of the target, or `sentence`.
        #[arg(long, default_value = "sentence")]
        window: String,
        /// Stop word windows at line ends.
        #[arg(long)]
        bounded_by_sentence: bool,
        #[arg(long, value_enum, default_value_t = WeightingArg::Ratio)]
        weighting: WeightingArg,
        #[arg(long)]
        stoplist: Option<PathBuf>,
        /// Only build vectors for the words listed in this file.
        #[arg(long)]
        targets: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn relation tensors from instances.
    Learn {
        #[arg(long)]
        relations: PathBuf,
        #[arg(long)]
        space: PathBuf,
        #[arg(long, default_value_t = 2)]
        arity: usize,
        #[arg(long, value_enum, default_value_t = LearnMethod::Sum)]
        method: LearnMethod,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compose a phrase vector.
    Compose {
        #[arg(long, value_enum)]
        model: ComposeModel,
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        tensors: Option<PathBuf>,
        /// Mixture weights alpha,beta,gamma.
        #[arg(long, value_delimiter = ',')]
        params: Vec<f64>,
        phrase: String,
    },
    /// Learn verb tensors by multi-step ridge regression.
    Regress {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        space: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1,10")]
        lambda_grid: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        min_examples: usize,
        /// Keep vectors at their raw scale.
        #[arg(long)]
        no_normalize: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a logical expression against a finite model.
    Logic {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "B2")]
        space: BoolSpace,
        #[arg(long)]
        eval: String,
    },
    /// Score models on a phrase similarity dataset.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        kind: Kind,
        #[arg(long, value_delimiter = ',', default_value = "verb,add,multiply,categorical,kronecker")]
        models: Vec<ModelId>,
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        tensors: Option<PathBuf>,
        /// Corpus for the bigram and trigram baselines.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        ngram_lambda: f64,
        #[arg(long, default_value = "pooled")]
        aggregate: Aggregate,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fast,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Raw,
    Ratio,
    Tfidf,
    Pmi,
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnMethod {
    Sum,
    Kronecker,
}

#[derive(Clone, Copy, ValueEnum)]
enum ComposeModel {
    Categorical,
    Kronecker,
    Add,
    Multiply,
    Mixture,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_space(path: &Path) -> Result<VectorSpace> {
    VectorSpace::from_tsv(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_tensors(path: &Path) -> Result<BTreeMap<String, Tensor>> {
    read_tensor_file(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn word_list(path: &Path) -> Result<BTreeSet<String>> {
    Ok(read(path)?.split_whitespace().map(String::from).collect())
}

fn format_vector(v: &[f64]) -> String {
    v.iter().map(|x| format_sig9(*x)).collect::<Vec<_>>().join(" ")
}

fn parse(lexicon: &Path, target: &str, sentence: &str) -> Result<bool> {
    let lex = Lexicon::from_tsv(&read(lexicon)?)?;
    let target = parse_type(target)?;
    let tokens: Vec<&str> = sentence.split_whitespace().collect();
    match is_grammatical(&tokens, &lex, &target)? {
        Some(p) => {
            println!("OK");
            for (tok, ty) in tokens.iter().zip(&p.assignment) {
                println!("{tok}\t{ty}");
            }
            for step in &p.trace.steps {
                println!("{step}");
            }
            Ok(true)
        }
        None => {
            println!("FAIL");
            Ok(false)
        }
    }
}

fn translate_cfg(grammar: &Path, mode: ModeArg, out: &Path) -> Result<()> {
    let cfg = Cfg::parse(&read(grammar)?)?;
    let mode = match mode {
        ModeArg::Fast => InferenceMode::Fast,
        ModeArg::Full => InferenceMode::Full,
    };
    let t = translate(&cfg, mode)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (i, d) in t.dictionaries.iter().enumerate() {
        write(&out.join(format!("dict{i}.lexicon.tsv")), &d.term_types.to_tsv())?;
        write(&out.join(format!("dict{i}.nonterminals.tsv")), &d.nonterminals_tsv())?;
    }
    println!("{} dictionaries written to {}", t.dictionaries.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn build(
    corpus: &Path,
    basis_size: usize,
    window: &str,
    bounded: bool,
    weighting: WeightingArg,
    stoplist: Option<&Path>,
    targets: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let mut sentences = tokenize_corpus(&read(corpus)?);
    let window = match window {
        "sentence" => Window::Sentence,
        k => Window::Words(k.parse().with_context(|| format!("window {k:?} is neither a number nor `sentence`"))?),
    };
    if matches!(window, Window::Words(_)) && !bounded {
        sentences = vec![sentences.concat()];
    }
    let config = SpaceConfig {
        basis_size,
        window,
        weighting: match weighting {
            WeightingArg::Raw => Weighting::Raw,
            WeightingArg::Ratio => Weighting::Ratio,
            WeightingArg::Tfidf => Weighting::TfIdf,
            WeightingArg::Pmi => Weighting::Pmi,
        },
        stoplist: stoplist.map(word_list).transpose()?.unwrap_or_default(),
        targets: targets.map(word_list).transpose()?,
    };
    let (space, warnings) = build_space(&sentences, &config)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    write(out, &space.to_tsv())?;
    println!("{} vectors over {} basis words", space.vectors.len(), space.dim());
    Ok(())
}

fn learn(relations: &Path, space: &Path, arity: usize, method: LearnMethod, out: &Path) -> Result<()> {
    let space = load_space(space)?;
    let instances = read_relation_instances(&read(relations)?)?;
    let mut by_label: BTreeMap<&str, Vec<_>> = BTreeMap::new();
    for inst in &instances {
        by_label.entry(inst.relation.as_str()).or_default().push(inst.clone());
    }
    let mut tensors = Vec::new();
    for (label, group) in by_label {
        let learned = match method {
            LearnMethod::Sum => learn_relation_sum(label, &group, &space, arity).map(|l| {
                if l.skipped > 0 {
                    eprintln!("{label}: {} instances skipped for missing vectors", l.skipped);
                }
                l.tensor
            }),
            LearnMethod::Kronecker => match space.get(label) {
                Some(v) => learn_relation_kronecker(label, v, arity),
                None => {
                    eprintln!("{label}: no lexical vector, skipped");
                    continue;
                }
            },
        };
        match learned {
            Ok(t) => tensors.push(t),
            Err(e) => eprintln!("{label}: {e}"),
        }
    }
    if tensors.is_empty() {
        bail!("no tensors learned");
    }
    write(out, &write_tensor_file(&tensors))?;
    println!("{} tensors written", tensors.len());
    Ok(())
}

fn compose(model: ComposeModel, space: &Path, tensors: Option<&Path>, params: &[f64], phrase: &str) -> Result<Vec<f64>> {
    let space = load_space(space)?;
    let words: Vec<&str> = phrase.split_whitespace().collect();
    if words.len() < 2 {
        bail!("a phrase needs at least two words");
    }
    let vectors = words
        .iter()
        .map(|w| space.get(w).with_context(|| format!("no vector for {w:?}")))
        .collect::<Result<Vec<_>>>()?;
    let tensors = tensors.map(load_tensors).transpose()?.unwrap_or_default();
    // The relation word is second: "subject verb [object]".
    let head = words[1];
    let args: Vec<&[f64]> = std::iter::once(vectors[0]).chain(vectors[2..].iter().copied()).collect();
    Ok(match model {
        ComposeModel::Add => compose_baseline(Baseline::Add, &vectors, &[])?,
        ComposeModel::Multiply => compose_baseline(Baseline::Multiply, &vectors, &[])?,
        ComposeModel::Mixture => compose_baseline(Baseline::Mixture, &vectors, params)?,
        ComposeModel::Categorical => {
            let t = tensors
                .get(head)
                .with_context(|| format!("no tensor for {head:?}"))?;
            if t.order() == args.len() {
                compose_reduced(t, &args)?
            } else {
                t.apply(&args)?.data
            }
        }
        ComposeModel::Kronecker => {
            let t = match tensors.get(head) {
                Some(t) => t.clone(),
                None => learn_relation_kronecker(head, vectors[1], args.len())?,
            };
            compose_reduced(&t, &args)?
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn regress(train: &Path, space: &Path, grid: Vec<f64>, min_examples: usize, normalize: bool, out: &Path) -> Result<()> {
    let space = load_space(space)?;
    let rows = read_training(&read(train)?)?;
    let (examples, missing) = resolve_training(&rows, &space);
    let config = MultistepConfig {
        lambda_grid: grid,
        normalize,
        min_examples,
    };
    let outcome = multistep_learn(&examples, &config)?;
    for skip in missing.iter().chain(&outcome.skipped) {
        match &skip.object {
            Some(o) => eprintln!("skipped {} {o}: {}", skip.verb, skip.reason),
            None => eprintln!("skipped {}: {}", skip.verb, skip.reason),
        }
    }
    if outcome.tensors.is_empty() {
        bail!("no verb had enough training examples");
    }
    write(out, &write_tensor_file(outcome.tensors.values()))?;
    println!("{} tensors written", outcome.tensors.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    dataset: &Path,
    kind: Kind,
    models: &[ModelId],
    space: Option<&Path>,
    tensors: Option<&Path>,
    corpus: Option<&Path>,
    ngram_lambda: f64,
    aggregate: Aggregate,
    report: Option<&Path>,
) -> Result<()> {
    let entries = load_dataset(&read(dataset)?, kind)?;
    let mut res = Resources {
        space: space.map(load_space).transpose()?,
        tensors: tensors.map(load_tensors).transpose()?.unwrap_or_default(),
        ..Resources::default()
    };
    if let Some(corpus) = corpus {
        let sentences = tokenize_corpus(&read(corpus)?);
        let train = |order| NgramModel::train(sentences.iter().map(Vec::as_slice), order, ngram_lambda);
        res.bigram = Some(train(2));
        res.trigram = Some(train(3));
    }
    let reports = run_experiment(&entries, models, &res, aggregate)?;
    print!("{}", format_reports(&reports));
    if let Some(path) = report {
        write(path, &serde_json::to_string_pretty(&reports)?)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::init();
    match Cli::parse().command {
        Command::Parse { lexicon, target, sentence } => {
            if !parse(&lexicon, &target, &sentence)? {
                std::process::exit(1);
            }
        }
        Command::TranslateCfg { grammar, mode, out } => translate_cfg(&grammar, mode, &out)?,
        Command::BuildSpace {
            corpus,
            basis_size,
            window,
            bounded_by_sentence,
            weighting,
            stoplist,
            targets,
            out,
        } => build(
            &corpus,
            basis_size,
            &window,
            bounded_by_sentence,
            weighting,
            stoplist.as_deref(),
            targets.as_deref(),
            &out,
        )?,
        Command::Learn { relations, space, arity, method, out } => learn(&relations, &space, arity, method, &out)?,
        Command::Compose { model, space, tensors, params, phrase } => {
            println!("{}", format_vector(&compose(model, &space, tensors.as_deref(), &params, &phrase)?));
        }
        Command::Regress { train, space, lambda_grid, min_examples, no_normalize, out } => {
            regress(&train, &space, lambda_grid, min_examples, !no_normalize, &out)?
        }
        Command::Logic { model, space, eval } => {
            let model = Model::parse(&read(&model)?)?;
            println!("{}", if model.truth(&eval, space)? { "TRUE" } else { "FALSE" });
        }
        Command::Eval {
            dataset,
            kind,
            models,
            space,
            tensors,
            corpus,
            ngram_lambda,
            aggregate,
            report,
        } => evaluate(
            &dataset,
            kind,
            &models,
            space.as_deref(),
            tensors.as_deref(),
            corpus.as_deref(),
            ngram_lambda,
            aggregate,
            report.as_deref(),
        )?,
    }
    Ok(())
}
