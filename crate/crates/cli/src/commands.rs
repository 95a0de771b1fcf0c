use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lingkit::chart::{parse_sentence, Strategy};
use lingkit::chunk::{apply_cascade, np_tag_rates, read_chunked_corpus, rule_from_tag_rates, score_corpus, unchunk, ChunkRule, ChunkRuleSpec};
use lingkit::classify::{
    accuracy, read_documents, select_features, train_maxent, train_naive_bayes, Classifier, MaxentAlgorithm, MaxentOptions, Model, TrainingSet,
};
use lingkit::fsa::{nfa_to_dfa, regex_to_nfa};
use lingkit::grammar::{parse_cfg, parse_pcfg};
use lingkit::parse::{sr_parse, viterbi_parse};
use lingkit::tag::{evaluate_tagger, train_unigram, RegexpRule, TaggerSpec};
use lingkit::text::{format_tagged, read_tagged, tokenize_whitespace, TaggedToken};

use crate::session::{load_presets, Service};

#[derive(Debug, Parser)]
#[command(name = "lingkit", version, about = "Small, inspectable NLP tools: parsing, chunking, tagging, automata, classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Regular-expression chunking.
    #[command(subcommand)]
    Chunk(ChunkCommand),
    /// Part-of-speech tagging.
    #[command(subcommand)]
    Tag(TagCommand),
    /// Chart-parse a sentence and print every parse.
    Parse {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long, default_value = "td")]
        strategy: Strategy,
        sentence: String,
    },
    /// Probabilistic parsing.
    #[command(subcommand)]
    Pcfg(PcfgCommand),
    /// Shift-reduce parsing.
    #[command(subcommand)]
    Sr(SrCommand),
    /// Finite-state automata.
    #[command(subcommand)]
    Fsa(FsaCommand),
    /// Text classification.
    #[command(subcommand)]
    Classify(ClassifyCommand),
    /// Run the chart-parsing session server.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// JSON array of named chart snapshots.
        #[arg(long)]
        presets: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ChunkCommand {
    /// Apply a cascade to the unchunked gold sentences and score the result.
    Eval {
        #[arg(long)]
        cascade: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Print how often each tag falls inside a gold chunk, and the rule those rates suggest.
    Rates {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Chunk a tagged sentence such as "the/DT cat/NN sat/VBD".
    Apply {
        #[arg(long)]
        cascade: PathBuf,
        sentence: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum TagCommand {
    /// Train a unigram tagger with optional regexp and default backoff.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON array of {pattern, tag} tried after the unigram stage.
        #[arg(long)]
        regexp: Option<PathBuf>,
        /// Tag given to words every other stage leaves untagged.
        #[arg(long)]
        default: Option<String>,
    },
    /// Report accuracy against a tagged corpus.
    Eval {
        #[arg(long)]
        tagger: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Tag a whitespace-separated sentence.
    Apply {
        #[arg(long)]
        tagger: PathBuf,
        sentence: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum PcfgCommand {
    /// Print the most probable parse and its probability.
    Parse {
        #[arg(long)]
        grammar: PathBuf,
        sentence: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum SrCommand {
    Parse {
        #[arg(long)]
        grammar: PathBuf,
        /// Print every shift and reduce.
        #[arg(long)]
        trace: bool,
        sentence: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum FsaCommand {
    /// Print the automaton for a regex as JSON.
    Compile {
        regex: String,
        /// Determinize before printing.
        #[arg(long)]
        dfa: bool,
    },
    /// Run an automaton on an input string, printing the active states after each symbol.
    Simulate {
        regex: String,
        input: String,
        #[arg(long)]
        dfa: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ClassifierKind {
    Nb,
    Gis,
    Iis,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Lines of `label<TAB>tokens`.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "nb")]
    algorithm: ClassifierKind,
    /// Lidstone smoothing for Naive Bayes.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Minimum occurrences for a word to become a feature.
    #[arg(long, default_value_t = 1)]
    cutoff: u64,
    /// Maximum number of features.
    #[arg(long, default_value_t = 1000)]
    budget: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum ClassifyCommand {
    Train(TrainArgs),
    /// Classify text, or report accuracy on a labelled corpus.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "text")]
        corpus: Option<PathBuf>,
        #[arg(required_unless_present = "corpus")]
        text: Option<String>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_cascade(path: &Path) -> Result<Vec<ChunkRule>> {
    let specs: Vec<ChunkRuleSpec> = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(specs.iter().map(ChunkRule::compile).collect::<Result<_, _>>()?)
}

fn load_tagged_corpus(path: &Path) -> Result<Vec<Vec<TaggedToken>>> {
    let text = read(path)?;
    let sents = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(n, l)| read_tagged(l).with_context(|| format!("{} sentence {}", path.display(), n + 1)))
        .collect::<Result<_>>()?;
    Ok(sents)
}

fn load_tagger(path: &Path) -> Result<lingkit::tag::Tagger> {
    let spec: TaggerSpec = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(spec.compile()?)
}

/// Runs a parsed command, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Chunk(cmd) => chunk(cmd, out),
        Command::Tag(cmd) => tag(cmd, out),
        Command::Parse { grammar, strategy, sentence } => {
            let g = parse_cfg(&read(&grammar)?)?;
            let parses = parse_sentence(&g, &sentence, strategy)?;
            if parses.is_empty() {
                eprintln!("no parse");
            }
            for t in parses {
                writeln!(out, "{t}")?;
            }
            Ok(())
        }
        Command::Pcfg(PcfgCommand::Parse { grammar, sentence }) => {
            let g = parse_pcfg(&read(&grammar)?)?;
            match viterbi_parse(&g, &tokenize_whitespace(&sentence, None)) {
                Some(best) => writeln!(out, "{} p={}", best.tree, best.prob)?,
                None => eprintln!("no parse"),
            }
            Ok(())
        }
        Command::Sr(SrCommand::Parse { grammar, trace, sentence }) => {
            let g = parse_cfg(&read(&grammar)?)?;
            let outcome = sr_parse(&g, &tokenize_whitespace(&sentence, None))?;
            if trace {
                for step in &outcome.trace {
                    writeln!(out, "{step}")?;
                }
            }
            match outcome.tree {
                Some(t) => writeln!(out, "{t}")?,
                None => eprintln!("no parse"),
            }
            Ok(())
        }
        Command::Fsa(cmd) => fsa(cmd, out),
        Command::Classify(cmd) => classify(cmd, out),
        Command::Serve { port, presets } => {
            let presets = match presets {
                Some(p) => load_presets(&read(&p)?)?,
                None => Vec::new(),
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::server::serve(Service::new(presets), port))
        }
    }
}

fn chunk(cmd: ChunkCommand, out: &mut dyn Write) -> Result<()> {
    match cmd {
        ChunkCommand::Eval { cascade, gold } => {
            let rules = load_cascade(&cascade)?;
            let gold = read_chunked_corpus(&read(&gold)?)?;
            let test: Vec<_> = gold.iter().map(|g| apply_cascade(&unchunk(g), &rules)).collect();
            let (total, per_sentence) = score_corpus(&gold, &test)?;
            writeln!(out, "precision {:.4}", total.precision())?;
            writeln!(out, "recall    {:.4}", total.recall())?;
            writeln!(out, "f1        {:.4}", total.f1())?;
            writeln!(out, "correct {} of gold {} / test {}", total.correct, total.gold_total, total.test_total)?;
            for (k, s) in per_sentence.iter().enumerate() {
                if !s.missed.is_empty() || !s.incorrect.is_empty() {
                    writeln!(out, "sentence {}: missed {:?} incorrect {:?}", k + 1, s.missed, s.incorrect)?;
                }
            }
            Ok(())
        }
        ChunkCommand::Rates { gold, threshold } => {
            let gold = read_chunked_corpus(&read(&gold)?)?;
            let rates = np_tag_rates(&gold)?;
            for (tag, rate) in &rates {
                writeln!(out, "{tag}\t{rate:.4}")?;
            }
            match rule_from_tag_rates(&rates, threshold) {
                Some(rule) => writeln!(out, "{}", serde_json::to_string(&rule)?)?,
                None => writeln!(out, "no tag is chunked more than {threshold} of the time")?,
            }
            Ok(())
        }
        ChunkCommand::Apply { cascade, sentence } => {
            let rules = load_cascade(&cascade)?;
            let cs = lingkit::chunk::ChunkStructure::unchunked(read_tagged(&sentence)?);
            writeln!(out, "{}", apply_cascade(&cs, &rules))?;
            Ok(())
        }
    }
}

fn tag(cmd: TagCommand, out: &mut dyn Write) -> Result<()> {
    match cmd {
        TagCommand::Train { corpus, out: path, regexp, default } => {
            let mut spec = train_unigram(&load_tagged_corpus(&corpus)?)?;
            if let Some(file) = regexp {
                let rules: Vec<RegexpRule> = serde_json::from_str(&read(&file)?).with_context(|| format!("parsing {}", file.display()))?;
                spec = spec.with_backoff(TaggerSpec { kind: lingkit::tag::TaggerKind::Regexp(rules), backoff: None });
            }
            if let Some(tag) = default {
                spec = spec.with_backoff(TaggerSpec::default_tag(&tag));
            }
            spec.compile()?;
            fs::write(&path, serde_json::to_string_pretty(&spec)?).with_context(|| format!("writing {}", path.display()))?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(())
        }
        TagCommand::Eval { tagger, gold } => {
            let acc = evaluate_tagger(&load_tagger(&tagger)?, &load_tagged_corpus(&gold)?)?;
            writeln!(out, "accuracy {acc:.4}")?;
            Ok(())
        }
        TagCommand::Apply { tagger, sentence } => {
            let tagged = load_tagger(&tagger)?.tag(&tokenize_whitespace(&sentence, None));
            writeln!(out, "{}", format_tagged(&tagged))?;
            Ok(())
        }
    }
}

fn fsa(cmd: FsaCommand, out: &mut dyn Write) -> Result<()> {
    match cmd {
        FsaCommand::Compile { regex, dfa } => {
            let nfa = regex_to_nfa(&regex)?;
            let json = if dfa { nfa_to_dfa(&nfa).to_json() } else { nfa.to_json() };
            writeln!(out, "{}", serde_json::to_string_pretty(&json)?)?;
            Ok(())
        }
        FsaCommand::Simulate { regex, input, dfa } => {
            let nfa = regex_to_nfa(&regex)?;
            let (accepted, trace) = if dfa { nfa_to_dfa(&nfa).simulate(&input) } else { nfa.simulate(&input) };
            for (pos, states) in trace {
                let states: Vec<String> = states.iter().map(ToString::to_string).collect();
                writeln!(out, "{pos}\t{{{}}}", states.join(","))?;
            }
            writeln!(out, "{}", if accepted { "accepted" } else { "rejected" })?;
            Ok(())
        }
    }
}

fn classify(cmd: ClassifyCommand, out: &mut dyn Write) -> Result<()> {
    match cmd {
        ClassifyCommand::Train(args) => {
            let docs = read_documents(&read(&args.corpus)?)?;
            let vocab = select_features(&docs, args.cutoff, args.budget)?;
            let set = TrainingSet::from_documents(&docs, vocab)?;
            let model = match args.algorithm {
                ClassifierKind::Nb => Model::NaiveBayes(train_naive_bayes(&set, args.gamma)?),
                ClassifierKind::Gis | ClassifierKind::Iis => {
                    let algorithm = if args.algorithm == ClassifierKind::Gis { MaxentAlgorithm::Gis } else { MaxentAlgorithm::Iis };
                    let m = train_maxent(&set, MaxentOptions { algorithm, max_iter: args.max_iter, tol: args.tol })?;
                    let meta = m.meta();
                    writeln!(out, "iterations {} violation {:e} converged {}", meta.iterations, meta.final_violation, meta.converged)?;
                    Model::Maxent(m)
                }
            };
            fs::write(&args.out, serde_json::to_string_pretty(&model)?).with_context(|| format!("writing {}", args.out.display()))?;
            writeln!(out, "training accuracy {:.4}", accuracy(&model, &docs)?)?;
            Ok(())
        }
        ClassifyCommand::Predict { model, corpus, text } => {
            let model: Model = serde_json::from_str(&read(&model)?).context("parsing model")?;
            if let Some(path) = corpus {
                writeln!(out, "accuracy {:.4}", accuracy(&model, &read_documents(&read(&path)?)?)?)?;
                return Ok(());
            }
            let Some(text) = text else { bail!("nothing to classify") };
            let tokens: Vec<&str> = text.split_whitespace().collect();
            let result = model.classify_tokens(&tokens);
            writeln!(out, "{}", result.label)?;
            for (label, p) in &result.posterior {
                writeln!(out, "  {label}\t{p:.6}")?;
            }
            Ok(())
        }
    }
}
