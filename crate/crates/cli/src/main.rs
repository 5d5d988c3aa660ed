use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use emoset::corpus::{build_manifest, CorpusId, CorpusManifest, ManifestFilter};
use emoset::dimred::{NormMode, Normalizer, Reducer};
use emoset::eval::{fit_model, run_scenario, EvaluationReport};
use emoset::extract::extract_manifest;
use emoset::features::FeatureMatrix;
use emoset::matrix::Mat;
use emoset::tsne::{tsne_embed, write_tsne_csv};

mod config;

use config::RunConfig;

/// Extraction failure share above which `extract` exits with an error.
const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Parser)]
#[command(name = "emoset", version, about = "Speech emotion recognition experiments")]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. --set split.folds=5.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Corpus {
    Emodb,
    Ravdess,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scenario {
    General,
    Gender,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenderArg {
    Male,
    Female,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a corpus directory and write the labeled manifest CSV.
    Manifest {
        #[arg(long, value_enum)]
        corpus: Corpus,
        #[arg(long)]
        root: PathBuf,
        /// normal, strong or all (corpora without intensity ignore it).
        #[arg(long)]
        intensity: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract 1582-dimensional feature vectors for every manifest entry.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write features.csv.
        #[arg(long)]
        csv: bool,
    },
    /// Cross-validate the classifier and write reports and the final model.
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        scenario: Option<Scenario>,
        /// Restrict the gender scenario to one gender.
        #[arg(long, value_enum)]
        gender: Option<GenderArg>,
        #[arg(long, conflicts_with = "holdout")]
        folds: Option<usize>,
        /// Use a stratified 70/30 split instead of k-fold.
        #[arg(long)]
        holdout: bool,
        #[arg(long)]
        reject_threshold: Option<f64>,
        /// Threshold sweep start:end:step for the rejection curve.
        #[arg(long)]
        reject_sweep: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Embed feature vectors in 2-D and write tsne.csv.
    Tsne {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Embed the 100-dimensional projected vectors instead of the raw ones.
        #[arg(long)]
        after_pca: bool,
        #[arg(long)]
        perplexity: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print a summary of a report.json.
    Report {
        #[arg(long)]
        report: PathBuf,
    },
}

fn usage_error(msg: impl std::fmt::Display) -> ! {
    Cli::command()
        .error(clap::error::ErrorKind::ValueValidation, msg)
        .exit()
}

fn resolve_config(cli: &Cli) -> RunConfig {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        if let Err(e) = cfg.merge_file(path) {
            usage_error(format!("{e:#}"));
        }
    }
    for kv in &cli.overrides {
        let Some((k, v)) = kv.split_once('=') else {
            usage_error(format!("--set expects KEY=VALUE, got {kv:?}"));
        };
        if let Err(e) = cfg.set(k.trim(), v) {
            usage_error(e);
        }
    }
    let mut flag = |k: &str, v: String| {
        if let Err(e) = cfg.set(k, &v) {
            usage_error(e);
        }
    };
    match &cli.command {
        Command::Manifest { intensity: Some(i), .. } => flag("manifest.intensity", i.clone()),
        Command::Evaluate {
            scenario,
            gender,
            folds,
            holdout,
            reject_threshold,
            reject_sweep,
            seed,
            ..
        } => {
            if let Some(s) = scenario {
                flag("scenario", if *s == Scenario::Gender { "gender" } else { "general" }.into());
            }
            if let Some(g) = gender {
                flag("gender", match g {
                    GenderArg::Male => "male",
                    GenderArg::Female => "female",
                }
                .into());
            }
            if let Some(f) = folds {
                flag("split", "kfold".into());
                flag("split.folds", f.to_string());
            }
            if *holdout {
                flag("split", "holdout".into());
            }
            if let Some(t) = reject_threshold {
                flag("reject.threshold", t.to_string());
            }
            if let Some(s) = reject_sweep {
                flag("reject.sweep", s.clone());
            }
            if let Some(s) = seed {
                flag("seed", s.to_string());
            }
        }
        Command::Tsne {
            after_pca,
            perplexity,
            seed,
            ..
        } => {
            if *after_pca {
                flag("tsne.after_pca", "true".into());
            }
            if let Some(p) = perplexity {
                flag("tsne.perplexity", p.to_string());
            }
            if let Some(s) = seed {
                flag("seed", s.to_string());
            }
        }
        _ => {}
    }
    if let Err(e) = cfg.validate() {
        usage_error(format!("{e:#}"));
    }
    if cfg.get("scenario") == "general" && cfg.get("gender") != "both" {
        usage_error("--gender only applies to the gender scenario");
    }
    cfg
}

fn write_config(dir: &Path, cfg: &RunConfig) -> Result<()> {
    fs::write(dir.join("run_config.txt"), cfg.render()).context("writing run_config.txt")
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn cmd_manifest(cfg: &RunConfig, corpus: Corpus, root: &Path, out: &Path) -> Result<()> {
    let id = match corpus {
        Corpus::Emodb => CorpusId::EmoDb,
        Corpus::Ravdess => CorpusId::Ravdess,
    };
    let filter = ManifestFilter {
        intensity: cfg.intensity()?,
        gender: None,
    };
    let manifest = build_manifest(root, id)?.filtered(&filter);
    manifest.save(out)?;
    println!("{} utterances", manifest.len());
    for (emotion, n) in manifest.emotion_counts() {
        println!("  {emotion:<10} {n}");
    }
    Ok(())
}

fn cmd_extract(cfg: &RunConfig, manifest: &Path, out: &Path, csv: bool) -> Result<()> {
    let manifest = CorpusManifest::load(manifest)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let cache = std::env::var_os("EMOSET_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| out.join(".cache"));
    let outcome = extract_manifest(&manifest, &cfg.extract()?, Some(&cache))?;
    outcome.features.save(&out.join("features.emof"))?;
    if csv {
        outcome.features.write_csv(create(&out.join("features.csv"))?)?;
    }
    let mut failures = String::from("path,error\n");
    for f in &outcome.failures {
        failures.push_str(&format!("{},\"{}\"\n", f.path.display(), f.error.to_string().replace('"', "'")));
    }
    fs::write(out.join("failures.csv"), failures)?;
    write_config(out, cfg)?;
    println!(
        "{} x {} features, {} failed",
        outcome.features.rows(),
        outcome.features.cols(),
        outcome.failures.len()
    );
    if outcome.failure_rate() > MAX_FAILURE_RATE {
        anyhow::bail!(
            "{:.1}% of utterances failed extraction (limit {:.0}%)",
            100.0 * outcome.failure_rate(),
            100.0 * MAX_FAILURE_RATE
        );
    }
    Ok(())
}

fn evaluate_one(features: &FeatureMatrix, cfg: &RunConfig, out: &Path, suffix: &str, gender: Option<emoset::corpus::Gender>) -> Result<EvaluationReport> {
    let gender_scenario = cfg.get("scenario") == "gender";
    let eval_cfg = cfg.eval(gender_scenario)?;
    let mut plan = cfg.plan()?;
    plan.gender = gender;
    let name = match gender {
        Some(g) => format!("gender_{}", g.as_str()),
        None => "general".to_string(),
    };
    let report = run_scenario(features, &plan, &eval_cfg, &name)?;
    report.write_json(create(&out.join(format!("report{suffix}.json")))?)?;
    report.write_rounds_csv(create(&out.join(format!("rounds{suffix}.csv")))?)?;
    report.write_curve_csv(create(&out.join(format!("curve{suffix}.csv")))?)?;
    let subset = match gender {
        Some(g) => features.filter_rows(|m| m.gender == g),
        None => features.clone(),
    };
    fit_model(&subset, &eval_cfg, plan.seed)?.save(&out.join(format!("model{suffix}.emop")))?;
    println!(
        "{name}: decision-level rate {:.4}, UAR {:.4}, top-2 {:.4}, top-3 {:.4}, rejection {:.4}",
        report.dl_classification_rate, report.unweighted_average_recall, report.top2, report.top3, report.rejection_rate
    );
    Ok(report)
}

fn cmd_evaluate(cfg: &RunConfig, features: &Path, out: &Path) -> Result<()> {
    let features = FeatureMatrix::load(features)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_config(out, cfg)?;
    if cfg.get("scenario") == "general" {
        evaluate_one(&features, cfg, out, "", None)?;
        return Ok(());
    }
    let genders = match cfg.gender()? {
        Some(g) => vec![g],
        None => vec![emoset::corpus::Gender::Female, emoset::corpus::Gender::Male],
    };
    let mut summary = serde_json::Map::new();
    let mut uar_sum = 0.0;
    for &g in &genders {
        let r = evaluate_one(&features, cfg, out, &format!("_{}", g.as_str()), Some(g))?;
        uar_sum += r.unweighted_average_recall;
        summary.insert(
            g.as_str().to_string(),
            serde_json::json!({
                "dl_classification_rate": r.dl_classification_rate,
                "unweighted_average_recall": r.unweighted_average_recall,
                "utterances": r.utterances,
            }),
        );
    }
    summary.insert("mean_unweighted_average_recall".into(), (uar_sum / genders.len() as f64).into());
    serde_json::to_writer_pretty(create(&out.join("gender_summary.json"))?, &summary)?;
    Ok(())
}

fn cmd_tsne(cfg: &RunConfig, features: &Path, out: &Path) -> Result<()> {
    let features = FeatureMatrix::load(features)?;
    let tsne_cfg = cfg.tsne()?;
    let n = features.rows();
    if !(tsne_cfg.perplexity < (n as f64 - 1.0) / 3.0) {
        usage_error(format!(
            "{n} utterances are too few for perplexity {} (needs fewer than {:.1})",
            tsne_cfg.perplexity,
            (n as f64 - 1.0) / 3.0
        ));
    }
    let speakers: Vec<u32> = features.metas().iter().map(|m| m.speaker_id).collect();
    let x = Mat::new(features.data().to_vec(), n, features.cols())?;
    let input = if cfg.get("tsne.after_pca") == "true" {
        let eval_cfg = cfg.eval(false)?;
        let reducer = Reducer::fit(&x, &speakers, eval_cfg.norm, eval_cfg.pca_mode, eval_cfg.allocation)?;
        reducer.transform_matrix(&x, &speakers)?
    } else if cfg.get("tsne.normalize") == "true" {
        Normalizer::fit(&x, NormMode::Global, None)?.apply_matrix(&x, None)?
    } else {
        x
    };
    let emb = tsne_embed(&input, &tsne_cfg)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_tsne_csv(create(&out.join("tsne.csv"))?, &emb.points, &features.metas())?;
    write_config(out, cfg)?;
    println!("t-SNE: {n} points, final KL {:.6}", emb.final_kl);
    Ok(())
}

fn cmd_report(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let r: EvaluationReport = serde_json::from_str(&text).context("parsing report")?;
    println!("scenario {} on {} ({} utterances)", r.scenario, r.corpus, r.utterances);
    println!("threshold {:.3}, rejection rate {:.4}", r.theta, r.rejection_rate);
    println!("decision-level rate {:.4}", r.dl_classification_rate);
    println!("unweighted average recall {:.4}", r.unweighted_average_recall);
    println!("top-1 {:.4}  top-2 {:.4}  top-3 {:.4}", r.top1, r.top2, r.top3);
    println!("{:<10} {:>8} {:>8}", "emotion", "recall", "support");
    for e in &r.per_emotion_recall {
        let recall = e.recall.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
        println!("{:<10} {:>8} {:>8}", e.emotion.as_str(), recall, e.support);
    }
    for f in &r.folds {
        println!(
            "fold {}: train {} test {} rate {:.4}",
            f.fold, f.train_size, f.test_size, f.dl_classification_rate
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            usage_error("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .expect("thread pool is configured once");
    }
    let cfg = resolve_config(&cli);
    let result = match &cli.command {
        Command::Manifest { corpus, root, out, .. } => cmd_manifest(&cfg, *corpus, root, out),
        Command::Extract { manifest, out, csv } => cmd_extract(&cfg, manifest, out, *csv),
        Command::Evaluate { features, out, .. } => cmd_evaluate(&cfg, features, out),
        Command::Tsne { features, out, .. } => cmd_tsne(&cfg, features, out),
        Command::Report { report } => cmd_report(report),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
