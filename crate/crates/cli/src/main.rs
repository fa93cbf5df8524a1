// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gradprobe::dataset::{save_tsv, Composition, InflectionExample};
use gradprobe::experiment::{
    accuracy_csv, accuracy_table, analyze, baseline_seed, model_name, parse_curve, prepare_data, separation_csv,
    train_seed, CheckpointEntry, Data, ExperimentConfig, Manifest, SeedAnalysis,
};
use gradprobe::intervention::{curves_csv, SweepCurve};
use gradprobe::probing::{significance_report, SignificanceReport};
use gradprobe::report::{emit_curves, emit_heatmap, emit_scatter, CurveSet, HeatmapGroup, SweepMetric};
use gradprobe::rules::classify_pair;
use gradprobe::seq2seq::{checkpoint_digest, evaluate, load_checkpoint, save_checkpoint, Seq2Seq};

/// Train character-level inflection models and probe them for consonant
/// gradation.
#[derive(Parser)]
#[command(name = "gradprobe", version)]
struct Cli {
    /// Run a single seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the corpus, split and balanced evaluation set.
    GenData,
    /// Train one model per seed.
    Train,
    /// Accuracy of trained models on the evaluation set.
    Eval,
    /// Discovery and significance tests of encoder dimensions.
    Probe,
    /// Scaling sweeps over discovered and random dimensions.
    Sweep,
    /// Figures: training curves, sweep curves, scatter plots and heatmaps.
    Report(ReportArgs),
    /// Train, evaluate, probe, sweep and report in one go.
    Run(ReportArgs),
    /// Print the effective configuration.
    Config,
    /// Classify nominative/genitive pairs given as `nom:gen`.
    Classify { pairs: Vec<String> },
}

#[derive(Args, Clone, Default)]
struct ReportArgs {
    /// Scatter dimensions `d1,d2`; defaults to each model's top two.
    #[arg(long, value_delimiter = ',')]
    scatter: Vec<usize>,
    /// Heatmap dimension; defaults to each model's top dimension.
    #[arg(long)]
    heatmap: Option<usize>,
    /// Words per group in the heatmap.
    #[arg(long, default_value_t = 6)]
    heatmap_words: usize,
}

struct Ctx {
    config: ExperimentConfig,
    out: PathBuf,
    manifest: Manifest,
}

impl Ctx {
    fn dir(&self, name: &str) -> Result<PathBuf> {
        let d = self.out.join(name);
        fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
        Ok(d)
    }

    fn write(&mut self, path: PathBuf, text: &str) -> Result<()> {
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.record(path);
        Ok(())
    }

    fn record(&mut self, path: PathBuf) {
        let rel = path.strip_prefix(&self.out).map(Path::to_path_buf).unwrap_or(path);
        self.manifest.outputs.push(rel);
    }

    fn checkpoint_path(&self, seed: u64) -> PathBuf {
        self.out.join("models").join(format!("{}.ckpt", model_name(seed)))
    }

    fn load_models(&mut self) -> Result<Vec<(u64, Seq2Seq<f32>)>> {
        let mut models = Vec::new();
        for &seed in &self.config.seeds.clone() {
            let path = self.checkpoint_path(seed);
            let model = load_checkpoint(&path).with_context(|| format!("loading {} (run `gradprobe train` first)", path.display()))?;
            self.manifest.checkpoints.push(CheckpointEntry { seed, path: path.clone(), digest: checkpoint_digest(&model) });
            models.push((seed, model));
        }
        Ok(models)
    }

    fn finish(&self, name: &str) -> Result<()> {
        let path = self.out.join(format!("manifest-{name}.json"));
        self.manifest.write(&path)?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }
}

fn gen_data(ctx: &mut Ctx, data: &Data) -> Result<()> {
    let dir = ctx.dir("data")?;
    for (name, set) in [("corpus", &data.corpus), ("train", &data.train), ("dev", &data.dev), ("probe", &data.probe)] {
        let path = dir.join(format!("{name}.tsv"));
        save_tsv(set, &path)?;
        ctx.record(path);
    }
    let mut summary = String::new();
    for (name, set) in [("corpus", &data.corpus), ("train", &data.train), ("dev", &data.dev), ("probe", &data.probe)] {
        let c = Composition::of(set);
        summary.push_str(&format!("{name}: {} pairs, {} non-gradating", set.len(), c.ungradating));
        for (cons, (total, qual, quant)) in ["p", "t", "k"].iter().zip(c.per_consonant) {
            summary.push_str(&format!(", {cons} {total} (qual {qual}, quant {quant})"));
        }
        summary.push('\n');
    }
    print!("{summary}");
    ctx.write(dir.join("summary.txt"), &summary)
}

fn train_all(ctx: &mut Ctx, data: &Data) -> Result<()> {
    let dir = ctx.dir("models")?;
    for &seed in &ctx.config.seeds.clone() {
        eprintln!("training {} ({} steps)", model_name(seed), ctx.config.train.steps);
        let (model, report) = train_seed(&ctx.config, data, seed)?;
        let path = ctx.checkpoint_path(seed);
        save_checkpoint(&model, &path)?;
        ctx.record(path.clone());
        ctx.manifest.checkpoints.push(CheckpointEntry { seed, path, digest: checkpoint_digest(&model) });
        let mut curve = String::from("step,dev_accuracy\n");
        for p in &report.curve {
            curve.push_str(&format!("{},{}\n", p.step, p.dev_accuracy));
        }
        ctx.write(dir.join(format!("{}.curve.csv", model_name(seed))), &curve)?;
        if let Some(last) = report.curve.last() {
            eprintln!("  step {} dev accuracy {:.1}", last.step, last.dev_accuracy);
        }
    }
    Ok(())
}

fn eval_all(ctx: &mut Ctx, data: &Data, models: &[(u64, Seq2Seq<f32>)]) -> Result<()> {
    let rows = models.iter().map(|(s, m)| Ok((*s, evaluate(m, &data.probe)?))).collect::<Result<Vec<_>>>()?;
    let dir = ctx.dir("eval")?;
    let table = accuracy_table(&rows);
    print!("{table}");
    ctx.write(dir.join("accuracy.txt"), &table)?;
    ctx.write(dir.join("accuracy.csv"), &accuracy_csv(&rows))
}

fn write_probe(ctx: &mut Ctx, reports: &[(u64, SignificanceReport)]) -> Result<()> {
    let dir = ctx.dir("probe")?;
    let mut csv = format!("{}\n", SignificanceReport::CSV_HEADER);
    let mut summary = String::from("model,all_category_dims\n");
    for (seed, r) in reports {
        let name = model_name(*seed);
        csv.push_str(&r.csv_rows(&name));
        let table = r.to_table(&name);
        println!("{table}");
        ctx.write(dir.join(format!("{name}.txt")), &table)?;
        let dims = r.all_category_dims().iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        summary.push_str(&format!("{name},{dims}\n"));
    }
    let with_any = reports.iter().filter(|(_, r)| r.all_category_count() > 0).count();
    println!("{with_any} of {} models have a dimension significant in all categories", reports.len());
    ctx.write(dir.join("significance.csv"), &csv)?;
    ctx.write(dir.join("all_categories.csv"), &summary)
}

fn probe_all(ctx: &mut Ctx, data: &Data, models: &[(u64, Seq2Seq<f32>)]) -> Result<()> {
    let p = ctx.config.probe.clone();
    let reports = models
        .iter()
        .map(|(s, m)| Ok((*s, significance_report(m, &data.probe, p.top_n, p.alpha, p.split_seed)?)))
        .collect::<Result<Vec<_>>>()?;
    write_probe(ctx, &reports)
}

fn write_sweeps(ctx: &mut Ctx, analyses: &[SeedAnalysis]) -> Result<()> {
    let dir = ctx.dir("sweep")?;
    let mut all = format!("{}\n", SweepCurve::CSV_HEADER);
    for a in analyses {
        let curves: Vec<SweepCurve> = a.appendix.all().cloned().collect();
        let text = curves_csv(&model_name(a.seed), &curves);
        all.push_str(text.split_once('\n').map(|(_, rows)| rows).unwrap_or(""));
        let s = &a.separation;
        println!(
            "{}: T{} at x = {}: alternate {:.1}% vs random {:.1}%{}{}",
            model_name(a.seed),
            s.n,
            s.factor,
            s.discovered_alternate_pct,
            s.random_alternate_pct,
            if s.separates() { "" } else { " (no separation)" },
            if a.identity_exact { "" } else { " (identity control FAILED)" },
        );
    }
    ctx.write(dir.join("curves.csv"), &all)?;
    ctx.write(dir.join("separation.csv"), &separation_csv(analyses))
}

fn heatmap_words(data: &Data, per_group: usize) -> Vec<InflectionExample> {
    let mut out = Vec::new();
    for group in HeatmapGroup::ALL {
        let picked = data
            .probe
            .iter()
            .filter(|e| e.annotation.map(|a| HeatmapGroup::of(&a)) == Some(group))
            .take(per_group)
            .cloned();
        out.extend(picked);
    }
    out
}

fn report_all(
    ctx: &mut Ctx,
    data: &Data,
    models: &[(u64, Seq2Seq<f32>)],
    analyses: &[SeedAnalysis],
    args: &ReportArgs,
) -> Result<()> {
    let dir = ctx.dir("figures")?;
    let mut training = Vec::new();
    for (seed, _) in models {
        let path = ctx.out.join("models").join(format!("{}.curve.csv", model_name(*seed)));
        if let Ok(text) = fs::read_to_string(&path) {
            let curve = parse_curve(&text)?;
            if !curve.is_empty() {
                training.push((model_name(*seed), curve));
            }
        }
    }
    if !training.is_empty() {
        let (c, s) = emit_curves(&CurveSet::training(&training), &dir.join("training"))?;
        ctx.record(c);
        ctx.record(s);
    }
    let words = heatmap_words(data, args.heatmap_words);
    for ((seed, model), a) in models.iter().zip(analyses) {
        let name = model_name(*seed);
        let curves: Vec<&SweepCurve> = a.appendix.all().collect();
        for (suffix, metrics) in [
            ("alternate", vec![SweepMetric::Alternate]),
            ("gold", vec![SweepMetric::Gold]),
            ("outputs", SweepMetric::ALL.to_vec()),
        ] {
            let set = CurveSet::sweeps(&format!("{name}: {suffix}"), &curves, &metrics);
            let (c, s) = emit_curves(&set, &dir.join(format!("{name}-sweep-{suffix}")))?;
            ctx.record(c);
            ctx.record(s);
        }
        let ranked = a.ranked_dims();
        let (d1, d2) = match args.scatter.as_slice() {
            [d1, d2] => (*d1, *d2),
            [] if ranked.len() >= 2 => (ranked[0], ranked[1]),
            [] => bail!("need two ranked dimensions for the scatter plot"),
            _ => bail!("--scatter takes exactly two dimensions"),
        };
        let (c, s) = emit_scatter(model, &data.probe, d1, d2, &dir.join(format!("{name}-scatter-{d1}-{d2}")))?;
        ctx.record(c);
        ctx.record(s);
        let dim = args.heatmap.unwrap_or(ranked[0]);
        let (c, s) = emit_heatmap(model, &words, dim, &dir.join(format!("{name}-heatmap-{dim}")))?;
        ctx.record(c);
        ctx.record(s);
    }
    Ok(())
}

fn analyze_all(ctx: &Ctx, data: &Data, models: &[(u64, Seq2Seq<f32>)]) -> Result<Vec<SeedAnalysis>> {
    models
        .iter()
        .map(|(seed, m)| {
            eprintln!("analyzing {} (baseline seed {})", model_name(*seed), baseline_seed(&ctx.config, *seed));
            Ok(analyze(m, data, &ctx.config, *seed)?)
        })
        .collect()
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv.split_once('=').with_context(|| format!("--set {kv:?}: expected KEY=VALUE"))?;
        config.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        config.seeds = vec![seed];
    }
    config.validate()?;
    Ok(config)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = load_config(&cli)?;
    let command_name = match &cli.command {
        Command::GenData => "gen-data",
        Command::Train => "train",
        Command::Eval => "eval",
        Command::Probe => "probe",
        Command::Sweep => "sweep",
        Command::Report(_) => "report",
        Command::Run(_) => "run",
        Command::Config => {
            print!("{}", config.to_text());
            return Ok(());
        }
        Command::Classify { pairs } => {
            for pair in pairs {
                let (nom, gen) = pair.split_once(':').with_context(|| format!("{pair:?}: expected nom:gen"))?;
                match classify_pair(nom, gen)?.event {
                    Some(e) => println!("{nom} {gen}: {} {} {} nom {} gen {}", e.pattern, e.kind(), e.direction, e.nom_span, e.gen_span),
                    None => println!("{nom} {gen}: no gradation"),
                }
            }
            return Ok(());
        }
    };
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let mut ctx = Ctx { manifest: Manifest::new(std::env::args().collect(), &config), config, out: cli.out.clone() };
    fs::write(cli.out.join(format!("config-{command_name}.txt")), ctx.config.to_text())?;
    let data = prepare_data(&ctx.config)?;

    match &cli.command {
        Command::GenData => gen_data(&mut ctx, &data)?,
        Command::Train => train_all(&mut ctx, &data)?,
        Command::Eval => {
            let models = ctx.load_models()?;
            eval_all(&mut ctx, &data, &models)?
        }
        Command::Probe => {
            let models = ctx.load_models()?;
            probe_all(&mut ctx, &data, &models)?
        }
        Command::Sweep => {
            let models = ctx.load_models()?;
            let analyses = analyze_all(&ctx, &data, &models)?;
            write_sweeps(&mut ctx, &analyses)?
        }
        Command::Report(args) => {
            let models = ctx.load_models()?;
            let analyses = analyze_all(&ctx, &data, &models)?;
            report_all(&mut ctx, &data, &models, &analyses, args)?
        }
        Command::Run(args) => {
            gen_data(&mut ctx, &data)?;
            train_all(&mut ctx, &data)?;
            ctx.manifest.checkpoints.clear();
            let models = ctx.load_models()?;
            eval_all(&mut ctx, &data, &models)?;
            let analyses = analyze_all(&ctx, &data, &models)?;
            let reports: Vec<_> = analyses.iter().map(|a| (a.seed, a.significance.clone())).collect();
            write_probe(&mut ctx, &reports)?;
            write_sweeps(&mut ctx, &analyses)?;
            report_all(&mut ctx, &data, &models, &analyses, args)?
        }
        Command::Config | Command::Classify { .. } => unreachable!(),
    }
    ctx.finish(command_name)
}
