use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use netr0::dataset::{self, build_dataset, label_graph_with, load_csv, load_edge_list, BuildConfig, Dataset};
use netr0::epidemic::herd_immunity_threshold;
use netr0::netgen::Family;
use netr0::netmetrics::{extract_features, FEATURE_NAMES};
use netr0::ranking::{rank_dataset, select_features, Axis, RankingConfig, Scaling};
use netr0::regress::{
    self, check_hidden_bound, cross_validate, evaluate, max_hidden_neurons, ModelKind, Preset, TrainedModel,
};

use crate::config::{digest, FileConfig, Profile};
use crate::{Failure, GenerateArgs, PredictArgs, RankArgs, ReportArgs, TrainArgs};

/// Hidden width used when none is configured, capped by the over-fitting
/// bound for the training set at hand.
const DEFAULT_HIDDEN: usize = 23;

pub struct Context {
    pub profile: Profile,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub file: FileConfig,
}

impl Context {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or_else(|| self.profile.build_config().master_seed)
    }

    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    fn build_config(&self) -> Result<BuildConfig, Failure> {
        self.file.overlay("build", &self.profile.build_config())
    }
}

#[derive(Serialize)]
struct Settings<'a, T: Serialize> {
    command: &'a str,
    profile: Profile,
    seed: u64,
    settings: &'a T,
}

/// Comment lines recording how an output was produced.
fn provenance<T: Serialize>(command: &str, profile: Profile, seed: u64, settings: &T) -> Vec<String> {
    let d = digest(&Settings {
        command,
        profile,
        seed,
        settings,
    });
    vec![
        format!("netr0 {command} {}", env!("CARGO_PKG_VERSION")),
        format!("config-sha256 {d}"),
        format!("seed {seed}"),
    ]
}

fn with_comments(comments: &[String], body: &str) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str(body);
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::user(format!("cannot write {}: {e}", path.display())))
}

fn read_dataset(path: &Path) -> Result<Dataset, Failure> {
    load_csv(path).map_err(|e| Failure::user(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> Result<TrainedModel, Failure> {
    TrainedModel::load(path).map_err(|e| Failure::user(format!("{}: {e}", path.display())))
}

fn required(value: Option<PathBuf>, flag: &str) -> Result<PathBuf, Failure> {
    value.ok_or_else(|| Failure::user(format!("--{flag} is required (or set it in the config file)")))
}

pub fn generate(ctx: &Context, a: &GenerateArgs) -> Result<(), Failure> {
    let mut cfg = ctx.build_config()?;
    if let Some(seed) = ctx.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = a.nodes {
        cfg.n = n;
    }
    if let Some(count) = a.per_family {
        cfg = cfg.with_counts(count);
    }
    if let Some(tag) = &a.family {
        let family = Family::from_tag(tag)
            .ok_or_else(|| Failure::user(format!("unknown family {tag:?}; expected ER, WS, SF, BA or SBM")))?;
        let count = cfg.count(family);
        cfg = cfg.single_family(family, count);
    }
    let (ds, stats) = build_dataset(&cfg)?;
    let out = ctx.out_or("dataset.csv");
    let comments = provenance("generate", ctx.profile, cfg.master_seed, &cfg);
    write_file(&out, &ds.to_csv(&comments))?;

    println!("wrote {} rows to {}", ds.len(), out.display());
    for (family, count) in &stats.per_family {
        if *count == 0 {
            continue;
        }
        let labels = ds.filter_family(family).labels();
        let lo = labels.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("  {family:<4} {count:>5} networks  R0 in [{lo:.3}, {hi:.3}]");
    }
    println!(
        "  generation retries: {} (max {} for one network)",
        stats.total_retries, stats.max_retries_seen
    );
    println!(
        "  simulations: {} ({} label replicates died out in every attempt)",
        stats.simulations, stats.extinct
    );
    Ok(())
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct TrainSection {
    data: Option<PathBuf>,
    model: Option<String>,
    folds: Option<usize>,
    hidden: Option<usize>,
    epochs: Option<usize>,
    standardize: Option<bool>,
    c: Option<f64>,
    epsilon: Option<f64>,
    tol: Option<f64>,
    gamma: Option<f64>,
    degree: Option<u32>,
    coef0: Option<f64>,
}

pub fn train(ctx: &Context, a: &TrainArgs) -> Result<(), Failure> {
    let sec: TrainSection = ctx.file.section("train")?;
    let data = required(a.data.clone().or(sec.data), "data")?;
    let ds = read_dataset(&data)?;
    let name = a.model.clone().or(sec.model).unwrap_or_else(|| "svr-rbf".into());
    let preset: Preset = name.parse()?;
    let folds = a.folds.or(sec.folds).unwrap_or(10);
    if folds < 2 || folds > ds.len() {
        return Err(Failure::user(format!(
            "fold count must be in 2..={} for {} rows, got {folds}",
            ds.len(),
            ds.len()
        )));
    }
    let seed = ctx.seed();
    let mut spec = preset.spec(ds.dim());
    spec.standardize = !a.no_standardize && sec.standardize.unwrap_or(true);
    match &mut spec.model {
        ModelKind::Linear => {}
        ModelKind::Svr(p) => {
            p.c = a.c.or(sec.c).unwrap_or(p.c);
            p.epsilon = a.epsilon.or(sec.epsilon).unwrap_or(p.epsilon);
            p.tol = sec.tol.unwrap_or(p.tol);
            p.kernel.gamma = a.gamma.or(sec.gamma).unwrap_or(p.kernel.gamma);
            p.kernel.degree = a.degree.or(sec.degree).unwrap_or(p.kernel.degree);
            p.kernel.coef0 = a.coef0.or(sec.coef0).unwrap_or(p.kernel.coef0);
            p.validate()?;
        }
        ModelKind::Ann(cfg) => {
            cfg.epochs = a.epochs.or(sec.epochs).unwrap_or(cfg.epochs);
            // the smallest cross-validation training set decides the bound
            let rows = ds.len() - ds.len().div_ceil(folds);
            cfg.hidden = match a.hidden.or(sec.hidden) {
                Some(h) => {
                    check_hidden_bound(h, rows, ds.dim())?;
                    h
                }
                None => {
                    let bound = max_hidden_neurons(rows, ds.dim())?;
                    if bound == 0 {
                        return Err(Failure::user(format!(
                            "{rows} training rows are too few for any hidden layer"
                        )));
                    }
                    if bound < DEFAULT_HIDDEN {
                        println!("hidden width capped at {bound} by the over-fitting bound for {rows} training rows");
                    }
                    bound.min(DEFAULT_HIDDEN)
                }
            };
            cfg.validate()?;
        }
    }

    info!("cross-validating {preset} on {} rows with {folds} folds", ds.len());
    let report = cross_validate(&ds, &spec, folds, seed)?;
    println!("{preset}: {folds}-fold cross-validation on {} rows", ds.len());
    for (i, s) in report.per_fold.iter().enumerate() {
        println!("  fold {:>2}  mse {:.6}  r2 {:.6}", i + 1, s.mse, s.r2);
    }
    println!("  mean     mse {:.6}  r2 {:.6}", report.mse, report.r2);

    let mut model = regress::train(&ds, &spec, seed)?;
    for note in &model.notes {
        println!("note: {note}");
    }
    let comments = provenance("train", ctx.profile, seed, &(&spec, folds, data.display().to_string()));
    model.provenance.insert("command".into(), comments[0].clone());
    model.provenance.insert("config_sha256".into(), comments[1]["config-sha256 ".len()..].to_string());
    model.provenance.insert("seed".into(), seed.to_string());
    model.provenance.insert("data".into(), data.display().to_string());
    model.provenance.insert("cv_mse".into(), report.mse.to_string());
    model.provenance.insert("cv_r2".into(), report.r2.to_string());
    let out = ctx.out_or("model.json");
    write_file(&out, &model.to_json()?)?;
    println!("model written to {}", out.display());
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct PredictSection {
    model: Option<PathBuf>,
    edges: Option<PathBuf>,
    features: Option<String>,
    simulate: Option<bool>,
}

pub fn predict(ctx: &Context, a: &PredictArgs) -> Result<(), Failure> {
    let sec: PredictSection = ctx.file.section("predict")?;
    let model_path = required(a.model.clone().or(sec.model), "model")?;
    let model = read_model(&model_path)?;
    let seed = ctx.seed();
    let mut lines = Vec::new();

    let (input, simulated) = if let Some(text) = a.features.clone().or(sec.features.filter(|_| a.edges.is_none())) {
        let values = text
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Failure::user(format!("feature value {v:?} is not a number")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if values.len() != model.feature_names.len() {
            return Err(Failure::user(format!(
                "model expects {} features ({}), got {}",
                model.feature_names.len(),
                model.feature_names.join(","),
                values.len()
            )));
        }
        (values, None)
    } else {
        let path = required(a.edges.clone().or(sec.edges), "edges or --features")?;
        let parsed = load_edge_list(&path).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
        let g = &parsed.graph;
        lines.push(format!(
            "network {}: {} nodes, {} edges ({} self-loops and {} duplicate edges dropped)",
            path.display(),
            g.node_count(),
            g.edge_count(),
            parsed.self_loops,
            parsed.duplicates
        ));
        let all = extract_features(g)?.to_array();
        let values = model
            .feature_names
            .iter()
            .map(|name| {
                FEATURE_NAMES
                    .iter()
                    .position(|f| f == name)
                    .map(|j| all[j])
                    .ok_or_else(|| Failure::user(format!("model uses unknown feature {name:?}")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let simulated = if a.simulate || sec.simulate.unwrap_or(false) {
            let cfg = ctx.build_config()?;
            let (sample, runs) = label_graph_with(g, &cfg.epidemic, dataset::REAL_FAMILY, seed, &cfg.labels)?;
            if runs.extinct > 0 {
                lines.push(format!("{} simulation replicates died out", runs.extinct));
            }
            Some(sample.label)
        } else {
            None
        };
        (values, simulated)
    };

    let features: Vec<String> = model
        .feature_names
        .iter()
        .zip(&input)
        .map(|(n, v)| format!("{n}={v}"))
        .collect();
    lines.push(format!("features {}", features.join(" ")));
    let predicted = model.predict(&input)?;
    let threshold = if predicted > 0.0 { herd_immunity_threshold(predicted)? } else { 0.0 };
    lines.push(format!("predicted R0 {predicted:.4}"));
    lines.push(format!("herd immunity threshold {threshold:.4}"));
    if let Some(sim) = simulated {
        lines.push(format!("simulated R0 {sim:.4}"));
        if sim > 0.0 {
            lines.push(format!("relative error {:.4}", (predicted - sim) / sim));
        }
    }
    let body = lines.join("\n") + "\n";
    print!("{body}");
    if let Some(out) = &ctx.out {
        let comments = provenance("predict", ctx.profile, seed, &(model_path.display().to_string(), &input));
        write_file(out, &with_comments(&comments, &body))?;
    }
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RankSection {
    data: Option<PathBuf>,
    select: Option<usize>,
    projected: Option<PathBuf>,
}

pub fn rank(ctx: &Context, a: &RankArgs) -> Result<(), Failure> {
    let sec: RankSection = ctx.file.section("rank")?;
    let mut cfg: RankingConfig = ctx.file.overlay("rank", &RankingConfig::default())?;
    match a.axis.as_deref() {
        Some("sample") => cfg.axis = Axis::Sample,
        Some("feature") => cfg.axis = Axis::Feature,
        _ => {}
    }
    match a.scaling.as_deref() {
        Some("none") => cfg.scaling = Scaling::None,
        Some("center") => cfg.scaling = Scaling::Center,
        Some("standardize") => cfg.scaling = Scaling::Standardize,
        _ => {}
    }
    cfg.center |= a.center_cov;
    if a.components.is_some() {
        cfg.components = a.components;
    }
    if let Some(e) = a.energy {
        cfg.energy = e;
    }
    let data = required(a.data.clone().or(sec.data), "data")?;
    let ds = read_dataset(&data)?;
    let report = rank_dataset(&ds, &cfg)?;
    print!("{}", report.to_table());

    let seed = ctx.seed();
    let mut comments = provenance("rank", ctx.profile, seed, &(&cfg, data.display().to_string()));
    comments.push("raw index: sum over the leading components of |projection|".into());
    let out = ctx.out_or("ranking.csv");
    write_file(&out, &with_comments(&comments, &report.to_csv()))?;
    println!("ranking written to {}", out.display());

    if let Some(m) = a.select.or(sec.select) {
        let selected = select_features(&ds, &report.ranking, m)?;
        let path = a.projected.clone().or(sec.projected).unwrap_or_else(|| PathBuf::from("selected.csv"));
        comments.push(format!("selected features: {}", selected.feature_names.join(",")));
        write_file(&path, &selected.to_csv(&comments))?;
        println!("top-{m} dataset written to {}", path.display());
    }
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct ReportSection {
    model: Option<PathBuf>,
    data: Option<PathBuf>,
    subset: Option<usize>,
}

pub fn report(ctx: &Context, a: &ReportArgs) -> Result<(), Failure> {
    let sec: ReportSection = ctx.file.section("report")?;
    let model_path = required(a.model.clone().or(sec.model), "model")?;
    let data = required(a.data.clone().or(sec.data), "data")?;
    let model = read_model(&model_path)?;
    let mut ds = read_dataset(&data)?;
    let seed = ctx.seed();
    let subset = a.subset.or(sec.subset);
    if let Some(n) = subset {
        if n == 0 || n > ds.len() {
            return Err(Failure::user(format!("subset size must be in 1..={}, got {n}", ds.len())));
        }
        let (shuffled, _) = dataset::shuffle(&ds, seed);
        ds = shuffled.subset(&(0..n).collect::<Vec<_>>());
    }
    let predicted = model.predict_dataset(&ds)?;
    let truth = ds.labels();

    let mut body = String::from("family,seed,true_r0,predicted_r0,residual\n");
    for ((s, y), p) in ds.samples.iter().zip(&truth).zip(&predicted) {
        let _ = writeln!(body, "{},{},{},{},{}", s.family, s.seed, y, p, p - y);
    }
    let comments = provenance(
        "report",
        ctx.profile,
        seed,
        &(model_path.display().to_string(), data.display().to_string(), subset),
    );
    let out = ctx.out_or("report.csv");
    write_file(&out, &with_comments(&comments, &body))?;

    let max_abs = truth.iter().zip(&predicted).map(|(y, p)| (p - y).abs()).fold(0.0, f64::max);
    println!("{} pairs written to {}", ds.len(), out.display());
    match evaluate(&truth, &predicted) {
        Ok(s) => println!("mse {:.6}  r2 {:.6}  max |residual| {max_abs:.6}", s.mse, s.r2),
        Err(e) => println!("max |residual| {max_abs:.6} ({e})"),
    }
    Ok(())
}
