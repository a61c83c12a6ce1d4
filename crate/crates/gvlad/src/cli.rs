//! Command-line pipeline: each subcommand reads and writes the documented
//! file formats and prints a single machine-parseable JSON summary line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::angles::{learn_angle_membership, AngleModel};
use crate::codebook::{AdaptDivisor, Codebook};
use crate::descriptor::LocalDescriptor;
use crate::encoder::{encode_image_with, EncodedVector, NormalizationOptions};
use crate::error::{Error, Result};
use crate::io::{
    load_manifest, read_angle_model, read_codebook, read_descriptor_file, read_ground_truth,
    read_vector_file, read_vector_file_encoded, read_whitening_model, write_angle_model,
    write_codebook, write_vector_file, write_whitening_model, ManifestFile, VectorSetMeta,
};
use crate::retrieval::{average_precision, mean_average_precision, DatasetIndex, RankingResult};
use crate::synth::{generate_synthetic, SynthConfig};
use crate::whitening::{WhiteningModel, DEFAULT_EPSILON, DEFAULT_RHO};

#[derive(Debug, Parser)]
#[command(name = "gvlad", version, about = "Angle-binned VLAD image signatures and retrieval")]
pub struct Cli {
    /// Report per-stage timings in the summary (informational).
    #[arg(long, global = true)]
    pub timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic descriptor dataset whose class signal lives in
    /// the keypoint angles.
    Synth(SynthArgs),
    /// Learn the angular-bin membership model from a dataset's angles.
    LearnAngles(LearnAnglesArgs),
    /// Train a visual vocabulary by restarted k-means.
    TrainCodebook(TrainCodebookArgs),
    /// Adapt an existing vocabulary to a new dataset.
    AdaptCodebook(AdaptCodebookArgs),
    /// Encode images into aggregated signature vectors.
    Encode(EncodeArgs),
    /// Fit a PCA-whitening compression model on encoded vectors.
    FitWhitening(FitWhiteningArgs),
    /// Compress encoded vectors with a fitted whitening model.
    ApplyWhitening(ApplyWhiteningArgs),
    /// Rank database images by L2 distance to each query.
    Search(SearchArgs),
    /// Score rankings against ground truth: per-query AP and mAP.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory for descriptor files, ground truth and manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub classes: usize,
    #[arg(long, default_value_t = 20)]
    pub images_per_class: usize,
    #[arg(long, default_value_t = 60)]
    pub descriptors_per_image: usize,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    /// 0 = classes indistinguishable from angles, 1 = full angle signal.
    #[arg(long, default_value_t = 1.0)]
    pub angle_signal: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LearnAnglesArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Number of angular bins M.
    #[arg(long, default_value_t = 4)]
    pub bins: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output angle-model file (JSON).
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainCodebookArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Vocabulary size K.
    #[arg(long, default_value_t = 256)]
    pub words: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    /// Cap on pooled training descriptors (seeded subsample when exceeded).
    #[arg(long)]
    pub max_descriptors: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output codebook file.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AdaptCodebookArgs {
    /// Source codebook to adapt.
    #[arg(long)]
    pub source: PathBuf,
    /// Manifest of the target dataset.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = DivisorArg::PerWord)]
    pub divisor: DivisorArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DivisorArg {
    /// Mean of each word's assigned target descriptors.
    PerWord,
    /// Literal division by the total target count.
    Global,
}

impl From<DivisorArg> for AdaptDivisor {
    fn from(value: DivisorArg) -> Self {
        match value {
            DivisorArg::PerWord => AdaptDivisor::PerWordCount,
            DivisorArg::Global => AdaptDivisor::GlobalCount,
        }
    }
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub codebook: PathBuf,
    /// Angle-bin model; omit for plain single-bin VLAD aggregation.
    #[arg(long)]
    pub angle_model: Option<PathBuf>,
    /// Encode the manifest's query list instead of its image list.
    #[arg(long)]
    pub queries: bool,
    /// Skip per-block intra-normalization.
    #[arg(long)]
    pub no_intra: bool,
    /// Skip cross-word Z-score normalization.
    #[arg(long)]
    pub no_zscore: bool,
    /// Skip the final global L2 normalization.
    #[arg(long)]
    pub no_l2: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output encoded-vector file.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitWhiteningArgs {
    /// Encoded-vector file to fit on.
    #[arg(long)]
    pub vectors: PathBuf,
    /// Retained dimension rho.
    #[arg(long, default_value_t = DEFAULT_RHO)]
    pub rho: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ApplyWhiteningArgs {
    #[arg(long)]
    pub vectors: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Plain PCA projection without the inverse-eigenvalue scaling.
    #[arg(long)]
    pub plain_pca: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Manifest providing database and query image ids.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Database encoded-vector file (manifest image order).
    #[arg(long)]
    pub vectors: PathBuf,
    /// Query encoded-vector file (manifest query order).
    #[arg(long)]
    pub query_vectors: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Keep a query's own id in its ranking instead of excluding it.
    #[arg(long)]
    pub keep_self: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ranking destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub vectors: PathBuf,
    #[arg(long)]
    pub query_vectors: PathBuf,
    /// Ground-truth file; defaults to the manifest's.
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

struct StageTimer {
    enabled: bool,
    last: Instant,
    stages: Vec<(String, f64)>,
}

impl StageTimer {
    fn new(enabled: bool) -> Self {
        Self {
            enabled,
            last: Instant::now(),
            stages: Vec::new(),
        }
    }

    fn stage(&mut self, name: &str) {
        if self.enabled {
            let now = Instant::now();
            self.stages
                .push((name.to_string(), now.duration_since(self.last).as_secs_f64() * 1e3));
            self.last = now;
        }
    }

    fn attach(self, summary: &mut Value) {
        if self.enabled {
            let map: serde_json::Map<String, Value> = self
                .stages
                .into_iter()
                .map(|(name, ms)| (name, json!(ms)))
                .collect();
            summary["timings_ms"] = Value::Object(map);
        }
    }
}

/// Executes a parsed command and prints its JSON summary line.
pub fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let mut summary = execute(&cli)?;
    summary["elapsed_ms"] = json!(started.elapsed().as_secs_f64() * 1e3);
    println!("{summary}");
    Ok(())
}

/// Executes a parsed command and returns its JSON summary.
pub fn execute(cli: &Cli) -> Result<Value> {
    let mut timer = StageTimer::new(cli.timing);
    let mut summary = match &cli.command {
        Command::Synth(args) => cmd_synth(args, &mut timer)?,
        Command::LearnAngles(args) => cmd_learn_angles(args, &mut timer)?,
        Command::TrainCodebook(args) => cmd_train_codebook(args, &mut timer)?,
        Command::AdaptCodebook(args) => cmd_adapt_codebook(args, &mut timer)?,
        Command::Encode(args) => cmd_encode(args, &mut timer)?,
        Command::FitWhitening(args) => cmd_fit_whitening(args, &mut timer)?,
        Command::ApplyWhitening(args) => cmd_apply_whitening(args, &mut timer)?,
        Command::Search(args) => cmd_search(args, &mut timer)?,
        Command::Evaluate(args) => cmd_evaluate(args, &mut timer)?,
    };
    timer.attach(&mut summary);
    Ok(summary)
}

fn cmd_synth(args: &SynthArgs, timer: &mut StageTimer) -> Result<Value> {
    let config = SynthConfig {
        classes: args.classes,
        images_per_class: args.images_per_class,
        descriptors_per_image: args.descriptors_per_image,
        dim: args.dim,
        angle_signal: args.angle_signal,
        seed: args.seed,
    };
    let out = generate_synthetic(&args.out_dir, &config)?;
    timer.stage("generate");
    Ok(json!({
        "command": "synth",
        "manifest": out.manifest_path,
        "images": out.images,
        "descriptors": out.descriptors,
        "dim": args.dim,
        "angle_signal": args.angle_signal,
        "seed": args.seed,
    }))
}

fn pooled_descriptors(manifest: &ManifestFile) -> Result<Vec<LocalDescriptor>> {
    let per_image: Vec<Vec<LocalDescriptor>> = manifest
        .manifest
        .images
        .par_iter()
        .map(|entry| read_descriptor_file(&manifest.entry_path(entry)))
        .collect::<Result<_>>()?;
    Ok(per_image.into_iter().flatten().collect())
}

fn cmd_learn_angles(args: &LearnAnglesArgs, timer: &mut StageTimer) -> Result<Value> {
    let manifest = load_manifest(&args.manifest)?;
    let descriptors = pooled_descriptors(&manifest)?;
    timer.stage("load");
    let angles: Vec<f64> = descriptors.iter().map(|d| d.angle() as f64).collect();
    let model = learn_angle_membership(&angles, args.bins, args.seed, args.restarts)?;
    timer.stage("cluster");
    write_angle_model(&args.output, &model)?;
    timer.stage("write");
    let directions: Vec<f64> = model
        .centroids()
        .iter()
        .map(|c| c[1].atan2(c[0]).rem_euclid(std::f64::consts::TAU))
        .collect();
    Ok(json!({
        "command": "learn-angles",
        "bins": model.bins(),
        "angles": angles.len(),
        "centroid_directions": directions,
        "output": args.output,
        "seed": args.seed,
    }))
}

fn cmd_train_codebook(args: &TrainCodebookArgs, timer: &mut StageTimer) -> Result<Value> {
    let manifest = load_manifest(&args.manifest)?;
    let mut descriptors = pooled_descriptors(&manifest)?;
    timer.stage("load");
    let pooled = descriptors.len();
    if let Some(cap) = args.max_descriptors {
        if descriptors.len() > cap {
            descriptors = subsample(descriptors, cap, args.seed);
        }
    }
    let codebook = Codebook::train(&descriptors, args.words, args.seed, args.restarts)?;
    timer.stage("train");
    write_codebook(&args.output, &codebook)?;
    timer.stage("write");
    Ok(json!({
        "command": "train-codebook",
        "words": codebook.words(),
        "dim": codebook.dim(),
        "descriptors_pooled": pooled,
        "descriptors_used": descriptors.len(),
        "output": args.output,
        "seed": args.seed,
    }))
}

fn subsample(descriptors: Vec<LocalDescriptor>, cap: usize, seed: u64) -> Vec<LocalDescriptor> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, descriptors.len(), cap).into_vec();
    picked.sort_unstable();
    let mut keep: Vec<Option<LocalDescriptor>> = descriptors.into_iter().map(Some).collect();
    picked
        .into_iter()
        .map(|i| keep[i].take().expect("indices are distinct"))
        .collect()
}

fn cmd_adapt_codebook(args: &AdaptCodebookArgs, timer: &mut StageTimer) -> Result<Value> {
    let source = read_codebook(&args.source)?;
    let manifest = load_manifest(&args.manifest)?;
    let targets = pooled_descriptors(&manifest)?;
    timer.stage("load");
    let adapted = source.adapt(&targets, args.divisor.into())?;
    timer.stage("adapt");
    write_codebook(&args.output, &adapted)?;
    timer.stage("write");
    let moved = (0..source.words())
        .filter(|&w| source.centroid(w) != adapted.centroid(w))
        .count();
    Ok(json!({
        "command": "adapt-codebook",
        "words": adapted.words(),
        "dim": adapted.dim(),
        "target_descriptors": targets.len(),
        "words_moved": moved,
        "output": args.output,
        "seed": args.seed,
    }))
}

fn cmd_encode(args: &EncodeArgs, timer: &mut StageTimer) -> Result<Value> {
    let manifest = load_manifest(&args.manifest)?;
    let codebook = read_codebook(&args.codebook)?;
    let angle_model: Option<AngleModel> = match &args.angle_model {
        Some(path) => Some(read_angle_model(path)?),
        None => None,
    };
    let entries = if args.queries {
        if manifest.manifest.queries.is_empty() {
            return Err(Error::Validation(
                "manifest has no query list to encode".into(),
            ));
        }
        &manifest.manifest.queries
    } else {
        &manifest.manifest.images
    };
    let options = NormalizationOptions {
        intra: !args.no_intra,
        inter_zscore: !args.no_zscore,
        l2: !args.no_l2,
    };
    timer.stage("load");
    let vectors: Vec<EncodedVector> = entries
        .par_iter()
        .map(|entry| {
            let descriptors = read_descriptor_file(&manifest.entry_path(entry))?;
            if descriptors.is_empty() {
                return Err(Error::EmptyInput(format!(
                    "image {} has no descriptors",
                    entry.id
                )));
            }
            encode_image_with(&descriptors, &codebook, angle_model.as_ref(), options)
        })
        .collect::<Result<_>>()?;
    timer.stage("encode");
    let meta = VectorSetMeta::of(&vectors[0]);
    write_vector_file(&args.output, meta, &vectors)?;
    timer.stage("write");
    Ok(json!({
        "command": "encode",
        "images": vectors.len(),
        "words": meta.words,
        "dim": meta.dim,
        "angle_bins": meta.angle_bins,
        "dimension": meta.vector_len(),
        "output": args.output,
        "seed": args.seed,
    }))
}

fn cmd_fit_whitening(args: &FitWhiteningArgs, timer: &mut StageTimer) -> Result<Value> {
    let (_, vectors) = read_vector_file_encoded(&args.vectors)?;
    timer.stage("load");
    let model = WhiteningModel::fit_with_epsilon(&vectors, args.rho, args.epsilon)?;
    timer.stage("fit");
    write_whitening_model(&args.output, &model)?;
    timer.stage("write");
    Ok(json!({
        "command": "fit-whitening",
        "input_dim": model.input_dim(),
        "rho": model.rho(),
        "epsilon": model.epsilon(),
        "vectors": vectors.len(),
        "top_eigenvalue": model.eigenvalues().first(),
        "output": args.output,
        "seed": args.seed,
    }))
}

fn cmd_apply_whitening(args: &ApplyWhiteningArgs, timer: &mut StageTimer) -> Result<Value> {
    let (_, vectors) = read_vector_file_encoded(&args.vectors)?;
    let model = read_whitening_model(&args.model)?;
    timer.stage("load");
    let whiten = !args.plain_pca;
    let compressed: Vec<EncodedVector> = vectors
        .par_iter()
        .map(|v| model.apply(v, whiten))
        .collect::<Result<_>>()?;
    timer.stage("project");
    let meta = VectorSetMeta::of(&compressed[0]);
    write_vector_file(&args.output, meta, &compressed)?;
    timer.stage("write");
    Ok(json!({
        "command": "apply-whitening",
        "vectors": compressed.len(),
        "rho": model.rho(),
        "whitened": whiten,
        "output": args.output,
        "seed": args.seed,
    }))
}

fn load_index(manifest: &ManifestFile, vectors: &Path) -> Result<DatasetIndex> {
    let (_, rows) = read_vector_file(vectors)?;
    if rows.len() != manifest.manifest.images.len() {
        return Err(Error::Validation(format!(
            "vector file has {} vectors but the manifest lists {} images",
            rows.len(),
            manifest.manifest.images.len()
        )));
    }
    let entries = manifest
        .manifest
        .images
        .iter()
        .map(|e| e.id.clone())
        .zip(rows)
        .collect();
    DatasetIndex::build(entries)
}

fn load_queries(manifest: &ManifestFile, vectors: &Path) -> Result<Vec<(String, Vec<f32>)>> {
    let (_, rows) = read_vector_file(vectors)?;
    if rows.len() != manifest.manifest.queries.len() {
        return Err(Error::Validation(format!(
            "query vector file has {} vectors but the manifest lists {} queries",
            rows.len(),
            manifest.manifest.queries.len()
        )));
    }
    Ok(manifest
        .manifest
        .queries
        .iter()
        .map(|e| e.id.clone())
        .zip(rows)
        .collect())
}

fn write_text(path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(p, text)?;
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn format_ranking(out: &mut String, query_id: &str, ranking: &RankingResult) {
    out.push_str(&format!("query {query_id}\n"));
    for (rank, hit) in ranking.hits().iter().enumerate() {
        out.push_str(&format!("{} {} {:.6}\n", rank + 1, hit.id, hit.distance));
    }
}

fn cmd_search(args: &SearchArgs, timer: &mut StageTimer) -> Result<Value> {
    let manifest = load_manifest(&args.manifest)?;
    let index = load_index(&manifest, &args.vectors)?;
    let queries = load_queries(&manifest, &args.query_vectors)?;
    timer.stage("load");
    let mut out = String::new();
    for (id, vector) in &queries {
        let exclude = if args.keep_self { None } else { Some(id.as_str()) };
        let ranking = index.query_knn(vector, args.k, exclude)?;
        format_ranking(&mut out, id, &ranking);
    }
    timer.stage("search");
    write_text(&args.output, &out)?;
    Ok(json!({
        "command": "search",
        "database": index.len(),
        "dimension": index.dim(),
        "queries": queries.len(),
        "k": args.k,
        "output": args.output,
        "seed": args.seed,
    }))
}

fn cmd_evaluate(args: &EvaluateArgs, timer: &mut StageTimer) -> Result<Value> {
    let manifest = load_manifest(&args.manifest)?;
    let index = load_index(&manifest, &args.vectors)?;
    let queries = load_queries(&manifest, &args.query_vectors)?;
    let gt_path = match &args.ground_truth {
        Some(p) => p.clone(),
        None => manifest.ground_truth_path().ok_or_else(|| {
            Error::Validation("manifest names no ground-truth file; pass --ground-truth".into())
        })?,
    };
    let truth = read_ground_truth(&gt_path)?;
    timer.stage("load");

    let mut report = String::new();
    let mut aps = Vec::with_capacity(queries.len());
    for (id, vector) in &queries {
        let query_truth = truth.get(id).ok_or_else(|| {
            Error::Validation(format!("query {id} missing from ground truth"))
        })?;
        let ranking = index.query_knn(vector, index.len(), Some(id.as_str()))?;
        let ap = average_precision(&ranking, query_truth)?;
        report.push_str(&format!("ap {id} {ap:.6}\n"));
        aps.push(ap);
    }
    let map = mean_average_precision(&aps)?;
    report.push_str(&format!("map {map:.6}\n"));
    timer.stage("evaluate");
    write_text(&args.output, &report)?;
    Ok(json!({
        "command": "evaluate",
        "queries": aps.len(),
        "map": map,
        "output": args.output,
        "seed": args.seed,
    }))
}
