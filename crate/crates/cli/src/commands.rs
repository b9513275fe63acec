use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use sbt_core::aggregation::DEFAULT_WINDOWS_PER_TRAJECTORY;
use sbt_core::codec::{write_embeddings, write_trajectories};
use sbt_core::filter::SweepPoint;
use sbt_core::synth::{gen_benchmark, gen_embedding_clusters, BenchmarkSpec};
use sbt_core::{
    evaluate, filter_candidates, sweep_threshold, train, training_set, Aggregation, Checkpoint,
    Classes, EvalReport, FilterPolicy, FilterReport, JointSelection, ModelConfig, NormalizeMode,
    Pipeline, TemporalModel, Trajectory, TrainOptions, WindowParams, Windowing,
};
use serde::Serialize;

use crate::args::*;
use crate::config::FileConfig;
use crate::output::{emit_json, load_embeddings, load_trajectories, write_atomic};
use crate::UsageError;

pub struct Ctx {
    pub file: FileConfig,
    pub seed: u64,
}

impl Ctx {
    pub fn new(config: Option<&Path>, seed: Option<u64>) -> anyhow::Result<Self> {
        let file = FileConfig::load(config).map_err(|e| UsageError(format!("{e:#}")))?;
        let seed = seed.or(file.seed).unwrap_or(0);
        Ok(Self { file, seed })
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn resolve_pipeline(args: &PipelineArgs, file: &FileConfig, base: Pipeline) -> anyhow::Result<Pipeline> {
    let (base_params, base_strict, base_whole) = match base.windowing {
        Windowing::Sliding { params, strict } => (params, strict, false),
        Windowing::WholeSequence => (WindowParams::default(), false, true),
    };
    let whole = args.whole_sequence.or(file.whole_sequence).unwrap_or(base_whole);
    let windowing = if whole {
        Windowing::WholeSequence
    } else {
        let size = args.window_size.or(file.window_size).unwrap_or(base_params.size());
        let step = args.step.or(file.step).unwrap_or(base_params.step());
        let params = WindowParams::new(size, step).map_err(|e| usage(e.to_string()))?;
        Windowing::Sliding {
            params,
            strict: args.strict.or(file.strict).unwrap_or(base_strict),
        }
    };
    let (joints, normalize) = resolve_preprocess(&args.preprocess, file, &base)?;
    Ok(Pipeline {
        joints,
        normalize,
        windowing,
    })
}

fn resolve_preprocess(
    args: &PreprocessArgs,
    file: &FileConfig,
    base: &Pipeline,
) -> anyhow::Result<(JointSelection, NormalizeMode)> {
    let joints = match args.joints.as_ref().or(file.joints.as_ref()) {
        Some(s) => JointSelection::parse(s).map_err(|e| usage(format!("--joints: {e}")))?,
        None => base.joints.clone(),
    };
    let normalize = match args.normalize.as_ref().or(file.normalize.as_ref()) {
        Some(s) => s.parse().map_err(|e: String| usage(format!("--normalize: {e}")))?,
        None => base.normalize,
    };
    Ok((joints, normalize))
}

struct Training {
    hidden_dim: usize,
    opts: TrainOptions,
    per_trajectory: Option<usize>,
}

fn resolve_training(args: &TrainingArgs, ctx: &Ctx) -> anyhow::Result<Training> {
    let file = &ctx.file;
    let d = TrainOptions::default();
    let hidden_dim = args.hidden_dim.or(file.hidden_dim).unwrap_or(ModelConfig::DEFAULT_HIDDEN);
    let opts = TrainOptions {
        epochs: args.epochs.or(file.epochs).unwrap_or(d.epochs),
        learning_rate: args.learning_rate.or(file.learning_rate).unwrap_or(d.learning_rate),
        batch_size: args.batch_size.or(file.batch_size).unwrap_or(d.batch_size),
        seed: ctx.seed,
        clip_norm: d.clip_norm,
    };
    if hidden_dim == 0 {
        return Err(usage("--hidden-dim must be at least 1"));
    }
    if opts.batch_size == 0 {
        return Err(usage("--batch-size must be at least 1"));
    }
    if !(opts.learning_rate.is_finite() && opts.learning_rate > 0.0) {
        return Err(usage("--learning-rate must be a positive number"));
    }
    let per_trajectory = match args
        .windows_per_trajectory
        .or(file.windows_per_trajectory)
        .unwrap_or(DEFAULT_WINDOWS_PER_TRAJECTORY)
    {
        0 => None,
        n => Some(n),
    };
    Ok(Training {
        hidden_dim,
        opts,
        per_trajectory,
    })
}

/// Feature dimension shared by every trajectory, or a data error naming the
/// first one that disagrees.
fn input_dim(trajs: &[Trajectory], pipeline: &Pipeline, expected: Option<usize>) -> anyhow::Result<usize> {
    let mut dim = expected;
    for t in trajs {
        let d = pipeline.input_dim(t.joint_count());
        match dim {
            None => dim = Some(d),
            Some(e) if e != d => bail!(
                "dimension mismatch: trajectory `{}` has {} joints (input dim {d}), expected input dim {e}",
                t.id(),
                t.joint_count()
            ),
            _ => {}
        }
    }
    dim.context("no trajectories in input")
}

struct Fitted {
    model: TemporalModel,
    history: Vec<f64>,
    windows: usize,
    skipped: Vec<String>,
}

fn fit(
    trajs: &[Trajectory],
    classes: &Classes,
    pipeline: &Pipeline,
    training: &Training,
    seed: u64,
) -> anyhow::Result<Fitted> {
    let dim = input_dim(trajs, pipeline, None)?;
    let set = training_set(trajs, classes, pipeline, training.per_trajectory)?;
    if set.examples.is_empty() {
        bail!("every trajectory is shorter than the window; nothing to train on");
    }
    let config = ModelConfig {
        input_dim: dim,
        hidden_dim: training.hidden_dim,
        num_classes: classes.len(),
        seed,
    };
    let init = TemporalModel::init(config)?;
    let (model, history) = train(&init, &set.examples, &training.opts)?;
    Ok(Fitted {
        model,
        history,
        windows: set.examples.len(),
        skipped: set.skipped,
    })
}

fn classes_of(trajs: &[Trajectory]) -> anyhow::Result<Classes> {
    if let Some(t) = trajs.iter().find(|t| t.label().is_none()) {
        bail!("trajectory `{}` has no label", t.id());
    }
    let classes = Classes::from_trajectories(trajs);
    if classes.len() < 2 {
        bail!("training needs at least two classes, found {}", classes.len());
    }
    Ok(classes)
}

fn warn_skipped(skipped: &[String]) {
    if !skipped.is_empty() {
        eprintln!(
            "warning: skipped {} trajectories shorter than the window (first: {})",
            skipped.len(),
            skipped[0]
        );
    }
}

pub fn gen(args: &GenArgs, ctx: &Ctx) -> anyhow::Result<()> {
    match args.kind {
        GenKind::Trajectories => {
            if args.frames_min == 0 || args.frames_min > args.frames_max {
                return Err(usage("need 1 <= --frames-min <= --frames-max"));
            }
            if args.joints == 0 {
                return Err(usage("--joints must be at least 1"));
            }
            if !(args.noise.is_finite() && args.noise >= 0.0) {
                return Err(usage("--noise must be a non-negative number"));
            }
            let spec = BenchmarkSpec {
                classes: args.classes as usize,
                train: args.train,
                test: args.test,
                frames_min: args.frames_min,
                frames_max: args.frames_max,
                joints: args.joints,
                noise: args.noise,
                seed: ctx.seed,
            };
            let (train, test) = gen_benchmark(&spec);
            std::fs::create_dir_all(&args.out_dir)
                .with_context(|| format!("creating {}", args.out_dir.display()))?;
            for (name, set) in [("train.jsonl", &train), ("test.jsonl", &test)] {
                let mut buf = Vec::new();
                write_trajectories(&mut buf, set)?;
                write_atomic(&args.out_dir.join(name), &buf)?;
            }
            eprintln!(
                "wrote {} train and {} test trajectories to {}",
                train.len(),
                test.len(),
                args.out_dir.display()
            );
        }
        GenKind::Embeddings => {
            if args.dim == 0 {
                return Err(usage("--dim must be at least 1"));
            }
            if !(args.separation.is_finite() && args.separation >= 0.0) {
                return Err(usage("--separation must be a non-negative number"));
            }
            let (templates, labeled) =
                gen_embedding_clusters(args.dim, args.n_in, args.n_out, args.separation, ctx.seed);
            let candidates: Vec<_> = labeled.into_iter().map(|(e, _)| e).collect();
            std::fs::create_dir_all(&args.out_dir)
                .with_context(|| format!("creating {}", args.out_dir.display()))?;
            for (name, set) in [("templates.jsonl", &templates), ("candidates.jsonl", &candidates)] {
                let mut buf = Vec::new();
                write_embeddings(&mut buf, set)?;
                write_atomic(&args.out_dir.join(name), &buf)?;
            }
            eprintln!(
                "wrote {} templates and {} candidates to {}",
                templates.len(),
                candidates.len(),
                args.out_dir.display()
            );
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct History<'a> {
    epochs: usize,
    loss: &'a [f64],
    training_windows: usize,
    skipped: &'a [String],
}

fn history_path(out: &Path) -> PathBuf {
    out.with_extension("history.json")
}

pub fn train_cmd(args: &TrainArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let pipeline = resolve_pipeline(&args.pipeline, &ctx.file, Pipeline::default())?;
    let training = resolve_training(&args.training, ctx)?;
    let trajs = load_trajectories(&args.input)?;
    let classes = classes_of(&trajs)?;
    let fitted = fit(&trajs, &classes, &pipeline, &training, ctx.seed)?;
    warn_skipped(&fitted.skipped);

    let checkpoint = Checkpoint::new(fitted.model, classes, pipeline)?;
    let history = History {
        epochs: fitted.history.len(),
        loss: &fitted.history,
        training_windows: fitted.windows,
        skipped: &fitted.skipped,
    };
    let mut history_json = serde_json::to_string_pretty(&history)?;
    history_json.push('\n');
    let history_out = args.history.clone().unwrap_or_else(|| history_path(&args.out));

    write_atomic(&args.out, checkpoint.to_json()?.as_bytes())?;
    write_atomic(&history_out, history_json.as_bytes())?;
    eprintln!(
        "trained on {} windows from {} trajectories; final loss {:.4}; wrote {}",
        fitted.windows,
        trajs.len() - fitted.skipped.len(),
        fitted.history.last().copied().unwrap_or(f64::NAN),
        args.out.display()
    );
    Ok(())
}

pub fn classify(args: &ClassifyArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.model)
        .with_context(|| format!("reading {}", args.model.display()))?;
    let ckpt = Checkpoint::from_json(&text).with_context(|| format!("loading {}", args.model.display()))?;
    let pipeline = resolve_pipeline(&args.pipeline, &ctx.file, ckpt.pipeline.clone())?;
    let trajs = load_trajectories(&args.input)?;
    input_dim(&trajs, &pipeline, Some(ckpt.model.config().input_dim))?;
    let report = evaluate(&ckpt.model, &ckpt.classes, &trajs, &pipeline)?;
    eprintln!(
        "action accuracy {:.4} ({} trajectories), window accuracy {:.4}",
        report.action_accuracy,
        trajs.len(),
        report.window_accuracy
    );
    emit_json(&report, args.out.as_deref())
}

#[derive(Serialize)]
struct FilterOutput {
    threshold: f64,
    aggregation: Aggregation,
    #[serde(flatten)]
    report: FilterReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<Vec<SweepPoint>>,
}

pub fn filter(args: &FilterArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let threshold = args.threshold.or(ctx.file.threshold).unwrap_or(FilterPolicy::DEFAULT_THRESHOLD);
    let aggregation: Aggregation = match args.aggregation.as_ref().or(ctx.file.aggregation.as_ref()) {
        Some(s) => s.parse().map_err(|e: String| usage(format!("--aggregation: {e}")))?,
        None => Aggregation::default(),
    };
    let policy = FilterPolicy::new(threshold, aggregation).map_err(|e| usage(format!("--threshold: {e}")))?;
    if let Some(taus) = &args.sweep {
        if let Some(t) = taus.iter().find(|t| !(-1.0..=1.0).contains(*t)) {
            return Err(usage(format!("--sweep: threshold {t} is outside [-1, 1]")));
        }
    }

    let templates = load_embeddings(&args.templates)?;
    let candidates = load_embeddings(&args.candidates)?;
    let report = filter_candidates(&templates, &candidates, &policy)?;
    let sweep = match &args.sweep {
        Some(taus) => {
            let labeled: Vec<_> = candidates
                .iter()
                .map(|e| (e.clone(), e.label() == Some(args.positive_label.as_str())))
                .collect();
            Some(sweep_threshold(&templates, &labeled, taus, aggregation)?)
        }
        None => None,
    };
    eprintln!(
        "accepted {} of {} candidates at threshold {threshold}",
        report.accepted.len(),
        candidates.len()
    );
    let out = FilterOutput {
        threshold,
        aggregation,
        report,
        sweep,
    };
    emit_json(&out, args.out.as_deref())
}

#[derive(Serialize)]
struct SweepRow {
    beta: usize,
    gamma: usize,
    action_accuracy: f64,
    window_accuracy: f64,
    training_windows: usize,
    skipped_train: usize,
}

#[derive(Serialize)]
struct SweepOutput {
    rows: Vec<SweepRow>,
}

pub fn sweep(args: &SweepArgs, ctx: &Ctx) -> anyhow::Result<()> {
    if args.betas.contains(&0) || args.gammas.contains(&0) {
        return Err(usage("window sizes and steps must be at least 1"));
    }
    let (joints, normalize) = resolve_preprocess(&args.preprocess, &ctx.file, &Pipeline::default())?;
    let training = resolve_training(&args.training, ctx)?;
    let train_set = load_trajectories(&args.train)?;
    let test_set = load_trajectories(&args.test)?;
    let classes = classes_of(&train_set)?;

    let mut rows = Vec::new();
    for &gamma in &args.gammas {
        for &beta in &args.betas {
            let pipeline = Pipeline {
                joints: joints.clone(),
                normalize,
                windowing: Windowing::Sliding {
                    params: WindowParams::new(beta, gamma)?,
                    strict: false,
                },
            };
            let fitted = fit(&train_set, &classes, &pipeline, &training, ctx.seed)?;
            warn_skipped(&fitted.skipped);
            let report: EvalReport = evaluate(&fitted.model, &classes, &test_set, &pipeline)
                .with_context(|| format!("evaluating beta={beta} gamma={gamma}"))?;
            eprintln!(
                "beta={beta:<3} gamma={gamma:<3} action {:.4} window {:.4}",
                report.action_accuracy, report.window_accuracy
            );
            rows.push(SweepRow {
                beta,
                gamma,
                action_accuracy: report.action_accuracy,
                window_accuracy: report.window_accuracy,
                training_windows: fitted.windows,
                skipped_train: fitted.skipped.len(),
            });
        }
    }
    eprint!("{}", render_grid(&rows));
    emit_json(&SweepOutput { rows }, args.out.as_deref())
}

/// Action accuracy with one row per step and one column per window size.
fn render_grid(rows: &[SweepRow]) -> String {
    let betas: BTreeSet<usize> = rows.iter().map(|r| r.beta).collect();
    let gammas: BTreeSet<usize> = rows.iter().map(|r| r.gamma).collect();
    let mut s = format!("{:>8}", "step\\win");
    for b in &betas {
        s += &format!("{b:>8}");
    }
    s.push('\n');
    for g in &gammas {
        s += &format!("{g:>8}");
        for b in &betas {
            match rows.iter().find(|r| r.beta == *b && r.gamma == *g) {
                Some(r) => s += &format!("{:>8.4}", r.action_accuracy),
                None => s += &format!("{:>8}", "-"),
            }
        }
        s.push('\n');
    }
    s
}
