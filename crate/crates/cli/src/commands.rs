use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use smic_core::data::{load_dataset, make_blobs, normalize, sample_constraints, ConstraintSet, CsvFormat, Dataset};
use smic_core::eval::{ari, run_benchmark, BenchmarkConfig, LinkCount};
use smic_core::kernel::{apply_constraints, local_scaling_kernel};
use smic_core::lsmi::{self, LsmiConfig};
use smic_core::model_select::{grid_search, write_candidate_table, SearchGrid, SearchOutcome};
use smic_core::solver::{cluster, ClusterModel, SolverParams};

use crate::files::{compact_labels, open, read_labels, write_labels, write_to};
use crate::manifest::Manifest;
use crate::{Cli, Command, GridArgs, InputArgs, LsmiArgs, Usage};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Cluster(a) => cmd_cluster(cli, a),
        Command::Select(a) => cmd_select(cli, a),
        Command::Predict(a) => cmd_predict(cli, a),
        Command::Constraints(a) => cmd_constraints(cli, a),
        Command::Ari(a) => cmd_ari(cli, a),
        Command::Bench(a) => cmd_bench(cli, a),
        Command::Lsmi(a) => cmd_lsmi(cli, a),
        Command::Blobs(a) => cmd_blobs(cli, a),
    }
}

fn load(args: &InputArgs, m: &mut Manifest) -> Result<Dataset> {
    let format = if args.labeled { CsvFormat::Labeled } else { CsvFormat::Plain };
    let ds = load_dataset(&args.input, format)?;
    m.input(&args.input);
    m.param("input", &args.input);
    m.param("labeled", args.labeled);
    let scheme: smic_core::Normalization = args.normalize.into();
    m.param("normalize", scheme);
    Ok(normalize(&ds, scheme))
}

fn load_constraints(path: Option<&Path>, n: usize, m: &mut Manifest) -> Result<ConstraintSet> {
    match path {
        Some(p) => {
            let cs = ConstraintSet::read(n, open(p)?).with_context(|| format!("in constraint file {}", p.display()))?;
            m.input(p);
            m.param("constraints", p);
            m.detail("must_links", cs.must_links().len());
            m.detail("cannot_links", cs.cannot_links().len());
            Ok(cs)
        }
        None => Ok(ConstraintSet::empty(n)),
    }
}

fn lsmi_config(args: &LsmiArgs, seed: u64) -> LsmiConfig {
    LsmiConfig {
        kappa_grid: args.kappa_grid.clone(),
        delta_grid: args.delta_grid.clone(),
        folds: args.folds,
        center_cap: args.center_cap,
        seed,
    }
}

fn search(cli: &Cli, ds: &Dataset, cs: &ConstraintSet, c: usize, g: &GridArgs, m: &mut Manifest) -> Result<SearchOutcome> {
    let grid = SearchGrid {
        t: g.t_grid.clone(),
        gamma: g.gamma_grid.clone(),
        eta: g.eta_grid.clone(),
    };
    let cfg = lsmi_config(&g.lsmi, cli.seed());
    m.param("grid", &grid);
    m.param("lsmi", &cfg);
    let out = grid_search(ds, cs, c, &grid, &cfg)?;
    m.detail("selected", out.best.params);
    m.detail("selected_lsmi", out.best.lsmi);
    m.detail("selected_violations", out.best.n_v);
    m.detail(
        "candidate_wall_ms",
        out.table
            .iter()
            .map(|c| serde_json::json!({"t": c.params.t, "gamma": c.params.gamma, "eta": c.params.eta, "ms": c.wall_ms}))
            .collect::<Vec<_>>(),
    );
    if !out.failures.is_empty() {
        m.detail("failed_candidates", out.failures.len());
    }
    if out.normalization == smic_core::model_select::LsmiNormalization::Shifted {
        m.detail("lsmi_normalization", "shifted");
    }
    Ok(out)
}

fn write_model(path: Option<&PathBuf>, model: &ClusterModel, m: &mut Manifest) -> Result<()> {
    if let Some(p) = path {
        let text = model.to_json()?;
        std::fs::write(p, text + "\n").with_context(|| format!("cannot write {}", p.display()))?;
        m.output(p);
    }
    Ok(())
}

#[derive(Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of clusters.
    #[arg(long, short)]
    classes: usize,
    /// Link file: `i j +1` (must-link) or `i j -1` (cannot-link), 1-based.
    #[arg(long)]
    constraints: Option<PathBuf>,
    /// Neighborhood size of the local-scaling kernel [default: 7].
    #[arg(long, conflicts_with = "auto")]
    t: Option<usize>,
    /// Must-link weight [default: 1].
    #[arg(long, conflicts_with = "auto")]
    gamma: Option<f64>,
    /// Cannot-link weight [default: 1 for two clusters, else 0].
    #[arg(long, conflicts_with = "auto")]
    eta: Option<f64>,
    /// Choose t, gamma and eta by grid search.
    #[arg(long)]
    auto: bool,
    #[command(flatten)]
    grid: GridArgs,
    /// Labels CSV (`index,label`); standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Fitted model JSON, reusable with `predict`.
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Dump the constraint-edited kernel matrix as CSV.
    #[arg(long)]
    kernel_out: Option<PathBuf>,
    /// With --auto, write the candidate table here.
    #[arg(long, requires = "auto")]
    table_out: Option<PathBuf>,
}

fn cmd_cluster(cli: &Cli, a: &ClusterArgs) -> Result<()> {
    let mut m = Manifest::new("cluster", cli.seed());
    let ds = load(&a.input, &mut m)?;
    let cs = load_constraints(a.constraints.as_deref(), ds.n(), &mut m)?;
    m.param("classes", a.classes);
    let (labels, model) = if a.auto {
        let out = search(cli, &ds, &cs, a.classes, &a.grid, &mut m)?;
        if let Some(p) = &a.table_out {
            write_to(Some(p), |w| write_candidate_table(&out, w))?;
            m.output(p);
        }
        (out.best.labels, out.model)
    } else {
        let params = SolverParams {
            t: a.t.unwrap_or(7),
            gamma: a.gamma.unwrap_or(1.0),
            eta: a.eta.unwrap_or(if a.classes > 2 { 0.0 } else { 1.0 }),
        };
        m.param("params", params);
        let out = cluster(&ds, &cs, &params, a.classes)?;
        (out.labels, out.model)
    };
    if let Some(p) = &a.kernel_out {
        let k = apply_constraints(&local_scaling_kernel(&ds.features, model.params.t)?, &cs)?;
        write_to(Some(p), |w| k.write_csv(w))?;
        m.output(p);
    }
    write_model(a.model_out.as_ref(), &model, &mut m)?;
    write_to(a.output.as_deref(), |w| write_labels(w, &labels))?;
    if let Some(p) = &a.output {
        m.primary(p);
    }
    m.finish(cli.manifest.as_deref())
}

#[derive(Args)]
pub struct SelectArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of clusters.
    #[arg(long, short)]
    classes: usize,
    /// Link file: `i j +1` (must-link) or `i j -1` (cannot-link), 1-based.
    #[arg(long)]
    constraints: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
    /// Candidate table CSV; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Labels of the selected candidate.
    #[arg(long)]
    labels_out: Option<PathBuf>,
    /// Fitted model JSON of the selected candidate.
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Cross-validation table of the selected candidate's LSMI fit.
    #[arg(long)]
    cv_out: Option<PathBuf>,
}

fn cmd_select(cli: &Cli, a: &SelectArgs) -> Result<()> {
    let mut m = Manifest::new("select", cli.seed());
    let ds = load(&a.input, &mut m)?;
    let cs = load_constraints(a.constraints.as_deref(), ds.n(), &mut m)?;
    m.param("classes", a.classes);
    let out = search(cli, &ds, &cs, a.classes, &a.grid, &mut m)?;
    write_to(a.output.as_deref(), |w| write_candidate_table(&out, w))?;
    if let Some(p) = &a.output {
        m.primary(p);
    }
    if let Some(p) = &a.labels_out {
        write_to(Some(p), |w| write_labels(w, &out.best.labels))?;
        m.output(p);
    }
    if let Some(p) = &a.cv_out {
        write_to(Some(p), |w| out.best_cv.write_csv(w))?;
        m.output(p);
    }
    write_model(a.model_out.as_ref(), &out.model, &mut m)?;
    m.finish(cli.manifest.as_deref())
}

#[derive(Args)]
pub struct PredictArgs {
    /// Model JSON written by `cluster --model-out`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    /// Labels CSV (`index,label`); standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn cmd_predict(cli: &Cli, a: &PredictArgs) -> Result<()> {
    let mut m = Manifest::new("predict", cli.seed());
    let text = std::fs::read_to_string(&a.model).with_context(|| format!("cannot read {}", a.model.display()))?;
    let model = ClusterModel::from_json(&text).with_context(|| format!("in model {}", a.model.display()))?;
    m.input(&a.model);
    m.param("model", &a.model);
    let labels = match load(&a.input, &mut m) {
        Ok(ds) => model.predict_batch(&ds.features)?,
        Err(e) if matches!(e.downcast_ref::<smic_core::Error>(), Some(smic_core::Error::EmptyInput)) => {
            log::info!("{} holds no samples", a.input.input.display());
            m.input(&a.input.input);
            Vec::new()
        }
        Err(e) => return Err(e),
    };
    write_to(a.output.as_deref(), |w| write_labels(w, &labels))?;
    if let Some(p) = &a.output {
        m.primary(p);
    }
    m.finish(cli.manifest.as_deref())
}

#[derive(Args)]
pub struct ConstraintArgs {
    /// Ground-truth labels: an `index,label` file or one label per line.
    #[arg(long, required_unless_present = "input", conflicts_with = "input")]
    labels: Option<PathBuf>,
    /// Labeled CSV whose last column holds the ground truth.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Number of links, or a fraction of all sample pairs when it has a
    /// decimal point.
    #[arg(long)]
    links: String,
    /// Link file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_links(text: &str) -> Result<LinkCount> {
    let bad = || Usage(format!("--links expects a count or a fraction, got '{text}'"));
    if text.contains(['.', 'e', 'E']) {
        Ok(LinkCount::Fraction(text.parse().map_err(|_| bad())?))
    } else {
        Ok(LinkCount::Count(text.parse().map_err(|_| bad())?))
    }
}

fn cmd_constraints(cli: &Cli, a: &ConstraintArgs) -> Result<()> {
    let mut m = Manifest::new("constraints", cli.seed());
    let truth = match (&a.labels, &a.input) {
        (Some(p), _) => {
            m.input(p);
            compact_labels(&read_labels(p)?).0
        }
        (None, Some(p)) => {
            m.input(p);
            load_dataset(p, CsvFormat::Labeled)?.labels.expect("labeled format")
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let count = parse_links(&a.links)?.resolve(truth.len())?;
    m.param("links", count);
    let cs = sample_constraints(&truth, count, cli.seed())?;
    m.detail("must_links", cs.must_links().len());
    m.detail("cannot_links", cs.cannot_links().len());
    write_to(a.output.as_deref(), |w| cs.write(w))?;
    if let Some(p) = &a.output {
        m.output(p);
    }
    m.finish(cli.manifest.as_deref())
}

#[derive(Args)]
pub struct AriArgs {
    /// First label file.
    a: PathBuf,
    /// Second label file.
    b: PathBuf,
}

fn cmd_ari(cli: &Cli, a: &AriArgs) -> Result<()> {
    let mut m = Manifest::new("ari", cli.seed());
    let la = compact_labels(&read_labels(&a.a)?).0;
    let lb = compact_labels(&read_labels(&a.b)?).0;
    m.input(&a.a);
    m.input(&a.b);
    let value = ari(&la, &lb)?;
    m.detail("ari", value);
    println!("{value:?}");
    m.finish(cli.manifest.as_deref())
}

#[derive(Args)]
pub struct BenchArgs {
    /// JSON benchmark description.
    #[arg(long)]
    config: PathBuf,
    /// Per-run report CSV; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Mean and standard deviation per link count, as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn cmd_bench(cli: &Cli, a: &BenchArgs) -> Result<()> {
    let mut m = Manifest::new("bench", cli.seed());
    let mut cfg = BenchmarkConfig::load(&a.config)?;
    m.input(&a.config);
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    m.param("config", &cfg);
    let report = run_benchmark(&cfg)?;
    write_to(a.output.as_deref(), |w| report.write_csv(w))?;
    if let Some(p) = &a.output {
        m.output(p);
    }
    if let Some(p) = &a.summary {
        let text = report.summary_json()?;
        write_to(Some(p), |w| writeln!(w, "{text}"))?;
        m.output(p);
    }
    for point in &report.series[0].points {
        log::info!("links={} mean ARI={:.4} std={:.4}", point.links, point.mean, point.std);
    }
    m.finish(cli.manifest.as_deref())
}

#[derive(Args)]
pub struct LsmiCmdArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Labels to test against; defaults to the last column of a --labeled input.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    lsmi: LsmiArgs,
    /// Result JSON; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Cross-validation table CSV.
    #[arg(long)]
    cv_out: Option<PathBuf>,
}

fn cmd_lsmi(cli: &Cli, a: &LsmiCmdArgs) -> Result<()> {
    let mut m = Manifest::new("lsmi", cli.seed());
    let ds = load(&a.input, &mut m)?;
    let labels = match (&a.labels, &ds.labels) {
        (Some(p), _) => {
            m.input(p);
            let labels = compact_labels(&read_labels(p)?).0;
            if labels.len() != ds.n() {
                return Err(Usage(format!("{} has {} labels for {} samples", p.display(), labels.len(), ds.n())).into());
            }
            labels
        }
        (None, Some(l)) => l.clone(),
        (None, None) => return Err(Usage("lsmi needs --labels or a --labeled input".into()).into()),
    };
    let cfg = lsmi_config(&a.lsmi, cli.seed());
    m.param("lsmi", &cfg);
    let est = lsmi::estimate(&ds.features, &labels, &cfg)?;
    let doc = serde_json::json!({"lsmi": est.value, "kappa": est.kappa, "delta": est.delta});
    let text = serde_json::to_string_pretty(&doc)?;
    write_to(a.output.as_deref(), |w| writeln!(w, "{text}"))?;
    if let Some(p) = &a.output {
        m.output(p);
    }
    if let Some(p) = &a.cv_out {
        write_to(Some(p), |w| est.cv.write_csv(w))?;
        m.output(p);
    }
    m.finish(cli.manifest.as_deref())
}

#[derive(Args)]
pub struct BlobArgs {
    /// Samples per blob.
    #[arg(long, default_value_t = 50)]
    n_per_class: usize,
    /// Number of blobs.
    #[arg(long, short, default_value_t = 2)]
    classes: usize,
    /// Feature dimension.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Distance between adjacent cluster centers.
    #[arg(long, default_value_t = 4.0)]
    separation: f64,
    /// Labeled CSV; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn cmd_blobs(cli: &Cli, a: &BlobArgs) -> Result<()> {
    let mut m = Manifest::new("blobs", cli.seed());
    m.param("n_per_class", a.n_per_class);
    m.param("classes", a.classes);
    m.param("dim", a.dim);
    m.param("separation", a.separation);
    let ds = make_blobs(a.n_per_class, a.classes, a.dim, a.separation, cli.seed())?;
    let labels = ds.labels.as_ref().expect("generated with labels");
    write_to(a.output.as_deref(), |w| {
        let header: Vec<String> = (1..=ds.dim()).map(|j| format!("x{j}")).chain(["label".into()]).collect();
        writeln!(w, "{}", header.join(","))?;
        for (i, row) in ds.features.row_iter().enumerate() {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(w, "{},{}", cells.join(","), labels[i] + 1)?;
        }
        Ok(())
    })?;
    if let Some(p) = &a.output {
        m.output(p);
    }
    m.finish(cli.manifest.as_deref())
}
