//! The `blockseg` command line.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{
    auc_batch, loglog_slope, mean_sd, time_fit, AucBatchConfig, TimingConfig,
};
use crate::gram::ActiveSet;
use crate::io::{
    path_records, read_changepoints, read_json, read_matrix_tsv, write_json, write_matrix_tsv,
    write_text, BreakpointRecord,
};
use crate::lars::{extract_changepoints, fitted_means, lars_path, Axis, ChangePointSet, LarsConfig};
use crate::metrics::{hausdorff_parts, roc_from_estimates, RocCurve, DEFAULT_MATCH_TOL};
use crate::simgen::{generate, generate_checkerboard_k, Scenario};
use crate::stability::{
    default_sweep_thresholds, reconstruct_u, select_changepoints, stability_scores,
    threshold_sweep, SelectionConfig,
};

#[derive(Debug, Parser)]
#[command(name = "blockseg", version, about = "Block boundary detection in noisy matrices")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Seed of every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for resamples and replicate batches (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a noisy block matrix and its true boundaries.
    Simulate(SimulateArgs),
    /// Trace the LASSO path of a matrix.
    Fit(FitArgs),
    /// Choose boundaries by stability selection.
    Select(SelectArgs),
    /// ROC, AUC and Hausdorff distances against known boundaries.
    Evaluate(EvaluateArgs),
    /// Time the path solver over a grid of sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Block-mean pattern 1..=4.
    #[arg(long, default_value_t = 1)]
    pub scenario: u8,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Generate a 0/1 checkerboard with this many boundaries per axis
    /// instead of a 5×5 pattern.
    #[arg(long)]
    pub checkerboard_k: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Observed matrix (TSV).
    #[arg(long)]
    pub input: PathBuf,
    /// Stop once this many variables are active.
    #[arg(long)]
    pub s: usize,
    /// Also write the fitted block means of the final breakpoint.
    #[arg(long)]
    pub u_hat: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Each resample keeps k_max² active variables.
    #[arg(long, default_value_t = 15)]
    pub k_max: usize,
    /// Number of resamples.
    #[arg(long, default_value_t = 100)]
    pub resamples: usize,
    /// Threshold in percent of the largest score.
    #[arg(long, default_value_t = 30.0)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    /// True boundaries (JSON with "rows" and "cols").
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// `path.json` written by `fit`.
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// Estimated boundaries to compare with the truth.
    #[arg(long)]
    pub changepoints: Option<PathBuf>,
    /// `scores.tsv` written by `select`; adds Hausdorff distances per threshold.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Side length of the matrix, needed with --changepoints or --scores
    /// when no --path is given.
    #[arg(long)]
    pub n: Option<usize>,
    /// Half-width of the window in which an estimate matches a true boundary.
    #[arg(long, default_value_t = DEFAULT_MATCH_TOL)]
    pub match_tol: usize,
    /// Simulate and fit this many replicates instead of reading files.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub scenario: u8,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Path budget of each replicate fit.
    #[arg(long, default_value_t = 100)]
    pub s: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [250, 500, 1000, 2000])]
    pub ns: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [100])]
    pub ss: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub warmup: usize,
    #[arg(long, default_value_t = 4)]
    pub reps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Serialize)]
struct RunManifest<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    #[serde(flatten)]
    common: &'a CommonArgs,
    #[serde(flatten)]
    args: &'a T,
}

/// `path.json`: the side length plus every breakpoint.
#[derive(Debug, Serialize, serde::Deserialize)]
pub struct PathFile {
    pub n: usize,
    pub max_active: usize,
    pub breakpoints: Vec<BreakpointRecord>,
}

fn prepare(common: &CommonArgs, command: &str, args: &impl Serialize) -> Result<()> {
    fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    let manifest = RunManifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        common,
        args,
    };
    write_json(&common.out.join("config.json"), &manifest)
}

fn configure_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Ok(());
    }
    // A second call in the same process (tests) keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    configure_threads(cli.common.threads)?;
    let common = &cli.common;
    match &cli.command {
        Command::Simulate(a) => simulate(common, a),
        Command::Fit(a) => fit(common, a),
        Command::Select(a) => select(common, a),
        Command::Evaluate(a) => evaluate(common, a),
        Command::Bench(a) => bench(common, a),
    }
}

fn simulate(common: &CommonArgs, a: &SimulateArgs) -> Result<()> {
    prepare(common, "simulate", a)?;
    let data = match a.checkerboard_k {
        Some(k) => generate_checkerboard_k(a.n, k, a.sigma, common.seed)?,
        None => generate(&Scenario::new(a.scenario, a.n, a.sigma, common.seed))?,
    };
    write_matrix_tsv(&common.out.join("Y.tsv"), &data.y)?;
    write_json(&common.out.join("truth.json"), &data.truth)
}

fn fit(common: &CommonArgs, a: &FitArgs) -> Result<()> {
    prepare(common, "fit", a)?;
    let y = read_matrix_tsv(&a.input)?;
    let path = lars_path(&y, &LarsConfig::new(a.s))?;
    let file = PathFile {
        n: path.n,
        max_active: path.max_active,
        breakpoints: path_records(&path),
    };
    write_json(&common.out.join("path.json"), &file)?;
    write_json(&common.out.join("changepoints.json"), &path.last().changepoints())?;
    if a.u_hat {
        write_matrix_tsv(&common.out.join("U_hat.tsv"), &fitted_means(path.last()))?;
    }
    Ok(())
}

fn select(common: &CommonArgs, a: &SelectArgs) -> Result<()> {
    prepare(common, "select", a)?;
    let y = read_matrix_tsv(&a.input)?;
    let cfg = SelectionConfig::new(a.k_max, a.resamples, a.threshold, common.seed);
    let scores = stability_scores(&y, &cfg)?;
    let cp = select_changepoints(&scores, a.threshold)?;

    let mut text = String::from("position\trow_score\tcol_score\n");
    for (p, (r, c)) in scores.row_scores.iter().zip(&scores.col_scores).enumerate() {
        text.push_str(&format!("{}\t{r}\t{c}\n", p + 1));
    }
    write_text(&common.out.join("scores.tsv"), &text)?;
    write_json(&common.out.join("changepoints.json"), &cp)?;
    write_matrix_tsv(&common.out.join("U_hat.tsv"), &reconstruct_u(&y, &cp)?)?;

    let mut sweep = String::from("threshold_pct\tk_rows\tk_cols\n");
    for (t, kr, kc) in threshold_sweep(&scores, &default_sweep_thresholds()) {
        sweep.push_str(&format!("{t}\t{kr}\t{kc}\n"));
    }
    write_text(&common.out.join("threshold_sweep.tsv"), &sweep)
}

fn roc_lines(out: &mut String, label: &str, axis: &str, roc: &RocCurve) {
    for &(f, t) in &roc.points {
        out.push_str(&format!("{label}\t{axis}\t{f}\t{t}\n"));
    }
}

fn read_scores(path: &Path) -> Result<(Vec<u64>, Vec<u64>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let parsed = (f.len() == 3)
            .then(|| (f[1].parse::<u64>().ok(), f[2].parse::<u64>().ok()))
            .and_then(|(r, c)| Some((r?, c?)));
        let Some((r, c)) = parsed else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: "expected position, row_score, col_score".into(),
            });
        };
        rows.push(r);
        cols.push(c);
    }
    Ok((rows, cols))
}

fn evaluate(common: &CommonArgs, a: &EvaluateArgs) -> Result<()> {
    if let Some(replicates) = a.replicates {
        return evaluate_batch(common, a, replicates);
    }
    let truth_path = a
        .truth
        .as_ref()
        .ok_or_else(|| Error::Argument("evaluate needs --truth (or --replicates)".into()))?;
    prepare(common, "evaluate", a)?;

    let path_file: Option<PathFile> = a.path.as_deref().map(read_json).transpose()?;
    let n = match (&path_file, a.n) {
        (Some(p), _) => p.n,
        (None, Some(n)) => n,
        (None, None) => {
            return Err(Error::Argument("evaluate needs --path or --n to know the side length".into()))
        }
    };
    let truth = read_changepoints(truth_path, n)?;

    let mut roc_text = String::from("source\taxis\tfpr\ttpr\n");
    let mut auc_text = String::from("source\taxis\tmean\tsd\n");
    let mut curves: Vec<(String, Axis, RocCurve)> = Vec::new();
    if let Some(p) = &path_file {
        let estimates = p
            .breakpoints
            .iter()
            .map(|bp| ActiveSet::from_indices(n, bp.active.iter().copied()).map(|s| extract_changepoints(&s)))
            .collect::<Result<Vec<_>>>()?;
        for axis in [Axis::Rows, Axis::Cols] {
            let roc = roc_from_estimates(
                estimates.iter().map(|cp| cp.axis(axis)),
                truth.axis(axis),
                n,
                a.match_tol,
            )?;
            curves.push(("path".into(), axis, roc));
        }
    }
    if let Some(cp_path) = &a.changepoints {
        let est = read_changepoints(cp_path, n)?;
        for axis in [Axis::Rows, Axis::Cols] {
            let roc = roc_from_estimates([est.axis(axis)], truth.axis(axis), n, a.match_tol)?;
            curves.push(("changepoints".into(), axis, roc));
        }
    }
    for (label, axis, roc) in &curves {
        let name = axis_name(*axis);
        roc_lines(&mut roc_text, label, name, roc);
        auc_text.push_str(&format!("{label}\t{name}\t{}\t0\n", roc.auc));
    }
    write_text(&common.out.join("roc.tsv"), &roc_text)?;
    write_text(&common.out.join("auc.tsv"), &auc_text)?;

    let mut haus = String::from("threshold_pct\taxis\td1\td2\td\n");
    if let Some(cp_path) = &a.changepoints {
        let est = read_changepoints(cp_path, n)?;
        hausdorff_lines(&mut haus, "NA", &truth, &est)?;
    }
    if let Some(scores_path) = &a.scores {
        let (rows, cols) = read_scores(scores_path)?;
        if rows.len() != n {
            return Err(Error::Input(format!(
                "{} has {} positions, expected {n}",
                scores_path.display(),
                rows.len()
            )));
        }
        let scores = crate::stability::StabilityScores {
            row_scores: rows,
            col_scores: cols,
            resamples: 0,
            budget: 0,
            seed: common.seed,
        };
        for t in default_sweep_thresholds() {
            let est = select_changepoints(&scores, t)?;
            hausdorff_lines(&mut haus, &t.to_string(), &truth, &est)?;
        }
    }
    write_text(&common.out.join("hausdorff.tsv"), &haus)
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::Rows => "rows",
        Axis::Cols => "cols",
    }
}

fn hausdorff_lines(out: &mut String, label: &str, truth: &ChangePointSet, est: &ChangePointSet) -> Result<()> {
    for axis in [Axis::Rows, Axis::Cols] {
        let (t, e) = (truth.axis(axis), est.axis(axis));
        if t.is_empty() || e.is_empty() {
            out.push_str(&format!("{label}\t{}\tNA\tNA\tNA\n", axis_name(axis)));
            continue;
        }
        let h = hausdorff_parts(t, e)?;
        out.push_str(&format!("{label}\t{}\t{}\t{}\t{}\n", axis_name(axis), h.d1, h.d2, h.d));
    }
    Ok(())
}

fn evaluate_batch(common: &CommonArgs, a: &EvaluateArgs, replicates: usize) -> Result<()> {
    prepare(common, "evaluate", a)?;
    let n = a.n.unwrap_or(100);
    let cfg = AucBatchConfig {
        scenario: a.scenario,
        n,
        sigma: a.sigma,
        replicates,
        s: a.s,
        match_tol: a.match_tol,
        seed: common.seed,
    };
    let runs = auc_batch(&cfg)?;
    let mut roc_text = String::from("replicate\taxis\tfpr\ttpr\n");
    for (r, run) in runs.iter().enumerate() {
        roc_lines(&mut roc_text, &r.to_string(), "rows", &run.rows);
        roc_lines(&mut roc_text, &r.to_string(), "cols", &run.cols);
    }
    write_text(&common.out.join("roc.tsv"), &roc_text)?;
    let mut auc_text = String::from("source\taxis\tmean\tsd\n");
    for (name, pick) in [("rows", 0), ("cols", 1)] {
        let aucs: Vec<f64> = runs
            .iter()
            .map(|r| if pick == 0 { r.rows.auc } else { r.cols.auc })
            .collect();
        let (m, sd) = mean_sd(&aucs);
        auc_text.push_str(&format!("batch\t{name}\t{m}\t{sd}\n"));
    }
    write_text(&common.out.join("auc.tsv"), &auc_text)?;
    write_text(&common.out.join("hausdorff.tsv"), "threshold_pct\taxis\td1\td2\td\n")
}

fn bench(common: &CommonArgs, a: &BenchArgs) -> Result<()> {
    prepare(common, "bench", a)?;
    let tcfg = TimingConfig {
        warmup: a.warmup,
        reps: a.reps,
        sigma: a.sigma,
        seed: common.seed,
    };
    let mut rows = Vec::new();
    let mut text = String::from("n\ts\tmedian_seconds\n");
    for &n in &a.ns {
        for &s in &a.ss {
            let t = time_fit(n, s, &tcfg)?;
            text.push_str(&format!("{n}\t{s}\t{t:.6e}\n"));
            rows.push((n, s, t));
        }
    }
    write_text(&common.out.join("timings.tsv"), &text)?;

    let mut slopes = String::from("versus\tfixed\tslope\n");
    if a.ns.len() >= 2 {
        for &s in &a.ss {
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.1 == s).map(|r| (r.0 as f64, r.2)).collect();
            slopes.push_str(&format!("n\ts={s}\t{}\n", loglog_slope(&pts)?));
        }
    }
    if a.ss.len() >= 2 {
        for &n in &a.ns {
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.0 == n).map(|r| (r.1 as f64, r.2)).collect();
            slopes.push_str(&format!("s\tn={n}\t{}\n", loglog_slope(&pts)?));
        }
    }
    print!("{slopes}");
    write_text(&common.out.join("slopes.tsv"), &slopes)
}
