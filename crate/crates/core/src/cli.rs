//! Command-line front end of the `malaga` binary.
//!
//! Every CSV is comma-separated with `.` decimals; a sidecar
//! `<out>.config.json` records the resolved run configuration and the unit
//! of every column. SNRs cross this boundary in dB only.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::aser::{aser_inid, aser_quadrature, asymptotic_inid, modulation_table, AserValue, ModulationSpec};
use crate::channel::{exact_cdf, exact_pdf, moment_vector, ChannelFile, MalagaParams};
use crate::error::{Error, Result};
use crate::fit::{approx_cdf, approx_pdf, fit_channel, fit_channel_with, FitOptions, FitReport, FittedApprox};
use crate::mgf::{sum_mgf_inid, sum_mgf_product, BranchSet};
use crate::monte_carlo::{
    empirical_mgf, sample_branch, simulate_mrc_ser, EmpiricalStats, SampleConfig, SimulationPoint, SimulationReport, TabulatedCdf,
};
use crate::special::meijer::SeriesControl;

/// Monte-Carlo draws per point for `reproduce` without `--full`.
pub const QUICK_SAMPLES: usize = 1_000_000;
/// Monte-Carlo draws per point with `--full`.
pub const FULL_SAMPLES: usize = 3_000_000;

#[derive(Debug, Parser)]
#[command(name = "malaga", version, about = "Málaga-channel MRC statistics: fits, MGFs, error rates, simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the approximate density and write a JSON report.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Diagnostic: take the other root of the a4 quadratic.
        #[arg(long = "plus-root")]
        plus_root: bool,
    },
    /// Exact and approximate PDF/CDF on a grid.
    Pdf {
        #[command(flatten)]
        common: Common,
        /// Grid points per SNR.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// MGF of the branch sum over an s grid.
    Mgf {
        #[command(flatten)]
        common: Common,
        /// Linear s values; default is log-spaced over [1e-3, 1e3]/μ₁.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        s: Vec<f64>,
    },
    /// ASER sweep over SNR.
    Aser(Common),
    /// Monte-Carlo SER sweep over SNR.
    Simulate(Common),
    /// Data behind one of the six reference figures.
    Reproduce {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
        figure: u8,
    },
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Channel JSON; the baseline link when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Average SNR grid in dB, comma-separated, strictly increasing.
    #[arg(long = "snr-db", value_delimiter = ',', allow_negative_numbers = true)]
    pub snr_db: Vec<f64>,
    /// Channel files of non-identical branches.
    #[arg(long, num_args = 1..)]
    pub branches: Vec<PathBuf>,
    /// Number of identical branches built from --config (default 1); with
    /// --branches it must equal the number of files.
    #[arg(long = "n-branches")]
    pub n_branches: Option<usize>,
    #[arg(long, default_value = "bpsk")]
    pub modulation: String,
    #[arg(long = "max-terms")]
    pub max_terms: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Monte-Carlo draws per point.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Full-size Monte-Carlo runs.
    #[arg(long)]
    pub full: bool,
}

/// Resolved configuration written next to every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub channel_files: Vec<PathBuf>,
    pub branches: Vec<ChannelFile>,
    pub snr_grid_db: Vec<f64>,
    pub modulation: String,
    pub n_branches: usize,
    /// Branches came from `--branches` rather than copies of `--config`.
    pub non_identical: bool,
    pub max_terms: usize,
    pub tol: f64,
    pub seed: u64,
    pub samples: usize,
    pub figure: Option<u8>,
    pub plus_root: bool,
    pub output: Option<PathBuf>,
    pub units: Vec<(String, String)>,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Context {
    common: Common,
    branches: Vec<MalagaParams>,
    files: Vec<PathBuf>,
    inid: bool,
    control: SeriesControl,
    modulation: ModulationSpec,
}

impl Context {
    fn new(common: &Common) -> Result<Self> {
        let (branches, files, inid) = if !common.branches.is_empty() {
            if let Some(n) = common.n_branches.filter(|&n| n != common.branches.len()) {
                return Err(Error::Input(format!("--n-branches {n} but {} channel files", common.branches.len())));
            }
            if common.config.is_some() {
                return Err(Error::Input("--config and --branches are exclusive".into()));
            }
            let ps = common
                .branches
                .iter()
                .map(|p| ChannelFile::read(p)?.to_params())
                .collect::<Result<Vec<_>>>()?;
            (ps, common.branches.clone(), true)
        } else {
            let p = match &common.config {
                Some(path) => ChannelFile::read(path)?.to_params()?,
                None => MalagaParams::baseline(1.0),
            };
            let n = common.n_branches.unwrap_or(1);
            if n == 0 {
                return Err(Error::Input("--n-branches must be at least 1".into()));
            }
            (vec![p; n], common.config.iter().cloned().collect(), false)
        };
        let mut control = SeriesControl::residue_sums();
        if let Some(m) = common.max_terms {
            control.max_terms = m;
        }
        if let Some(t) = common.tol {
            control.rel_tol = t;
        }
        control.validate().map_err(|e| Error::Input(e.to_string()))?;
        check_grid(&common.snr_db)?;
        Ok(Context {
            common: common.clone(),
            branches,
            files,
            inid,
            control,
            modulation: modulation_table(&common.modulation)?,
        })
    }

    fn grid_or(&self, default: &[f64]) -> Vec<f64> {
        if self.common.snr_db.is_empty() {
            default.to_vec()
        } else {
            self.common.snr_db.clone()
        }
    }

    fn samples(&self) -> usize {
        self.common
            .samples
            .unwrap_or(if self.common.full { FULL_SAMPLES } else { QUICK_SAMPLES })
    }

    fn sample_config(&self) -> SampleConfig {
        SampleConfig::new(self.samples(), self.common.seed)
    }

    fn at_db(&self, db: f64) -> Vec<MalagaParams> {
        self.branches.iter().map(|p| p.with_mu1_db(db)).collect()
    }

    fn record(&self, command: &str, grid: &[f64], figure: Option<u8>, units: &[(&str, &str)]) -> RunConfig {
        RunConfig {
            command: command.to_string(),
            channel_files: self.files.clone(),
            branches: self.branches.iter().map(ChannelFile::from).collect(),
            snr_grid_db: grid.to_vec(),
            modulation: self.modulation.name.clone(),
            n_branches: self.branches.len(),
            non_identical: self.inid,
            max_terms: self.control.max_terms,
            tol: self.control.rel_tol,
            seed: self.common.seed,
            samples: self.samples(),
            figure,
            plus_root: false,
            output: self.common.out.clone(),
            units: units.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }

    fn emit(&self, body: &str, config: &RunConfig) -> Result<()> {
        match &self.common.out {
            None => {
                print!("{body}");
                Ok(())
            }
            Some(path) => {
                std::fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                let side = sidecar_path(path);
                let json = serde_json::to_string_pretty(config).map_err(|e| Error::Io(e.to_string()))?;
                std::fs::write(&side, json + "\n").map_err(|e| Error::Io(format!("{}: {e}", side.display())))
            }
        }
    }
}

/// `<out>.config.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("--snr-db values must be finite".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("--snr-db must be strictly increasing".into()));
    }
    Ok(())
}

fn execute(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Fit { common, plus_root } => cmd_fit(&Context::new(common)?, *plus_root),
        Command::Pdf { common, points } => cmd_pdf(&Context::new(common)?, *points).map(|_| 0),
        Command::Mgf { common, s } => cmd_mgf(&Context::new(common)?, s).map(|_| 0),
        Command::Aser(c) => cmd_aser(&Context::new(c)?).map(|_| 0),
        Command::Simulate(c) => cmd_simulate(&Context::new(c)?).map(|_| 0),
        Command::Reproduce { common, figure } => cmd_reproduce(&Context::new(common)?, *figure).map(|_| 0),
    }
}

fn fmt_row(cells: &[String]) -> String {
    let mut s = cells.join(",");
    s.push('\n');
    s
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        "nan".to_string()
    }
}

#[derive(Serialize)]
struct FitRow {
    mu1_db: f64,
    #[serde(flatten)]
    report: FitReport,
}

#[derive(Serialize)]
struct FitOutput {
    channel: ChannelFile,
    fits: Vec<FitRow>,
}

fn cmd_fit(ctx: &Context, plus_root: bool) -> Result<i32> {
    let options = FitOptions {
        plus_root,
        ..FitOptions::default()
    };
    let base = ctx.branches[0];
    let grid = ctx.grid_or(&[base.mu1_db()]);
    let mut infeasible = false;
    let fits = grid
        .iter()
        .map(|&db| {
            let p = base.with_mu1_db(db);
            let m = moment_vector(&p)?;
            let report = match fit_channel_with(&p, &options) {
                Ok((f, inter)) => FitReport::new(&f, &inter, &m)?,
                Err(e) if e.exit_code() == 2 => {
                    infeasible = true;
                    FitReport::infeasible(&m, &e)
                }
                Err(e) => return Err(e),
            };
            Ok(FitRow { mu1_db: db, report })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = FitOutput {
        channel: ChannelFile::from(&base),
        fits,
    };
    let json = serde_json::to_string_pretty(&out).map_err(|e| Error::Io(e.to_string()))? + "\n";
    let mut config = ctx.record("fit", &grid, None, &[("mu1_db", "dB"), ("a2", "linear")]);
    config.plus_root = plus_root;
    ctx.emit(&json, &config)?;
    if infeasible {
        eprintln!("error: fit infeasible for at least one SNR; see the report");
        return Ok(2);
    }
    Ok(0)
}

fn cmd_pdf(ctx: &Context, points: usize) -> Result<()> {
    if points < 2 {
        return Err(Error::Input("--points must be at least 2".into()));
    }
    let base = ctx.branches[0];
    let grid = ctx.grid_or(&[base.mu1_db()]);
    let mut body = String::from("mu1_db,x,exact_pdf,approx_pdf,exact_cdf,approx_cdf\n");
    for &db in &grid {
        let p = base.with_mu1_db(db);
        let (f, _) = fit_channel(&p)?;
        let hi = 6.0 * p.mu1;
        let xs: Vec<f64> = (1..=points).map(|i| hi * i as f64 / points as f64).collect();
        let rows = xs
            .par_iter()
            .map(|&x| {
                Ok(fmt_row(&[
                    num(db),
                    num(x),
                    num(exact_pdf(x, &p)?),
                    num(approx_pdf(x, &f)?),
                    num(exact_cdf(x, &p)?),
                    num(approx_cdf(x, &f)?),
                ]))
            })
            .collect::<Result<Vec<_>>>()?;
        body.extend(rows);
    }
    let units = [("mu1_db", "dB"), ("x", "linear"), ("exact_pdf", "1/linear"), ("approx_pdf", "1/linear")];
    ctx.emit(&body, &ctx.record("pdf", &grid, None, &units))
}

fn fits_of(ps: &[MalagaParams]) -> Result<Vec<FittedApprox>> {
    ps.iter().map(|p| fit_channel(p).map(|f| f.0)).collect()
}

fn default_s_grid(mean: f64) -> Vec<f64> {
    (0..=24).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64) / mean).collect()
}

fn cmd_mgf(ctx: &Context, s: &[f64]) -> Result<()> {
    let ps = ctx.at_db(ctx.grid_or(&[ctx.branches[0].mu1_db()])[0]);
    let set = BranchSet::inid(fits_of(&ps)?)?;
    let s_grid = if s.is_empty() { default_s_grid(ps[0].mu1) } else { s.to_vec() };
    let mut body = String::from("s,value,method,terms_used,converged\n");
    let rows = s_grid
        .par_iter()
        .map(|&s| {
            let v = sum_mgf_inid(s, &set, &ctx.control)?;
            Ok(fmt_row(&[num(s), num(v.value), v.method.as_str().into(), v.terms_used.to_string(), v.converged.to_string()]))
        })
        .collect::<Result<Vec<_>>>()?;
    body.extend(rows);
    let grid = [ps[0].mu1_db()];
    ctx.emit(&body, &ctx.record("mgf", &grid, None, &[("s", "linear"), ("value", "unitless")]))
}

/// One ASER row: series (with fallback), quadrature, asymptote.
pub struct AserRow {
    pub series: AserValue,
    pub quadrature: f64,
    pub asymptotic: Option<f64>,
}

pub fn aser_row(m: &ModulationSpec, ps: &[MalagaParams], control: &SeriesControl) -> Result<AserRow> {
    let set = BranchSet::inid(fits_of(ps)?)?;
    let series = aser_inid(m, &set, control)?;
    let quadrature = aser_quadrature(m, &set)?;
    let asymptotic = asymptotic_inid(m, &set).ok().map(|a| a.value);
    Ok(AserRow {
        series,
        quadrature,
        asymptotic,
    })
}

const ASER_HEADER: &str = "mu1_db,aser_series,aser_quadrature,aser_asymptotic,method_flags";

fn aser_cells(db: f64, r: &AserRow) -> Vec<String> {
    vec![
        num(db),
        num(r.series.value),
        num(r.quadrature),
        r.asymptotic.map(num).unwrap_or_else(|| "nan".into()),
        r.series.flags(),
    ]
}

fn default_snr_grid() -> Vec<f64> {
    (0..=8).map(|i| 2.5 * i as f64).collect()
}

fn cmd_aser(ctx: &Context) -> Result<()> {
    let grid = ctx.grid_or(&default_snr_grid());
    let rows = grid
        .par_iter()
        .map(|&db| Ok(fmt_row(&aser_cells(db, &aser_row(&ctx.modulation, &ctx.at_db(db), &ctx.control)?))))
        .collect::<Result<Vec<_>>>()?;
    let mut body = format!("{ASER_HEADER}\n");
    body.extend(rows);
    ctx.emit(&body, &ctx.record("aser", &grid, None, &[("mu1_db", "dB"), ("aser_series", "probability")]))
}

fn ks_exact(samples: &[f64], p: &MalagaParams) -> Result<f64> {
    let table = TabulatedCdf::new(|x| exact_cdf(x, p), 1e-4 * p.mu1, 200.0 * p.mu1, 800)?;
    crate::monte_carlo::ks_distance(samples, |x| table.eval(x))
}

fn cmd_simulate(ctx: &Context) -> Result<()> {
    let grid = ctx.grid_or(&[ctx.branches[0].mu1_db()]);
    let cfg = ctx.sample_config();
    let mut points = Vec::with_capacity(grid.len());
    let mut body = String::from("mu1_db,ser,std_error,ci_low,ci_high,error_events,low_confidence\n");
    for &db in &grid {
        let est = simulate_mrc_ser(&cfg, &ctx.at_db(db), &ctx.modulation)?;
        body.push_str(&fmt_row(&[
            num(db),
            num(est.ser),
            num(est.std_error),
            num(est.ci_low),
            num(est.ci_high),
            est.error_events.to_string(),
            est.low_confidence.to_string(),
        ]));
        points.push(SimulationPoint { mu1_db: db, estimate: est });
    }
    let mut ks = Vec::new();
    let mut means = Vec::new();
    for (j, p) in ctx.branches.iter().enumerate() {
        let xs = sample_branch(&cfg, p, j as u64)?;
        means.push(xs.iter().sum::<f64>() / xs.len() as f64);
        ks.push(ks_exact(&xs, p)?);
    }
    let report = SimulationReport {
        seed: cfg.seed,
        n_samples: cfg.n_samples,
        batch_size: cfg.batch_size,
        modulation: ctx.modulation.clone(),
        branches: ctx.branches.clone(),
        points,
        ks_exact: ks,
        sample_means: means,
    };
    let config = ctx.record("simulate", &grid, None, &[("mu1_db", "dB"), ("ser", "probability")]);
    ctx.emit(&body, &config)?;
    if let Some(out) = &ctx.common.out {
        let mut path = out.as_os_str().to_owned();
        path.push(".report.json");
        let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(PathBuf::from(path), json + "\n")?;
    }
    Ok(())
}

/// Per-branch `(α, β)` of the three heterogeneous sets of figure 6, in
/// order of improving turbulence.
pub const FIGURE6_SETS: [[(f64, u32); 2]; 3] = [[(3.0, 2), (3.0, 2)], [(3.0, 3), (4.2, 2)], [(4.2, 3), (4.2, 3)]];

/// Pointing-error ratios of figure 5.
pub const FIGURE5_XI: [f64; 3] = [1.1, 2.553, 6.0];

fn cmd_reproduce(ctx: &Context, figure: u8) -> Result<()> {
    let base = ctx.branches[0];
    let cfg = ctx.sample_config();
    let (body, units): (String, Vec<(&str, &str)>) = match figure {
        1 => (figure1(ctx, &base, &cfg)?, vec![("mu1_db", "dB"), ("x", "linear")]),
        2 => {
            let sets: Vec<(String, Vec<MalagaParams>)> = (1..=3).map(|n| (n.to_string(), vec![base; n])).collect();
            (figure_mgf(&sets, &cfg, ctx)?, vec![("s", "linear")])
        }
        3 => {
            let het = heterogeneous(&base);
            let sets = vec![("2".to_string(), het[..2].to_vec()), ("3".to_string(), het.to_vec())];
            (figure_mgf(&sets, &cfg, ctx)?, vec![("s", "linear")])
        }
        4 => {
            let sets: Vec<(String, Vec<MalagaParams>)> = (1..=3).map(|n| (n.to_string(), vec![base; n])).collect();
            (figure_aser("n_branches", &sets, ctx, &cfg)?, vec![("mu1_db", "dB")])
        }
        5 => {
            let sets: Vec<(String, Vec<MalagaParams>)> = FIGURE5_XI
                .iter()
                .map(|&xi| (xi.to_string(), vec![MalagaParams { xi, ..base }; 2]))
                .collect();
            (figure_aser("xi", &sets, ctx, &cfg)?, vec![("mu1_db", "dB")])
        }
        _ => {
            let sets: Vec<(String, Vec<MalagaParams>)> = FIGURE6_SETS
                .iter()
                .enumerate()
                .map(|(i, set)| {
                    let ps = set.iter().map(|&(alpha, beta)| MalagaParams { alpha, beta, ..base }).collect();
                    (format!("set{}", i + 1), ps)
                })
                .collect();
            (figure_aser("set", &sets, ctx, &cfg)?, vec![("mu1_db", "dB")])
        }
    };
    let grid = if matches!(figure, 4..=6) { ctx.grid_or(&default_snr_grid()) } else { ctx.common.snr_db.clone() };
    ctx.emit(&body, &ctx.record("reproduce", &grid, Some(figure), &units))
}

/// Three branches with different turbulence, sharing the base link.
pub fn heterogeneous(base: &MalagaParams) -> [MalagaParams; 3] {
    [
        *base,
        MalagaParams { alpha: 3.0, beta: 3, ..*base },
        MalagaParams { alpha: 4.2, beta: 2, ..*base },
    ]
}

fn figure1(ctx: &Context, base: &MalagaParams, cfg: &SampleConfig) -> Result<String> {
    let grid = ctx.grid_or(&[0.0, 5.0, 10.0]);
    let mut body = String::from("mu1_db,x,exact_pdf,approx_pdf,mc_pdf\n");
    for &db in &grid {
        let p = base.with_mu1_db(db);
        let (f, _) = fit_channel(&p)?;
        let xs = sample_branch(cfg, &p, 0)?;
        let upper = 5.0 * p.mu1;
        let stats = EmpiricalStats::new(&xs, 100, upper, None::<fn(f64) -> f64>)?;
        // histogram densities are conditional on x < upper; undo that
        let inside = stats.ecdf(upper);
        let h = &stats.histogram;
        let rows = (0..h.densities.len())
            .into_par_iter()
            .map(|i| {
                let x = 0.5 * (h.edges[i] + h.edges[i + 1]);
                Ok(fmt_row(&[num(db), num(x), num(exact_pdf(x, &p)?), num(approx_pdf(x, &f)?), num(h.densities[i] * inside)]))
            })
            .collect::<Result<Vec<_>>>()?;
        body.extend(rows);
    }
    Ok(body)
}

fn figure_mgf(sets: &[(String, Vec<MalagaParams>)], cfg: &SampleConfig, ctx: &Context) -> Result<String> {
    let mut body = String::from("n_branches,s,mgf_series,method,converged,mgf_product,mc_mgf,mc_std_error\n");
    for (label, ps) in sets {
        let set = BranchSet::inid(fits_of(ps)?)?;
        let mut total = vec![0.0; cfg.n_samples];
        for (j, p) in ps.iter().enumerate() {
            for (t, x) in total.iter_mut().zip(sample_branch(cfg, p, j as u64)?) {
                *t += x;
            }
        }
        let s_grid = default_s_grid(ps[0].mu1);
        let mc = empirical_mgf(&total, &s_grid)?;
        let rows = s_grid
            .par_iter()
            .zip(mc.par_iter())
            .map(|(&s, e)| {
                let v = sum_mgf_inid(s, &set, &ctx.control)?;
                let prod = sum_mgf_product(s, &set)?;
                Ok(fmt_row(&[
                    label.clone(),
                    num(s),
                    num(v.value),
                    v.method.as_str().into(),
                    v.converged.to_string(),
                    num(prod.value),
                    num(e.value),
                    num(e.std_error),
                ]))
            })
            .collect::<Result<Vec<_>>>()?;
        body.extend(rows);
    }
    Ok(body)
}

fn figure_aser(key: &str, sets: &[(String, Vec<MalagaParams>)], ctx: &Context, cfg: &SampleConfig) -> Result<String> {
    let grid = ctx.grid_or(&default_snr_grid());
    let mut body = format!("{key},{ASER_HEADER},mc_ser,mc_std_error,mc_error_events\n");
    for (label, ps) in sets {
        for &db in &grid {
            let at: Vec<MalagaParams> = ps.iter().map(|p| p.with_mu1_db(db)).collect();
            let row = aser_row(&ctx.modulation, &at, &ctx.control)?;
            let mc = simulate_mrc_ser(cfg, &at, &ctx.modulation)?;
            let mut cells = vec![label.clone()];
            cells.extend(aser_cells(db, &row));
            cells.extend([num(mc.ser), num(mc.std_error), mc.error_events.to_string()]);
            body.push_str(&fmt_row(&cells));
        }
    }
    Ok(body)
}
