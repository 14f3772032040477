//! Monte-Carlo oracle built from the physical composition of the channel.
//!
//! One draw is `γ = μ₁ X Y H / E[XYH]` with
//! `X ~ Gamma(α, 1/α)` (large-scale irradiance),
//! `Y = |√(G Ω′) + CN(0, h)|²`, `G ~ Gamma(β, 1/β)` (shadowed line-of-sight
//! plus scattering) and `H = U^{1/ξ²}` (pointing-error gain on `(0, 1]`).
//! `E[XYH] = (h + Ω′) ξ²/(ξ² + 1)`.
//!
//! Every batch of every branch owns a ChaCha8 stream keyed by
//! `(branch << 32) | batch`, so results depend only on the seed, never on
//! how rayon schedules the batches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::aser::ModulationSpec;
use crate::channel::{derive_constants, MalagaParams};
use crate::error::{Error, Result};

/// Fewest samples accepted for acceptance-grade estimates.
pub const MIN_ACCEPTANCE_SAMPLES: usize = 10_000;

/// Error events below which an SER estimate is flagged.
pub const MIN_ERROR_EVENTS: u64 = 100;

/// Stream index reserved for error-event draws.
const EVENT_STREAM: u64 = 0xFFFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub batch_size: usize,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            n_samples: 3_000_000,
            seed: 0x5eed,
            batch_size: 1 << 16,
            workers: None,
        }
    }
}

impl SampleConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        SampleConfig {
            n_samples,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::parameter("n_samples", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::parameter("batch_size", "must be positive"));
        }
        if self.workers == Some(0) {
            return Err(Error::parameter("workers", "must be positive"));
        }
        Ok(())
    }

    fn batches(&self) -> impl IndexedParallelIterator<Item = (u64, usize)> + '_ {
        let n = self.n_samples.div_ceil(self.batch_size);
        (0..n).into_par_iter().map(move |b| {
            let len = self.batch_size.min(self.n_samples - b * self.batch_size);
            (b as u64, len)
        })
    }

    fn rng(&self, branch: u64, batch: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((branch << 32) | batch);
        rng
    }

    fn run<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.workers {
            None => Ok(job()),
            Some(w) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build()
                    .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
                Ok(pool.install(job))
            }
        }
    }
}

/// A source of instantaneous SNR draws.
pub trait SnrSampler: Sync {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

/// Exact sampler for one Málaga branch with pointing errors.
#[derive(Debug, Clone)]
pub struct BranchSampler {
    large: Gamma<f64>,
    shadow: Gamma<f64>,
    omega_prime: f64,
    /// Per-quadrature standard deviation of the scattering term.
    sigma: f64,
    inv_xi2: f64,
    scale: f64,
}

impl BranchSampler {
    pub fn new(p: &MalagaParams) -> Result<Self> {
        let c = derive_constants(p)?;
        let xi2 = p.xi * p.xi;
        let gamma = |shape: f64, field: &'static str| Gamma::new(shape, 1.0 / shape).map_err(|e| Error::parameter(field, e.to_string()));
        Ok(BranchSampler {
            large: gamma(p.alpha, "alpha")?,
            shadow: gamma(p.beta as f64, "beta")?,
            omega_prime: c.omega_prime,
            sigma: (0.5 * c.h).sqrt(),
            inv_xi2: 1.0 / xi2,
            scale: p.mu1 / ((c.h + c.omega_prime) * xi2 / (xi2 + 1.0)),
        })
    }
}

impl SnrSampler for BranchSampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = self.large.sample(rng);
        let los = (self.shadow.sample(rng) * self.omega_prime).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let (re, im) = (los + self.sigma * re, self.sigma * im);
        // 1 - [0, 1) keeps U away from zero
        let u = 1.0 - rng.random::<f64>();
        self.scale * x * (re * re + im * im) * u.powf(self.inv_xi2)
    }
}

/// A fixed SNR, for no-fading checks.
#[derive(Debug, Clone, Copy)]
pub struct Degenerate(pub f64);

impl SnrSampler for Degenerate {
    fn draw<R: Rng + ?Sized>(&self, _rng: &mut R) -> f64 {
        self.0
    }
}

/// `n_samples` draws of one branch, in stream order.
pub fn sample_branch(cfg: &SampleConfig, p: &MalagaParams, branch: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let sampler = BranchSampler::new(p)?;
    sample_with(cfg, &sampler, branch)
}

pub fn sample_with<S: SnrSampler>(cfg: &SampleConfig, sampler: &S, branch: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let chunks: Vec<Vec<f64>> = cfg.run(|| {
        cfg.batches()
            .map(|(b, len)| {
                let mut rng = cfg.rng(branch, b);
                (0..len).map(|_| sampler.draw(&mut rng)).collect()
            })
            .collect()
    })?;
    Ok(chunks.concat())
}

/// Sample mean of `e^{-sγ}` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MgfEstimate {
    pub s: f64,
    pub value: f64,
    pub std_error: f64,
}

pub fn empirical_mgf(samples: &[f64], s_grid: &[f64]) -> Result<Vec<MgfEstimate>> {
    if samples.is_empty() {
        return Err(Error::Input("no samples".into()));
    }
    let n = samples.len() as f64;
    s_grid
        .iter()
        .map(|&s| {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::domain("empirical_mgf", format!("s = {s} must be non-negative")));
            }
            if s == 0.0 {
                return Ok(MgfEstimate {
                    s,
                    value: 1.0,
                    std_error: 0.0,
                });
            }
            let (sum, sq) = samples.iter().fold((0.0, 0.0), |(a, b), &g| {
                let e = (-s * g).exp();
                (a + e, b + e * e)
            });
            let mean = sum / n;
            let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
            Ok(MgfEstimate {
                s,
                value: mean,
                std_error: (var / n).sqrt(),
            })
        })
        .collect()
}

/// Simulated error rate of an MRC receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SerEstimate {
    /// Mean conditional error probability over the trials.
    pub ser: f64,
    pub std_error: f64,
    /// 95% normal-approximation interval.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Simulated symbol errors (one Bernoulli draw per trial).
    pub error_events: u64,
    pub n_samples: usize,
    pub low_confidence: bool,
}

#[derive(Default, Clone, Copy)]
struct SerAccumulator {
    sum: f64,
    sum_sq: f64,
    events: u64,
}

pub fn simulate_mrc_ser(cfg: &SampleConfig, branches: &[MalagaParams], m: &ModulationSpec) -> Result<SerEstimate> {
    let samplers = branches.iter().map(BranchSampler::new).collect::<Result<Vec<_>>>()?;
    simulate_mrc_ser_with(cfg, &samplers, m)
}

pub fn simulate_mrc_ser_with<S: SnrSampler>(cfg: &SampleConfig, samplers: &[S], m: &ModulationSpec) -> Result<SerEstimate> {
    cfg.validate()?;
    if samplers.is_empty() {
        return Err(Error::parameter("branches", "need at least one branch"));
    }
    let parts: Vec<SerAccumulator> = cfg.run(|| {
        cfg.batches()
            .map(|(b, len)| {
                let mut rngs: Vec<ChaCha8Rng> = (0..samplers.len()).map(|j| cfg.rng(j as u64, b)).collect();
                let mut events = cfg.rng(EVENT_STREAM, b);
                let mut acc = SerAccumulator::default();
                for _ in 0..len {
                    let total: f64 = samplers.iter().zip(rngs.iter_mut()).map(|(s, r)| s.draw(r)).sum();
                    let p = m.conditional_ser(total);
                    acc.sum += p;
                    acc.sum_sq += p * p;
                    if events.random::<f64>() < p {
                        acc.events += 1;
                    }
                }
                acc
            })
            .collect()
    })?;
    // merged in batch order so the floating-point sum is reproducible
    let acc = parts.iter().fold(SerAccumulator::default(), |a, b| SerAccumulator {
        sum: a.sum + b.sum,
        sum_sq: a.sum_sq + b.sum_sq,
        events: a.events + b.events,
    });
    let n = cfg.n_samples as f64;
    let ser = acc.sum / n;
    let var = (acc.sum_sq / n - ser * ser).max(0.0) * n / (n - 1.0).max(1.0);
    let se = (var / n).sqrt();
    Ok(SerEstimate {
        ser,
        std_error: se,
        ci_low: (ser - 1.96 * se).max(0.0),
        ci_high: ser + 1.96 * se,
        error_events: acc.events,
        n_samples: cfg.n_samples,
        low_confidence: acc.events < MIN_ERROR_EVENTS,
    })
}

/// Kolmogorov-Smirnov distance `sup |F_n - F|`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Input("no samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ks_sorted(&sorted, cdf))
}

fn ks_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x).clamp(0.0, 1.0);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// A CDF tabulated on a log-spaced grid and interpolated linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCdf {
    xs: Vec<f64>,
    fs: Vec<f64>,
}

impl TabulatedCdf {
    /// Tabulates `cdf` on `points` log-spaced nodes in `[lo, hi]`; below `lo`
    /// it ramps linearly from 0, above `hi` it is 1.
    pub fn new<F>(cdf: F, lo: f64, hi: f64, points: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        if !(lo > 0.0 && hi > lo) || points < 2 {
            return Err(Error::parameter("grid", format!("need 0 < lo < hi and ≥ 2 points, got [{lo}, {hi}] × {points}")));
        }
        let step = (hi / lo).ln() / (points - 1) as f64;
        let xs: Vec<f64> = (0..points).map(|i| lo * (step * i as f64).exp()).collect();
        let mut fs = xs.par_iter().map(|&x| cdf(x)).collect::<Result<Vec<_>>>()?;
        // enforce monotonicity against quadrature noise
        for i in 1..fs.len() {
            fs[i] = fs[i].max(fs[i - 1]).min(1.0);
        }
        Ok(TabulatedCdf { xs, fs })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = (self.xs[0], self.xs[self.xs.len() - 1]);
        if x <= 0.0 {
            return 0.0;
        }
        if x < lo {
            return self.fs[0] * x / lo;
        }
        if x >= hi {
            return 1.0;
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.fs[i] + t * (self.fs[i + 1] - self.fs[i])
    }
}

/// Equal-width histogram normalised to unit area.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalStats {
    pub histogram: Histogram,
    /// Orders 0 through 6.
    pub sample_moments: Vec<f64>,
    pub ks_stat: Option<f64>,
    #[serde(skip)]
    sorted: Vec<f64>,
}

impl EmpiricalStats {
    /// Histogram over `[0, upper)` (samples beyond are dropped from the
    /// histogram and the densities renormalised), moments, optional KS.
    pub fn new<F: Fn(f64) -> f64>(samples: &[f64], bins: usize, upper: f64, cdf: Option<F>) -> Result<Self> {
        if samples.is_empty() || bins == 0 || !(upper > 0.0) {
            return Err(Error::Input("need samples, bins > 0 and upper > 0".into()));
        }
        let n = samples.len() as f64;
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let width = upper / bins as f64;
        let mut counts = vec![0u64; bins];
        for &x in &sorted {
            let k = (x / width) as usize;
            if k < bins {
                counts[k] += 1;
            }
        }
        let inside: u64 = counts.iter().sum();
        let norm = if inside > 0 { 1.0 / (inside as f64 * width) } else { 0.0 };
        let histogram = Histogram {
            edges: (0..=bins).map(|i| i as f64 * width).collect(),
            densities: counts.iter().map(|&c| c as f64 * norm).collect(),
        };
        let mut sample_moments = vec![0.0; 7];
        for &x in &sorted {
            let mut p = 1.0;
            for m in sample_moments.iter_mut() {
                *m += p;
                p *= x;
            }
        }
        sample_moments.iter_mut().for_each(|m| *m /= n);
        sample_moments[0] = 1.0;
        let ks_stat = cdf.map(|f| ks_sorted(&sorted, f));
        Ok(EmpiricalStats {
            histogram,
            sample_moments,
            ks_stat,
            sorted,
        })
    }

    /// Empirical CDF.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }
}

/// One row of a simulation report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationPoint {
    pub mu1_db: f64,
    pub estimate: SerEstimate,
}

/// JSON report of a simulation sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub n_samples: usize,
    pub batch_size: usize,
    pub modulation: ModulationSpec,
    pub branches: Vec<MalagaParams>,
    pub points: Vec<SimulationPoint>,
    /// KS distance of each branch's samples against its exact CDF.
    pub ks_exact: Vec<f64>,
    pub sample_means: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aser::modulation_table;
    use crate::channel::exact_moment;
    use crate::special::q_function;
    use approx::assert_relative_eq;

    fn small(n: usize) -> SampleConfig {
        SampleConfig {
            n_samples: n,
            seed: 7,
            batch_size: 4096,
            workers: None,
        }
    }

    #[test]
    fn mean_and_moments() {
        let p = MalagaParams::baseline(2.0);
        let xs = sample_branch(&small(400_000), &p, 0).unwrap();
        let stats = EmpiricalStats::new(&xs, 100, 20.0, None::<fn(f64) -> f64>).unwrap();
        assert_eq!(stats.sample_moments[0], 1.0);
        for i in 1..=4 {
            let want = exact_moment(i, &p).unwrap();
            let tol = [0.0, 0.01, 0.02, 0.04, 0.08][i];
            assert_relative_eq!(stats.sample_moments[i], want, max_relative = tol);
        }
        let area: f64 = stats.histogram.densities.iter().sum::<f64>() * 0.2;
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = MalagaParams::baseline(1.0);
        let m = modulation_table("bpsk").unwrap();
        let one = SampleConfig { workers: Some(1), ..small(50_000) };
        let four = SampleConfig { workers: Some(4), ..small(50_000) };
        assert_eq!(sample_branch(&one, &p, 3).unwrap(), sample_branch(&four, &p, 3).unwrap());
        let a = simulate_mrc_ser(&one, &[p, p], &m).unwrap();
        let b = simulate_mrc_ser(&four, &[p, p], &m).unwrap();
        assert_eq!(a.ser.to_bits(), b.ser.to_bits());
        assert_eq!(a.error_events, b.error_events);
    }

    #[test]
    fn branches_use_distinct_streams() {
        let p = MalagaParams::baseline(1.0);
        let a = sample_branch(&small(1000), &p, 0).unwrap();
        let b = sample_branch(&small(1000), &p, 1).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn degenerate_variate_gives_q_function() {
        let m = modulation_table("bpsk").unwrap();
        let est = simulate_mrc_ser_with(&small(20_000), &[Degenerate(4.0)], &m).unwrap();
        assert_relative_eq!(est.ser, q_function(8f64.sqrt()), max_relative = 1e-12);
        assert_eq!(est.std_error, 0.0);
        assert!(est.low_confidence);
    }

    #[test]
    fn stronger_branches_lower_ser() {
        let m = modulation_table("bpsk").unwrap();
        let p = MalagaParams::baseline(1.0).with_mu1_db(5.0);
        let weak = simulate_mrc_ser(&small(100_000), &[p, p], &m).unwrap();
        let strong = simulate_mrc_ser(&small(100_000), &[p.with_mu1(2.0 * p.mu1), p.with_mu1(2.0 * p.mu1)], &m).unwrap();
        assert!(strong.ser + 3.0 * strong.std_error < weak.ser - 3.0 * weak.std_error);
        assert!(!weak.low_confidence);
    }

    #[test]
    fn empirical_mgf_limits() {
        let xs = sample_branch(&small(10_000), &MalagaParams::baseline(1.0), 0).unwrap();
        let e = empirical_mgf(&xs, &[0.0, 1e4]).unwrap();
        assert_eq!(e[0].value, 1.0);
        assert!(e[1].value > 0.0 && e[1].value < 1e-3);
        assert!(empirical_mgf(&xs, &[-1.0]).is_err());
    }

    #[test]
    fn ks_of_uniform() {
        let cfg = small(20_000);
        let xs: Vec<f64> = sample_with(&cfg, &Uniform, 0).unwrap();
        let d = ks_distance(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d < 1.36 / (xs.len() as f64).sqrt() * 3.0);
        assert!(ks_distance(&xs, |x| (x * x).clamp(0.0, 1.0)).unwrap() > 0.2);
    }

    struct Uniform;
    impl SnrSampler for Uniform {
        fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
            rng.random()
        }
    }

    #[test]
    fn tabulated_cdf_interpolates() {
        let t = TabulatedCdf::new(|x| Ok(1.0 - (-x).exp()), 1e-3, 50.0, 400).unwrap();
        for x in [1e-4, 0.01, 0.5, 3.0, 20.0] {
            assert!((t.eval(x) - (1.0 - (-x).exp())).abs() < 2e-4);
        }
        assert_eq!(t.eval(100.0), 1.0);
        assert_eq!(t.eval(-1.0), 0.0);
    }
}
