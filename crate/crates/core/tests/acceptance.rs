//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use malaga_sum::aser::{aser_iid, aser_inid, aser_quadrature, asymptotic_iid, modulation_table, AserMethod, ModulationSpec};
use malaga_sum::channel::{exact_cdf, exact_mgf, exact_moment, moment_vector, MalagaParams};
use malaga_sum::cli;
use malaga_sum::fit::{approx_cdf, approx_moment, fit_channel, FittedApprox};
use malaga_sum::mgf::{single_mgf_closed, sum_mgf_iid, sum_mgf_inid, sum_mgf_product, BranchSet, MgfMethod, SumExpansion};
use malaga_sum::monte_carlo::{empirical_mgf, ks_distance, sample_branch, simulate_mrc_ser, SampleConfig, TabulatedCdf};
use malaga_sum::special::SeriesControl;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn baseline_db(db: f64) -> MalagaParams {
    MalagaParams::baseline(1.0).with_mu1_db(db)
}

fn fit(p: &MalagaParams) -> FittedApprox {
    fit_channel(p).expect("feasible fit").0
}

fn bpsk() -> ModulationSpec {
    modulation_table("bpsk").unwrap()
}

fn ctl() -> SeriesControl {
    SeriesControl::residue_sums()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn moment_error(p: &MalagaParams) -> Option<f64> {
    let (f, _) = fit_channel(p).ok()?;
    let mut worst = 0.0f64;
    for i in 0..6 {
        worst = worst.max(rel(approx_moment(i, &f).ok()?, exact_moment(i, p).ok()?));
    }
    Some(worst)
}

fn criterion_1() -> Outcome {
    let mut worst = moment_error(&MalagaParams::baseline(1.0)).unwrap_or(f64::INFINITY);
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let (mut accepted, mut rejected) = (0, 0);
    while accepted < 20 && rejected < 1000 {
        let p = MalagaParams {
            alpha: rng.random_range(2.0..3.5),
            beta: rng.random_range(2..=3),
            xi: rng.random_range(1.6..6.0),
            ..MalagaParams::baseline(1.0).with_mu1_db(rng.random_range(0.0..20.0))
        };
        match moment_error(&p) {
            Some(e) => {
                worst = worst.max(e);
                accepted += 1;
            }
            None => rejected += 1,
        }
    }
    outcome(
        accepted == 20 && worst <= 1e-6,
        format!("max relative moment error {worst:.2e} over baseline + {accepted} draws ({rejected} infeasible draws rejected)"),
    )
}

fn criterion_2() -> Outcome {
    let cfg = SampleConfig::new(1_000_000, 2);
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for db in [0.0, 5.0, 10.0] {
        let p = baseline_db(db);
        let f = fit(&p);
        let xs = sample_branch(&cfg, &p, 0).unwrap();
        let approx = TabulatedCdf::new(|x| approx_cdf(x, &f), 1e-4 * p.mu1, 0.5 * f.a2, 800).unwrap();
        let exact = TabulatedCdf::new(|x| exact_cdf(x, &p), 1e-4 * p.mu1, 200.0 * p.mu1, 800).unwrap();
        let d = ks_distance(&xs, |x| approx.eval(x)).unwrap();
        let d0 = ks_distance(&xs, |x| exact.eval(x)).unwrap();
        worst = worst.max(d);
        parts.push(format!("{db} dB: {d:.4} (sampler vs exact {d0:.4})"));
    }
    outcome(worst <= 0.02, format!("KS approx CDF vs 1e6 samples: {}", parts.join(", ")))
}

fn criterion_3() -> Outcome {
    let p = baseline_db(0.0);
    let f = fit(&p);
    let het = cli::heterogeneous(&p);
    let sets: Vec<(String, Vec<MalagaParams>)> = vec![
        ("iid N=2".into(), vec![p; 2]),
        ("iid N=3".into(), vec![p; 3]),
        ("inid N=3".into(), het.to_vec()),
    ];
    let cfg = SampleConfig::new(1_000_000, 3);
    let s_grid: Vec<f64> = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0].iter().map(|u| u / p.mu1).collect();
    let series_s: Vec<f64> = (0..=16).map(|i| 10f64.powf(1.0 + 0.25 * i as f64) / f.a2 * 100.0).collect();
    let (mut worst_series, mut series_points) = (0.0f64, 0);
    // approximation vs samples, split at s·μ₁ = 3; exact law vs samples
    let (mut z_low, mut z_high, mut z_exact) = (0.0f64, 0.0f64, 0.0f64);
    for (_, ps) in &sets {
        let fits: Vec<FittedApprox> = ps.iter().map(fit).collect();
        let set = BranchSet::inid(fits).unwrap();
        for &s in &series_s {
            let v = sum_mgf_inid(s, &set, &ctl()).unwrap();
            if v.method == MgfMethod::ResidueSeries {
                series_points += 1;
                worst_series = worst_series.max(rel(v.value, sum_mgf_product(s, &set).unwrap().value));
            }
        }
        let mut total = vec![0.0; cfg.n_samples];
        for (j, q) in ps.iter().enumerate() {
            for (t, x) in total.iter_mut().zip(sample_branch(&cfg, q, j as u64).unwrap()) {
                *t += x;
            }
        }
        for (e, &s) in empirical_mgf(&total, &s_grid).unwrap().iter().zip(&s_grid) {
            let m = sum_mgf_inid(s, &set, &ctl()).unwrap().value;
            let z = (m - e.value).abs() / e.std_error;
            if s * p.mu1 <= 3.0 {
                z_low = z_low.max(z);
            } else {
                z_high = z_high.max(z);
            }
            let exact: f64 = ps.iter().map(|q| exact_mgf(s, q).unwrap()).product();
            z_exact = z_exact.max((exact - e.value).abs() / e.std_error);
        }
    }
    outcome(
        worst_series <= 1e-4 && series_points > 0 && z_low.max(z_high) <= 3.0,
        format!(
            "series vs product max rel {worst_series:.1e} at {series_points} convergent points; \
             analytic vs empirical max {z_low:.2} SE for s*mu1 <= 3, {z_high:.2} SE above; exact MGF vs empirical max {z_exact:.2} SE"
        ),
    )
}

fn criterion_4() -> Outcome {
    let m = bpsk();
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    let mut thin = 0;
    for n in 1..=3usize {
        for db in [0.0, 5.0, 10.0, 15.0, 20.0] {
            let p = baseline_db(db);
            let a = aser_iid(&m, &fit(&p), n, &ctl()).unwrap().value;
            let samples = ((150.0 / a).ceil() as usize).clamp(1_000_000, 10_000_000);
            let mc = simulate_mrc_ser(&SampleConfig::new(samples, 4), &vec![p; n], &m).unwrap();
            let e = rel(a, mc.ser);
            worst = worst.max(e);
            if mc.low_confidence {
                thin += 1;
            }
            rows.push(format!("N={n} {db}dB {:+.1}% ({} events)", 100.0 * (a / mc.ser - 1.0), mc.error_events));
        }
    }
    outcome(
        worst <= 0.10 && thin == 0,
        format!("series vs simulated SER, worst {:.1}%, {thin} points under 100 events: {}", 100.0 * worst, rows.join("; ")),
    )
}

fn criterion_5() -> Outcome {
    let m = bpsk();
    let (mut worst, mut series, mut fallback, mut mislabelled) = (0.0f64, 0, 0, 0);
    let mut check = |v: malaga_sum::aser::AserValue, q: f64| match v.method {
        AserMethod::Series => {
            series += 1;
            worst = worst.max(rel(v.value, q));
        }
        AserMethod::Quadrature => {
            fallback += 1;
            if v.flags() != "quadrature_fallback" || rel(v.value, q) > 1e-12 {
                mislabelled += 1;
            }
        }
    };
    for db in (0..=12).map(|i| 2.5 * i as f64) {
        let p = baseline_db(db);
        let f = fit(&p);
        for n in 1..=3 {
            check(aser_iid(&m, &f, n, &ctl()).unwrap(), aser_quadrature(&m, &BranchSet::iid(f, n).unwrap()).unwrap());
        }
        let set = BranchSet::inid(cli::heterogeneous(&p).iter().map(fit).collect()).unwrap();
        check(aser_inid(&m, &set, &ctl()).unwrap(), aser_quadrature(&m, &set).unwrap());
    }
    outcome(
        worst <= 0.01 && series > 0 && fallback > 0 && mislabelled == 0,
        format!("{series} series points (max rel diff {worst:.1e}), {fallback} flagged fallbacks, {mislabelled} mislabelled"),
    )
}

fn criterion_6() -> Outcome {
    let m = bpsk();
    let f0 = fit(&baseline_db(0.0));
    let slope = |n: usize| {
        let lo = aser_iid(&m, &f0.rescaled(10f64.powf(3.0)), n, &ctl()).unwrap().value;
        let hi = aser_iid(&m, &f0.rescaled(10f64.powf(5.0)), n, &ctl()).unwrap().value;
        (hi.log10() - lo.log10()) / 20.0
    };
    let mut ok = true;
    let mut parts = Vec::new();
    let slopes: Vec<f64> = (1..=3).map(slope).collect();
    for (i, s) in slopes.iter().enumerate() {
        let gd = asymptotic_iid(&m, &f0, i + 1).unwrap().gd;
        let want = -gd / 10.0;
        ok &= rel(*s, want) <= 0.05;
        parts.push(format!("N={} slope {s:.4} vs {want:.4}", i + 1));
    }
    let ratio = slopes[1] / slopes[0];
    ok &= rel(ratio, 2.0) <= 0.05;
    outcome(ok, format!("{}; N=2/N=1 ratio {ratio:.4}", parts.join(", ")))
}

fn criterion_7() -> Outcome {
    let m = bpsk();
    let grid: Vec<f64> = (0..=12).map(|i| 2.5 * i as f64).collect();
    let mut violations = Vec::new();
    let mut checks = 0;
    let mut table = Vec::new();
    for &db in &grid {
        let f = fit(&baseline_db(db));
        table.push((1..=3).map(|n| aser_iid(&m, &f, n, &ctl()).unwrap().value).collect::<Vec<_>>());
    }
    for (i, row) in table.iter().enumerate() {
        for n in 0..3 {
            if i > 0 {
                checks += 1;
                if !(row[n] < table[i - 1][n]) {
                    violations.push(format!("ASER N={} not decreasing at {} dB", n + 1, grid[i]));
                }
            }
            if n > 0 {
                checks += 1;
                if !(row[n] < row[n - 1]) {
                    violations.push(format!("ASER not decreasing in N at {} dB", grid[i]));
                }
            }
        }
    }
    for &db in &grid {
        let vals: Vec<f64> = cli::FIGURE5_XI
            .iter()
            .map(|&xi| aser_iid(&m, &fit(&MalagaParams { xi, ..baseline_db(db) }), 2, &ctl()).unwrap().value)
            .collect();
        for w in vals.windows(2) {
            checks += 1;
            if !(w[1] < w[0]) {
                violations.push(format!("ASER not decreasing in xi at {db} dB"));
            }
        }
    }
    let f = fit(&baseline_db(0.0));
    let s_grid: Vec<f64> = (0..=32).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
    let mut prev = vec![1.0f64; 3];
    for &s in &s_grid {
        let vals: Vec<f64> = (1..=3).map(|n| sum_mgf_iid(s, &f, n, &ctl()).unwrap().value).collect();
        for n in 0..3 {
            checks += 2;
            if !(vals[n] < prev[n]) {
                violations.push(format!("MGF N={} not decreasing at s={s:e}", n + 1));
            }
            if n > 0 && !(vals[n] < vals[n - 1]) {
                violations.push(format!("MGF not decreasing in N at s={s:e}"));
            }
        }
        prev = vals;
    }
    outcome(
        violations.is_empty(),
        if violations.is_empty() {
            format!("{checks} pointwise comparisons, no violations")
        } else {
            violations.join("; ")
        },
    )
}

fn criterion_8() -> Outcome {
    let m = bpsk();
    let mut issues = Vec::new();
    let mut worst_inid = 0.0f64;
    for db in [15.0, 20.0, 30.0] {
        let f = fit(&baseline_db(db));
        let set = BranchSet::inid(vec![f; 3]).unwrap();
        let inid = SumExpansion::inid(&set, ctl().max_terms).unwrap();
        let iid = SumExpansion::iid(&f, 3, ctl().max_terms).unwrap();
        let a = malaga_sum::aser::aser_from_expansion(&m, &inid, &ctl());
        let b = malaga_sum::aser::aser_from_expansion(&m, &iid, &ctl());
        worst_inid = worst_inid.max(rel(a.value, b.value));
        for u in [3e3, 3e4] {
            let s = u / f.a2;
            worst_inid = worst_inid.max(rel(inid.evaluate(s, &ctl()).value, iid.evaluate(s, &ctl()).value));
        }
    }
    if worst_inid > 1e-9 {
        issues.push(format!("inid vs iid {worst_inid:.1e}"));
    }
    let f = fit(&baseline_db(10.0));
    let mut worst_single = 0.0f64;
    for u in [0.1, 1.0, 10.0, 1e3, 1e4] {
        let s = u / f.a2;
        worst_single = worst_single.max(rel(sum_mgf_iid(s, &f, 1, &ctl()).unwrap().value, single_mgf_closed(s, &f).unwrap().value));
    }
    let single_aser = rel(
        aser_iid(&m, &f, 1, &ctl()).unwrap().value,
        aser_quadrature(&m, &BranchSet::iid(f, 1).unwrap()).unwrap(),
    );
    if worst_single > 1e-9 || single_aser > 0.01 {
        issues.push(format!("N=1 reduction MGF {worst_single:.1e}, ASER {single_aser:.1e}"));
    }
    let (mut worst22, mut worst23) = (0.0f64, 0.0f64);
    for db in [0.0, 10.0, 20.0] {
        let p = baseline_db(db);
        let (f, inter) = fit_channel(&p).unwrap();
        for i in [3, 4] {
            worst22 = worst22.max(inter.second_difference_residual(i, f.a2).abs());
        }
        worst23 = worst23.max(inter.upper_pair_residual(&f).abs());
        let _ = moment_vector(&p).unwrap();
    }
    if worst22 > 1e-9 {
        issues.push(format!("second-difference identity {worst22:.1e}"));
    }
    if worst23 > 1e-7 {
        issues.push(format!("upper-pair identity {worst23:.1e}"));
    }
    outcome(
        issues.is_empty(),
        format!(
            "inid/iid {worst_inid:.1e}, N=1 MGF {worst_single:.1e}, N=1 ASER {single_aser:.1e}, second difference {worst22:.1e}, upper pair {worst23:.1e}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let m = bpsk();
    let p = baseline_db(10.0);
    let run = |workers| {
        let cfg = SampleConfig {
            workers,
            ..SampleConfig::new(300_000, 9)
        };
        (sample_branch(&cfg, &p, 0).unwrap(), simulate_mrc_ser(&cfg, &[p, p], &m).unwrap())
    };
    let (xa, sa) = run(None);
    let (xb, sb) = run(None);
    let (xc, sc) = run(Some(1));
    let (xd, sd) = run(Some(3));
    let same_samples = xa == xb && xa == xc && xa == xd;
    let same_ser = [sb, sc, sd].iter().all(|s| s.ser.to_bits() == sa.ser.to_bits() && s.error_events == sa.error_events);

    let dir = tempfile::tempdir().unwrap();
    let files: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("sim{i}.csv"));
            let code = cli::run([
                "malaga",
                "simulate",
                "--n-branches",
                "2",
                "--snr-db",
                "5,10",
                "--samples",
                "100000",
                "--seed",
                "42",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(code, 0);
            std::fs::read(&out).unwrap()
        })
        .collect();
    let same_files = files[0] == files[1];
    outcome(
        same_samples && same_ser && same_files,
        format!("repeat and 1/3-worker runs: samples identical {same_samples}, SER bits identical {same_ser}, CLI files identical {same_files}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("moment match", criterion_1),
        ("PDF fidelity", criterion_2),
        ("MGF consistency", criterion_3),
        ("ASER vs simulation", criterion_4),
        ("series vs quadrature", criterion_5),
        ("diversity order", criterion_6),
        ("monotonicity", criterion_7),
        ("identities and reductions", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} [{name}]: {} ({:.1}s) {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
