//! Simulated MRC error rate with its confidence interval, next to the
//! analytic value.
//!
//!     cargo run --release --example monte_carlo_ser -- 2000000

use malaga_sum::aser::{aser_iid, modulation_table};
use malaga_sum::channel::MalagaParams;
use malaga_sum::fit::fit_channel;
use malaga_sum::monte_carlo::{simulate_mrc_ser, SampleConfig};
use malaga_sum::special::meijer::SeriesControl;

fn main() -> malaga_sum::Result<()> {
    let n_samples = std::env::args().nth(1).map(|a| a.parse().expect("sample count")).unwrap_or(500_000);
    let cfg = SampleConfig::new(n_samples, 7);
    let m = modulation_table("bpsk")?;
    let control = SeriesControl::residue_sums();
    println!("{:>4} {:>3} {:>11} {:>25} {:>8} {:>11}", "dB", "N", "simulated", "95% interval", "events", "analytic");
    for n in 1..=2 {
        for db in [0.0, 5.0, 10.0] {
            let p = MalagaParams::baseline(1.0).with_mu1_db(db);
            let est = simulate_mrc_ser(&cfg, &vec![p; n], &m)?;
            let a = aser_iid(&m, &fit_channel(&p)?.0, n, &control)?.value;
            println!(
                "{db:>4} {n:>3} {:>11.4e} [{:.4e}, {:.4e}] {:>8}{} {a:>11.4e}",
                est.ser,
                est.ci_low,
                est.ci_high,
                est.error_events,
                if est.low_confidence { "*" } else { " " }
            );
        }
    }
    Ok(())
}
