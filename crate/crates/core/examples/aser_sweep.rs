//! Average symbol error rate of an MRC receiver against SNR.
//!
//!     cargo run --release --example aser_sweep -- bfsk

use malaga_sum::aser::{aser_iid, aser_quadrature, modulation_table};
use malaga_sum::channel::MalagaParams;
use malaga_sum::fit::fit_channel;
use malaga_sum::mgf::BranchSet;
use malaga_sum::special::meijer::SeriesControl;

fn main() -> malaga_sum::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "bpsk".into());
    let m = modulation_table(&name)?;
    let control = SeriesControl::residue_sums();
    println!("{name}: rho {} theta {}", m.rho, m.theta);
    println!("{:>6} {:>3} {:>12} {:>12} {:>20}", "dB", "N", "series", "quadrature", "method");
    for db in [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0] {
        let f = fit_channel(&MalagaParams::baseline(1.0).with_mu1_db(db))?.0;
        for n in 1..=3 {
            let v = aser_iid(&m, &f, n, &control)?;
            let q = aser_quadrature(&m, &BranchSet::iid(f, n)?)?;
            println!("{db:>6} {n:>3} {:>12.5e} {q:>12.5e} {:>20}", v.value, v.flags());
        }
    }
    Ok(())
}
