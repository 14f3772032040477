//! High-SNR asymptote: diversity order, coding gain and the measured slope.

use malaga_sum::aser::{aser_iid, asymptotic_iid, asymptotic_inid, modulation_table};
use malaga_sum::channel::MalagaParams;
use malaga_sum::fit::fit_channel;
use malaga_sum::mgf::BranchSet;
use malaga_sum::special::meijer::SeriesControl;

fn main() -> malaga_sum::Result<()> {
    let m = modulation_table("bpsk")?;
    let control = SeriesControl::residue_sums();
    let base = MalagaParams::baseline(1.0);
    let f0 = fit_channel(&base)?.0;

    for n in 1..=3 {
        let a = asymptotic_iid(&m, &f0, n)?;
        // slope of the series over two decades of a2
        let lo = aser_iid(&m, &f0.rescaled(1e3), n, &control)?.value;
        let hi = aser_iid(&m, &f0.rescaled(1e5), n, &control)?.value;
        let slope = (hi.ln() - lo.ln()) / 2.0 / std::f64::consts::LN_10;
        println!(
            "N={n}: Gd {:.4}  Gc {:.4e}  measured slope {:.4}  asymptote/series at +50 dB {:.4}",
            a.gd,
            a.gc,
            -slope,
            a.at_scale(f0.a2 * 1e5) / hi
        );
    }

    let g = fit_channel(&MalagaParams { alpha: 4.2, ..base })?.0;
    let inid = asymptotic_inid(&m, &BranchSet::inid(vec![f0.rescaled(1e4), g.rescaled(1e4)])?)?;
    println!("two different branches: zeta {:.4}, families {:?}, asymptote {:.4e}", inid.zeta, inid.g_indices, inid.value);
    Ok(())
}
