//! Branches with different turbulence, read from channel files.
//!
//!     cargo run --release --example heterogeneous_branches -- a.json b.json

use malaga_sum::aser::{aser_inid, asymptotic_inid, modulation_table};
use malaga_sum::channel::{ChannelFile, MalagaParams};
use malaga_sum::cli::FIGURE6_SETS;
use malaga_sum::fit::fit_channel;
use malaga_sum::mgf::BranchSet;
use malaga_sum::special::meijer::SeriesControl;

fn main() -> malaga_sum::Result<()> {
    let files: Vec<String> = std::env::args().skip(1).collect();
    let m = modulation_table("bpsk")?;
    let control = SeriesControl::residue_sums();

    let sets: Vec<(String, Vec<MalagaParams>)> = if files.is_empty() {
        let base = MalagaParams::baseline(1.0);
        FIGURE6_SETS
            .iter()
            .map(|set| {
                let label = set.iter().map(|(a, b)| format!("({a},{b})")).collect::<Vec<_>>().join(" ");
                (label, set.iter().map(|&(alpha, beta)| MalagaParams { alpha, beta, ..base }).collect())
            })
            .collect()
    } else {
        let ps = files.iter().map(|f| ChannelFile::read(f.as_ref())?.to_params()).collect::<malaga_sum::Result<_>>()?;
        vec![(files.join(" "), ps)]
    };

    for (label, ps) in sets {
        println!("{label}");
        for db in [0.0, 10.0, 20.0, 30.0] {
            let fits = ps.iter().map(|p| fit_channel(&p.with_mu1_db(db)).map(|f| f.0)).collect::<malaga_sum::Result<Vec<_>>>()?;
            let set = BranchSet::inid(fits)?;
            let v = aser_inid(&m, &set, &control)?;
            let a = asymptotic_inid(&m, &set)?;
            println!("  {db:>4} dB  {:.5e} ({})  asymptote {:.5e}", v.value, v.flags(), a.value);
        }
    }
    Ok(())
}
