//! MGF of a sum of branch SNRs.
//!
//! The residue series is a large-s expansion; below its range the product of
//! per-branch closed forms is returned instead and the method column says so.

use malaga_sum::channel::{exact_mgf, MalagaParams};
use malaga_sum::fit::fit_channel;
use malaga_sum::mgf::{sum_mgf_inid, sum_mgf_product, BranchSet};
use malaga_sum::special::meijer::SeriesControl;

fn main() -> malaga_sum::Result<()> {
    let base = MalagaParams::baseline(1.0);
    let control = SeriesControl::residue_sums();
    let fits = [
        fit_channel(&base)?.0,
        fit_channel(&MalagaParams { alpha: 3.0, beta: 3, ..base })?.0,
        fit_channel(&MalagaParams { alpha: 4.2, ..base })?.0,
    ];

    for (label, set) in [
        ("3 identical branches", BranchSet::iid(fits[0], 3)?),
        ("3 different branches", BranchSet::inid(fits.to_vec())?),
    ] {
        println!("{label}");
        println!("{:>9} {:>13} {:>15} {:>6} {:>13}", "s", "M(s)", "method", "terms", "product");
        for s in [0.1, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5] {
            let v = sum_mgf_inid(s, &set, &control)?;
            let prod = sum_mgf_product(s, &set)?.value;
            println!("{s:>9.0e} {:>13.6e} {:>15} {:>6} {prod:>13.6e}", v.value, v.method.as_str(), v.terms_used);
        }
        println!();
    }

    // the fitted law against the exact one, branch by branch
    for s in [0.1, 1.0, 10.0] {
        let approx = sum_mgf_product(s, &BranchSet::iid(fits[0], 1)?)?.value;
        println!("single branch s={s}: fitted {approx:.6e}, exact {:.6e}", exact_mgf(s, &base)?);
    }
    Ok(())
}
