//! Drives the command-line front end in-process to write one figure's data.
//!
//!     cargo run --release --example reproduce_figure -- 6 /tmp/fig6.csv

fn main() {
    let mut args = std::env::args().skip(1);
    let figure = args.next().unwrap_or_else(|| "4".into());
    let out = args.next().unwrap_or_else(|| format!("figure{figure}.csv"));
    let code = malaga_sum::cli::run(["malaga", "reproduce", "--figure", &figure, "--snr-db", "0,10,20", "--out", &out]);
    if code == 0 {
        println!("{}", std::fs::read_to_string(&out).expect("output written"));
        println!("configuration: {}", malaga_sum::cli::sidecar_path(out.as_ref()).display());
    }
    std::process::exit(code);
}
