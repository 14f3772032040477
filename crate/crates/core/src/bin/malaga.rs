fn main() {
    std::process::exit(malaga_sum::cli::run(std::env::args_os()));
}
