fn main() {
    std::process::exit(reinsure_dp::cli::run(std::env::args_os()));
}
