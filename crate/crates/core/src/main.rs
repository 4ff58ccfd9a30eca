fn main() {
    std::process::exit(rds_lab::cli::run_cli(std::env::args()));
}
