fn main() {
    std::process::exit(qpb_sim::cli::run_cli(std::env::args_os()));
}
