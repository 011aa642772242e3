fn main() {
    std::process::exit(tunable_prior::harness::run_cli(std::env::args_os()));
}
