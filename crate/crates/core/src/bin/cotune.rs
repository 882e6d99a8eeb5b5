fn main() {
    std::process::exit(cotune::harness::cli::run(std::env::args_os()));
}
