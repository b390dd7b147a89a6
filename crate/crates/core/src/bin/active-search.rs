fn main() {
    std::process::exit(active_search::harness::cli::run(std::env::args_os()));
}
