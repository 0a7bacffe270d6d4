fn main() {
    std::process::exit(mep_prune::cli::dispatch(std::env::args_os()));
}
