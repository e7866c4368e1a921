fn main() {
    std::process::exit(treelog::cli::cli_dispatch(std::env::args_os()));
}
