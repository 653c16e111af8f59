fn main() {
    std::process::exit(lrperc_cli::run_from_args(std::env::args_os()));
}
