fn main() {
    std::process::exit(camprobe::cli::run_from_args(std::env::args_os()));
}
