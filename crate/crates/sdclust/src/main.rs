fn main() {
    std::process::exit(sdclust::cli::run(std::env::args_os()));
}
