fn main() {
    std::process::exit(trisim::cli::run(std::env::args_os()));
}
