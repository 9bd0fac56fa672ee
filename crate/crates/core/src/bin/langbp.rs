fn main() {
    std::process::exit(langbp::cli::run(std::env::args_os()));
}
