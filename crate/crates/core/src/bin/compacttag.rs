fn main() {
    std::process::exit(compacttag::cli::run(std::env::args_os()));
}
