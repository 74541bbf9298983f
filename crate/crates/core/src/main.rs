fn main() {
    std::process::exit(pivotsmith::cli::run(std::env::args_os()));
}
