fn main() {
    std::process::exit(weakmean::cli::run(std::env::args_os()));
}
