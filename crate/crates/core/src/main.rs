fn main() {
    std::process::exit(skew_ifs::cli::run(std::env::args_os()));
}
