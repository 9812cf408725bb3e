fn main() {
    std::process::exit(beta_survival::cli::run(std::env::args_os()));
}
