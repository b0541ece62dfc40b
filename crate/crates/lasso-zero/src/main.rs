fn main() {
    std::process::exit(lasso_zero::cli::run(std::env::args().collect()));
}
