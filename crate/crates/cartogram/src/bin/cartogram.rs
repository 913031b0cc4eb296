fn main() {
    std::process::exit(cartogram::cli::run());
}
