fn main() {
    std::process::exit(membrane::cli::run());
}
