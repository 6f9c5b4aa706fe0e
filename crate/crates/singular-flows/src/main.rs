fn main() {
    std::process::exit(singular_flows::cli::run());
}
