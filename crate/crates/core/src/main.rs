fn main() {
    std::process::exit(decon::cli::run());
}
