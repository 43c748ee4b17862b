fn main() {
    std::process::exit(fracflow::cli::run());
}
