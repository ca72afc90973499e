fn main() {
    std::process::exit(qcoh::cli::main_with_args());
}
