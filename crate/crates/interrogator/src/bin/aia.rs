fn main() {
    std::process::exit(interrogator::cli::main());
}
