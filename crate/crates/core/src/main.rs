fn main() {
    std::process::exit(crag::cli::main());
}
