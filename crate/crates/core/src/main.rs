fn main() {
    std::process::exit(topicshard::cli::main());
}
