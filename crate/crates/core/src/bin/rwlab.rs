fn main() {
    std::process::exit(rwlab::cli::main());
}
