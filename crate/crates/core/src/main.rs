fn main() {
    std::process::exit(jnlab::cli::main());
}
