fn main() {
    std::process::exit(stochsub::cli::main());
}
