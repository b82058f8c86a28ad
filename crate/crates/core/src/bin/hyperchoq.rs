fn main() {
    std::process::exit(hyperchoq::cli::run(std::env::args_os()));
}
