fn main() {
    std::process::exit(performative_mm::cli::run(std::env::args_os()));
}
