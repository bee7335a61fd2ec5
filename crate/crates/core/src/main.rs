fn main() {
    std::process::exit(dtmad::cli::main_with_args(std::env::args().collect()));
}
