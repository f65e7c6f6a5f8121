fn main() {
    std::process::exit(flowmagic::cli::run(std::env::args_os()));
}
