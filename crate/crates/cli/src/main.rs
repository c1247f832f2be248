fn main() {
    std::process::exit(phasepath::run(std::env::args_os()));
}
