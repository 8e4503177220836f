fn main() {
    std::process::exit(phasemeter::cli::run(std::env::args_os()));
}
