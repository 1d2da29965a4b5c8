fn main() {
    std::process::exit(gicband_cli::run(std::env::args_os()));
}
