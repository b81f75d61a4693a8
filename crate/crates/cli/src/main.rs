fn main() {
    std::process::exit(cantus_cli::run(std::env::args_os()));
}
