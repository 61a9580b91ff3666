fn main() {
    std::process::exit(czo::run_cli(std::env::args_os()));
}
