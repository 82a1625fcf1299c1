fn main() {
    std::process::exit(crossfield_cli::run(std::env::args_os()));
}
