fn main() {
    std::process::exit(gradsense_cli::run(std::env::args_os()));
}
