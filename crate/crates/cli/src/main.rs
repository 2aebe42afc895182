fn main() {
    std::process::exit(anonypipe_cli::run(std::env::args_os()));
}
