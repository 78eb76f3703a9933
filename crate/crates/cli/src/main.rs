fn main() {
    std::process::exit(genre_cli::run(std::env::args_os()));
}
