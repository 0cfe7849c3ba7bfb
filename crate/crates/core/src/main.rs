fn main() {
    std::process::exit(magfiber::cli::run(std::env::args_os()));
}
