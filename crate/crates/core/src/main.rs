fn main() {
    std::process::exit(wzlearn::cli::run(std::env::args_os()));
}
