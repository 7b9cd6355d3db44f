fn main() {
    std::process::exit(qdka_cli::run_main(std::env::args_os()));
}
