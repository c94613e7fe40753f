fn main() {
    std::process::exit(ymhk::cli::cli_main(std::env::args_os()));
}
