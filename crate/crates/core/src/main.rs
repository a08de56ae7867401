fn main() {
    std::process::exit(nfvchain::cli::cli_main(std::env::args_os()));
}
