fn main() {
    std::process::exit(akbr::cli::cli_main(std::env::args_os()));
}
