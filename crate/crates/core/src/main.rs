fn main() {
    std::process::exit(lbcs::cli::cli_main(std::env::args_os()));
}
