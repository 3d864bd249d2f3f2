fn main() {
    std::process::exit(campkit::cli::cli_main(std::env::args_os()));
}
