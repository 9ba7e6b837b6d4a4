fn main() {
    std::process::exit(neariso::cli::cli_main(std::env::args_os()));
}
