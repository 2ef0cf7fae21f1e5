fn main() {
    std::process::exit(visco1d::cli::cli_main(std::env::args_os()));
}
