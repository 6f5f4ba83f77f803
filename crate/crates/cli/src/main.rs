fn main() {
    std::process::exit(evodyn_cli::cli_main(std::env::args_os()));
}
