fn main() {
    std::process::exit(saep_cli::cli_main(std::env::args_os()));
}
