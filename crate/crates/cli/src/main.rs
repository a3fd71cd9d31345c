fn main() {
    std::process::exit(tngeo_cli::commands::main_with(std::env::args_os()));
}
