fn main() {
    let code = zeck_chain::cli::run_cli(std::env::args_os());
    std::process::exit(code);
}
