fn main() {
    std::process::exit(ssglm_cli::run(std::env::args_os()));
}
