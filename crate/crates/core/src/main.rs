fn main() {
    std::process::exit(signoise::cli::run_command(std::env::args_os()));
}
