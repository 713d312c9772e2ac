fn main() {
    std::process::exit(aes_cli::run(std::env::args_os()));
}
