fn main() {
    std::process::exit(ghrr_cli::run(std::env::args_os()));
}
