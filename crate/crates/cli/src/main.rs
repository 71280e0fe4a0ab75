fn main() {
    std::process::exit(churnet_cli::run(std::env::args_os()));
}
