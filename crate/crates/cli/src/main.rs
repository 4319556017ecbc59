fn main() {
    std::process::exit(bnnv_cli::run(std::env::args_os()));
}
