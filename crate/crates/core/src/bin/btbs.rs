fn main() {
    std::process::exit(btbs::cli::run(std::env::args_os().collect()));
}
