fn main() {
    std::process::exit(robinhom_cli::run(std::env::args_os()));
}
