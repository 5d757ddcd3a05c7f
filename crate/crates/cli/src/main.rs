fn main() {
    std::process::exit(cvkey::run(std::env::args_os()));
}
