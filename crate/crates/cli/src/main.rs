fn main() {
    std::process::exit(collapse_forge::run(std::env::args_os()));
}
