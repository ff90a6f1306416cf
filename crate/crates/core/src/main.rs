fn main() {
    std::process::exit(augmi::cli::run(std::env::args_os()));
}
