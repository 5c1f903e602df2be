fn main() {
    std::process::exit(entrokl::cli::run(std::env::args_os()));
}
