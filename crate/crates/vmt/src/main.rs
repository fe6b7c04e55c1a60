fn main() {
    std::process::exit(vmt::cli::run(std::env::args_os()));
}
