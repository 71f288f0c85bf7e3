fn main() {
    std::process::exit(mmnetloc::cli::run(std::env::args_os()));
}
