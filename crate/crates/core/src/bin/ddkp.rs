fn main() {
    std::process::exit(ddkp_core::cli::run(std::env::args_os()));
}
