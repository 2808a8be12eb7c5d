fn main() {
    std::process::exit(ncm_lumen::cli::run(std::env::args_os()));
}
