fn main() {
    std::process::exit(dam_core::cli::run(std::env::args_os()));
}
