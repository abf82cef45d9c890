fn main() {
    std::process::exit(hds_fallcast::cli::main_with_args(std::env::args_os()));
}
