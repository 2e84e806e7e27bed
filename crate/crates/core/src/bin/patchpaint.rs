fn main() {
    std::process::exit(patchpaint::cli::run_cli(std::env::args_os()));
}
