fn main() {
    std::process::exit(shrinklab_cli::run(std::env::args_os()));
}
