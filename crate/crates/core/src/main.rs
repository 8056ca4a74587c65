fn main() {
    std::process::exit(mopkit::cli::main_with(std::env::args_os()));
}
