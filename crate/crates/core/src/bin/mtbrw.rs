fn main() {
    std::process::exit(mtbrw::cli::dispatch(std::env::args_os()));
}
