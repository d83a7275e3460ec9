fn main() {
    std::process::exit(edwsvr::cli::run(std::env::args_os()));
}
