fn main() {
    std::process::exit(voximage::cli::run(std::env::args_os()));
}
