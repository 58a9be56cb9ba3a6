fn main() {
    std::process::exit(seqpath::cli::run(std::env::args_os()));
}
