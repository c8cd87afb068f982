fn main() {
    std::process::exit(pcalib::cli::run());
}
