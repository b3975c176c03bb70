fn main() {
    std::process::exit(ccsc::cli::run());
}
