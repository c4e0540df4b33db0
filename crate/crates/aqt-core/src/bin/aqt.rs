fn main() {
    std::process::exit(aqt_core::cli::run());
}
