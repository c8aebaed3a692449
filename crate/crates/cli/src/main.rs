fn main() {
    std::process::exit(wmscan_cli::run());
}
