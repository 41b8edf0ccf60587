fn main() {
    std::process::exit(cqcap_cli::run());
}
