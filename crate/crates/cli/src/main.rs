fn main() {
    std::process::exit(orbitstat_cli::run());
}
