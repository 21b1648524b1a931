fn main() {
    std::process::exit(fermi_landauer_cli::run(std::env::args_os()));
}
