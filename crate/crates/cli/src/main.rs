fn main() {
    std::process::exit(volterra_spde::run(std::env::args_os()));
}
