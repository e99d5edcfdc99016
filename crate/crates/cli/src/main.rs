fn main() {
    std::process::exit(orbitctl::run(std::env::args_os()));
}
