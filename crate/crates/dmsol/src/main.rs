fn main() {
    std::process::exit(dmsol::run_command(std::env::args_os()));
}
