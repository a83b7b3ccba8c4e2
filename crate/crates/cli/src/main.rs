fn main() {
    std::process::exit(burnscan::run_from_args(std::env::args_os()));
}
