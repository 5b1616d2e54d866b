fn main() {
    std::process::exit(laserscale::cli::run(std::env::args_os()));
}
