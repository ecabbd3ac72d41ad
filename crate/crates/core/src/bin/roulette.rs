fn main() {
    std::process::exit(roulette_lab::cli::run(std::env::args_os()));
}
