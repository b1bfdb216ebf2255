fn main() {
    std::process::exit(gdelt_kg::cli::run(std::env::args_os()));
}
