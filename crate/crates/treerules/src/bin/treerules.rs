fn main() {
    std::process::exit(treerules::cli::main_with(std::env::args_os()));
}
