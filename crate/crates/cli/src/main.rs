fn main() {
    std::process::exit(kgrat_cli::main_with(std::env::args_os()));
}
