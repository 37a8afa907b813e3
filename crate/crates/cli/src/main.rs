fn main() {
    std::process::exit(cantor_forge::main_with(std::env::args_os()));
}
