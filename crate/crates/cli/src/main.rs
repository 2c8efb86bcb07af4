fn main() {
    std::process::exit(lieze::main_with_args(std::env::args_os()));
}
