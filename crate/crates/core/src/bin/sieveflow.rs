fn main() {
    std::process::exit(sieveflow::cli::main_with_args(std::env::args_os()));
}
