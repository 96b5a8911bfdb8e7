fn main() {
    std::process::exit(cubiccf::cli::run(std::env::args_os()));
}
