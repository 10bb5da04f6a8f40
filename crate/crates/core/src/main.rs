fn main() {
    std::process::exit(fourier_eigen::cli::run(std::env::args_os()));
}
