fn main() {
    std::process::exit(nuhyp_core::lab::run(std::env::args_os()));
}
