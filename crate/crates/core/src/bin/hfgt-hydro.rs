fn main() {
    std::process::exit(hfgt_hydro::cli::run_cli(std::env::args_os()));
}
