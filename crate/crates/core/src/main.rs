fn main() {
    std::process::exit(spdc_probe::cli::dispatch(std::env::args_os()));
}
