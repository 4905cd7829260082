fn main() {
    let code = {
        let mut out = std::io::stdout().lock();
        let mut err = std::io::stderr().lock();
        let verbose = std::env::args().filter(|a| a == "-v" || a == "--verbose").count();
        let level = match verbose {
            0 => "warn",
            1 => "info",
            _ => "debug",
        };
        env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
        fgs_core::cli::run(std::env::args_os(), &mut out, &mut err)
    };
    std::process::exit(code);
}
