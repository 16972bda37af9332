fn main() -> std::process::ExitCode {
    covertraj::cli::run(std::env::args_os())
}
