fn main() -> std::process::ExitCode {
    shide::cli::run()
}
