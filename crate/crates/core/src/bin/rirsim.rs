fn main() -> std::process::ExitCode {
    rirsim::cli::main()
}
