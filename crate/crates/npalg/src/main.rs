fn main() -> std::process::ExitCode {
    npalg::cli::main()
}
