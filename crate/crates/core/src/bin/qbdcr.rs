fn main() -> std::process::ExitCode {
    qbdcr::cli::main()
}
