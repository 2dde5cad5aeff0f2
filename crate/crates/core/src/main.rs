fn main() -> std::process::ExitCode {
    dexsim::cli::main_entry()
}
