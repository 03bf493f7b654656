fn main() -> std::process::ExitCode {
    fgm_iga::cli::main_entry()
}
