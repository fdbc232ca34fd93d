fn main() -> std::process::ExitCode {
    lattice_vae_cli::main_with_args(std::env::args_os())
}
