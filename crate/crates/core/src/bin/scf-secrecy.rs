fn main() {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let outcome = scf_secrecy::cli::run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(outcome.exit_code);
}
