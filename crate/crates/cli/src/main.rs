use std::io::Write;

fn main() {
    let out = forcelab_cli::run_cli(std::env::args_os(), std::env::var(forcelab_cli::SEED_ENV).ok());
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    let _ = std::io::stdout().flush();
    std::process::exit(out.code);
}
