use std::io::Write;

fn main() {
    let outcome = epsilon_l1::cli::run(std::env::args_os(), &mut std::io::stdin());
    print!("{}", outcome.stdout);
    eprint!("{}", outcome.stderr);
    let _ = std::io::stdout().flush();
    std::process::exit(outcome.code);
}
