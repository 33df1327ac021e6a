use std::io::Write;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed = std::env::var(elgen::cli::SEED_ENV).ok();
    let out = elgen::cli::run(&args, seed, &mut std::io::stdin().lock());
    // A closed pipe on stdout is not worth a panic.
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    std::process::exit(out.code);
}
