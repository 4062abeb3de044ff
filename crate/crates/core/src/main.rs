use std::io::Write;

fn main() {
    let (code, text) = wpq::cli::run(std::env::args_os());
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let _ = lock.write_all(text.as_bytes());
    let _ = lock.flush();
    std::process::exit(code);
}
