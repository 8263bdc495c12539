use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let out = mvtsp::cli::run(std::env::args_os());
    let text = serde_json::to_string_pretty(&out.json).expect("report serializes");
    // A closed pipe on stdout is not worth a panic.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    if !out.quiet {
        let _ = write!(std::io::stderr().lock(), "{}", out.human);
    }
    ExitCode::from(out.code as u8)
}
