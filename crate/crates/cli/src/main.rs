use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = cms_bnp_cli::run(std::env::args_os().collect(), &mut out);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cmsbnp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
