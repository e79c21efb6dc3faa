use clap::Parser;
use fram_rir::cli::{run, Cli, CliError};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        let code = e.exit_code();
        match e {
            CliError::Usage(u) => {
                let _ = u.print();
            }
            CliError::Runtime(r) => eprintln!("error: {r}"),
        }
        std::process::exit(code);
    }
}
