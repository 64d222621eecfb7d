use clap::Parser;
use mpsk_receiver_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("mpskrx: {e}");
        std::process::exit(e.exit_code());
    }
}
