use clap::Parser;

fn main() {
    let cli = foilrom::cli::Cli::parse();
    if let Err(e) = foilrom::cli::run(cli) {
        eprintln!("error: {e}");
        let mut source = std::error::Error::source(&e);
        while let Some(inner) = source {
            eprintln!("  caused by: {inner}");
            source = std::error::Error::source(inner);
        }
        std::process::exit(e.exit_code());
    }
}
