use clap::Parser;

fn main() {
    let cli = abutcheck::Cli::parse();
    match abutcheck::run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("abutcheck: error: {err:#}");
            std::process::exit(abutcheck::EXIT_ERROR);
        }
    }
}
