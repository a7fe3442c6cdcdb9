use std::io;

fn main() {
    let code = rubbercodes::cli::parse_and_dispatch(
        std::env::args_os(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    std::process::exit(code);
}
