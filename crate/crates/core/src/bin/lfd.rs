fn main() {
    std::process::exit(contact_lfd::cli::run(std::env::args_os()));
}
