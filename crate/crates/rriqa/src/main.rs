fn main() {
    std::process::exit(rriqa::cli::main_entry());
}
