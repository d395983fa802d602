fn main() {
    std::process::exit(so_surface::cli::main_entry());
}
