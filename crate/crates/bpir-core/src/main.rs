fn main() {
    std::process::exit(bpir_core::cli::main_entry());
}
