fn main() {
    std::process::exit(corpusdesk::cli::main_with_env());
}
