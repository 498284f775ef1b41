fn main() {
    std::process::exit(graph_hac_cli::run(std::env::args_os()));
}
