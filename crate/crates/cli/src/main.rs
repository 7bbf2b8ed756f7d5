fn main() {
    std::process::exit(scenestat_cli::run(std::env::args_os()));
}
