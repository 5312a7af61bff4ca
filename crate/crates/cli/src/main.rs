fn main() {
    std::process::exit(sketchctl::run(std::env::args_os()));
}
