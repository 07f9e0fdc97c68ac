fn main() {
    std::process::exit(buildingwalk::cli::run());
}
