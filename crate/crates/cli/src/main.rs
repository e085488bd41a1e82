fn main() {
    std::process::exit(i32::from(tsdyn_cli::run(std::env::args_os())));
}
