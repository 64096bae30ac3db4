fn main() {
    let code = cdqp_bench::cli::run(std::env::args_os(), &mut std::io::stdout());
    std::process::exit(code);
}
