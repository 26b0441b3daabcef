//! Drives the command-line front end from code, writing into a temp dir.

fn main() {
    let out = std::env::temp_dir().join("skew-ifs-example");
    let out = out.to_string_lossy().into_owned();
    for cmd in ["boundary", "optimize", "verify"] {
        let code = skew_ifs::cli::run(["skew-ifs", cmd, "--out", out.as_str()]);
        println!("{cmd} exited with {code}");
    }
}
