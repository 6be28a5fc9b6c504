//! One pass/fail line per acceptance criterion.

use std::process::{Command, ExitCode};

use swanlab_cli::acceptance;

fn selftest_stdout(threads: &str) -> Option<String> {
    let out = Command::new(env!("CARGO_BIN_EXE_swanlab")).arg("selftest").env("SWANLAB_THREADS", threads).output().ok()?;
    String::from_utf8(out.stdout).ok()
}

fn main() -> ExitCode {
    let results = acceptance::run_all();
    let mut ok = true;
    for r in &results {
        println!("{}", r.line());
        ok &= r.pass;
    }
    let many = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2).to_string();
    let (one, all) = (selftest_stdout("1"), selftest_stdout(&many));
    let same = one.is_some() && one == all;
    println!(
        "criterion 8 selftest binary: {} -- stdout on SWANLAB_THREADS=1 and {many} {}",
        if same { "PASS" } else { "FAIL" },
        if same { "byte-identical" } else { "differs" }
    );
    ok &= same;
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
