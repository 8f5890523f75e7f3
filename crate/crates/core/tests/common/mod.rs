#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn ngash() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ngash"))
}

/// Runs the CLI and returns its output, whatever the exit status.
pub fn run(args: &[&str], cwd: &Path, env: &[(&str, &str)]) -> Output {
    let mut cmd = ngash();
    cmd.args(args).current_dir(cwd);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn ngash")
}

/// Runs the CLI and panics with its stderr unless it exits 0.
pub fn run_ok(args: &[&str], cwd: &Path) -> String {
    let out = run(args, cwd, &[]);
    assert!(
        out.status.success(),
        "ngash {args:?} exited {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

/// Value of the first `key=value` token in `text`.
pub fn field(text: &str, key: &str) -> Option<String> {
    let prefix = format!("{key}=");
    text.split_whitespace()
        .find_map(|tok| tok.strip_prefix(&prefix).map(str::to_string))
}
