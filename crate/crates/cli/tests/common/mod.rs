#![allow(dead_code)]

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoconsist"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Render a synthetic sequence with the `synth` subcommand.
pub fn synth(dir: &Path, extra: &[&str]) {
    let d = dir.to_str().unwrap();
    let mut args = vec!["synth", "--out-dir", d];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert_eq!(code(&out), 0, "synth failed: {}", stderr(&out));
}

/// `n` binary PGM frames of constant grey.
pub fn flat_frames(dir: &Path, n: usize) {
    fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        let mut bytes = b"P5\n64 48\n255\n".to_vec();
        bytes.extend(std::iter::repeat_n(100u8, 64 * 48));
        fs::write(dir.join(format!("f{i:03}.pgm")), bytes).unwrap();
    }
}
