//! Embeds `git describe` output so written artifacts record the exact source
//! revision; the binary falls back to the crate version when git is absent.

use std::process::Command;

fn main() {
    println!("cargo:rerun-if-changed=../../.git/HEAD");
    let described = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|out| out.status.success())
        .map(|out| String::from_utf8_lossy(&out.stdout).trim().to_string())
        .filter(|v| !v.is_empty());
    if let Some(version) = described {
        println!("cargo:rustc-env=RBSIM_GIT_VERSION={version}");
    }
}
