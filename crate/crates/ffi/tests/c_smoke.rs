use std::path::PathBuf;
use std::process::Command;

/// The static library built alongside this test binary.
fn static_library() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let deps = exe.parent().unwrap();
    let local = deps.join("libhyperbond_ffi.a");
    if local.exists() {
        local
    } else {
        deps.parent().unwrap().join("libhyperbond_ffi.a")
    }
}

#[test]
fn c_program_links_against_static_library() {
    let lib = static_library();
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile_dir();
    let exe = dir.join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "9 1 1\n3 error\n");
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hyperbond-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
