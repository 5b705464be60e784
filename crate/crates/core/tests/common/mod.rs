#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};

use cwlforge::engine::{Engine, EngineOptions, ExecutorKind};

/// Serializes timing-sensitive tests within one test binary.
static TIMING: Mutex<()> = Mutex::new(());

pub fn timing_lock() -> MutexGuard<'static, ()> {
    TIMING.lock().unwrap_or_else(|e| e.into_inner())
}

pub fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

pub fn worker_program() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_cwlforge-worker"))
}

pub fn engine(dir: &Path, executor: ExecutorKind, workers: usize) -> Engine {
    Engine::start(EngineOptions {
        executor,
        workers,
        workdir: dir.to_path_buf(),
        run_id: None,
        cleanup: false,
        worker_program: Some(worker_program()),
    })
    .unwrap()
}

/// SHA-1 computed with the system `sha1sum`, independent of the crate.
pub fn sha1sum(path: &Path) -> String {
    let out = std::process::Command::new("sha1sum").arg(path).output().unwrap();
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap().split_whitespace().next().unwrap().to_string()
}
