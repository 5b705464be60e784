//! Process launching and the worker wire protocol.
//!
//! Every message on a worker pipe is a 4-byte big-endian length `n`
//! followed by `n` bytes of UTF-8 JSON. The parent sends [`ProcessRequest`]
//! records on the worker's stdin and reads one [`ProcessOutcome`] per
//! request from its stdout, in order. A worker exits when its stdin closes.
//!
//! ```text
//! request:  {"task_id": str, "argv": [str], "cwd": str,
//!            "stdout": str, "stderr": str, "env": null | [[str, str]]}
//! response: {"task_id": str, "exit_code": int | null,
//!            "spawn_error": str | null, "stderr_tail": str}
//! ```
//!
//! `stdout`/`stderr` are absolute paths the worker creates. `env: null`
//! inherits the worker's environment; a list replaces it entirely.

use std::fs::File;
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Failure records keep at most this many trailing bytes of stderr.
pub const STDERR_TAIL_LIMIT: u64 = 4096;

/// Upper bound on a single protocol message.
const MAX_MESSAGE: u32 = 64 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessRequest {
    pub task_id: String,
    pub argv: Vec<String>,
    pub cwd: PathBuf,
    pub stdout: PathBuf,
    pub stderr: PathBuf,
    pub env: Option<Vec<(String, String)>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessOutcome {
    pub task_id: String,
    /// `None` when the process could not be started.
    pub exit_code: Option<i32>,
    pub spawn_error: Option<String>,
    pub stderr_tail: String,
}

impl ProcessOutcome {
    pub fn spawn_failure(task_id: &str, message: impl Into<String>) -> Self {
        ProcessOutcome {
            task_id: task_id.to_string(),
            exit_code: None,
            spawn_error: Some(message.into()),
            stderr_tail: String::new(),
        }
    }
}

/// Runs one [`ProcessRequest`] to completion.
pub trait ProcessLauncher {
    fn launch(&self, request: &ProcessRequest) -> ProcessOutcome;
}

/// Spawns processes directly from the calling thread.
#[derive(Debug, Default, Clone, Copy)]
pub struct LocalLauncher;

impl ProcessLauncher for LocalLauncher {
    fn launch(&self, request: &ProcessRequest) -> ProcessOutcome {
        run_process(request)
    }
}

pub fn read_tail(path: &Path, limit: u64) -> io::Result<String> {
    let mut file = File::open(path)?;
    let len = file.metadata()?.len();
    file.seek(SeekFrom::Start(len.saturating_sub(limit)))?;
    let mut buf = Vec::with_capacity(limit.min(len) as usize);
    file.read_to_end(&mut buf)?;
    Ok(String::from_utf8_lossy(&buf).into_owned())
}

pub fn run_process(request: &ProcessRequest) -> ProcessOutcome {
    let fail = |message: String| ProcessOutcome::spawn_failure(&request.task_id, message);
    let Some((program, args)) = request.argv.split_first() else {
        return fail("empty command line".into());
    };
    let stdout = match File::create(&request.stdout) {
        Ok(f) => f,
        Err(e) => return fail(format!("creating {}: {e}", request.stdout.display())),
    };
    let stderr = match File::create(&request.stderr) {
        Ok(f) => f,
        Err(e) => return fail(format!("creating {}: {e}", request.stderr.display())),
    };
    let mut cmd = Command::new(program);
    cmd.args(args)
        .current_dir(&request.cwd)
        .stdin(Stdio::null())
        .stdout(stdout)
        .stderr(stderr);
    if let Some(env) = &request.env {
        cmd.env_clear().envs(env.iter().map(|(k, v)| (k, v)));
    }
    let status = match cmd.status() {
        Ok(s) => s,
        Err(e) => return fail(format!("{program}: {e}")),
    };
    let exit_code = status.code().unwrap_or_else(|| {
        use std::os::unix::process::ExitStatusExt;
        128 + status.signal().unwrap_or(0)
    });
    ProcessOutcome {
        task_id: request.task_id.clone(),
        exit_code: Some(exit_code),
        spawn_error: None,
        stderr_tail: read_tail(&request.stderr, STDERR_TAIL_LIMIT).unwrap_or_default(),
    }
}

pub fn write_message<T: Serialize>(w: &mut impl Write, msg: &T) -> io::Result<()> {
    let body = serde_json::to_vec(msg)?;
    let len = u32::try_from(body.len())
        .ok()
        .filter(|n| *n <= MAX_MESSAGE)
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "message too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(&body)?;
    w.flush()
}

/// Reads one message; `Ok(None)` on a clean end of stream.
pub fn read_message<T: DeserializeOwned>(r: &mut impl Read) -> io::Result<Option<T>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len);
    if len > MAX_MESSAGE {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "message too large"));
    }
    let mut body = vec![0u8; len as usize];
    r.read_exact(&mut body)?;
    Ok(Some(serde_json::from_slice(&body)?))
}

/// Serves requests from `input` until it closes.
pub fn serve(input: &mut impl Read, output: &mut impl Write) -> io::Result<()> {
    while let Some(request) = read_message::<ProcessRequest>(input)? {
        let outcome = run_process(&request);
        write_message(output, &outcome)?;
    }
    Ok(())
}

/// Entry point of the `cwlforge-worker` binary.
pub fn worker_main() -> i32 {
    let stdin = io::stdin();
    let stdout = io::stdout();
    match serve(&mut stdin.lock(), &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cwlforge-worker: {e}");
            1
        }
    }
}
