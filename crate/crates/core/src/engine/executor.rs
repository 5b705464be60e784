//! Executors decide where runnables execute.

use std::collections::VecDeque;
use std::io::{self, BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;
use std::thread::JoinHandle;

use crossbeam_channel::{Receiver, Sender};

use super::process::{read_message, write_message, LocalLauncher, ProcessLauncher, ProcessOutcome, ProcessRequest};

/// Unit of work handed to an executor. The launcher is where the task's
/// process gets spawned.
pub type Runnable = Box<dyn FnOnce(&dyn ProcessLauncher) + Send>;

pub trait Executor: Send + Sync {
    fn name(&self) -> &'static str;
    fn submit_runnable(&self, job: Runnable);
    /// Stops accepting work and waits for queued work to finish.
    fn shutdown(&self);
}

/// Runs work in the submitting thread. Work submitted while a runnable is
/// already executing is queued and drained by the outermost caller.
#[derive(Default)]
pub struct SerialExecutor {
    state: Mutex<(VecDeque<Runnable>, bool)>,
}

impl Executor for SerialExecutor {
    fn name(&self) -> &'static str {
        "serial"
    }

    fn submit_runnable(&self, job: Runnable) {
        {
            let mut state = self.state.lock().unwrap();
            state.0.push_back(job);
            if state.1 {
                return;
            }
            state.1 = true;
        }
        loop {
            let next = {
                let mut state = self.state.lock().unwrap();
                match state.0.pop_front() {
                    Some(job) => job,
                    None => {
                        state.1 = false;
                        return;
                    }
                }
            };
            next(&LocalLauncher);
        }
    }

    fn shutdown(&self) {}
}

/// A fixed set of threads pulling from one queue.
struct Pool {
    sender: Mutex<Option<Sender<Runnable>>>,
    threads: Mutex<Vec<JoinHandle<()>>>,
}

impl Pool {
    fn start<L: ProcessLauncher + Send + 'static>(
        name: &str,
        workers: usize,
        mut make_launcher: impl FnMut(usize) -> io::Result<L>,
    ) -> io::Result<Pool> {
        let (tx, rx): (Sender<Runnable>, Receiver<Runnable>) = crossbeam_channel::unbounded();
        let mut threads = Vec::with_capacity(workers);
        for i in 0..workers.max(1) {
            let launcher = make_launcher(i)?;
            let rx = rx.clone();
            let handle = std::thread::Builder::new()
                .name(format!("{name}-{i}"))
                .spawn(move || {
                    for job in rx {
                        job(&launcher);
                    }
                })?;
            threads.push(handle);
        }
        Ok(Pool {
            sender: Mutex::new(Some(tx)),
            threads: Mutex::new(threads),
        })
    }

    fn submit(&self, job: Runnable) {
        if let Some(tx) = self.sender.lock().unwrap().as_ref() {
            // The receivers outlive the sender, so this cannot fail.
            let _ = tx.send(job);
        }
    }

    fn shutdown(&self) {
        drop(self.sender.lock().unwrap().take());
        let threads = std::mem::take(&mut *self.threads.lock().unwrap());
        for t in threads {
            let _ = t.join();
        }
    }
}

/// K threads in this process, each spawning processes directly.
pub struct ThreadPoolExecutor {
    pool: Pool,
}

impl ThreadPoolExecutor {
    pub fn new(workers: usize) -> io::Result<Self> {
        Ok(ThreadPoolExecutor {
            pool: Pool::start("cwlforge-thread", workers, |_| Ok(LocalLauncher))?,
        })
    }
}

impl Executor for ThreadPoolExecutor {
    fn name(&self) -> &'static str {
        "thread-pool"
    }

    fn submit_runnable(&self, job: Runnable) {
        self.pool.submit(job)
    }

    fn shutdown(&self) {
        self.pool.shutdown()
    }
}

struct WorkerProcess {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

/// Forwards requests to one pre-spawned worker process. A worker that dies
/// is replaced on the next request.
struct WorkerLauncher {
    program: PathBuf,
    worker: Mutex<Option<WorkerProcess>>,
}

impl WorkerLauncher {
    fn spawn(program: &Path) -> io::Result<WorkerProcess> {
        let mut child = Command::new(program)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| io::Error::new(e.kind(), format!("starting {}: {e}", program.display())))?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(WorkerProcess { child, stdin, stdout })
    }

    fn exchange(worker: &mut WorkerProcess, request: &ProcessRequest) -> io::Result<ProcessOutcome> {
        write_message(&mut worker.stdin, request)?;
        read_message(&mut worker.stdout)?
            .ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "worker closed its pipe"))
    }
}

impl ProcessLauncher for WorkerLauncher {
    fn launch(&self, request: &ProcessRequest) -> ProcessOutcome {
        let mut slot = self.worker.lock().unwrap();
        if slot.is_none() {
            match Self::spawn(&self.program) {
                Ok(w) => *slot = Some(w),
                Err(e) => return ProcessOutcome::spawn_failure(&request.task_id, e.to_string()),
            }
        }
        let worker = slot.as_mut().expect("worker present");
        match Self::exchange(worker, request) {
            Ok(outcome) => outcome,
            Err(e) => {
                if let Some(mut dead) = slot.take() {
                    let _ = dead.child.kill();
                    let _ = dead.child.wait();
                }
                ProcessOutcome::spawn_failure(&request.task_id, format!("worker failed: {e}"))
            }
        }
    }
}

impl Drop for WorkerLauncher {
    fn drop(&mut self) {
        if let Some(w) = self.worker.get_mut().unwrap().take() {
            let WorkerProcess { mut child, stdin, stdout } = w;
            drop(stdin);
            drop(stdout);
            let _ = child.wait();
        }
    }
}

/// K long-lived worker processes, each fed by one dispatcher thread over
/// the length-prefixed pipe protocol.
pub struct WorkerPoolExecutor {
    pool: Pool,
}

impl WorkerPoolExecutor {
    pub fn new(workers: usize, program: &Path) -> io::Result<Self> {
        let pool = Pool::start("cwlforge-dispatch", workers, |_| {
            Ok(WorkerLauncher {
                program: program.to_path_buf(),
                worker: Mutex::new(Some(WorkerLauncher::spawn(program)?)),
            })
        })?;
        Ok(WorkerPoolExecutor { pool })
    }
}

impl Executor for WorkerPoolExecutor {
    fn name(&self) -> &'static str {
        "worker-pool"
    }

    fn submit_runnable(&self, job: Runnable) {
        self.pool.submit(job)
    }

    fn shutdown(&self) {
        self.pool.shutdown()
    }
}

/// Locates the worker binary: `$CWLFORGE_WORKER`, then next to the current
/// executable, then one directory up (test binaries live in `deps/`).
pub fn find_worker_program() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("CWLFORGE_WORKER") {
        return Some(PathBuf::from(p));
    }
    let exe = std::env::current_exe().ok()?;
    let name = format!("cwlforge-worker{}", std::env::consts::EXE_SUFFIX);
    exe.ancestors()
        .skip(1)
        .take(2)
        .map(|dir| dir.join(&name))
        .find(|p| p.is_file())
}
