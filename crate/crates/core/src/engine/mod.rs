//! Futures-based task execution.
//!
//! Submitting a task returns a [`TaskHandle`] right away. A task becomes
//! runnable once every [`FileFuture`] it depends on has resolved; it then
//! gets a fresh sandbox directory, its plan factory builds the command, the
//! inputs are staged by copy, the process runs under the configured
//! executor and declared outputs are collected from the sandbox.

mod executor;
pub mod process;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use crate::binding::{resolve_outputs, CommandPlan, OutputObject};

pub use executor::{
    find_worker_program, Executor, Runnable, SerialExecutor, ThreadPoolExecutor, WorkerPoolExecutor,
};
pub use process::{LocalLauncher, ProcessLauncher, ProcessOutcome, ProcessRequest};

static NEXT_FUTURE: AtomicU64 = AtomicU64::new(1);
static NEXT_RUN: AtomicU64 = AtomicU64::new(1);

/// Identifier of a [`FileFuture`], unique within the process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FutureId(pub u64);

impl fmt::Display for FutureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "future-{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskState {
    Pending,
    Running,
    Succeeded,
    Failed,
}

impl TaskState {
    pub fn is_terminal(self) -> bool {
        matches!(self, TaskState::Succeeded | TaskState::Failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    NonZeroExit,
    SpawnError,
    StagingError,
    PlanError,
    ValidationFailed,
    OutputError,
    DependencyFailed,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskFailure {
    pub kind: FailureKind,
    pub exit_code: Option<i32>,
    pub message: String,
    /// Last bytes of the process's stderr, at most 4 KiB.
    pub stderr_tail: String,
}

impl TaskFailure {
    pub fn new(kind: FailureKind, message: impl Into<String>) -> Self {
        TaskFailure {
            kind,
            exit_code: None,
            message: message.into(),
            stderr_tail: String::new(),
        }
    }
}

impl fmt::Display for TaskFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)?;
        if !self.stderr_tail.is_empty() {
            write!(f, "\n{}", self.stderr_tail.trim_end())?;
        }
        Ok(())
    }
}

impl std::error::Error for TaskFailure {}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum EnvPolicy {
    #[default]
    Inherit,
    /// Start from an empty environment and copy only the listed variables.
    Clean { allowlist: Vec<String> },
}

impl EnvPolicy {
    fn environment(&self) -> Option<Vec<(String, String)>> {
        match self {
            EnvPolicy::Inherit => None,
            EnvPolicy::Clean { allowlist } => Some(
                allowlist
                    .iter()
                    .filter_map(|k| std::env::var(k).ok().map(|v| (k.clone(), v)))
                    .collect(),
            ),
        }
    }
}

/// What a plan factory sees when its task is about to run.
#[derive(Debug)]
pub struct PlanContext {
    pub task_id: String,
    pub sandbox_root: PathBuf,
    pub resolved: BTreeMap<FutureId, PathBuf>,
}

pub type PlanFactory = Box<dyn FnOnce(&PlanContext) -> Result<CommandPlan, TaskFailure> + Send>;

pub struct TaskSpec {
    pub task_id: String,
    /// One [`FileFuture`] is created per id, in this order.
    pub output_ids: Vec<String>,
    pub dependencies: Vec<FutureId>,
    pub plan_factory: PlanFactory,
    pub env_policy: EnvPolicy,
}

impl TaskSpec {
    /// A task with a fixed plan and no dependencies.
    pub fn from_plan(task_id: impl Into<String>, output_ids: Vec<String>, plan: CommandPlan) -> TaskSpec {
        TaskSpec {
            task_id: task_id.into(),
            output_ids,
            dependencies: Vec::new(),
            plan_factory: Box::new(move |ctx| {
                let mut plan = plan;
                plan.workdir = ctx.sandbox_root.clone();
                Ok(plan)
            }),
            env_policy: EnvPolicy::Inherit,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SubmitError {
    #[error("engine has been shut down")]
    EngineShutDown,
    #[error("unknown dependency {0}")]
    UnknownDependency(FutureId),
    #[error("duplicate task id `{0}`")]
    DuplicateTask(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecutorKind {
    Serial,
    ThreadPool,
    WorkerPool,
}

#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub executor: ExecutorKind,
    pub workers: usize,
    /// Sandboxes go under `<workdir>/<run_id>/`.
    pub workdir: PathBuf,
    pub run_id: Option<String>,
    /// Remove sandboxes of succeeded tasks at shutdown.
    pub cleanup: bool,
    /// Worker binary for the worker pool; located automatically when unset.
    pub worker_program: Option<PathBuf>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            executor: ExecutorKind::ThreadPool,
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            workdir: PathBuf::from("cwlforge-work"),
            run_id: None,
            cleanup: true,
            worker_program: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskTiming {
    pub submitted: Instant,
    pub started: Option<Instant>,
    pub finished: Option<Instant>,
}

struct TaskEntry {
    id: String,
    state: TaskState,
    result: Option<OutputObject>,
    error: Option<TaskFailure>,
    outputs: Vec<FutureId>,
    dependencies: Vec<FutureId>,
    unresolved: usize,
    factory: Option<PlanFactory>,
    env_policy: EnvPolicy,
    sandbox: PathBuf,
    timing: TaskTiming,
}

struct FutureEntry {
    task: usize,
    output_id: String,
    resolved_path: Option<PathBuf>,
    resolved_at: Option<Instant>,
    dependents: Vec<usize>,
}

#[derive(Default)]
struct State {
    tasks: Vec<TaskEntry>,
    futures: HashMap<FutureId, FutureEntry>,
    ids: HashSet<String>,
    shut_down: bool,
    finished: bool,
}

struct Inner {
    state: Mutex<State>,
    changed: Condvar,
    executor: Box<dyn Executor>,
    run_root: PathBuf,
    cleanup: bool,
}

/// Shareable handle to a running engine.
#[derive(Clone)]
pub struct Engine {
    inner: Arc<Inner>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaitMode {
    All,
    Any,
}

pub struct WaitResult {
    pub completed: Vec<TaskHandle>,
    pub timed_out: bool,
}

fn sandbox_name(id: &str, index: usize) -> String {
    let clean: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect();
    if clean == id && !id.starts_with('.') && !id.is_empty() {
        clean
    } else {
        // `~` never survives sanitizing, so suffixed names cannot collide
        // with an id used verbatim.
        format!("{clean}~{index}")
    }
}

fn new_run_id() -> String {
    let millis = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default().as_millis();
    format!(
        "run-{millis}-{}-{}",
        std::process::id(),
        NEXT_RUN.fetch_add(1, Ordering::Relaxed)
    )
}

impl Engine {
    pub fn start(options: EngineOptions) -> io::Result<Engine> {
        let executor: Box<dyn Executor> = match options.executor {
            ExecutorKind::Serial => Box::new(SerialExecutor::default()),
            ExecutorKind::ThreadPool => Box::new(ThreadPoolExecutor::new(options.workers)?),
            ExecutorKind::WorkerPool => {
                let program = options.worker_program.clone().or_else(find_worker_program).ok_or_else(|| {
                    io::Error::new(io::ErrorKind::NotFound, "cwlforge-worker binary not found")
                })?;
                Box::new(WorkerPoolExecutor::new(options.workers, &program)?)
            }
        };
        let workdir = std::path::absolute(&options.workdir)?;
        let run_id = options.run_id.unwrap_or_else(new_run_id);
        log::debug!("engine started: executor={} run={run_id}", executor.name());
        Ok(Engine {
            inner: Arc::new(Inner {
                state: Mutex::new(State::default()),
                changed: Condvar::new(),
                executor,
                run_root: workdir.join(run_id),
                cleanup: options.cleanup,
            }),
        })
    }

    pub fn serial(workdir: impl Into<PathBuf>) -> io::Result<Engine> {
        Engine::start(EngineOptions {
            executor: ExecutorKind::Serial,
            workers: 1,
            workdir: workdir.into(),
            ..EngineOptions::default()
        })
    }

    pub fn executor_name(&self) -> &'static str {
        self.inner.executor.name()
    }

    /// Directory holding this run's sandboxes.
    pub fn run_root(&self) -> &Path {
        &self.inner.run_root
    }

    pub fn same_engine(&self, other: &Engine) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }

    pub fn submit(&self, spec: TaskSpec) -> Result<TaskHandle, SubmitError> {
        let (index, ready) = {
            let mut st = self.inner.lock();
            if st.shut_down {
                return Err(SubmitError::EngineShutDown);
            }
            if st.ids.contains(&spec.task_id) {
                return Err(SubmitError::DuplicateTask(spec.task_id));
            }
            if let Some(id) = spec.dependencies.iter().find(|d| !st.futures.contains_key(d)) {
                return Err(SubmitError::UnknownDependency(*id));
            }
            let index = st.tasks.len();
            let mut unresolved = 0;
            let mut dependency_failed = None;
            let mut deps = spec.dependencies.clone();
            deps.sort();
            deps.dedup();
            for dep in &deps {
                let producer = st.futures[dep].task;
                match st.tasks[producer].state {
                    TaskState::Succeeded => {}
                    TaskState::Failed => {
                        dependency_failed.get_or_insert_with(|| st.tasks[producer].id.clone());
                    }
                    _ => {
                        unresolved += 1;
                        st.futures.get_mut(dep).unwrap().dependents.push(index);
                    }
                }
            }
            let outputs: Vec<FutureId> = spec
                .output_ids
                .iter()
                .map(|_| FutureId(NEXT_FUTURE.fetch_add(1, Ordering::Relaxed)))
                .collect();
            for (fid, output_id) in outputs.iter().zip(&spec.output_ids) {
                st.futures.insert(
                    *fid,
                    FutureEntry {
                        task: index,
                        output_id: output_id.clone(),
                        resolved_path: None,
                        resolved_at: None,
                        dependents: Vec::new(),
                    },
                );
            }
            st.ids.insert(spec.task_id.clone());
            st.tasks.push(TaskEntry {
                sandbox: self.inner.run_root.join(sandbox_name(&spec.task_id, index)),
                id: spec.task_id,
                state: TaskState::Pending,
                result: None,
                error: None,
                outputs,
                dependencies: deps,
                unresolved,
                factory: Some(spec.plan_factory),
                env_policy: spec.env_policy,
                timing: TaskTiming {
                    submitted: Instant::now(),
                    started: None,
                    finished: None,
                },
            });
            let mut ready = Vec::new();
            if let Some(producer) = dependency_failed {
                let failure = TaskFailure::new(
                    FailureKind::DependencyFailed,
                    format!("dependency produced by `{producer}` failed"),
                );
                self.inner.fail(&mut st, index, failure);
            } else if unresolved == 0 {
                ready.push(index);
            }
            (index, ready)
        };
        self.inner.dispatch(ready);
        Ok(self.handle(index))
    }

    fn handle(&self, index: usize) -> TaskHandle {
        TaskHandle {
            inner: self.inner.clone(),
            index,
        }
    }

    pub fn tasks(&self) -> Vec<TaskHandle> {
        let n = self.inner.lock().tasks.len();
        (0..n).map(|i| self.handle(i)).collect()
    }

    pub fn future(&self, id: FutureId) -> Option<FileFuture> {
        self.inner.lock().futures.contains_key(&id).then(|| FileFuture {
            inner: self.inner.clone(),
            id,
        })
    }

    /// Blocks until all (or any) of `handles` are terminal or `timeout`
    /// elapses. Handles from other engines are never waited on.
    pub fn wait(&self, handles: &[TaskHandle], mode: WaitMode, timeout: Option<Duration>) -> WaitResult {
        wait(handles, mode, timeout)
    }

    /// Stops accepting tasks. With `drain` all submitted tasks run to
    /// completion; without it pending tasks are cancelled and only running
    /// ones are awaited. Calling it again does nothing.
    pub fn shutdown(&self, drain: bool) {
        let inner = &self.inner;
        {
            let mut st = inner.lock();
            if st.shut_down {
                return;
            }
            st.shut_down = true;
            if !drain {
                let pending: Vec<usize> = (0..st.tasks.len())
                    .filter(|i| st.tasks[*i].state == TaskState::Pending)
                    .collect();
                for i in pending {
                    if st.tasks[i].state == TaskState::Pending {
                        inner.fail(&mut st, i, TaskFailure::new(FailureKind::Cancelled, "engine shut down"));
                    }
                }
            }
            while !st.tasks.iter().all(|t| t.state.is_terminal()) {
                st = inner.changed.wait(st).unwrap();
            }
        }
        inner.executor.shutdown();
        let mut st = inner.lock();
        if inner.cleanup {
            for t in st.tasks.iter().filter(|t| t.state == TaskState::Succeeded) {
                if t.sandbox.exists() {
                    if let Err(e) = fs::remove_dir_all(&t.sandbox) {
                        log::warn!("removing {}: {e}", t.sandbox.display());
                    }
                }
            }
            // Only succeeds when no failed sandbox was retained.
            let _ = fs::remove_dir(&inner.run_root);
        }
        st.finished = true;
        inner.changed.notify_all();
    }

    pub fn is_shut_down(&self) -> bool {
        self.inner.lock().shut_down
    }
}

impl Inner {
    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap()
    }

    /// Marks `index` failed and propagates to everything downstream.
    fn fail(&self, st: &mut State, index: usize, failure: TaskFailure) {
        let mut stack = vec![(index, failure)];
        while let Some((i, failure)) = stack.pop() {
            let task = &mut st.tasks[i];
            if task.state.is_terminal() {
                continue;
            }
            log::debug!("task {} failed: {failure}", task.id);
            task.state = TaskState::Failed;
            task.error = Some(failure);
            task.factory = None;
            task.timing.finished = Some(Instant::now());
            let producer = task.id.clone();
            for fid in task.outputs.clone() {
                let dependents = std::mem::take(&mut st.futures.get_mut(&fid).unwrap().dependents);
                for d in dependents {
                    stack.push((
                        d,
                        TaskFailure::new(
                            FailureKind::DependencyFailed,
                            format!("dependency produced by `{producer}` failed"),
                        ),
                    ));
                }
            }
        }
        self.changed.notify_all();
    }

    fn succeed(&self, st: &mut State, index: usize, result: OutputObject) -> Vec<usize> {
        let now = Instant::now();
        let task = &mut st.tasks[index];
        task.state = TaskState::Succeeded;
        task.timing.finished = Some(now);
        let outputs = task.outputs.clone();
        let mut ready = Vec::new();
        for fid in outputs {
            let fut = st.futures.get_mut(&fid).unwrap();
            fut.resolved_path = result.get(&fut.output_id).map(|f| f.path.clone());
            fut.resolved_at = Some(now);
            for d in std::mem::take(&mut fut.dependents) {
                let dep = &mut st.tasks[d];
                dep.unresolved -= 1;
                if dep.unresolved == 0 && dep.state == TaskState::Pending {
                    ready.push(d);
                }
            }
        }
        st.tasks[index].result = Some(result);
        self.changed.notify_all();
        ready
    }

    fn dispatch(self: &Arc<Self>, ready: Vec<usize>) {
        for index in ready {
            let inner = self.clone();
            self.executor
                .submit_runnable(Box::new(move |launcher| inner.execute(index, launcher)));
        }
    }

    fn execute(self: &Arc<Self>, index: usize, launcher: &dyn ProcessLauncher) {
        let (ctx, factory, env) = {
            let mut st = self.lock();
            let task = &mut st.tasks[index];
            if task.state != TaskState::Pending {
                return;
            }
            task.state = TaskState::Running;
            task.timing.started = Some(Instant::now());
            let factory = task.factory.take().expect("plan factory present");
            let ctx = PlanContext {
                task_id: task.id.clone(),
                sandbox_root: task.sandbox.clone(),
                resolved: BTreeMap::new(),
            };
            let env = task.env_policy.environment();
            let deps = task.dependencies.clone();
            let mut ctx = ctx;
            for dep in deps {
                if let Some(path) = &st.futures[&dep].resolved_path {
                    ctx.resolved.insert(dep, path.clone());
                }
            }
            self.changed.notify_all();
            (ctx, factory, env)
        };
        let outcome = run_task(&ctx, factory, env, launcher);
        let ready = {
            let mut st = self.lock();
            match outcome {
                Ok(result) => self.succeed(&mut st, index, result),
                Err(failure) => {
                    self.fail(&mut st, index, failure);
                    Vec::new()
                }
            }
        };
        self.dispatch(ready);
    }
}

fn run_task(
    ctx: &PlanContext,
    factory: PlanFactory,
    env: Option<Vec<(String, String)>>,
    launcher: &dyn ProcessLauncher,
) -> Result<OutputObject, TaskFailure> {
    let staging = |e: io::Error, what: &Path| {
        TaskFailure::new(FailureKind::StagingError, format!("{}: {e}", what.display()))
    };
    if ctx.sandbox_root.exists() {
        fs::remove_dir_all(&ctx.sandbox_root).map_err(|e| staging(e, &ctx.sandbox_root))?;
    }
    fs::create_dir_all(&ctx.sandbox_root).map_err(|e| staging(e, &ctx.sandbox_root))?;

    let plan = factory(ctx)?;
    for staged in &plan.sandbox_inputs {
        if let Some(parent) = staged.dest.parent() {
            fs::create_dir_all(parent).map_err(|e| staging(e, parent))?;
        }
        fs::copy(&staged.source, &staged.dest).map_err(|e| staging(e, &staged.source))?;
        let mut perms = fs::metadata(&staged.dest).map_err(|e| staging(e, &staged.dest))?.permissions();
        perms.set_readonly(true);
        fs::set_permissions(&staged.dest, perms).map_err(|e| staging(e, &staged.dest))?;
    }

    let request = ProcessRequest {
        task_id: ctx.task_id.clone(),
        argv: plan.argv.clone(),
        cwd: plan.workdir.clone(),
        stdout: plan.workdir.join(&plan.stdout_target),
        stderr: plan.workdir.join(&plan.stderr_target),
        env,
    };
    log::debug!("task {}: {:?}", ctx.task_id, request.argv);
    let outcome = launcher.launch(&request);
    if let Some(message) = outcome.spawn_error {
        return Err(TaskFailure::new(FailureKind::SpawnError, message));
    }
    let exit_code = outcome.exit_code.unwrap_or(-1);
    if exit_code != 0 {
        return Err(TaskFailure {
            kind: FailureKind::NonZeroExit,
            exit_code: Some(exit_code),
            message: format!("`{}` exited with status {exit_code}", plan.argv.join(" ")),
            stderr_tail: outcome.stderr_tail,
        });
    }

    let listing = list_files(&plan.workdir)
        .map_err(|e| TaskFailure::new(FailureKind::OutputError, format!("listing sandbox: {e}")))?;
    resolve_outputs(&plan, &listing, exit_code).map_err(|e| TaskFailure {
        kind: FailureKind::OutputError,
        exit_code: Some(exit_code),
        message: e.to_string(),
        stderr_tail: outcome.stderr_tail,
    })
}

/// Regular files directly inside `dir`. Staged inputs live in a
/// subdirectory and are never listed.
fn list_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            out.push(entry.path());
        }
    }
    out.sort();
    Ok(out)
}

/// View of one submitted task.
#[derive(Clone)]
pub struct TaskHandle {
    inner: Arc<Inner>,
    index: usize,
}

impl fmt::Debug for TaskHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TaskHandle")
            .field("task_id", &self.task_id())
            .field("state", &self.state())
            .finish()
    }
}

impl TaskHandle {
    fn with<T>(&self, f: impl FnOnce(&TaskEntry) -> T) -> T {
        f(&self.inner.lock().tasks[self.index])
    }

    pub fn task_id(&self) -> String {
        self.with(|t| t.id.clone())
    }

    pub fn state(&self) -> TaskState {
        self.with(|t| t.state)
    }

    pub fn result(&self) -> Option<OutputObject> {
        self.with(|t| t.result.clone())
    }

    pub fn error(&self) -> Option<TaskFailure> {
        self.with(|t| t.error.clone())
    }

    pub fn timing(&self) -> TaskTiming {
        self.with(|t| t.timing)
    }

    pub fn sandbox(&self) -> PathBuf {
        self.with(|t| t.sandbox.clone())
    }

    /// Futures for the declared outputs, in declaration order.
    pub fn outputs(&self) -> Vec<FileFuture> {
        self.with(|t| t.outputs.clone())
            .into_iter()
            .map(|id| FileFuture {
                inner: self.inner.clone(),
                id,
            })
            .collect()
    }

    pub fn output(&self, output_id: &str) -> Option<FileFuture> {
        self.outputs().into_iter().find(|f| f.output_id() == output_id)
    }

    pub fn is_done(&self) -> bool {
        self.state().is_terminal()
    }

    /// Blocks until the task is terminal.
    pub fn wait(&self) -> Result<OutputObject, TaskFailure> {
        let mut st = self.inner.lock();
        loop {
            let t = &st.tasks[self.index];
            match t.state {
                TaskState::Succeeded => return Ok(t.result.clone().expect("result of succeeded task")),
                TaskState::Failed => return Err(t.error.clone().expect("error of failed task")),
                _ => st = self.inner.changed.wait(st).unwrap(),
            }
        }
    }
}

/// A file some task will produce.
#[derive(Clone)]
pub struct FileFuture {
    inner: Arc<Inner>,
    id: FutureId,
}

impl fmt::Debug for FileFuture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FileFuture")
            .field("id", &self.id)
            .field("output_id", &self.output_id())
            .field("resolved_path", &self.resolved_path())
            .finish()
    }
}

impl FileFuture {
    fn with<T>(&self, f: impl FnOnce(&State, &FutureEntry) -> T) -> T {
        let st = self.inner.lock();
        f(&st, &st.futures[&self.id])
    }

    pub fn id(&self) -> FutureId {
        self.id
    }

    pub fn output_id(&self) -> String {
        self.with(|_, f| f.output_id.clone())
    }

    pub fn producing_task(&self) -> String {
        self.with(|st, f| st.tasks[f.task].id.clone())
    }

    pub fn resolved_path(&self) -> Option<PathBuf> {
        self.with(|_, f| f.resolved_path.clone())
    }

    pub fn resolved_at(&self) -> Option<Instant> {
        self.with(|_, f| f.resolved_at)
    }

    /// Blocks until the producing task finishes.
    pub fn wait(&self) -> Result<PathBuf, TaskFailure> {
        let task = self.with(|_, f| f.task);
        TaskHandle {
            inner: self.inner.clone(),
            index: task,
        }
        .wait()?;
        Ok(self.resolved_path().expect("resolved path of succeeded task"))
    }
}

impl From<&FileFuture> for crate::binding::RawValue {
    fn from(f: &FileFuture) -> Self {
        crate::binding::RawValue::Future(f.id)
    }
}

impl From<FileFuture> for crate::binding::RawValue {
    fn from(f: FileFuture) -> Self {
        crate::binding::RawValue::Future(f.id)
    }
}

/// Blocks until all (or any) of `handles` are terminal or `timeout`
/// elapses, and returns the completed ones in the order given.
pub fn wait(handles: &[TaskHandle], mode: WaitMode, timeout: Option<Duration>) -> WaitResult {
    let deadline = timeout.map(|t| Instant::now() + t);
    let completed = |hs: &[TaskHandle]| -> Vec<TaskHandle> {
        hs.iter().filter(|h| h.is_done()).cloned().collect()
    };
    loop {
        // Handles may span engines, so the check cannot hold a single lock;
        // poll each engine's condvar in turn with a short slice.
        let done = completed(handles);
        let satisfied = match mode {
            WaitMode::All => done.len() == handles.len(),
            WaitMode::Any => !done.is_empty() || handles.is_empty(),
        };
        if satisfied {
            return WaitResult {
                completed: done,
                timed_out: false,
            };
        }
        let now = Instant::now();
        if deadline.is_some_and(|d| now >= d) {
            return WaitResult {
                completed: done,
                timed_out: true,
            };
        }
        let pending = handles.iter().find(|h| !h.is_done()).expect("some handle pending");
        let slice = deadline.map_or(Duration::from_millis(50), |d| (d - now).min(Duration::from_millis(50)));
        let st = pending.inner.lock();
        if !st.tasks[pending.index].state.is_terminal() {
            let _ = pending.inner.changed.wait_timeout(st, slice).unwrap();
        }
    }
}
