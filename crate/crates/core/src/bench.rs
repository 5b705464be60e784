//! Desk-scale benchmarks: pipeline fan-out, expression evaluation cost and
//! raw task throughput.
//!
//! Every run writes into its own directory `<root>/<run-id>/`, appending
//! one row per scenario to:
//!
//! ```text
//! pipeline.csv    run_id,scenario,n_items,workers,makespan_s,status
//! expr.csv        run_id,scenario,n_words,mean_eval_us,status
//! throughput.csv  run_id,scenario,n_tasks,workers,tasks_per_s,status
//! ```
//!
//! `status` is `ok`, or `failed` when a task failed or an output did not
//! match its expected bytes (the timing column is then empty).
//!
//! The pipeline stages are the stand-in tools in `corpus/`: each sleeps for
//! a fixed delay and applies a deterministic byte transform, so makespans
//! are predictable and outputs checkable.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::binding::{coerce_inputs, sha1_file, RawInputs, RawValue};
use crate::config::RunnerConfig;
use crate::engine::{wait, Engine, EngineOptions, TaskHandle, WaitMode};
use crate::expr::{self, ExpressionProgram};
use crate::toolapp::{InvokeError, LoadError, Overrides, ToolApp};

pub const ECHO: &str = include_str!("../corpus/echo.cwl");
pub const CAPITALIZE: &str = include_str!("../corpus/capitalize.cwl");
pub const VALIDATE_CSV: &str = include_str!("../corpus/validate_csv.cwl");
pub const RESIZE_IMAGE: &str = include_str!("../corpus/resize_image.cwl");
pub const FILTER_IMAGE: &str = include_str!("../corpus/filter_image.cwl");
pub const BLUR_IMAGE: &str = include_str!("../corpus/blur_image.cwl");
pub const NAP: &str = include_str!("../corpus/nap.cwl");

/// The bundled tools as `(file name, source)`.
pub const CORPUS: &[(&str, &str)] = &[
    ("echo.cwl", ECHO),
    ("capitalize.cwl", CAPITALIZE),
    ("validate_csv.cwl", VALIDATE_CSV),
    ("resize_image.cwl", RESIZE_IMAGE),
    ("filter_image.cwl", FILTER_IMAGE),
    ("blur_image.cwl", BLUR_IMAGE),
    ("nap.cwl", NAP),
];

/// The n_words values of a full expression sweep.
pub const EXPR_SWEEP: [usize; 10] = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];

const EXPR_REPEATS: u32 = 100;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Invoke(#[from] InvokeError),
    #[error("{0}")]
    Expression(String),
}

/// Per-stage parameters of the image pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct StageParams {
    pub size: i64,
    pub sepia: bool,
    pub radius: i64,
    /// Seconds each stage sleeps.
    pub delay: f64,
}

impl Default for StageParams {
    fn default() -> Self {
        StageParams {
            size: 1024,
            sepia: true,
            radius: 1,
            delay: 0.1,
        }
    }
}

/// The three pipeline stages loaded on one engine.
#[derive(Clone)]
pub struct Pipeline {
    pub resize: ToolApp,
    pub filter: ToolApp,
    pub blur: ToolApp,
}

/// Handles for one item pushed through the pipeline.
#[derive(Debug, Clone)]
pub struct ItemRun {
    pub input: PathBuf,
    pub resize: TaskHandle,
    pub filter: TaskHandle,
    pub blur: TaskHandle,
}

impl ItemRun {
    pub fn stages(&self) -> [&TaskHandle; 3] {
        [&self.resize, &self.filter, &self.blur]
    }
}

impl Pipeline {
    pub fn load(engine: &Engine) -> Result<Pipeline, LoadError> {
        Ok(Pipeline {
            resize: ToolApp::from_source(RESIZE_IMAGE, "corpus/resize_image.cwl", engine)?,
            filter: ToolApp::from_source(FILTER_IMAGE, "corpus/filter_image.cwl", engine)?,
            blur: ToolApp::from_source(BLUR_IMAGE, "corpus/blur_image.cwl", engine)?,
        })
    }

    /// Submits all three stages for `image` without waiting.
    pub fn process(&self, image: &Path, params: &StageParams) -> Result<ItemRun, InvokeError> {
        let none = Overrides::default();
        let resize = self.resize.call(
            [
                ("input_image", RawValue::from(image)),
                ("size", params.size.into()),
                ("delay", params.delay.into()),
            ],
            &none,
        )?;
        let filter = self.filter.call(
            [
                ("input_image", RawValue::from(&resize.outputs()[0])),
                ("sepia", params.sepia.into()),
                ("delay", params.delay.into()),
            ],
            &none,
        )?;
        let blur = self.blur.call(
            [
                ("input_image", RawValue::from(&filter.outputs()[0])),
                ("radius", params.radius.into()),
                ("delay", params.delay.into()),
            ],
            &none,
        )?;
        Ok(ItemRun {
            input: image.to_path_buf(),
            resize,
            filter,
            blur,
        })
    }
}

/// Deterministic contents of synthetic input `index`: lowercase text lines
/// a little longer than the default resize size.
pub fn synthetic_image(index: usize) -> Vec<u8> {
    let mut out = Vec::new();
    let mut line = 0;
    while out.len() < 1100 {
        writeln!(out, "image {index} row {line} pixels abcdefghijklmnopqrstuvwxyz").unwrap();
        line += 1;
    }
    out
}

pub fn write_synthetic_images(dir: &Path, n: usize) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    (0..n)
        .map(|i| {
            let p = dir.join(format!("img{i:04}.png"));
            fs::write(&p, synthetic_image(i))?;
            Ok(p)
        })
        .collect()
}

/// What the pipeline should produce for `input`.
pub fn expected_pipeline_output(input: &[u8], params: &StageParams) -> Vec<u8> {
    let size = usize::try_from(params.size).unwrap_or(0).min(input.len());
    let resized: Vec<u8> = input[..size].iter().map(u8::to_ascii_uppercase).collect();
    let filtered: Vec<u8> = if params.sepia {
        resized
            .iter()
            .map(|&b| match b {
                b'a'..=b'z' => (b - b'a' + 13) % 26 + b'a',
                b'A'..=b'Z' => (b - b'A' + 13) % 26 + b'A',
                _ => b,
            })
            .collect()
    } else {
        resized
    };
    let prefix = format!("r{} ", params.radius);
    let mut out = Vec::with_capacity(filtered.len() * 2);
    for line in filtered.split_inclusive(|&b| b == b'\n') {
        out.extend_from_slice(prefix.as_bytes());
        out.extend_from_slice(line);
    }
    out
}

/// CSV files of one benchmark run.
#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub run_id: String,
    pub dir: PathBuf,
}

impl BenchOutput {
    /// Creates `<root>/<run_id>/`; a fresh run id is generated when `None`.
    pub fn create(root: &Path, run_id: Option<String>) -> io::Result<BenchOutput> {
        let run_id = run_id.unwrap_or_else(|| {
            let t = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap_or_default();
            format!("bench-{}-{}", t.as_millis(), std::process::id())
        });
        let dir = root.join(&run_id);
        fs::create_dir_all(&dir)?;
        Ok(BenchOutput { run_id, dir })
    }

    fn append(&self, file: &str, header: &str, row: &str) -> io::Result<()> {
        let path = self.dir.join(file);
        let fresh = !path.exists();
        let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
        if fresh {
            writeln!(f, "{header}")?;
        }
        writeln!(f, "{},{row}", self.run_id)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRecord {
    pub scenario: String,
    pub n_items: usize,
    pub workers: usize,
    pub makespan: Duration,
    /// Completed tasks per stage: resize, filter, blur.
    pub stage_counts: [usize; 3],
    pub ok: bool,
    pub items: Vec<ItemRun>,
}

fn status(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "failed"
    }
}

fn engine_for(config: &RunnerConfig, workers: usize, run_id: String) -> io::Result<Engine> {
    Engine::start(EngineOptions {
        workers,
        run_id: Some(run_id),
        ..config.engine_options()
    })
}

/// Runs the 3-stage pipeline over `n_items` synthetic inputs and appends a
/// row to `pipeline.csv`.
pub fn run_pipeline_bench(
    n_items: usize,
    workers: usize,
    config: &RunnerConfig,
    params: &StageParams,
    out: &BenchOutput,
) -> Result<PipelineRecord, BenchError> {
    let scenario = format!("pipeline-{n_items}x{workers}");
    let inputs = write_synthetic_images(&out.dir.join("inputs"), n_items)?;
    let engine = engine_for(config, workers, format!("{}-{scenario}", out.run_id))?;
    let pipeline = Pipeline::load(&engine)?;

    let start = Instant::now();
    let mut items = Vec::with_capacity(n_items);
    for input in &inputs {
        items.push(pipeline.process(input, params)?);
    }
    let finals: Vec<TaskHandle> = items.iter().map(|i| i.blur.clone()).collect();
    wait(&finals, WaitMode::All, None);
    let makespan = start.elapsed();

    let mut stage_counts = [0; 3];
    let mut ok = true;
    for item in &items {
        for (k, h) in item.stages().into_iter().enumerate() {
            if h.result().is_some() {
                stage_counts[k] += 1;
            }
        }
        let expected = expected_pipeline_output(&fs::read(&item.input)?, params);
        ok &= match item.blur.result() {
            Some(r) => fs::read(&r["output_image"].path)? == expected,
            None => false,
        };
    }
    engine.shutdown(true);

    let makespan_col = if ok { format!("{:.6}", makespan.as_secs_f64()) } else { String::new() };
    out.append(
        "pipeline.csv",
        "run_id,scenario,n_items,workers,makespan_s,status",
        &format!("{scenario},{n_items},{workers},{makespan_col},{}", status(ok)),
    )?;
    Ok(PipelineRecord {
        scenario,
        n_items,
        workers,
        makespan,
        stage_counts,
        ok,
        items,
    })
}

#[derive(Debug, Clone)]
pub struct ExprRecord {
    pub n_words: usize,
    pub mean_eval: Duration,
    pub output: String,
    pub ok: bool,
}

impl ExprRecord {
    pub fn per_word(&self) -> Duration {
        self.mean_eval / self.n_words.max(1) as u32
    }
}

/// A message of `n` distinct lowercase words.
pub fn expression_message(n: usize) -> String {
    const WORDS: [&str; 8] = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel"];
    (0..n).map(|i| WORDS[i % WORDS.len()]).collect::<Vec<_>>().join(" ")
}

/// Evaluates the capitalize template over an `n_words` message 100 times
/// and appends the mean to `expr.csv`.
pub fn run_expression_bench(n_words: usize, out: Option<&BenchOutput>) -> Result<ExprRecord, BenchError> {
    let engine = Engine::serial(std::env::temp_dir())?;
    let app = ToolApp::from_source(CAPITALIZE, "corpus/capitalize.cwl", &engine)?;
    engine.shutdown(true);
    let doc = app.document();
    let program: &ExpressionProgram = app.program().expect("capitalize declares a library");
    let template = doc.arguments[0].raw().to_string();
    let message = expression_message(n_words);
    let raw: RawInputs = [("message".to_string(), RawValue::Str(message.clone()))].into();
    let inputs = coerce_inputs(doc, &raw).map_err(|e| BenchError::Expression(e.to_string()))?;

    let mut output = String::new();
    let start = Instant::now();
    for _ in 0..EXPR_REPEATS {
        output = expr::render(program, &template, &inputs).map_err(|e| BenchError::Expression(e.to_string()))?;
    }
    let mean_eval = start.elapsed() / EXPR_REPEATS;
    let ok = output == expr::title_case(&message);

    if let Some(out) = out {
        out.append(
            "expr.csv",
            "run_id,scenario,n_words,mean_eval_us,status",
            &format!("expr,{n_words},{:.3},{}", mean_eval.as_secs_f64() * 1e6, status(ok)),
        )?;
    }
    Ok(ExprRecord {
        n_words,
        mean_eval,
        output,
        ok,
    })
}

#[derive(Debug, Clone)]
pub struct ThroughputRecord {
    pub n_tasks: usize,
    pub workers: usize,
    pub makespan: Duration,
    pub tasks_per_s: f64,
    pub ok: bool,
}

/// Runs `n_tasks` independent nap tasks of `delay` seconds and appends the
/// rate to `throughput.csv`.
pub fn run_throughput_bench(
    n_tasks: usize,
    workers: usize,
    delay: f64,
    config: &RunnerConfig,
    out: &BenchOutput,
) -> Result<ThroughputRecord, BenchError> {
    let scenario = format!("throughput-{n_tasks}x{workers}");
    let engine = engine_for(config, workers, format!("{}-{scenario}", out.run_id))?;
    let nap = ToolApp::from_source(NAP, "corpus/nap.cwl", &engine)?;
    let start = Instant::now();
    let mut handles = Vec::with_capacity(n_tasks);
    for i in 0..n_tasks {
        let message = format!("task {i}");
        handles.push(nap.call(
            [("delay", RawValue::from(delay)), ("message", message.into())],
            &Overrides::default(),
        )?);
    }
    wait(&handles, WaitMode::All, None);
    let makespan = start.elapsed();
    let mut ok = true;
    for (i, h) in handles.iter().enumerate() {
        ok &= match h.result() {
            Some(r) => fs::read_to_string(&r["output"].path)? == format!("task {i}\n"),
            None => false,
        };
    }
    engine.shutdown(true);
    let tasks_per_s = n_tasks as f64 / makespan.as_secs_f64();
    let rate_col = if ok { format!("{tasks_per_s:.3}") } else { String::new() };
    out.append(
        "throughput.csv",
        "run_id,scenario,n_tasks,workers,tasks_per_s,status",
        &format!("{scenario},{n_tasks},{workers},{rate_col},{}", status(ok)),
    )?;
    Ok(ThroughputRecord {
        n_tasks,
        workers,
        makespan,
        tasks_per_s,
        ok,
    })
}

/// SHA-1 of a file as lowercase hex.
pub fn checksum(path: &Path) -> io::Result<String> {
    sha1_file(path).map(|(_, hex)| hex)
}
