//! Acceptance suite. Runs each criterion in order, prints one PASS/FAIL
//! line per criterion and exits nonzero if any failed.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use cwlforge::bench::{self, BenchOutput, Pipeline, StageParams};
use cwlforge::binding::{bind_arguments, coerce_inputs, BindContext, RawInputs, RawValue};
use cwlforge::config::{default_config, RunnerConfig};
use cwlforge::document::parse_tool;
use cwlforge::engine::{wait, ExecutorKind, WaitMode};
use cwlforge::expr::{self, Template};
use cwlforge::toolapp::{InvokeError, Overrides, ToolApp};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use common::{corpus, engine, sha1sum, worker_program};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 echo end-to-end", echo_end_to_end),
        ("2 binding oracle equivalence", binding_oracle),
        ("3 expression correctness", expression_correctness),
        ("4 validation", validation),
        ("5 pipeline dataflow", pipeline_dataflow),
        ("6 throughput shape", throughput_shape),
        ("7 expression scaling shape", expression_scaling),
        ("8 executor equivalence", executor_equivalence),
        ("9 injection-safety fuzz", injection_fuzz),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.2}s): {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.2}s): {reason}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn cli(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cwlforge"))
        .args(args)
        .current_dir(dir)
        .env("CWLFORGE_WORKER", worker_program())
        .output()
        .unwrap()
}

fn echo_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.yml"), "executor: thread-pool\nworkers: 2\n").unwrap();
    fs::write(dir.path().join("inputs.yml"), "message: \"Hello, World!\"\n").unwrap();
    let echo = corpus("echo.cwl").display().to_string();
    let started = Instant::now();
    let out = cli(dir.path(), &["config.yml", &echo, "inputs.yml"]);
    let elapsed = started.elapsed();
    ensure!(out.status.code() == Some(0), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    let hello = dir.path().join("hello.txt");
    let bytes = fs::read(&hello).map_err(|e| e.to_string())?;
    ensure!(bytes == b"Hello, World!\n", "hello.txt = {bytes:?}");
    let json: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let output = &json["output"];
    ensure!(output["size"] == 14, "size {}", output["size"]);
    let want = format!("sha1${}", sha1sum(&hello));
    ensure!(output["checksum"] == want.as_str(), "checksum {} != {want}", output["checksum"]);
    ensure!(
        output["location"] == hello.canonicalize().unwrap().display().to_string().as_str(),
        "location {}",
        output["location"]
    );
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("exit 0, 14 bytes, {want}, {:.0} ms", elapsed.as_secs_f64() * 1e3))
}

// ---- criterion 2 -------------------------------------------------------

#[derive(Debug, Clone)]
enum Kind {
    Str,
    Int,
    Float,
    Bool,
    File,
}

#[derive(Debug, Clone)]
struct GenInput {
    id: String,
    kind: Kind,
    optional: bool,
    binding: Option<(Option<i64>, Option<String>, Option<bool>)>,
    value: Option<(RawValue, String)>,
}

#[derive(Debug, Clone, PartialEq)]
enum Group {
    Arg { index: usize, text: String },
    Input { id: String, position: i64, tokens: Vec<String> },
}

impl Group {
    fn position(&self) -> i64 {
        match self {
            Group::Arg { .. } => 0,
            Group::Input { position, .. } => *position,
        }
    }

    fn tokens(&self) -> Vec<String> {
        match self {
            Group::Arg { text, .. } => vec![text.clone()],
            Group::Input { tokens, .. } => tokens.clone(),
        }
    }
}

/// The ordering rule between two groups, stated directly: lower position
/// first; at equal positions arguments precede inputs, arguments keep
/// their listed order and inputs go by id.
fn may_precede(a: &Group, b: &Group) -> bool {
    if a.position() != b.position() {
        return a.position() < b.position();
    }
    match (a, b) {
        (Group::Arg { index: i, .. }, Group::Arg { index: j, .. }) => i < j,
        (Group::Arg { .. }, Group::Input { .. }) => true,
        (Group::Input { .. }, Group::Arg { .. }) => false,
        (Group::Input { id: x, .. }, Group::Input { id: y, .. }) => x < y,
    }
}

/// Every permutation of `items` (Heap's algorithm).
fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    fn heap<T: Clone>(k: usize, a: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        heap(k - 1, a, out);
        for i in 0..k - 1 {
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap(k - 1, a, out);
        }
    }
    let mut a = items.to_vec();
    let mut out = Vec::new();
    heap(a.len(), &mut a, &mut out);
    out
}

fn oracle_argv(args: &[String], inputs: &[GenInput], root: &Path) -> Result<Vec<String>, String> {
    let mut groups: Vec<Group> = args
        .iter()
        .enumerate()
        .map(|(index, text)| Group::Arg {
            index,
            text: text.clone(),
        })
        .collect();
    for input in inputs {
        let (Some((position, prefix, separate)), Some((raw, text))) = (&input.binding, &input.value) else {
            continue;
        };
        let text = match input.kind {
            Kind::File => root
                .join(".inputs")
                .join(&input.id)
                .join(Path::new(text).file_name().unwrap())
                .display()
                .to_string(),
            _ => text.clone(),
        };
        let tokens = match (raw, prefix) {
            (RawValue::Bool(true), Some(p)) => vec![p.clone()],
            (RawValue::Bool(_), _) => vec![],
            (_, None) => vec![text],
            (_, Some(p)) if separate.unwrap_or(true) => vec![p.clone(), text],
            (_, Some(p)) => vec![format!("{p}{text}")],
        };
        groups.push(Group::Input {
            id: input.id.clone(),
            position: position.unwrap_or(0),
            tokens,
        });
    }
    let sorted: Vec<Vec<Group>> = permutations(&groups)
        .into_iter()
        .filter(|perm| perm.windows(2).all(|w| may_precede(&w[0], &w[1])))
        .collect();
    if sorted.len() != 1 {
        return Err(format!("{} orderings satisfy the rule", sorted.len()));
    }
    let mut argv = vec!["prog".to_string()];
    argv.extend(sorted[0].iter().flat_map(Group::tokens));
    Ok(argv)
}

fn random_string(rng: &mut ChaCha8Rng) -> String {
    const CHARS: &[u8] = b"abcXYZ019 -_=.,:/'\"{}$()";
    let n = rng.gen_range(0..8);
    (0..n).map(|_| CHARS[rng.gen_range(0..CHARS.len())] as char).collect()
}

fn random_input(rng: &mut ChaCha8Rng, id: &str) -> GenInput {
    const FLOATS: [(f64, &str); 6] = [(0.5, "0.5"), (1.0, "1.0"), (-2.25, "-2.25"), (0.001, "0.001"), (123.0, "123.0"), (7.75, "7.75")];
    let kind = [Kind::Str, Kind::Int, Kind::Float, Kind::Bool, Kind::File][rng.gen_range(0..5)].clone();
    let optional = rng.gen_bool(0.3);
    let binding = rng.gen_bool(0.85).then(|| {
        let position = rng.gen_bool(0.7).then(|| rng.gen_range(-2..=3));
        let prefix = rng.gen_bool(0.6).then(|| {
            ["-a", "-b", "--flag", "--x", "-o"][rng.gen_range(0..5)].to_string()
        });
        let separate = rng.gen_bool(0.4).then(|| rng.gen_bool(0.5));
        (position, prefix, separate)
    });
    let value = (!optional || rng.gen_bool(0.6)).then(|| match kind {
        Kind::Str => {
            let s = random_string(rng);
            (RawValue::Str(s.clone()), s)
        }
        Kind::Int => {
            let i: i64 = rng.gen_range(-1000..1000);
            (RawValue::Int(i), i.to_string())
        }
        Kind::Float => {
            let (f, text) = FLOATS[rng.gen_range(0..FLOATS.len())];
            (RawValue::Float(f), text.to_string())
        }
        Kind::Bool => {
            let b = rng.gen_bool(0.5);
            (RawValue::Bool(b), b.to_string())
        }
        Kind::File => {
            let p = format!("/data/f{}.txt", rng.gen_range(0..100));
            (RawValue::File(PathBuf::from(&p)), p)
        }
    });
    GenInput {
        id: id.to_string(),
        kind,
        optional,
        binding,
        value,
    }
}

fn yaml_document(args: &[String], inputs: &[GenInput]) -> String {
    let mut y = String::from("cwlVersion: v1.2\nclass: CommandLineTool\nbaseCommand: [prog]\n");
    if !args.is_empty() {
        y.push_str(&format!("arguments: [{}]\n", args.join(", ")));
    }
    y.push_str("inputs:\n");
    for input in inputs {
        let ty = match input.kind {
            Kind::Str => "string",
            Kind::Int => "int",
            Kind::Float => "double",
            Kind::Bool => "boolean",
            Kind::File => "File",
        };
        y.push_str(&format!("  {}:\n    type: {ty}{}\n", input.id, if input.optional { "?" } else { "" }));
        if let Some((position, prefix, separate)) = &input.binding {
            y.push_str("    inputBinding:\n");
            if let Some(p) = position {
                y.push_str(&format!("      position: {p}\n"));
            }
            if let Some(p) = prefix {
                y.push_str(&format!("      prefix: \"{p}\"\n"));
            }
            if let Some(s) = separate {
                y.push_str(&format!("      separate: {s}\n"));
            }
            if position.is_none() && prefix.is_none() && separate.is_none() {
                y.truncate(y.len() - 1);
                y.push_str(" {}\n");
            }
        }
    }
    if inputs.is_empty() {
        y.truncate(y.len() - 1);
        y.push_str(" {}\n");
    }
    y.push_str("outputs: []\n");
    y
}

fn binding_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB14D);
    let ids = ["alpha", "b", "c2", "d_x", "echo", "zz", "m", "ab"];
    let root = PathBuf::from("/sandbox/task");
    let mut max_groups = 0;
    for doc_index in 0..500 {
        let n_inputs = rng.gen_range(0..=6);
        let mut pool = ids.to_vec();
        pool.shuffle(&mut rng);
        let inputs: Vec<GenInput> = pool[..n_inputs].iter().map(|id| random_input(&mut rng, id)).collect();
        let args: Vec<String> = (0..rng.gen_range(0..=2)).map(|i| format!("lit{i}{}", rng.gen_range(0..9))).collect();
        let yaml = yaml_document(&args, &inputs);
        let doc = parse_tool(&yaml, "generated.cwl").map_err(|e| format!("doc {doc_index}: {e}\n{yaml}"))?;
        let raw: RawInputs = inputs
            .iter()
            .filter_map(|i| i.value.as_ref().map(|(v, _)| (i.id.clone(), v.clone())))
            .collect();
        let set = coerce_inputs(&doc, &raw).map_err(|e| format!("doc {doc_index}: {e}"))?;
        let plan = bind_arguments(&doc, &set, None, &BindContext::new("task", &root))
            .map_err(|e| format!("doc {doc_index}: {e}"))?;
        let expected = oracle_argv(&args, &inputs, &root).map_err(|e| format!("doc {doc_index}: {e}"))?;
        ensure!(plan.argv == expected, "doc {doc_index}: {:?} != oracle {:?}\n{yaml}", plan.argv, expected);
        max_groups = max_groups.max(args.len() + inputs.iter().filter(|i| i.binding.is_some()).count());
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("500/500 documents agree (up to {max_groups} binding groups)"))
}

// ---- criterion 3 -------------------------------------------------------

/// Title case as specified: inside each run of non-whitespace characters
/// the first letter goes upper case and every later letter lower case.
fn title_oracle(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = chars.clone();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && !chars[j].is_whitespace() {
            j += 1;
        }
        let word = i..j;
        if let Some(first) = word.clone().find(|&k| chars[k].is_alphabetic()) {
            for k in word {
                if chars[k].is_alphabetic() {
                    out[k] = if k == first {
                        chars[k].to_ascii_uppercase()
                    } else {
                        chars[k].to_ascii_lowercase()
                    };
                }
            }
        }
        i = j;
    }
    out.into_iter().collect()
}

fn capitalize_argv(doc: &cwlforge::document::ToolDocument, program: &expr::ExpressionProgram, message: &str) -> Result<Vec<String>, String> {
    let raw: RawInputs = [("message".to_string(), RawValue::Str(message.to_string()))].into();
    let set = coerce_inputs(doc, &raw).map_err(|e| e.to_string())?;
    let plan = bind_arguments(doc, &set, Some(program), &BindContext::new("t", "/sandbox/t")).map_err(|e| e.to_string())?;
    Ok(plan.argv)
}

fn expression_correctness() -> Outcome {
    let doc = parse_tool(bench::CAPITALIZE, "capitalize.cwl").map_err(|e| e.to_string())?;
    let program = expr::parse_expression_lib(doc.requirements.inline_expression.as_ref().unwrap()).map_err(|e| e.to_string())?;
    let argv = capitalize_argv(&doc, &program, "hello world")?;
    ensure!(argv == ["echo", "Hello World"], "argv {argv:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(0x717E);
    for n in 0..1000 {
        let len = rng.gen_range(0..40);
        let message: String = (0..len)
            .map(|_| if rng.gen_bool(0.05) { '\t' } else { rng.gen_range(0x20u8..0x7f) as char })
            .collect();
        let argv = capitalize_argv(&doc, &program, &message)?;
        let want = title_oracle(&message);
        ensure!(argv.len() == 2 && argv[1] == want, "message {n} {message:?}: {argv:?} != {want:?}");
    }
    Ok("\"hello world\" -> \"Hello World\"; 1000/1000 fuzz messages agree".into())
}

// ---- criterion 4 -------------------------------------------------------

fn validation() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path().join("work");
    let e = engine(&work, ExecutorKind::ThreadPool, 2);
    let app = ToolApp::load(corpus("validate_csv.cwl"), &e).map_err(|err| err.to_string())?;

    let csv = dir.path().join("data.csv");
    fs::write(&csv, "a,b\n").unwrap();
    let ok = app
        .call([("data_file", csv.as_path())], &Overrides::default())
        .map_err(|err| err.to_string())?
        .wait()
        .map_err(|err| err.to_string())?;
    let produced = fs::read_to_string(&ok["validated_output"].path).unwrap();
    ensure!(produced == "a,b\n", "csv run produced {produced:?}");
    e.shutdown(true);

    let e = engine(&work.join("second"), ExecutorKind::ThreadPool, 2);
    let app = ToolApp::load(corpus("validate_csv.cwl"), &e).map_err(|err| err.to_string())?;
    let txt = dir.path().join("data.txt");
    fs::write(&txt, "a,b\n").unwrap();
    let message = match app.call([("data_file", txt.as_path())], &Overrides::default()) {
        Err(InvokeError::Validation(v)) => v.to_string(),
        other => return Err(format!("expected a validation failure, got {other:?}")),
    };
    ensure!(message.contains("Invalid file. Expected '.csv'"), "message {message:?}");
    ensure!(e.tasks().is_empty(), "a task was submitted");
    let sandboxes = fs::read_dir(&work.join("second")).map(|d| d.count()).unwrap_or(0);
    ensure!(sandboxes == 0, "{sandboxes} sandbox directories created");
    e.shutdown(true);

    fs::write(dir.path().join("config.yml"), "executor: serial\n").unwrap();
    let validate = corpus("validate_csv.cwl").display().to_string();
    let out = cli(dir.path(), &["config.yml", &validate, "--data_file=data.txt"]);
    ensure!(out.status.code() == Some(4), "CLI exit {:?}", out.status.code());
    ensure!(String::from_utf8_lossy(&out.stderr).contains("Invalid file. Expected '.csv'"), "CLI stderr lacks message");
    ensure!(!dir.path().join("cwlforge-work").exists(), "CLI created a sandbox");
    Ok("csv accepted; txt rejected before submission with 0 sandboxes; CLI exit 4".into())
}

// ---- criterion 5 -------------------------------------------------------

/// The pipeline's byte transform, computed independently of the crate.
fn pipeline_oracle(input: &[u8], size: usize, sepia: bool, radius: i64) -> Vec<u8> {
    let kept = &input[..size.min(input.len())];
    let upper: String = String::from_utf8_lossy(kept).to_uppercase();
    let rotated: String = if sepia {
        upper
            .chars()
            .map(|c| match c {
                'A'..='M' | 'a'..='m' => (c as u8 + 13) as char,
                'N'..='Z' | 'n'..='z' => (c as u8 - 13) as char,
                _ => c,
            })
            .collect()
    } else {
        upper
    };
    let mut out = String::new();
    for line in rotated.split_inclusive('\n') {
        out.push_str(&format!("r{radius} {line}"));
    }
    out.into_bytes()
}

fn pipeline_dataflow() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let e = engine(&dir.path().join("work"), ExecutorKind::ThreadPool, 2);
    let pipeline = Pipeline::load(&e).map_err(|err| err.to_string())?;
    let params = StageParams::default();
    let inputs = bench::write_synthetic_images(&dir.path().join("in"), 8).unwrap();
    let items: Vec<_> = inputs
        .iter()
        .map(|p| pipeline.process(p, &params))
        .collect::<Result<_, _>>()
        .map_err(|err| err.to_string())?;
    let finals: Vec<_> = items.iter().map(|i| i.blur.clone()).collect();
    let r = wait(&finals, WaitMode::All, Some(Duration::from_secs(30)));
    ensure!(!r.timed_out, "timed out");

    for (i, item) in items.iter().enumerate() {
        let out = item.blur.wait().map_err(|err| format!("item {i}: {err}"))?;
        let produced = &out["output_image"].path;
        let expected = dir.path().join(format!("expected{i}"));
        fs::write(&expected, pipeline_oracle(&fs::read(&item.input).unwrap(), 1024, true, 1)).unwrap();
        ensure!(sha1sum(produced) == sha1sum(&expected), "item {i}: checksum mismatch");
    }

    let t = |h: &cwlforge::engine::TaskHandle| h.timing();
    let interleaved = items.iter().enumerate().any(|(j, a)| {
        items
            .iter()
            .enumerate()
            .any(|(i, b)| i != j && t(&a.resize).started.unwrap() < t(&b.blur).finished.unwrap())
    });
    ensure!(interleaved, "no stage-1 start precedes another item's stage-3 finish");

    for (i, item) in items.iter().enumerate() {
        for (consumer, producer) in [(&item.filter, &item.resize), (&item.blur, &item.filter)] {
            let resolved = producer.outputs()[0].resolved_at().unwrap();
            ensure!(t(consumer).started.unwrap() >= resolved, "item {i}: stage started before its input resolved");
        }
    }
    e.shutdown(true);
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("8/8 checksums match, interleaved, dependencies respected, {:.2}s", elapsed.as_secs_f64()))
}

// ---- criterion 6 -------------------------------------------------------

fn bench_config(dir: &Path) -> RunnerConfig {
    RunnerConfig {
        executor: ExecutorKind::ThreadPool,
        workdir: dir.join("work"),
        ..default_config()
    }
}

fn throughput_shape() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = bench_config(dir.path());
    let out = BenchOutput::create(&dir.path().join("results"), Some("acceptance".into())).unwrap();
    let params = StageParams::default();
    let mut makespans = BTreeMap::new();
    for n in [8, 16, 32] {
        let r = bench::run_pipeline_bench(n, 4, &config, &params, &out).map_err(|e| e.to_string())?;
        ensure!(r.ok, "pipeline {n}x4 produced wrong outputs");
        makespans.insert(n, r.makespan.as_secs_f64());
    }
    let r1 = makespans[&16] / makespans[&8];
    let r2 = makespans[&32] / makespans[&16];
    for ratio in [r1, r2] {
        ensure!((1.5..=2.5).contains(&ratio), "doubling ratio {ratio:.3} outside 2 ± 25% ({makespans:?})");
    }
    let one = bench::run_pipeline_bench(8, 1, &config, &params, &out).map_err(|e| e.to_string())?;
    let eight = bench::run_pipeline_bench(8, 8, &config, &params, &out).map_err(|e| e.to_string())?;
    ensure!(one.ok && eight.ok, "speedup runs produced wrong outputs");
    let speedup = one.makespan.as_secs_f64() / eight.makespan.as_secs_f64();
    ensure!(speedup >= 3.0, "8-worker speedup {speedup:.2} < 3");
    Ok(format!(
        "makespans 8/16/32 @4w = {:.2}/{:.2}/{:.2}s (ratios {r1:.2}, {r2:.2}); speedup 8w vs 1w = {speedup:.2}x",
        makespans[&8], makespans[&16], makespans[&32]
    ))
}

// ---- criterion 7 -------------------------------------------------------

fn expression_scaling() -> Outcome {
    // Warm up allocator and code paths before measuring.
    bench::run_expression_bench(64, None).map_err(|e| e.to_string())?;
    let small = bench::run_expression_bench(2, None).map_err(|e| e.to_string())?;
    let large = bench::run_expression_bench(1024, None).map_err(|e| e.to_string())?;
    ensure!(small.ok && large.ok, "wrong template output");
    ensure!(small.output == title_oracle(&bench::expression_message(2)), "2-word output {:?}", small.output);
    let per_small = small.mean_eval.as_secs_f64() / 2.0;
    let per_large = large.mean_eval.as_secs_f64() / 1024.0;
    ensure!(per_large <= 3.0 * per_small, "per-word cost {per_large:.3e}s at 1024 vs {per_small:.3e}s at 2");
    ensure!(large.mean_eval < Duration::from_millis(50), "1024-word evaluation took {:?}", large.mean_eval);
    Ok(format!(
        "per-word {:.3}us @2 vs {:.3}us @1024; 1024-word eval {:.1}us",
        per_small * 1e6,
        per_large * 1e6,
        large.mean_eval.as_secs_f64() * 1e6
    ))
}

// ---- criterion 8 -------------------------------------------------------

fn corpus_checksums(kind: ExecutorKind, dir: &Path) -> Result<Vec<(String, String)>, String> {
    let e = engine(&dir.join(format!("{kind:?}")), kind, 2);
    let load = |name: &str| ToolApp::load(corpus(name), &e).map_err(|err| err.to_string());
    let none = Overrides::default();
    let csv = dir.join("table.csv");
    fs::write(&csv, "id,value\n1,2\n").unwrap();
    let mut handles = vec![
        ("echo", load("echo.cwl")?.call([("message", "Hello, World!")], &none)),
        ("capitalize", load("capitalize.cwl")?.call([("message", "hello world")], &none)),
        ("validate_csv", load("validate_csv.cwl")?.call([("data_file", csv.as_path())], &none)),
        (
            "nap",
            load("nap.cwl")?.call([("delay", RawValue::from(0.0)), ("message", "zzz".into())], &none),
        ),
    ];
    let pipeline = Pipeline::load(&e).map_err(|err| err.to_string())?;
    let params = StageParams {
        delay: 0.0,
        ..StageParams::default()
    };
    for input in bench::write_synthetic_images(&dir.join("in"), 2).unwrap() {
        let item = pipeline.process(&input, &params).map_err(|err| err.to_string())?;
        handles.push(("resize", Ok(item.resize)));
        handles.push(("filter", Ok(item.filter)));
        handles.push(("blur", Ok(item.blur)));
    }
    let mut sums = Vec::new();
    for (name, h) in handles {
        let out = h.map_err(|err| format!("{name}: {err}"))?.wait().map_err(|err| format!("{name}: {err}"))?;
        for (id, file) in out {
            ensure!(file.sha1 == sha1sum(&file.path), "{name}.{id}: recorded checksum differs from sha1sum");
            sums.push((format!("{name}.{id}"), file.sha1));
        }
    }
    e.shutdown(true);
    Ok(sums)
}

fn executor_equivalence() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let serial = corpus_checksums(ExecutorKind::Serial, dir.path())?;
    let threads = corpus_checksums(ExecutorKind::ThreadPool, dir.path())?;
    let workers = corpus_checksums(ExecutorKind::WorkerPool, dir.path())?;
    ensure!(serial == threads, "serial {serial:?} != thread-pool {threads:?}");
    ensure!(serial == workers, "serial {serial:?} != worker-pool {workers:?}");
    Ok(format!("{} outputs checksum-identical across serial, thread-pool, worker-pool", serial.len()))
}

// ---- criterion 9 -------------------------------------------------------

const INJECTION_TOOL: &str = r#"cwlVersion: v1.2
class: CommandLineTool
requirements:
  InlinePythonRequirement:
    expressionLib:
      - |
        def capitalize_words(message):
            return message.title()
baseCommand: echo
inputs:
  message:
    type: string
    inputBinding: {position: 1, prefix: --message}
  other:
    type: string
    default: fixed
arguments:
  - f"{capitalize_words($(inputs.message))}"
  - f"pre-{$(inputs.message)}-post"
  - f"{{literal}} {$(inputs.other)}"
  - plain
outputs: []
"#;

fn adversarial(rng: &mut ChaCha8Rng) -> String {
    const PIECES: &[&str] = &[
        "\"", "'", "{", "}", "{{", "}}", "$(inputs.message)", "$(inputs.other)", "$(inputs.nope)", "$(", ")",
        "f\"", "f'{x}'", "\\", "\\n", "\n", " ", "\t", "a", "Z", "__import__('os')", ";", "`", "$", "raise Exception(\"x\")",
        "{capitalize_words('q')}", "\"}{\"", "#", "%s", "--message",
    ];
    let n = rng.gen_range(0..8);
    (0..n).map(|_| PIECES[rng.gen_range(0..PIECES.len())]).collect()
}

fn injection_fuzz() -> Outcome {
    let doc = parse_tool(INJECTION_TOOL, "inject.cwl").map_err(|e| e.to_string())?;
    let program = expr::parse_expression_lib(doc.requirements.inline_expression.as_ref().unwrap()).map_err(|e| e.to_string())?;
    let templates: Vec<Template> = doc.arguments[..3]
        .iter()
        .map(|a| Template::parse(a.raw()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1213);
    for n in 0..1000 {
        let message = adversarial(&mut rng);
        let raw: RawInputs = [("message".to_string(), RawValue::Str(message.clone()))].into();
        let set = coerce_inputs(&doc, &raw).map_err(|e| e.to_string())?;
        for t in &templates {
            let resolved = expr::resolve_references(t, &set).map_err(|e| format!("{n}: {e}"))?;
            ensure!(resolved.shape() == t.shape(), "{n}: template structure changed for {message:?}");
        }
        let plan = bind_arguments(&doc, &set, Some(&program), &BindContext::new("t", "/sandbox/t"))
            .map_err(|e| format!("{n} {message:?}: {e}"))?;
        let want = vec![
            "echo".to_string(),
            title_oracle(&message),
            format!("pre-{message}-post"),
            "{literal} fixed".to_string(),
            "plain".to_string(),
            "--message".to_string(),
            message.clone(),
        ];
        ensure!(plan.argv == want, "{n}: {message:?} gave {:?}", plan.argv);
    }
    Ok("1000/1000 adversarial inputs: 7 argv tokens each, template shapes unchanged".into())
}
