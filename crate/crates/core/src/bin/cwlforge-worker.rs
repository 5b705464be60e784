//! Worker process for the worker-pool executor. Reads task records from
//! stdin and writes result records to stdout; see `engine::process`.

fn main() {
    std::process::exit(cwlforge::engine::process::worker_main());
}
