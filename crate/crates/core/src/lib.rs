//! Run CWL `CommandLineTool` documents as futures-returning functions.
//!
//! A [`toolapp::ToolApp`] is loaded once from a tool file and then invoked
//! with keyword inputs. Each invocation returns a task handle whose outputs
//! are file futures that can be passed straight into further invocations;
//! the [`engine`] runs tasks as soon as their inputs exist.

pub mod bench;
pub mod binding;
pub mod cli;
pub mod config;
pub mod document;
pub mod engine;
pub mod expr;
pub mod toolapp;
