//! Write a synthetic world as pipeline inputs.
//!
//! `cargo run -p cablemap-core --example synth_world -- <standard|outage|fixture> <dir> [seed]`

use std::path::PathBuf;
use std::process::ExitCode;

use cablemap::synth::{SynthSpec, SynthWorld};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (Some(kind), Some(dir)) = (args.first(), args.get(1)) else {
        eprintln!("usage: synth_world <standard|outage|fixture> <dir> [seed]");
        return ExitCode::from(2);
    };
    let mut spec = match kind.as_str() {
        "standard" => SynthSpec::standard(),
        "outage" => SynthSpec::outage(),
        "fixture" => SynthSpec::fixture(),
        other => {
            eprintln!("unknown world {other}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.get(2) {
        match seed.parse() {
            Ok(s) => spec.seed = s,
            Err(e) => {
                eprintln!("bad seed: {e}");
                return ExitCode::from(2);
            }
        }
    }
    let world = SynthWorld::generate(&spec);
    if let Err(e) = world.write_to(&PathBuf::from(dir)) {
        eprintln!("{dir}: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
