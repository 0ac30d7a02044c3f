//! Failure-revealing percentages for catalog requirements under all three modes.
//!
//! `cargo run --release -p athena-core --example calibrate -- AT1 CC1`

use athena_core::harness::{run_experiment, ExperimentConfig, Mode, ProblemSpec};

fn main() -> athena_core::Result<()> {
    let mut ids: Vec<String> = std::env::args().skip(1).collect();
    if ids.is_empty() {
        ids = vec!["AT1".into(), "CC1".into()];
    }
    for id in &ids {
        for mode in Mode::ALL {
            let mut cfg = ExperimentConfig::new(ProblemSpec::Catalog(id.clone()), mode);
            cfg.repetitions = 25;
            let r = run_experiment(&cfg, None)?;
            let mean = r.iteration_stats.map_or("-".to_owned(), |s| format!("{:.1}", s.mean));
            println!("{id:5} {mode:9} {:5.1}%  mean iterations {mean}", r.percentage);
        }
    }
    Ok(())
}
