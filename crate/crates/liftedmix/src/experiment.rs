//! Experiment harness: declarative configs, sweeps, reports.
