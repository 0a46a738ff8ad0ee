//! Files in and out: positions, traces, synthetic data, configuration, CSV formatting.

pub mod config;
pub mod format;
pub mod positions;
pub mod synth;
pub mod trace;

pub use config::{BasisMethod, Config};
pub use positions::{intel_field, load_positions, INTEL_EXCLUDED, INTEL_ROOT};
pub use synth::{generate_synthetic, SynthSpec};
pub use trace::{load_trace, BucketStat, EpochTrace, LoadedTrace, TraceOptions};
