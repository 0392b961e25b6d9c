//! Worked models: Mach-Zehnder twin-Fock interferometry, the qubit
//! θ²-rotation family, and a synthetic test corpus.

pub mod bessel;
mod jet;
pub mod mach_zehnder;
pub mod qubit;
pub mod synthetic;

pub use bessel::{bessel_j, bessel_j_sequence};
pub use mach_zehnder::{mach_zehnder_model, MachZehnderConfig};
pub use qubit::{qubit_q_closed_form, QubitConfig, QubitFamily};
pub use synthetic::{quantum_corpus, synthetic_corpus, CorpusEntry, QuantumCorpusEntry};
