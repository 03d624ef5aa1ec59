//! Perfect-reconstruction cosine-modulated filter banks built on an IIR
//! prototype whose denominator is sparse in `z^{-2M}`.
//!
//! Every analysis polyphase component is a scaled copy of one all-pole
//! filter, so the synthesis side reduces to FIR filters with closed-form
//! gains and both sides need only a single shared filter, a bank of scalar
//! gains and an `M x M` cosine transform.

pub mod designer;
pub mod engine;
pub mod error;
pub mod frame;
pub mod io;
pub mod modulation;
mod optim;
pub mod prototype;

pub use designer::{design_prototype, DesignResult, DesignSpec};
pub use engine::{
    build_synthesis_prototype, derive_synthesis_gains, measure_system_delay_and_gain, AnalysisBank,
    AnalysisState, OpCounts, SynthesisBank, SynthesisGains, SynthesisPrototype, SynthesisState,
    SystemResponse,
};
pub use error::{Error, Result};
pub use frame::{
    analysis_polyphase_matrix, frame_bounds, gram_matrix, multiplication_count,
    stopband_attenuation, FrameReport,
};
pub use modulation::{modulated_impulse_responses, ModulatedFilters, ModulationMatrices};
pub use prototype::{check_stability, validate_symmetry, AllPoleCore, PrototypeFilter, Symmetry};
