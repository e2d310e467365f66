//! Transducer and coupling-circuit model of the qubit relaxation rates.

mod circuit;
mod fit;
mod idt;

pub use circuit::{
    circuit_impedance, effective_rlc, network_impedance, rate_sweep, reactance_zeros, CircuitParams, Loss, RateCurves,
    RlcEffective, SWEEP_BAND,
};
pub use fit::{decay_model, fit_decay, DecayFit, DecayTraces, FitMode, FIT_WINDOW};
pub use idt::{
    center_frequency, conductance, fsr, hilbert_oracle, idt_admittance, susceptance, AdmittanceModel, IdtParams,
    LINBO3_CS, LINBO3_K2,
};
