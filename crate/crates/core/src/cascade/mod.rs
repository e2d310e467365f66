//! Cascaded input-output treatment of traveling wavepackets: each emission
//! or capture is one stage coupling a qudit transition to an input and an
//! output mode.

mod envelope;
mod stage;
mod state;

pub use envelope::{
    acoustic_loss_rate, catch_profile, g_in, g_out, partial_catch_profile, shaped_release_profile, EnvelopeSpec,
};
pub use stage::{stage_hamiltonian, stage_lindblad, Parasitic, Stage};
pub use state::{CascadeState, DETACH_THRESHOLD};
