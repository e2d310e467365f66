//! Physical constants and unit helpers. Internally times are in seconds and
//! frequencies are angular (rad/s) with ħ = 1.

use std::f64::consts::PI;

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const HBAR: f64 = 1.054_571_817e-34;

pub const NS: f64 = 1e-9;
pub const US: f64 = 1e-6;

/// Converts a frequency in hertz to angular frequency.
pub fn angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

pub fn mhz(value: f64) -> f64 {
    angular(value * 1e6)
}

pub fn ghz(value: f64) -> f64 {
    angular(value * 1e9)
}

/// Converts an angular frequency back to hertz.
pub fn to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}
