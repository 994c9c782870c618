//! Unit conventions. Internally every frequency and energy is an angular
//! frequency in rad/ns and every time is in ns.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Boltzmann constant over reduced Planck constant, rad/ns per kelvin.
pub const KB_OVER_HBAR: f64 = 1.380_649e-23 / 1.054_571_817e-34 * 1e-9;

/// GHz (cycles per ns) to rad/ns.
pub fn ghz(f: f64) -> f64 {
    TWO_PI * f
}

pub fn mhz(f: f64) -> f64 {
    TWO_PI * f * 1e-3
}

pub fn khz(f: f64) -> f64 {
    TWO_PI * f * 1e-6
}

/// rad/ns to GHz.
pub fn to_ghz(w: f64) -> f64 {
    w / TWO_PI
}

pub fn to_mhz(w: f64) -> f64 {
    w / TWO_PI * 1e3
}

pub fn to_khz(w: f64) -> f64 {
    w / TWO_PI * 1e6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Time,
    Temperature,
    Angle,
}

/// Parses strings such as `"5.5 GHz"`, `"45 ns"`, `"20 mK"` or `"0.5 pi"`.
/// Frequencies come back in rad/ns, times in ns, temperatures in K and
/// angles in rad.
pub fn parse_quantity(s: &str, dim: Dimension) -> Result<f64, String> {
    let s = s.trim();
    let split = s
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .or_else(|| {
            // "1e3 GHz": the exponent marker is followed by a digit or sign.
            s.find(' ')
        })
        .ok_or_else(|| format!("missing unit in {s:?}"))?;
    let (num, unit) = s.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("invalid number {:?} in {s:?}", num.trim()))?;
    let unit = unit.trim();
    let factor = match (dim, unit) {
        (Dimension::Frequency, "GHz") => TWO_PI,
        (Dimension::Frequency, "MHz") => TWO_PI * 1e-3,
        (Dimension::Frequency, "kHz") => TWO_PI * 1e-6,
        (Dimension::Frequency, "rad/ns") => 1.0,
        (Dimension::Time, "ns") => 1.0,
        (Dimension::Time, "us") | (Dimension::Time, "μs") => 1e3,
        (Dimension::Time, "ps") => 1e-3,
        (Dimension::Temperature, "K") => 1.0,
        (Dimension::Temperature, "mK") => 1e-3,
        (Dimension::Angle, "rad") => 1.0,
        (Dimension::Angle, "pi") => PI,
        (Dimension::Angle, "deg") => PI / 180.0,
        _ => return Err(format!("unit {unit:?} is not a valid {dim:?} unit in {s:?}")),
    };
    if !value.is_finite() {
        return Err(format!("non-finite value in {s:?}"));
    }
    Ok(value * factor)
}

/// Inverse of [`parse_quantity`] using the primary unit of each dimension.
pub fn format_quantity(v: f64, dim: Dimension) -> String {
    match dim {
        Dimension::Frequency => format!("{} GHz", v / TWO_PI),
        Dimension::Time => format!("{v} ns"),
        Dimension::Temperature => format!("{v} K"),
        Dimension::Angle => format!("{} pi", v / PI),
    }
}
