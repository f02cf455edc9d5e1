use super::EigenSet;

/// Imaginary parts below this magnitude are treated as zero.
pub const IMAG_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityKind {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StabilityClass {
    pub kind: StabilityKind,
    /// True when the eigenvalue with the largest real part is complex.
    pub oscillatory: bool,
    pub max_real_part: f64,
}

/// Linear stability from the Jacobian spectrum.
///
/// Stable requires every real part to be strictly below `-margin`; a zero
/// real part counts as unstable.
pub fn classify(e: &EigenSet, margin: f64) -> StabilityClass {
    let max_real_part = e.max_real_part();
    let kind = if max_real_part < -margin {
        StabilityKind::Stable
    } else {
        StabilityKind::Unstable
    };
    let oscillatory = e
        .values
        .iter()
        .filter(|z| z.re == max_real_part)
        .any(|z| z.im.abs() >= IMAG_ZERO_TOL);
    StabilityClass {
        kind,
        oscillatory,
        max_real_part,
    }
}
