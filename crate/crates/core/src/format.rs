//! Number formatting shared by every CSV and console writer.

/// Shortest round-trip decimal form of `x`.
///
/// Plain notation for moderate magnitudes, exponent notation outside
/// `[1e-4, 1e15)`. Both branches print the minimal digit string that
/// parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    let mag = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&mag) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
