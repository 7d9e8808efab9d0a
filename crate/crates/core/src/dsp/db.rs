use crate::error::{Error, Result};

/// Zero-power guard applied before taking logarithms.
pub const AMIN: f64 = 1e-10;
/// Dynamic range kept below the reference (the output floor is `-TOP_DB`).
pub const TOP_DB: f64 = 80.0;

/// Converts a power matrix to decibels relative to its maximum.
///
/// Output is `10 log10(max(s, AMIN) / max(S))` clamped below at -80 dB. A
/// matrix with no power above `AMIN` maps uniformly to the floor.
pub fn power_to_db(power: &[f64]) -> Result<Vec<f64>> {
    let mut out = power.to_vec();
    power_to_db_in_place(&mut out)?;
    Ok(out)
}

pub fn power_to_db_in_place(values: &mut [f64]) -> Result<()> {
    let mut reference = 0.0f64;
    for (i, &v) in values.iter().enumerate() {
        if !(v >= 0.0) {
            return Err(Error::Domain(format!("power entry {i} is {v}; expected >= 0")));
        }
        reference = reference.max(v);
    }
    if reference <= AMIN {
        values.fill(-TOP_DB);
        return Ok(());
    }
    let ref_db = 10.0 * reference.log10();
    for v in values.iter_mut() {
        *v = (10.0 * v.max(AMIN).log10() - ref_db).max(-TOP_DB);
    }
    Ok(())
}
