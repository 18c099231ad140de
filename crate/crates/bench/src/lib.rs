//! Fixtures shared by the benchmarks.

use lc_cooldown::ParameterSet;

/// Reference device with the renormalized mechanical frequency switched on.
pub fn reference() -> ParameterSet {
    let mut p = ParameterSet::reference_device();
    if let Some(d) = p.direct_mut() {
        d.spring_shift = true;
    }
    p
}
