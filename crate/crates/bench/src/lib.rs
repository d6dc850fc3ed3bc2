//! Benchmark fixtures shared by the criterion targets.

use nlsq_core::{photon_added_coherent, DensityMatrix, FockDim, PhotonAddedSpec, C64};

/// |α, n⟩ on `levels` Fock levels.
pub fn photon_added(alpha: f64, n: u32, levels: usize) -> DensityMatrix {
    let spec = PhotonAddedSpec::new(C64::new(alpha, 0.0), n).expect("supported regime");
    let ket =
        photon_added_coherent(spec, FockDim::new(levels).expect("valid dimension")).expect("state");
    DensityMatrix::from_ket(&ket).expect("normalized")
}
