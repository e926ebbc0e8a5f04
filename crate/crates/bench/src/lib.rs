//! Shared fixtures for the benchmarks.

use clockdil::channels::{amplitude_damping_preset, ChannelFamily, Lindbladian};
use clockdil::dilation::{DilationSource, PipelineDilation};
use clockdil::{PropagatorGrid, TimeGrid};

pub fn amplitude_damping() -> ChannelFamily {
    ChannelFamily::semigroup(amplitude_damping_preset())
}

pub fn random_qubit(seed: u64) -> ChannelFamily {
    ChannelFamily::semigroup(Lindbladian::random(2, 2, 1.0, seed).expect("valid generator"))
}

/// Amplitude-damping propagators on the sweep grid for `n` pulses.
pub fn ad_propagators(n: usize) -> PropagatorGrid {
    let grid = TimeGrid::pulse_aligned(1.0, n, 8).expect("valid grid");
    PipelineDilation::new(amplitude_damping()).build(&grid).expect("dilation builds")
}
