//! Shared fixtures for the benchmark targets: the reference link and a
//! mid-rate modem, built once per benchmark out of the measured region.

use reslink::harness::{build_link, LinkSetup};
use reslink::{CircuitParams, ExperimentConfig, ModemConfig, WaveformKind};

/// The reference circuit at its design coupling.
pub fn reference_params() -> CircuitParams {
    ExperimentConfig::reference()
        .circuit
        .params(0.4)
        .expect("reference circuit is valid")
}

/// A 200 kbit/s modem keyed to the reference tones.
pub fn modem_200k() -> ModemConfig {
    let cfg = ExperimentConfig::reference();
    let tones = cfg.transmit_tones().expect("reference tones");
    cfg.modem_for(200e3, tones, WaveformKind::Fsk)
        .expect("reference modem")
}

/// The reference link discretized at the modem sample rate.
pub fn reference_link(fs: f64) -> LinkSetup {
    build_link(&reference_params(), fs).expect("reference link discretizes")
}
