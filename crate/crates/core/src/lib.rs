pub mod audio;
pub mod calibration;
pub mod session;
pub mod spectrum;
pub mod stats;
pub mod stimulus;
pub mod synth;
pub mod voice;
