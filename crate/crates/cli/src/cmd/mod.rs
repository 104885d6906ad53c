pub mod harmonic;
pub mod lacunary;
pub mod lemmas;
pub mod norm;
pub mod signal_io;
