pub mod beamforming;
pub mod blockage;
pub mod channel;
pub mod dataset;
pub mod detector;
pub mod geometry;
pub mod irs;
pub mod linalg;
pub mod music;
pub mod random;
pub mod scenario;
