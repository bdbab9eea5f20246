//! Fixtures shared by the kernel benchmarks.

use katolab::experiment::{initial_velocity, InitialBlock};
use katolab::noise::{NoiseConfig, NoiseKind, NoiseModel};
use katolab::{Domain, SpectralBasis, VelocityField};

pub struct Fixture {
    pub basis: SpectralBasis,
    pub model: NoiseModel,
    pub u0: VelocityField,
}

pub fn fixture(nx: usize, n_modes: usize) -> Fixture {
    let basis = SpectralBasis::build(&Domain::new(nx).unwrap(), n_modes).unwrap();
    let model = NoiseModel::new(&basis, &NoiseConfig::new(NoiseKind::TransportStratonovich, 8, 0.5)).unwrap();
    let u0 = initial_velocity(&basis, &InitialBlock::default()).unwrap();
    Fixture { basis, model, u0 }
}
