use rand::Rng;
use rand_distr::StandardNormal;

use super::catalog::ChipClassSpec;
use crate::detector::SpatialLatencyMap;
use crate::error::{Error, Result};
use crate::seed::{self, stream};

/// Latency quantum of the timing setup in microseconds (10 ns).
pub const LATENCY_QUANTUM_US: f64 = 0.01;

/// Wear levels of the artificially used locations in a seeded test chip.
pub const USED_SPOT_CYCLES: [u64; 6] = [1_000, 5_000, 10_000, 15_000, 30_000, 50_000];

const MIN_FACTOR: f64 = 0.1;

/// Round a latency to the 10 ns grid, never below one quantum.
pub fn quantize(latency_us: f64) -> f64 {
    let q = (latency_us * 100.0).round().max(1.0);
    q / 100.0
}

fn gaussian_factor<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let z: f64 = rng.sample(StandardNormal);
    (1.0 + sigma * z).max(MIN_FACTOR)
}

/// One simulated chip: fixed chip and per-location multipliers plus the
/// cumulative program/erase count of every location.
#[derive(Debug, Clone)]
pub struct ChipInstance {
    spec: ChipClassSpec,
    chip_seed: u64,
    chip_factor: f64,
    loc_factor: Vec<f64>,
    wear: Vec<u64>,
}

impl ChipInstance {
    pub fn new(spec: &ChipClassSpec, chip_seed: u64) -> Self {
        let tag = spec.class_tag as u64;
        let mut chip_rng = seed::rng(chip_seed, &[stream::CHIP_FACTOR, tag]);
        let chip_factor = gaussian_factor(&mut chip_rng, spec.chip_sigma);
        let mut loc_rng = seed::rng(chip_seed, &[stream::LOC_FACTOR, tag]);
        let loc_factor = (0..spec.num_locations)
            .map(|_| gaussian_factor(&mut loc_rng, spec.loc_sigma))
            .collect();
        ChipInstance {
            spec: spec.clone(),
            chip_seed,
            chip_factor,
            loc_factor,
            wear: vec![0; spec.num_locations],
        }
    }

    pub fn spec(&self) -> &ChipClassSpec {
        &self.spec
    }

    pub fn chip_seed(&self) -> u64 {
        self.chip_seed
    }

    pub fn chip_factor(&self) -> f64 {
        self.chip_factor
    }

    pub fn num_locations(&self) -> usize {
        self.wear.len()
    }

    fn check(&self, addr: usize) -> Result<()> {
        if addr >= self.wear.len() {
            return Err(Error::AddressOutOfRange {
                addr,
                len: self.wear.len(),
            });
        }
        Ok(())
    }

    pub fn loc_factor(&self, addr: usize) -> Result<f64> {
        self.check(addr)?;
        Ok(self.loc_factor[addr])
    }

    pub fn wear(&self, addr: usize) -> Result<u64> {
        self.check(addr)?;
        Ok(self.wear[addr])
    }

    pub fn wear_map(&self) -> &[u64] {
        &self.wear
    }

    /// Noise-free, unquantized latency of `addr` at its current wear.
    pub fn expected_latency(&self, addr: usize) -> Result<f64> {
        self.check(addr)?;
        Ok(self.expected_at(addr, self.wear[addr]))
    }

    fn expected_at(&self, addr: usize, wear: u64) -> f64 {
        self.spec.base_latency_us
            * self.chip_factor
            * self.loc_factor[addr]
            * self.spec.wear_factor(wear)
    }

    fn sample_at(&self, addr: usize, wear: u64) -> f64 {
        let mean = self.expected_at(addr, wear);
        let noise = if self.spec.noise_sigma == 0.0 {
            1.0
        } else {
            let mut rng = seed::rng(
                self.chip_seed,
                &[stream::NOISE, self.spec.class_tag as u64, addr as u64, wear],
            );
            let z: f64 = rng.sample(StandardNormal);
            (self.spec.noise_sigma * z).exp()
        };
        quantize(mean * noise)
    }

    /// Measured latency at the current wear without cycling the location.
    /// Safe to call concurrently.
    pub fn peek_latency(&self, addr: usize) -> Result<f64> {
        self.check(addr)?;
        Ok(self.sample_at(addr, self.wear[addr]))
    }

    /// Measure one operation's latency at `addr`; with `advance` the
    /// operation counts as one more program/erase cycle.
    pub fn latency_sample(&mut self, addr: usize, advance: bool) -> Result<f64> {
        let value = self.peek_latency(addr)?;
        if advance {
            self.wear[addr] += 1;
        }
        Ok(value)
    }

    /// Fast-forward `n` cycles at `addr` without recording latencies.
    pub fn cycle_location(&mut self, addr: usize, n: u64) -> Result<()> {
        self.check(addr)?;
        self.wear[addr] += n;
        Ok(())
    }

    /// Wear one randomly placed location per entry of `cycles`, keeping the
    /// chosen addresses at least `min_gap` apart. Returns the addresses in
    /// the order of `cycles`.
    pub fn wear_random_spots(&mut self, cycles: &[u64], min_gap: usize, seed: u64) -> Result<Vec<usize>> {
        let n = self.wear.len();
        if cycles.len() * min_gap.max(1) > n {
            return Err(Error::validation(format!(
                "{} spots {min_gap} apart do not fit in {n} locations",
                cycles.len()
            )));
        }
        let mut rng = seed::rng(seed, &[stream::USED_SPOTS, self.chip_seed]);
        let mut spots: Vec<usize> = Vec::with_capacity(cycles.len());
        while spots.len() < cycles.len() {
            let a = rng.random_range(0..n);
            if spots.iter().all(|&s| s.abs_diff(a) >= min_gap) {
                spots.push(a);
            }
        }
        for (&a, &w) in spots.iter().zip(cycles) {
            self.wear[a] += w;
        }
        Ok(spots)
    }

    /// One measured operation on every location, in address order.
    pub fn full_chip_scan(&mut self) -> SpatialLatencyMap {
        let latencies = (0..self.wear.len())
            .map(|addr| {
                let v = self.sample_at(addr, self.wear[addr]);
                self.wear[addr] += 1;
                v
            })
            .collect();
        SpatialLatencyMap::new(Some(self.spec.class_tag), latencies)
            .expect("simulated latencies are positive")
    }
}

pub fn new_chip(spec: &ChipClassSpec, chip_seed: u64) -> ChipInstance {
    ChipInstance::new(spec, chip_seed)
}
