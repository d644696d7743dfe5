use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use super::config::EnsembleConfig;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::photophysics::{nonradiative_rate, radiative_rate, thickness_to_energy};

/// Generator used for every realization; recorded in output metadata.
pub const RNG_ALGORITHM: &str =
    "ChaCha20 (rand_chacha 0.9), seed_from_u64(seed), stream = position<<32 | realization";

/// Stream of realization `realization` at map position `position`.
pub fn stream_index(position: u32, realization: u32) -> u64 {
    (u64::from(position) << 32) | u64::from(realization)
}

/// One donor bound to its nearest acceptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DapPair {
    /// nm; `z ≤ 0`.
    pub donor_position: [f64; 3],
    /// In-plane position of the acceptor image nearest to the donor, nm; the
    /// acceptor plane is at `z = thickness`.
    pub acceptor_position: [f64; 2],
    pub separation: f64,
    /// Zero-phonon transition energy, eV.
    pub energy: f64,
    pub w_r: f64,
    pub w_nr: f64,
    pub quantum_yield: f64,
    /// Angle between the pair axis and the surface normal, rad.
    pub dipole_tilt: f64,
    /// In-plane direction of the pair axis, rad.
    pub dipole_azimuth: f64,
}

impl DapPair {
    /// Builds the pair and its photophysics from a donor and the acceptor
    /// image at height `thickness`; `None` when the separation does not
    /// exceed `d_min`.
    pub fn new(
        donor: [f64; 3],
        acceptor: [f64; 2],
        thickness: f64,
        p: &ModelParams,
    ) -> Option<Self> {
        let dx = acceptor[0] - donor[0];
        let dy = acceptor[1] - donor[1];
        let h = thickness - donor[2];
        let rho = dx.hypot(dy);
        let separation = (rho * rho + h * h).sqrt();
        let energy = thickness_to_energy(separation, p).ok()?;
        let w_r = radiative_rate(separation, p).ok()?;
        let w_nr = nonradiative_rate(separation, p).ok()?;
        let total = w_r + w_nr;
        Some(Self {
            donor_position: donor,
            acceptor_position: acceptor,
            separation,
            energy,
            w_r,
            w_nr,
            quantum_yield: if total > 0.0 { w_r / total } else { 0.0 },
            dipole_tilt: rho.atan2(h),
            dipole_azimuth: dy.atan2(dx),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct RealizationCounts {
    pub donors: usize,
    pub acceptors: usize,
    pub pairs: usize,
    /// Donors whose nearest acceptor is not farther than `d_min`.
    pub near_surface: usize,
    /// Donors left unpaired because the realization has no acceptor.
    pub unpaired: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleRealization {
    pub pairs: Vec<DapPair>,
    /// Acceptor sites on the surface plane, nm, inside `[0, side)²`.
    pub acceptors: Vec<[f64; 2]>,
    pub counts: RealizationCounts,
}

/// Pairs of the realization on stream 0 of `cfg.seed`.
pub fn sample_configuration(cfg: &EnsembleConfig) -> Result<Vec<DapPair>> {
    Ok(sample_realization(cfg, 0)?.pairs)
}

/// Samples one realization from stream `stream` of `cfg.seed`.
///
/// Donor and acceptor counts are Poisson; positions are uniform. Each donor
/// takes the acceptor with the smallest minimum-image lateral distance.
pub fn sample_realization(cfg: &EnsembleConfig, stream: u64) -> Result<EnsembleRealization> {
    cfg.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let side = cfg.side_nm();
    let n_donors = poisson(&mut rng, cfg.expected_donors())?;
    let n_acceptors = poisson(&mut rng, cfg.expected_acceptors())?;
    let donors: Vec<[f64; 3]> = (0..n_donors)
        .map(|_| {
            [
                rng.random::<f64>() * side,
                rng.random::<f64>() * side,
                -rng.random::<f64>() * cfg.substrate_depth_nm,
            ]
        })
        .collect();
    let acceptors: Vec<[f64; 2]> = (0..n_acceptors)
        .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
        .collect();

    let mut counts = RealizationCounts {
        donors: n_donors,
        acceptors: n_acceptors,
        ..Default::default()
    };
    let mut pairs = Vec::new();
    if acceptors.is_empty() {
        counts.unpaired = n_donors;
        return Ok(EnsembleRealization {
            pairs,
            acceptors,
            counts,
        });
    }
    let grid = CellGrid::new(&acceptors, side);
    pairs.reserve(n_donors);
    for donor in donors {
        let image = grid.nearest_image([donor[0], donor[1]]);
        match DapPair::new(donor, image, cfg.thickness_nm, &cfg.params) {
            Some(pair) => pairs.push(pair),
            None => counts.near_surface += 1,
        }
    }
    counts.pairs = pairs.len();
    Ok(EnsembleRealization {
        pairs,
        acceptors,
        counts,
    })
}

fn poisson(rng: &mut ChaCha20Rng, mean: f64) -> Result<usize> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::InvalidParams(e.to_string()))?;
    Ok(dist.sample(rng) as usize)
}

/// Uniform bucket grid over a periodic square for nearest-point queries.
struct CellGrid<'a> {
    points: &'a [[f64; 2]],
    side: f64,
    cells: usize,
    cell_width: f64,
    /// `start[c]..start[c + 1]` indexes `order` for cell `c`.
    start: Vec<usize>,
    order: Vec<usize>,
}

impl<'a> CellGrid<'a> {
    fn new(points: &'a [[f64; 2]], side: f64) -> Self {
        // about two points per cell
        let cells = ((points.len() as f64 / 2.0).sqrt().floor() as usize).clamp(1, 4096);
        let cell_width = side / cells as f64;
        let cell_of = |p: &[f64; 2]| {
            let i = ((p[0] / cell_width) as usize).min(cells - 1);
            let j = ((p[1] / cell_width) as usize).min(cells - 1);
            j * cells + i
        };
        let mut count = vec![0usize; cells * cells + 1];
        for p in points {
            count[cell_of(p) + 1] += 1;
        }
        for c in 1..count.len() {
            count[c] += count[c - 1];
        }
        let start = count.clone();
        let mut fill = count;
        let mut order = vec![0; points.len()];
        for (k, p) in points.iter().enumerate() {
            let c = cell_of(p);
            order[fill[c]] = k;
            fill[c] += 1;
        }
        Self {
            points,
            side,
            cells,
            cell_width,
            start,
            order,
        }
    }

    /// Minimum-image position of the point nearest to `q`; ties go to the
    /// lowest point index.
    fn nearest_image(&self, q: [f64; 2]) -> [f64; 2] {
        let n = self.cells as isize;
        let ci = ((q[0] / self.cell_width) as isize).min(n - 1);
        let cj = ((q[1] / self.cell_width) as isize).min(n - 1);
        let mut best = (f64::INFINITY, usize::MAX, [0.0; 2]);
        let max_ring = n / 2 + 1;
        for ring in 0..=max_ring {
            for dj in -ring..=ring {
                for di in -ring..=ring {
                    if di.abs().max(dj.abs()) != ring {
                        continue;
                    }
                    let i = (ci + di).rem_euclid(n) as usize;
                    let j = (cj + dj).rem_euclid(n) as usize;
                    let c = j * self.cells + i;
                    for &k in &self.order[self.start[c]..self.start[c + 1]] {
                        let (d2, image) = self.image(q, k);
                        if d2 < best.0 || (d2 == best.0 && k < best.1) {
                            best = (d2, k, image);
                        }
                    }
                }
            }
            // every unvisited cell is at least `ring` cell widths away
            let reach = ring as f64 * self.cell_width;
            if best.0 <= reach * reach {
                break;
            }
        }
        best.2
    }

    fn image(&self, q: [f64; 2], k: usize) -> (f64, [f64; 2]) {
        let p = self.points[k];
        let mut dx = p[0] - q[0];
        let mut dy = p[1] - q[1];
        dx -= self.side * (dx / self.side).round();
        dy -= self.side * (dy / self.side).round();
        (dx * dx + dy * dy, [q[0] + dx, q[1] + dy])
    }
}
