//! Synthetic periodic benchmark networks.
//!
//! Snapshot k carries the edge set of phase `k mod period`; each off-diagonal
//! adjacency entry is then independently flipped with the noise rate. A
//! drifting variant mutates the phase edge sets every few snapshots so the
//! structure slowly walks away from its starting point.

use crate::error::{Error, Result};
use crate::graph::{Snapshot, SnapshotSequence};
use crate::numeric::{Matrix, SeededRng};

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub n: usize,
    pub period: usize,
    /// One directed edge set per phase, `period` entries.
    pub phases: Vec<Vec<(usize, usize)>>,
    /// Per-entry flip probability in [0, 1).
    pub noise: f64,
    /// Number of snapshots to emit.
    pub snapshots: usize,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument("synthetic network needs n >= 2".into()));
        }
        if self.period < 2 {
            return Err(Error::InvalidArgument("period must be >= 2".into()));
        }
        if self.phases.len() != self.period {
            return Err(Error::InvalidArgument(format!(
                "expected {} phase edge sets, got {}",
                self.period,
                self.phases.len()
            )));
        }
        for (p, edges) in self.phases.iter().enumerate() {
            for &(i, j) in edges {
                if i >= self.n || j >= self.n || i == j {
                    return Err(Error::InvalidArgument(format!(
                        "phase {p} has invalid edge ({i},{j}) for n={}",
                        self.n
                    )));
                }
            }
        }
        let mut sorted: Vec<Vec<(usize, usize)>> = self
            .phases
            .iter()
            .map(|e| {
                let mut e = e.clone();
                e.sort_unstable();
                e.dedup();
                e
            })
            .collect();
        let first = sorted.remove(0);
        if sorted.iter().all(|e| *e == first) {
            return Err(Error::InvalidArgument(
                "phase edge sets must not all be identical".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::InvalidArgument(format!(
                "noise must be in [0,1), got {}",
                self.noise
            )));
        }
        if self.snapshots == 0 {
            return Err(Error::InvalidArgument("snapshot count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Draw `period` random edge sets with the given density, retrying the
/// second-onwards phases until they differ from the first.
pub fn random_phases(
    n: usize,
    period: usize,
    density: f64,
    rng: &mut SeededRng,
) -> Vec<Vec<(usize, usize)>> {
    let draw = |rng: &mut SeededRng| -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.next_bool(density) {
                    edges.push((i, j));
                }
            }
        }
        edges
    };
    let mut phases = vec![draw(rng)];
    while phases.len() < period {
        let next = draw(rng);
        if next != phases[0] {
            phases.push(next);
        }
    }
    phases
}

fn phase_matrix(n: usize, edges: &[(usize, usize)]) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for &(i, j) in edges {
        m.set(i, j, 1.0);
    }
    m
}

fn apply_noise(base: &Matrix, noise: f64, rng: &mut SeededRng) -> Matrix {
    let n = base.rows;
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else if noise > 0.0 && rng.next_bool(noise) {
            1.0 - base.get(i, j)
        } else {
            base.get(i, j)
        }
    })
}

pub fn synth_generate(spec: &SyntheticSpec, seed: u64) -> Result<SnapshotSequence> {
    spec.validate()?;
    let mut rng = SeededRng::new(seed).derive("synth");
    let templates: Vec<Matrix> =
        spec.phases.iter().map(|e| phase_matrix(spec.n, e)).collect();
    let snapshots = (0..spec.snapshots)
        .map(|k| Snapshot {
            adjacency: apply_noise(&templates[k % spec.period], spec.noise, &mut rng),
            index: k,
        })
        .collect();
    Ok(SnapshotSequence { snapshots, interval: 1.0 })
}

/// Drifting variant: every `mutate_every` snapshots, `mutations` random
/// off-diagonal entries of each phase template are toggled, so later
/// snapshots share progressively less structure with early ones.
pub fn synth_generate_drifting(
    spec: &SyntheticSpec,
    mutate_every: usize,
    mutations: usize,
    seed: u64,
) -> Result<SnapshotSequence> {
    spec.validate()?;
    if mutate_every == 0 {
        return Err(Error::InvalidArgument("mutate_every must be >= 1".into()));
    }
    let mut rng = SeededRng::new(seed).derive("synth-drift");
    let mut templates: Vec<Matrix> =
        spec.phases.iter().map(|e| phase_matrix(spec.n, e)).collect();
    let mut snapshots = Vec::with_capacity(spec.snapshots);
    for k in 0..spec.snapshots {
        if k > 0 && k % mutate_every == 0 {
            for tpl in templates.iter_mut() {
                for _ in 0..mutations {
                    let i = rng.next_usize(spec.n);
                    let mut j = rng.next_usize(spec.n);
                    while j == i {
                        j = rng.next_usize(spec.n);
                    }
                    tpl.set(i, j, 1.0 - tpl.get(i, j));
                }
            }
        }
        snapshots.push(Snapshot {
            adjacency: apply_noise(&templates[k % spec.period], spec.noise, &mut rng),
            index: k,
        });
    }
    Ok(SnapshotSequence { snapshots, interval: 1.0 })
}
