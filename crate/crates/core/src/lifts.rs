//! Random n-lifts and the old/new spectrum split.
//!
//! A lift replaces every undirected base edge with a perfect matching
//! between the two fibers, drawn uniformly and independently; the base
//! spectrum pulls back into the lift spectrum exactly, so greedily
//! matching base eigenvalues tags the rest as new.

use crate::error::LiftError;
use crate::finite_spectrum::NbSpectrum;
use crate::graph::Graph;
use crate::numerics;
use crate::scanner::{CellCode, SpectrumRaster};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Uniform random permutation per undirected edge, from a stream derived
/// of (seed, edge index) so generation order never matters.
pub fn lift_permutations(g: &Graph, n: usize, seed: u64) -> Vec<Vec<usize>> {
    (0..g.n_undirected())
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9e3779b97f4a7c15));
            let mut perm: Vec<usize> = (0..n).collect();
            // Fisher-Yates
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            perm
        })
        .collect()
}

/// Lift with explicit matchings; `perms[k][i]` wires (u, i) to (v, perm[i])
/// for base edge k = {u, v}. Exposed so tests can inject permutations.
pub fn lift_with_permutations(g: &Graph, n: usize, perms: &[Vec<usize>]) -> Graph {
    assert_eq!(perms.len(), g.n_undirected());
    let mut edges = Vec::with_capacity(g.n_undirected() * n);
    for (k, &(u, v, w)) in g.undirected_edges().iter().enumerate() {
        for i in 0..n {
            edges.push((u * n + i, v * n + perms[k][i], w));
        }
    }
    Graph::from_weighted_edges(g.n_vertices() * n, &edges)
        .expect("lift of a simple graph is simple")
}

/// Seeded uniform random n-lift. May be disconnected; the returned graph
/// carries the flag.
pub fn random_lift(g: &Graph, n: usize, seed: u64) -> Graph {
    assert!(n >= 1);
    lift_with_permutations(g, n, &lift_permutations(g, n, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Old,
    New,
}

#[derive(Debug, Clone)]
pub struct TaggedSpectrum {
    pub values: Vec<Complex64>,
    pub tags: Vec<Tag>,
    /// Largest distance over the matched (old) pairs.
    pub max_old_match: f64,
}

impl TaggedSpectrum {
    pub fn new_values(&self) -> Vec<Complex64> {
        self.values
            .iter()
            .zip(&self.tags)
            .filter(|(_, t)| **t == Tag::New)
            .map(|(v, _)| *v)
            .collect()
    }
}

/// Greedily matches every base eigenvalue to its nearest unmatched lift
/// eigenvalue (old); the rest are new. Pullback containment makes a
/// failure to match within tol a genuine bug signal.
pub fn split_old_new(
    lift_spec: &NbSpectrum,
    base_spec: &NbSpectrum,
    tol: f64,
) -> Result<TaggedSpectrum, LiftError> {
    let mut base_sorted = base_spec.values.clone();
    base_sorted.sort_by(|a, b| {
        (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap_or(std::cmp::Ordering::Equal)
    });
    let (picks, worst) = numerics::match_into(&base_sorted, &lift_spec.values);
    for (bv, &j) in base_sorted.iter().zip(&picks) {
        let d = (bv - lift_spec.values[j]).norm();
        if d > tol {
            return Err(LiftError::MatchFailure { re: bv.re, im: bv.im, tol });
        }
    }
    let mut tags = vec![Tag::New; lift_spec.values.len()];
    for &j in &picks {
        tags[j] = Tag::Old;
    }
    Ok(TaggedSpectrum { values: lift_spec.values.clone(), tags, max_old_match: worst })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionStats {
    /// Fraction of new eigenvalues within eps_d of an IN cell center;
    /// null when there are no new eigenvalues.
    pub fraction_within: Option<f64>,
    pub eps_d: f64,
    pub n_new: usize,
    /// (upper bin edge, count) over the observed distances.
    pub histogram: Vec<(f64, usize)>,
    pub max_distance: Option<f64>,
}

/// Distance statistics of new eigenvalues against a scanned region.
pub fn region_distance_stats(
    new_eigs: &[Complex64],
    raster: &SpectrumRaster,
    eps_d: f64,
) -> Result<RegionStats, LiftError> {
    for z in new_eigs {
        if !raster.contains(*z) {
            return Err(LiftError::RegionMismatch { re: z.re, im: z.im });
        }
    }
    if new_eigs.is_empty() {
        return Ok(RegionStats {
            fraction_within: None,
            eps_d,
            n_new: 0,
            histogram: Vec::new(),
            max_distance: None,
        });
    }
    let in_centers: Vec<Complex64> = (0..raster.grid.n_im)
        .flat_map(|i_im| (0..raster.grid.n_re).map(move |i_re| (i_re, i_im)))
        .filter(|&(i_re, i_im)| raster.cell(i_re, i_im) == CellCode::In)
        .map(|(i_re, i_im)| raster.cell_center(i_re, i_im))
        .collect();
    let distances: Vec<f64> = new_eigs
        .iter()
        .map(|z| {
            in_centers
                .iter()
                .map(|c| (z - c).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let max_distance = distances.iter().copied().fold(0.0_f64, f64::max);
    let within = distances.iter().filter(|&&d| d <= eps_d).count();
    let n_bins = 16usize;
    let width = (max_distance / n_bins as f64).max(f64::MIN_POSITIVE);
    let mut histogram = vec![0usize; n_bins];
    for &d in &distances {
        let bin = ((d / width) as usize).min(n_bins - 1);
        histogram[bin] += 1;
    }
    Ok(RegionStats {
        fraction_within: Some(within as f64 / new_eigs.len() as f64),
        eps_d,
        n_new: new_eigs.len(),
        histogram: histogram
            .into_iter()
            .enumerate()
            .map(|(i, c)| ((i + 1) as f64 * width, c))
            .collect(),
        max_distance: Some(max_distance),
    })
}

/// Point cloud rows `re,im,tag`.
pub fn write_point_cloud<W: Write>(spec: &TaggedSpectrum, mut w: W) -> std::io::Result<()> {
    writeln!(w, "re,im,tag")?;
    for (z, tag) in spec.values.iter().zip(&spec.tags) {
        let t = match tag {
            Tag::Old => "old",
            Tag::New => "new",
        };
        writeln!(w, "{:.12},{:.12},{}", z.re, z.im, t)?;
    }
    Ok(())
}
