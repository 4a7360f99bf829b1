//! Coordinates of walk paths in the half-plane and the trees `T_p`.

use alloc::vec::Vec;

use crate::arith::{Place, PrimeContext, Rational};
use crate::group::{GroupElement, OrbitPoint, TreeVertex};
use crate::walk::Trajectory;

/// `R_n · o` for one step: half-plane point `(|A_n|, Z_n)` and the discs
/// `D^p(-v_p(A_n), Z_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryRecord {
    pub n: u64,
    pub x: f64,
    pub y: f64,
    pub vertices: Vec<TreeVertex>,
}

impl GeometryRecord {
    pub fn from_orbit(n: u64, o: &OrbitPoint) -> Self {
        GeometryRecord {
            n,
            x: o.half_plane.x.to_f64(),
            y: o.half_plane.y.to_f64(),
            vertices: o.tree_vertices.values().cloned().collect(),
        }
    }

    /// `ln x + Σ_p level_p ln p`, zero up to rounding because the product
    /// formula ties the height to the tree levels.
    pub fn level_relation_residual(&self) -> f64 {
        libm::log(self.x)
            + self
                .vertices
                .iter()
                .map(|v| v.level() as f64 * libm::log(v.prime() as f64))
                .sum::<f64>()
    }
}

/// Records of `R_0 … R_N`.
pub fn trajectory_geometry(traj: &Trajectory) -> Vec<GeometryRecord> {
    element_geometry(&traj.ctx, traj.products.iter())
}

pub fn element_geometry<'a>(ctx: &PrimeContext, elements: impl Iterator<Item = &'a GroupElement>) -> Vec<GeometryRecord> {
    elements
        .enumerate()
        .map(|(n, r)| GeometryRecord::from_orbit(n as u64, &r.embed_orbit(ctx)))
        .collect()
}

/// `D^p(k, z)` for `k_min ≤ k ≤ k_max`, from the smallest disc up.
pub fn geodesic_to_target(p: u64, z: &Rational, k_min: i64, k_max: i64) -> Vec<TreeVertex> {
    (k_min..=k_max).map(|k| TreeVertex::new(p, k, z)).collect()
}

/// `ln |A_n|_∞` written through the tree levels, for checks.
pub fn height_from_levels(vertices: &[TreeVertex]) -> f64 {
    -vertices
        .iter()
        .map(|v| v.level() as f64 * Place::Prime(v.prime()).ln_prime().expect("prime"))
        .sum::<f64>()
}
