//! External electrostatic potential on the device disc.
//!
//! The Laplace equation is discretised with finite differences on a uniform
//! Cartesian grid in which the disc is embedded. Interior nodes whose
//! neighbour lies outside the disc use the exact distance to the boundary
//! crossing:
//!
//! * crossing on an electrode arc: Dirichlet value at the crossing with the
//!   Shortley-Weller irregular stencil (second order);
//! * crossing on the insulating part of the boundary: zero normal flux, the
//!   outward neighbour is dropped from the stencil.
//!
//! Every discrete equation reads `u_0 = sum(w_n u_n) / sum(w_n)` with
//! positive weights, so the solution obeys the discrete maximum principle
//! and constants are reproduced exactly. The system is solved by successive
//! over-relaxation.
//!
//! Because the problem is linear, one unit solution per electrode (1 V on
//! that electrode, 0 V on the others) is enough; the potential for any
//! voltage vector is the weighted sum kept in [`PotentialBasis`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{DeviceGeometry, Point};
use crate::exec::Execution;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error(
        "Laplace solve for electrode {electrode} did not converge: residual {residual:e} after {iterations} iterations"
    )]
    NotConverged { electrode: u8, residual: f64, iterations: usize },
    #[error("expected {expected} electrode voltages, got {found}")]
    MissingVoltage { expected: usize, found: usize },
    #[error("site {site} out of range ({sites} sites)")]
    UnknownSite { site: usize, sites: usize },
    #[error("basis cache: {0}")]
    Io(#[from] std::io::Error),
    #[error("basis cache: {0}")]
    Json(#[from] serde_json::Error),
}

/// Grid resolution and solver controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Cells across the diameter; at least 64.
    pub cells: usize,
    /// Target maximum residual of the discrete equations.
    pub tolerance: f64,
    /// SOR sweep budget.
    pub max_iterations: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { cells: 256, tolerance: 1e-9, max_iterations: 200_000 }
    }
}

pub const MIN_CELLS: usize = 64;

/// Boundary condition at a point of the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Zero normal flux.
    Insulating,
    /// Fixed potential.
    Fixed(f64),
}

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
enum Link {
    Node(u32),
    /// Boundary crossing at `fraction * h` from the node, at polar `angle`.
    Edge {
        fraction: f64,
        angle: f64,
    },
}

/// Interior nodes of the embedded disc and their links (+x, -x, +y, -y).
#[derive(Debug, Clone)]
pub struct DiscLayout {
    radius: f64,
    cells: usize,
    h: f64,
    /// `(cells + 1)^2` entries, unknown id or `NONE`.
    node_id: Vec<u32>,
    coords: Vec<Point>,
    links: Vec<[Link; 4]>,
}

// Crossings closer than this (in units of h) are clamped to keep the
// Shortley-Weller weights finite.
const MIN_FRACTION: f64 = 1e-6;

impl DiscLayout {
    pub fn new(radius: f64, cells: usize) -> Result<Self, FieldError> {
        if cells < MIN_CELLS {
            return Err(FieldError::DegenerateGrid(format!(
                "{cells} cells across the diameter, need at least {MIN_CELLS}"
            )));
        }
        if !(radius > 0.0) {
            return Err(FieldError::DegenerateGrid(format!("radius {radius}")));
        }
        let n = cells + 1;
        let h = 2.0 * radius / cells as f64;
        let r2 = radius * radius;
        let pos = |i: usize| -radius + i as f64 * h;
        let inside = |x: f64, y: f64| x * x + y * y < r2 * (1.0 - 1e-12);

        let mut node_id = vec![NONE; n * n];
        let mut coords = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let (x, y) = (pos(i), pos(j));
                if inside(x, y) {
                    node_id[j * n + i] = coords.len() as u32;
                    coords.push([x, y]);
                }
            }
        }

        let dirs: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        let mut links = Vec::with_capacity(coords.len());
        for j in 0..n {
            for i in 0..n {
                if node_id[j * n + i] == NONE {
                    continue;
                }
                let p = [pos(i), pos(j)];
                let mut l = [Link::Node(0); 4];
                for (slot, (di, dj)) in dirs.iter().enumerate() {
                    let (ni, nj) = (i as isize + di, j as isize + dj);
                    let neighbour = if ni >= 0 && nj >= 0 && (ni as usize) < n && (nj as usize) < n {
                        node_id[nj as usize * n + ni as usize]
                    } else {
                        NONE
                    };
                    l[slot] = if neighbour != NONE {
                        Link::Node(neighbour)
                    } else {
                        // |p + t d| = R along the unit direction d
                        let d = [*di as f64, *dj as f64];
                        let pd = p[0] * d[0] + p[1] * d[1];
                        let pp = p[0] * p[0] + p[1] * p[1];
                        let t = -pd + (pd * pd - (pp - r2)).max(0.0).sqrt();
                        let fraction = (t / h).clamp(MIN_FRACTION, 1.0);
                        let q = [p[0] + t * d[0], p[1] + t * d[1]];
                        Link::Edge { fraction, angle: q[1].atan2(q[0]) }
                    };
                }
                links.push(l);
            }
        }
        Ok(Self { radius, cells, h, node_id, coords, links })
    }

    pub fn unknowns(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Assembles the discrete equations for a boundary assignment.
    pub fn assemble(&self, boundary: impl Fn(f64) -> Boundary) -> Result<DiscSystem, FieldError> {
        let h = self.h;
        let mut stencils = Vec::with_capacity(self.links.len());
        for (u, links) in self.links.iter().enumerate() {
            let mut st = Stencil { nbr: [NONE; 4], w: [0.0; 4], val: [0.0; 4], diag: 0.0 };
            for axis in 0..2 {
                let (a, b) = (2 * axis, 2 * axis + 1);
                let side = |l: Link| -> Side {
                    match l {
                        Link::Node(id) => Side { dist: h, node: id, value: 0.0, open: true },
                        Link::Edge { fraction, angle } => match boundary(angle) {
                            Boundary::Insulating => Side { dist: h, node: NONE, value: 0.0, open: false },
                            Boundary::Fixed(v) => Side { dist: fraction * h, node: NONE, value: v, open: true },
                        },
                    }
                };
                let sides = [side(links[a]), side(links[b])];
                let (da, db) = (sides[0].dist, sides[1].dist);
                let weights = match (sides[0].open, sides[1].open) {
                    (true, true) => [2.0 / (da * (da + db)), 2.0 / (db * (da + db))],
                    (true, false) => [2.0 / (da * (da + h)), 0.0],
                    (false, true) => [0.0, 2.0 / (db * (db + h))],
                    (false, false) => [0.0, 0.0],
                };
                for (k, s) in sides.iter().enumerate() {
                    let slot = [a, b][k];
                    st.nbr[slot] = s.node;
                    st.w[slot] = weights[k];
                    st.val[slot] = s.value;
                }
            }
            // same summation order as `Stencil::average`, so constants are exact
            st.diag = st.w.iter().sum();
            if st.diag == 0.0 {
                return Err(FieldError::DegenerateGrid(format!("node {u} at {:?} is isolated", self.coords[u])));
            }
            stencils.push(st);
        }
        Ok(DiscSystem { stencils })
    }

    /// Bilinear interpolation of a nodal field at `p`, using only the
    /// surrounding nodes that lie inside the disc (weights renormalised).
    pub fn interpolate(&self, values: &[f64], p: Point) -> f64 {
        let n = self.cells + 1;
        let fx = ((p[0] + self.radius) / self.h).clamp(0.0, self.cells as f64);
        let fy = ((p[1] + self.radius) / self.h).clamp(0.0, self.cells as f64);
        let i0 = (fx.floor() as usize).min(self.cells - 1);
        let j0 = (fy.floor() as usize).min(self.cells - 1);
        let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
        let corners = [
            (i0, j0, (1.0 - tx) * (1.0 - ty)),
            (i0 + 1, j0, tx * (1.0 - ty)),
            (i0, j0 + 1, (1.0 - tx) * ty),
            (i0 + 1, j0 + 1, tx * ty),
        ];
        let (mut acc, mut wsum) = (0.0, 0.0);
        for (i, j, w) in corners {
            let id = self.node_id[j * n + i];
            if id != NONE {
                acc += w * values[id as usize];
                wsum += w;
            }
        }
        if wsum > 0.0 {
            return acc / wsum;
        }
        // all four corners outside the disc (or zero-weight): nearest node
        let nearest = self
            .coords
            .iter()
            .enumerate()
            .min_by(|a, b| crate::device::dist_sq(*a.1, p).total_cmp(&crate::device::dist_sq(*b.1, p)))
            .map(|(k, _)| k)
            .expect("layout has nodes");
        values[nearest]
    }
}

struct Side {
    dist: f64,
    node: u32,
    value: f64,
    open: bool,
}

/// One discrete equation. A slot with `nbr == NONE` and positive weight is
/// a Dirichlet crossing with value `val`; zero weight means no coupling.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    nbr: [u32; 4],
    w: [f64; 4],
    val: [f64; 4],
    diag: f64,
}

impl Stencil {
    #[inline]
    fn average(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..4 {
            let v = if self.nbr[k] != NONE { x[self.nbr[k] as usize] } else { self.val[k] };
            s += self.w[k] * v;
        }
        s / self.diag
    }
}

/// Assembled equations for one boundary assignment.
#[derive(Debug, Clone)]
pub struct DiscSystem {
    stencils: Vec<Stencil>,
}

/// Converged (or budget-exhausted) nodal solution.
#[derive(Debug, Clone)]
pub struct DiscSolution {
    pub values: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl DiscSystem {
    /// Maximum residual `|avg(u) - u_0|` over all nodes.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.stencils.iter().zip(x).map(|(s, &u)| (s.average(x) - u).abs()).fold(0.0, f64::max)
    }

    /// Mean of the Dirichlet data seen by the stencils; used as initial guess.
    fn boundary_mean(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for s in &self.stencils {
            for k in 0..4 {
                if s.nbr[k] == NONE && s.w[k] > 0.0 {
                    num += s.w[k] * s.val[k];
                    den += s.w[k];
                }
            }
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Lexicographic SOR until the maximum residual drops below `tolerance`
    /// or `max_iterations` sweeps are spent.
    pub fn solve(&self, cells: usize, tolerance: f64, max_iterations: usize) -> DiscSolution {
        let n = self.stencils.len();
        let mut x = vec![self.boundary_mean(); n];
        let omega = 2.0 / (1.0 + (std::f64::consts::PI / cells as f64).sin());
        let mut residual = self.residual(&x);
        let mut iterations = 0;
        while residual > tolerance && iterations < max_iterations {
            let mut max_delta: f64 = 0.0;
            for (u, st) in self.stencils.iter().enumerate() {
                let d = st.average(&x) - x[u];
                x[u] += omega * d;
                max_delta = max_delta.max(d.abs());
            }
            iterations += 1;
            if max_delta <= tolerance || iterations == max_iterations {
                residual = self.residual(&x);
            }
        }
        DiscSolution { values: x, residual, iterations }
    }
}

/// Per-electrode unit solutions on the full grid.
#[derive(Debug, Clone)]
pub struct UnitFields {
    pub layout: DiscLayout,
    pub grid: GridSpec,
    pub electrode_indices: Vec<u8>,
    pub solutions: Vec<DiscSolution>,
    pub geometry_hash: String,
}

/// Solves the unit problem of every electrode. Non-convergence is recorded
/// in the residuals, not reported as an error.
pub fn solve_unit_fields(geometry: &DeviceGeometry, grid: GridSpec, exec: Execution) -> Result<UnitFields, FieldError> {
    if geometry.electrodes.is_empty() {
        return Err(FieldError::DegenerateGrid("device has no electrodes".into()));
    }
    let layout = DiscLayout::new(geometry.radius_nm, grid.cells)?;
    let systems = geometry
        .electrodes
        .iter()
        .map(|target| {
            layout.assemble(|angle| match geometry.electrodes.iter().find(|e| e.contains_angle(angle)) {
                Some(e) if e.index == target.index => Boundary::Fixed(1.0),
                Some(_) => Boundary::Fixed(0.0),
                None => Boundary::Insulating,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let solutions =
        exec.map_indexed(systems.len(), |k| systems[k].solve(grid.cells, grid.tolerance, grid.max_iterations));
    Ok(UnitFields {
        layout,
        grid,
        electrode_indices: geometry.electrodes.iter().map(|e| e.index).collect(),
        solutions,
        geometry_hash: geometry.geometry_hash(),
    })
}

impl UnitFields {
    /// Unit potentials of all electrodes at `p`.
    pub fn sample(&self, p: Point) -> Vec<f64> {
        self.solutions.iter().map(|s| self.layout.interpolate(&s.values, p)).collect()
    }

    pub fn converged(&self) -> Result<(), FieldError> {
        for (k, s) in self.solutions.iter().enumerate() {
            if !(s.residual <= self.grid.tolerance) {
                return Err(FieldError::NotConverged {
                    electrode: self.electrode_indices[k],
                    residual: s.residual,
                    iterations: s.iterations,
                });
            }
        }
        Ok(())
    }

    /// Samples every unit solution at the given sites.
    pub fn basis_at(&self, sites: &[Point]) -> PotentialBasis {
        let phi = self
            .solutions
            .iter()
            .map(|s| sites.iter().map(|&p| self.layout.interpolate(&s.values, p)).collect())
            .collect();
        PotentialBasis {
            geometry_hash: self.geometry_hash.clone(),
            grid: self.grid,
            electrode_indices: self.electrode_indices.clone(),
            residuals: self.solutions.iter().map(|s| s.residual).collect(),
            iterations: self.solutions.iter().map(|s| s.iterations).collect(),
            phi,
        }
    }
}

/// Unit potentials `phi_k` at every dopant site.
///
/// Electrode order (the `k` of `phi[k]`) follows the device's electrode
/// list, as do voltage slices passed to [`PotentialBasis::potential_at`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialBasis {
    pub geometry_hash: String,
    pub grid: GridSpec,
    pub electrode_indices: Vec<u8>,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    /// `phi[k][site]`, volts per applied volt.
    pub phi: Vec<Vec<f64>>,
}

/// Solves all unit problems and samples them at the dopant sites.
pub fn solve_unit_potentials(geometry: &DeviceGeometry, grid: GridSpec) -> Result<PotentialBasis, FieldError> {
    solve_unit_potentials_with(geometry, grid, Execution::default())
}

pub fn solve_unit_potentials_with(
    geometry: &DeviceGeometry,
    grid: GridSpec,
    exec: Execution,
) -> Result<PotentialBasis, FieldError> {
    let fields = solve_unit_fields(geometry, grid, exec)?;
    fields.converged()?;
    Ok(fields.basis_at(&geometry.dopants))
}

/// Largest discrete-Laplacian residual over all unit solutions.
pub fn harmonic_residual(basis: &PotentialBasis) -> f64 {
    basis.residuals.iter().copied().fold(0.0, f64::max)
}

impl PotentialBasis {
    pub fn electrodes(&self) -> usize {
        self.phi.len()
    }

    pub fn sites(&self) -> usize {
        self.phi.first().map_or(0, Vec::len)
    }

    /// `sum_k U_k phi_k(site)` in volts.
    pub fn potential_at(&self, voltages: &[f64], site: usize) -> Result<f64, FieldError> {
        if voltages.len() != self.phi.len() {
            return Err(FieldError::MissingVoltage { expected: self.phi.len(), found: voltages.len() });
        }
        if site >= self.sites() {
            return Err(FieldError::UnknownSite { site, sites: self.sites() });
        }
        Ok(self.phi.iter().zip(voltages).map(|(p, u)| u * p[site]).sum())
    }

    /// Potentials at all sites.
    pub fn site_potentials(&self, voltages: &[f64]) -> Result<Vec<f64>, FieldError> {
        if voltages.len() != self.phi.len() {
            return Err(FieldError::MissingVoltage { expected: self.phi.len(), found: voltages.len() });
        }
        let mut out = vec![0.0; self.sites()];
        for (p, &u) in self.phi.iter().zip(voltages) {
            for (o, &v) in out.iter_mut().zip(p) {
                *o += u * v;
            }
        }
        Ok(out)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), FieldError> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, FieldError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// True if this cache was computed for `geometry` on `grid`.
    pub fn matches(&self, geometry: &DeviceGeometry, grid: &GridSpec) -> bool {
        self.geometry_hash == geometry.geometry_hash() && self.grid == *grid
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{generate_device, DeviceConfig, ElectrodeArc, ElectrodeRole};
    use rand::{Rng, SeedableRng};

    /// Relative L2 error of the Dirichlet solve for the harmonic `exact` on
    /// the unit disc.
    fn dirichlet_error(cells: usize, exact: impl Fn(f64, f64) -> f64) -> f64 {
        let layout = DiscLayout::new(1.0, cells).unwrap();
        let sys = layout.assemble(|a| Boundary::Fixed(exact(a.cos(), a.sin()))).unwrap();
        let sol = sys.solve(cells, 1e-12, 100_000);
        assert!(sol.residual <= 1e-12);
        let (mut num, mut den) = (0.0, 0.0);
        for (p, u) in layout.coords().iter().zip(&sol.values) {
            let e = exact(p[0], p[1]);
            num += (u - e).powi(2);
            den += e * e;
        }
        (num / den).sqrt()
    }

    #[test]
    fn dirichlet_cosine_matches_closed_form() {
        // boundary cos(theta) gives (r/R) cos(theta) = x
        let e256 = dirichlet_error(256, |x, _| x);
        assert!(e256 < 1e-3, "relative L2 error {e256}");
    }

    #[test]
    fn refinement_halves_error() {
        // linear data is reproduced exactly, so use a curved harmonic
        let exact = |x: f64, y: f64| (3.0 * x).exp() * (3.0 * y).cos();
        let (coarse, fine) = (dirichlet_error(64, exact), dirichlet_error(128, exact));
        assert!(coarse / fine >= 2.0, "{coarse} -> {fine}");
    }

    #[test]
    fn full_circle_electrode_gives_constant() {
        let mut g = generate_device(1, &DeviceConfig { n_dopants: 30, ..Default::default() }).unwrap();
        g.electrodes = vec![ElectrodeArc {
            index: 1,
            role: ElectrodeRole::Output,
            center_angle: 0.0,
            angular_width: std::f64::consts::TAU,
        }];
        let basis = solve_unit_potentials(&g, GridSpec { cells: 64, ..Default::default() }).unwrap();
        for v in &basis.phi[0] {
            assert!((v - 1.0).abs() < 1e-8);
        }
        assert_eq!(harmonic_residual(&basis), 0.0);
    }

    #[test]
    fn unit_solutions_sum_to_one_and_respect_bounds() {
        let g = generate_device(4, &DeviceConfig::default()).unwrap();
        let grid = GridSpec { cells: 96, ..Default::default() };
        let fields = solve_unit_fields(&g, grid, Execution::Sequential).unwrap();
        fields.converged().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let (r, t) = (70.0 * rng.random::<f64>().sqrt(), 6.3 * rng.random::<f64>());
            let phis = fields.sample([r * t.cos(), r * t.sin()]);
            assert!((phis.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        for s in &fields.solutions {
            for v in &s.values {
                assert!(*v >= -1e-9 && *v <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn iteration_budget_one_reports_residual() {
        let g = generate_device(4, &DeviceConfig { n_dopants: 10, ..Default::default() }).unwrap();
        let grid = GridSpec { cells: 64, tolerance: 1e-9, max_iterations: 1 };
        let fields = solve_unit_fields(&g, grid, Execution::Sequential).unwrap();
        assert!(fields.solutions.iter().all(|s| s.residual > 1e-9));
        let basis = fields.basis_at(&g.dopants);
        assert!(harmonic_residual(&basis) > 1e-9);
        assert!(matches!(solve_unit_potentials(&g, grid), Err(FieldError::NotConverged { .. })));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        assert!(matches!(DiscLayout::new(75.0, 32), Err(FieldError::DegenerateGrid(_))));
    }

    #[test]
    fn superposition_helpers() {
        let basis = PotentialBasis {
            geometry_hash: String::new(),
            grid: GridSpec::default(),
            electrode_indices: vec![1, 2],
            residuals: vec![0.0; 2],
            iterations: vec![0; 2],
            phi: vec![vec![0.25, 0.5], vec![0.75, 0.5]],
        };
        assert_eq!(basis.potential_at(&[0.0, 0.0], 0).unwrap(), 0.0);
        assert_eq!(basis.potential_at(&[1.0, 0.0], 1).unwrap(), 0.5);
        assert!((basis.potential_at(&[0.7, 0.7], 0).unwrap() - 0.7).abs() < 1e-12);
        assert!(matches!(basis.potential_at(&[1.0], 0), Err(FieldError::MissingVoltage { .. })));
        assert!(matches!(basis.potential_at(&[1.0, 1.0], 2), Err(FieldError::UnknownSite { .. })));
        assert_eq!(basis.site_potentials(&[2.0, 4.0]).unwrap(), vec![3.5, 3.0]);
    }
}
