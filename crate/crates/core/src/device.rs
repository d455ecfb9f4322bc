//! Random dopant-network geometry and its physical parameters.
//!
//! A device is a disc of radius `R` (nm) holding dopant sites, static
//! counterdopants and eight electrodes modelled as arcs on the boundary
//! circle. Coordinates are stored in nm as `f64`.
//!
//! The default electrode layout puts the arc centres every `pi/4` with an
//! angular width of 0.2 rad. The output electrode (8) sits at angle 0 and the
//! layout is mirror symmetric about the x axis: the inputs U3 (left) and U2
//! (right) are mirror images, as are the control pairs U4/U5 and U6/U7.

use std::f64::consts::{FRAC_PI_4, TAU};
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::seeding::{self, Purpose};

/// A point in the device plane, nm.
pub type Point = [f64; 2];

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("invalid device configuration: {0}")]
    InvalidConfig(String),
    #[error("could not place {what} {placed} with minimum spacing {spacing_nm} nm after {attempts} attempts")]
    PlacementFailed { what: &'static str, placed: usize, spacing_nm: f64, attempts: usize },
    #[error("no electrode with index {0}")]
    UnknownElectrode(u8),
    #[error("device file: {0}")]
    Io(#[from] std::io::Error),
    #[error("device file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElectrodeRole {
    InputLeft,
    InputRight,
    Control,
    Output,
}

impl fmt::Display for ElectrodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ElectrodeRole::InputLeft => "input_left",
            ElectrodeRole::InputRight => "input_right",
            ElectrodeRole::Control => "control",
            ElectrodeRole::Output => "output",
        };
        f.write_str(s)
    }
}

/// An electrode: an arc on the boundary circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeArc {
    /// 1..=8, the `U_k` label.
    pub index: u8,
    pub role: ElectrodeRole,
    #[serde(rename = "center_angle_rad")]
    pub center_angle: f64,
    #[serde(rename = "width_rad")]
    pub angular_width: f64,
}

impl ElectrodeArc {
    /// True if `angle` (radians, any branch) falls on this arc.
    pub fn contains_angle(&self, angle: f64) -> bool {
        angular_distance(angle, self.center_angle) <= 0.5 * self.angular_width
    }
}

/// Shortest distance between two angles on the circle, in `[0, pi]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Dopant wave-function decay length `a` (the hopping distance), nm.
    #[serde(rename = "a_nm")]
    pub hopping_distance_nm: f64,
    #[serde(rename = "T_K")]
    pub temperature_k: f64,
    #[serde(rename = "eps_r")]
    pub relative_permittivity: f64,
    #[serde(rename = "nu0_per_s")]
    pub attempt_frequency: f64,
    /// Standard deviation of the Gaussian site-energy disorder, eV.
    #[serde(rename = "sigma_eV")]
    pub disorder_sigma_ev: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            hopping_distance_nm: 5.0,
            temperature_k: 77.0,
            relative_permittivity: 12.0,
            attempt_frequency: 1e12,
            disorder_sigma_ev: 0.1,
        }
    }
}

impl MaterialParams {
    fn positive_fields(&self) -> [(&'static str, f64); 5] {
        [
            ("a_nm", self.hopping_distance_nm),
            ("T_K", self.temperature_k),
            ("eps_r", self.relative_permittivity),
            ("nu0_per_s", self.attempt_frequency),
            ("sigma_eV", self.disorder_sigma_ev),
        ]
    }
}

/// The standard eight-electrode layout.
pub fn default_electrodes() -> Vec<ElectrodeArc> {
    use ElectrodeRole::*;
    // (index, role, multiple of pi/4)
    let table = [
        (8, Output, 0.0),
        (6, Control, 1.0),
        (4, Control, 2.0),
        (3, InputLeft, 3.0),
        (1, Control, 4.0),
        (2, InputRight, 5.0),
        (5, Control, 6.0),
        (7, Control, 7.0),
    ];
    let mut arcs: Vec<ElectrodeArc> = table
        .iter()
        .map(|&(index, role, k)| ElectrodeArc { index, role, center_angle: k * FRAC_PI_4, angular_width: 0.2 })
        .collect();
    arcs.sort_by_key(|e| e.index);
    arcs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceConfig {
    pub radius_nm: f64,
    pub n_dopants: usize,
    pub n_counterdopants: usize,
    /// Minimum distance between any two (counter)dopants, nm.
    pub min_spacing_nm: f64,
    /// Placement attempts per point before giving up.
    pub max_attempts: usize,
    pub electrodes: Vec<ElectrodeArc>,
    pub material: MaterialParams,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            radius_nm: 75.0,
            n_dopants: 200,
            n_counterdopants: 3,
            min_spacing_nm: 0.5,
            max_attempts: 10_000,
            electrodes: default_electrodes(),
            material: MaterialParams::default(),
        }
    }
}

impl DeviceConfig {
    fn check(&self) -> Result<(), DeviceError> {
        let bad = |m: String| Err(DeviceError::InvalidConfig(m));
        if !(self.radius_nm > 0.0) {
            return bad(format!("radius must be positive, got {}", self.radius_nm));
        }
        if self.n_dopants == 0 {
            return bad("at least one dopant is required".into());
        }
        if self.n_counterdopants == 0 {
            return bad("at least one counterdopant is required (the neutral system needs a carrier)".into());
        }
        if !(self.min_spacing_nm >= 0.0) {
            return bad("minimum spacing must be non-negative".into());
        }
        if self.electrodes.is_empty() {
            return bad("no electrodes".into());
        }
        for (name, v) in self.material.positive_fields() {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("material parameter {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// The physical instance: geometry, disorder and material.
///
/// Immutable once built; share it by reference (or `Arc`) across replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceGeometry {
    pub radius_nm: f64,
    pub dopants: Vec<Point>,
    pub counterdopants: Vec<Point>,
    #[serde(rename = "disorder_eV")]
    pub disorder_ev: Vec<f64>,
    pub electrodes: Vec<ElectrodeArc>,
    pub material: MaterialParams,
}

/// Builds a random device: points uniform in the disc by rejection sampling
/// on the circumscribing square (dopants first, then counterdopants), then
/// one Gaussian `N(0, sigma)` disorder energy per dopant.
pub fn generate_device(seed: u64, config: &DeviceConfig) -> Result<DeviceGeometry, DeviceError> {
    config.check()?;
    let mut rng = seeding::stream(seed, Purpose::Device, 0);
    let r = config.radius_nm;
    let mut points: Vec<Point> = Vec::with_capacity(config.n_dopants + config.n_counterdopants);
    let min_sq = config.min_spacing_nm * config.min_spacing_nm;

    let counts = [("dopant", config.n_dopants), ("counterdopant", config.n_counterdopants)];
    for (what, count) in counts {
        for placed in 0..count {
            let mut attempts = 0;
            loop {
                if attempts == config.max_attempts {
                    return Err(DeviceError::PlacementFailed {
                        what,
                        placed,
                        spacing_nm: config.min_spacing_nm,
                        attempts,
                    });
                }
                attempts += 1;
                let x = r * (2.0 * rng.random::<f64>() - 1.0);
                let y = r * (2.0 * rng.random::<f64>() - 1.0);
                if x * x + y * y >= r * r {
                    continue;
                }
                if points.iter().any(|p| dist_sq(*p, [x, y]) < min_sq) {
                    continue;
                }
                points.push([x, y]);
                break;
            }
        }
    }
    let counterdopants = points.split_off(config.n_dopants);

    let normal =
        Normal::new(0.0, config.material.disorder_sigma_ev).map_err(|e| DeviceError::InvalidConfig(e.to_string()))?;
    let disorder_ev = (0..config.n_dopants).map(|_| normal.sample(&mut rng)).collect();

    Ok(DeviceGeometry {
        radius_nm: r,
        dopants: points,
        counterdopants,
        disorder_ev,
        electrodes: config.electrodes.clone(),
        material: config.material,
    })
}

#[inline]
pub(crate) fn dist_sq(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

#[inline]
pub(crate) fn dist(a: Point, b: Point) -> f64 {
    dist_sq(a, b).sqrt()
}

/// A single broken invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    OutsideDomain { what: &'static str, index: usize, radius_nm: f64 },
    TooClose { a: usize, b: usize, distance_nm: f64 },
    DisorderLength { dopants: usize, disorder: usize },
    CountMismatch { what: &'static str, expected: usize, found: usize },
    NoCarriers,
    ElectrodeOverlap { a: u8, b: u8 },
    RoleCount { role: ElectrodeRole, expected: usize, found: usize },
    ElectrodeIndex { index: u8 },
    DuplicateIndex { index: u8 },
    BadArc { index: u8 },
    Material { field: &'static str, value: f64 },
    Radius(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutsideDomain { what, index, radius_nm } => {
                write!(f, "outside domain: {what} {index} at r = {radius_nm} nm")
            }
            Violation::TooClose { a, b, distance_nm } => {
                write!(f, "spacing: points {a} and {b} are {distance_nm} nm apart")
            }
            Violation::DisorderLength { dopants, disorder } => {
                write!(f, "disorder: {disorder} energies for {dopants} dopants")
            }
            Violation::CountMismatch { what, expected, found } => {
                write!(f, "count: expected {expected} {what}s, found {found}")
            }
            Violation::NoCarriers => write!(f, "count: no counterdopants"),
            Violation::ElectrodeOverlap { a, b } => write!(f, "electrode overlap: {a} and {b}"),
            Violation::RoleCount { role, expected, found } => {
                write!(f, "electrode roles: expected {expected} {role}, found {found}")
            }
            Violation::ElectrodeIndex { index } => write!(f, "electrode index {index} outside 1..=8"),
            Violation::DuplicateIndex { index } => write!(f, "electrode index {index} used twice"),
            Violation::BadArc { index } => write!(f, "electrode {index} has an invalid arc"),
            Violation::Material { field, value } => {
                write!(f, "material: {field} must be positive, got {value}")
            }
            Violation::Radius(r) => write!(f, "radius must be positive, got {r}"),
        }
    }
}

/// Validation outcome; empty iff the device is valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Optional extra checks for [`validate_device_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRules {
    pub min_spacing_nm: f64,
    pub expected_dopants: Option<usize>,
    pub expected_counterdopants: Option<usize>,
}

impl Default for ValidationRules {
    fn default() -> Self {
        Self {
            min_spacing_nm: DeviceConfig::default().min_spacing_nm,
            expected_dopants: None,
            expected_counterdopants: None,
        }
    }
}

impl ValidationRules {
    pub fn for_config(config: &DeviceConfig) -> Self {
        Self {
            min_spacing_nm: config.min_spacing_nm,
            expected_dopants: Some(config.n_dopants),
            expected_counterdopants: Some(config.n_counterdopants),
        }
    }
}

/// Checks every geometry invariant with the default spacing rule.
pub fn validate_device(geometry: &DeviceGeometry) -> ValidationReport {
    validate_device_with(geometry, &ValidationRules::default())
}

pub fn validate_device_with(g: &DeviceGeometry, rules: &ValidationRules) -> ValidationReport {
    let mut out = Vec::new();
    if !(g.radius_nm > 0.0) {
        out.push(Violation::Radius(g.radius_nm));
    }

    for (what, pts) in [("dopant", &g.dopants), ("counterdopant", &g.counterdopants)] {
        for (index, p) in pts.iter().enumerate() {
            let r = dist(*p, [0.0, 0.0]);
            if !(r < g.radius_nm) {
                out.push(Violation::OutsideDomain { what, index, radius_nm: r });
            }
        }
    }

    let all: Vec<Point> = g.dopants.iter().chain(&g.counterdopants).copied().collect();
    let min_sq = rules.min_spacing_nm * rules.min_spacing_nm;
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let d2 = dist_sq(all[i], all[j]);
            if d2 < min_sq {
                out.push(Violation::TooClose { a: i, b: j, distance_nm: d2.sqrt() });
            }
        }
    }

    if g.disorder_ev.len() != g.dopants.len() {
        out.push(Violation::DisorderLength { dopants: g.dopants.len(), disorder: g.disorder_ev.len() });
    }
    if g.counterdopants.is_empty() {
        out.push(Violation::NoCarriers);
    }
    if let Some(n) = rules.expected_dopants {
        if n != g.dopants.len() {
            out.push(Violation::CountMismatch { what: "dopant", expected: n, found: g.dopants.len() });
        }
    }
    if let Some(n) = rules.expected_counterdopants {
        if n != g.counterdopants.len() {
            out.push(Violation::CountMismatch { what: "counterdopant", expected: n, found: g.counterdopants.len() });
        }
    }

    let mut seen = [false; 9];
    for e in &g.electrodes {
        if !(1..=8).contains(&e.index) {
            out.push(Violation::ElectrodeIndex { index: e.index });
        } else if std::mem::replace(&mut seen[e.index as usize], true) {
            out.push(Violation::DuplicateIndex { index: e.index });
        }
        if !(e.angular_width > 0.0) || !e.center_angle.is_finite() {
            out.push(Violation::BadArc { index: e.index });
        }
    }
    for i in 0..g.electrodes.len() {
        for j in i + 1..g.electrodes.len() {
            let (a, b) = (&g.electrodes[i], &g.electrodes[j]);
            let gap = angular_distance(a.center_angle, b.center_angle);
            if gap < 0.5 * (a.angular_width + b.angular_width) {
                out.push(Violation::ElectrodeOverlap { a: a.index, b: b.index });
            }
        }
    }
    for (role, expected) in [
        (ElectrodeRole::Output, 1),
        (ElectrodeRole::InputLeft, 1),
        (ElectrodeRole::InputRight, 1),
        (ElectrodeRole::Control, 5),
    ] {
        let found = g.electrodes.iter().filter(|e| e.role == role).count();
        if found != expected {
            out.push(Violation::RoleCount { role, expected, found });
        }
    }

    for (field, value) in g.material.positive_fields() {
        if !(value > 0.0) || !value.is_finite() {
            out.push(Violation::Material { field, value });
        }
    }
    ValidationReport { violations: out }
}

impl DeviceGeometry {
    pub fn electrode(&self, index: u8) -> Result<&ElectrodeArc, DeviceError> {
        self.electrodes.iter().find(|e| e.index == index).ok_or(DeviceError::UnknownElectrode(index))
    }

    /// Position of electrode `index` in [`Self::electrodes`].
    pub fn electrode_slot(&self, index: u8) -> Result<usize, DeviceError> {
        self.electrodes.iter().position(|e| e.index == index).ok_or(DeviceError::UnknownElectrode(index))
    }

    /// Slot of the (first) electrode with the given role.
    pub fn slot_of_role(&self, role: ElectrodeRole) -> Option<usize> {
        self.electrodes.iter().position(|e| e.role == role)
    }

    /// Control electrode indices in ascending order (U1, U4, U5, U6, U7 for
    /// the standard layout).
    pub fn control_indices(&self) -> Vec<u8> {
        let mut v: Vec<u8> =
            self.electrodes.iter().filter(|e| e.role == ElectrodeRole::Control).map(|e| e.index).collect();
        v.sort_unstable();
        v
    }

    pub fn to_json(&self) -> Result<String, DeviceError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, DeviceError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), DeviceError> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, DeviceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 (hex) of the full serialized device.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("device serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// SHA-256 (hex) over what the electrostatics depends on: the radius,
    /// the dopant coordinates and the electrode arcs.
    pub fn geometry_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.radius_nm.to_le_bytes());
        for p in &self.dopants {
            h.update(p[0].to_le_bytes());
            h.update(p[1].to_le_bytes());
        }
        for e in &self.electrodes {
            h.update([e.index]);
            h.update(e.center_angle.to_le_bytes());
            h.update(e.angular_width.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Point on the boundary circle at the centre of electrode `index`. Hop
/// distances between the electrode and dopants are measured from here.
pub fn electrode_anchor(geometry: &DeviceGeometry, index: u8) -> Result<Point, DeviceError> {
    let e = geometry.electrode(index)?;
    Ok(anchor_point(geometry.radius_nm, e.center_angle))
}

pub(crate) fn anchor_point(radius: f64, angle: f64) -> Point {
    [radius * angle.cos(), radius * angle.sin()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn small_config() -> DeviceConfig {
        DeviceConfig { n_dopants: 200, n_counterdopants: 3, ..Default::default() }
    }

    #[test]
    fn full_size_device_lies_inside_disc() {
        let g = generate_device(1, &small_config()).unwrap();
        assert_eq!(g.dopants.len(), 200);
        assert_eq!(g.counterdopants.len(), 3);
        for p in g.dopants.iter().chain(&g.counterdopants) {
            assert!(dist(*p, [0.0, 0.0]) < 75.0);
        }
        assert!(validate_device_with(&g, &ValidationRules::for_config(&small_config())).is_valid());
    }

    #[test]
    fn zero_counterdopants_is_a_config_error() {
        let cfg = DeviceConfig { n_counterdopants: 0, ..Default::default() };
        assert!(matches!(generate_device(5, &cfg), Err(DeviceError::InvalidConfig(_))));
    }

    #[test]
    fn same_seed_same_device() {
        let a = generate_device(1, &small_config()).unwrap();
        let b = generate_device(1, &small_config()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = generate_device(2, &small_config()).unwrap();
        assert_ne!(a.dopants, c.dopants);
    }

    #[test]
    fn impossible_spacing_is_rejected() {
        let cfg = DeviceConfig {
            radius_nm: 5.0,
            n_dopants: 50,
            min_spacing_nm: 4.0,
            max_attempts: 200,
            ..Default::default()
        };
        assert!(matches!(generate_device(1, &cfg), Err(DeviceError::PlacementFailed { .. })));
    }

    #[test]
    fn validation_flags_outside_point_and_overlap() {
        let mut g = generate_device(3, &small_config()).unwrap();
        assert!(validate_device(&g).is_valid());
        g.dopants[0] = [76.0, 0.0];
        let rep = validate_device(&g);
        assert!(rep.violations.iter().any(|v| matches!(v, Violation::OutsideDomain { index: 0, .. })));
        assert!(rep.to_string().contains("outside domain"));

        let mut g = generate_device(3, &small_config()).unwrap();
        g.electrodes[0].center_angle = g.electrodes[1].center_angle + 0.05;
        let rep = validate_device(&g);
        assert!(rep.to_string().contains("electrode overlap"));
    }

    #[test]
    fn validation_flags_roles_and_disorder() {
        let mut g = generate_device(3, &small_config()).unwrap();
        g.electrodes[0].role = ElectrodeRole::Output;
        g.disorder_ev.pop();
        let rep = validate_device(&g);
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RoleCount { role: ElectrodeRole::Output, found: 2, .. })));
        assert!(rep.violations.iter().any(|v| matches!(v, Violation::DisorderLength { .. })));
    }

    #[test]
    fn anchors_sit_on_the_circle() {
        let mut g = generate_device(1, &small_config()).unwrap();
        let pts = [(0.0, [75.0, 0.0]), (PI / 2.0, [0.0, 75.0]), (PI, [-75.0, 0.0])];
        for (angle, expect) in pts {
            g.electrodes[0].center_angle = angle;
            let p = electrode_anchor(&g, g.electrodes[0].index).unwrap();
            assert_abs_diff_eq!(p[0], expect[0], epsilon = 1e-12);
            assert_abs_diff_eq!(p[1], expect[1], epsilon = 1e-12);
        }
        assert!(matches!(electrode_anchor(&g, 9), Err(DeviceError::UnknownElectrode(9))));
    }

    #[test]
    fn default_layout_roles_and_mirror_symmetry() {
        let arcs = default_electrodes();
        let by_index = |i: u8| arcs.iter().find(|e| e.index == i).unwrap();
        assert_eq!(by_index(8).role, ElectrodeRole::Output);
        assert_eq!(by_index(2).role, ElectrodeRole::InputRight);
        assert_eq!(by_index(3).role, ElectrodeRole::InputLeft);
        for (a, b) in [(2, 3), (4, 5), (6, 7)] {
            let s = by_index(a).center_angle + by_index(b).center_angle;
            assert_abs_diff_eq!(s.rem_euclid(TAU), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn json_uses_unit_annotated_fields() {
        let g = generate_device(1, &DeviceConfig { n_dopants: 3, n_counterdopants: 1, ..Default::default() }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&g.to_json().unwrap()).unwrap();
        for key in ["radius_nm", "dopants", "counterdopants", "disorder_eV", "electrodes", "material"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        for key in ["a_nm", "T_K", "eps_r", "nu0_per_s", "sigma_eV"] {
            assert!(v["material"].get(key).is_some(), "missing material.{key}");
        }
        for key in ["index", "role", "center_angle_rad", "width_rad"] {
            assert!(v["electrodes"][0].get(key).is_some());
        }
        assert_eq!(DeviceGeometry::from_json(&g.to_json().unwrap()).unwrap(), g);
    }
}
