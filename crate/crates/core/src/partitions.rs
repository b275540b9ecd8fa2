//! Nested partition sequences for Riemann-type covariation sums and the
//! ratio condition that keeps those sums from exploding near `t = 0`.
//!
//! The ratio constant is `M = sup_n sup t_{i+1} / t_i`, taken over points with
//! `t_i > 0` only (the quotient is undefined at `t_0 = 0`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute mesh threshold available through [`ValidationOptions`].
pub const DEFAULT_MESH_TOLERANCE: f64 = 1.0 / (1u64 << 20) as f64;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    points: Vec<f64>,
}

impl Partition {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points[0] != 0.0 || *points.last().unwrap() != 1.0 {
            return Err(Error::InvalidPartition("must contain 0 and 1 as endpoints".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPartition("points must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn mesh(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Largest `t_{i+1} / t_i` over `t_i > 0`.
    pub fn ratio_constant(&self) -> f64 {
        self.points
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .fold(1.0, f64::max)
    }

    /// Insert the midpoint of every interval.
    pub fn bisect(&self) -> Self {
        let mut points = Vec::with_capacity(2 * self.points.len() - 1);
        for w in self.points.windows(2) {
            points.push(w[0]);
            points.push(0.5 * (w[0] + w[1]));
        }
        points.push(1.0);
        Self { points }
    }

    pub fn to_csv_line(&self) -> String {
        self.points.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
    }

    pub fn from_csv_line(line: &str) -> Result<Self> {
        let points = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionKind {
    /// `{i / 2^n}`.
    Uniform,
    /// Dyadic skeleton `{0} U {2^{-j}}` with each block refined by bisection.
    GeometricDyadic,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSequence {
    family: Vec<Partition>,
    kind: PartitionKind,
    ratio_constant: f64,
    mesh_profile: Vec<f64>,
}

impl PartitionSequence {
    pub fn custom(family: Vec<Partition>) -> Result<Self> {
        Self::from_family(family, PartitionKind::Custom)
    }

    fn from_family(family: Vec<Partition>, kind: PartitionKind) -> Result<Self> {
        if family.is_empty() {
            return Err(Error::InvalidPartition("empty family".into()));
        }
        let ratio_constant = family.iter().map(Partition::ratio_constant).fold(1.0, f64::max);
        let mesh_profile = family.iter().map(Partition::mesh).collect();
        Ok(Self {
            family,
            kind,
            ratio_constant,
            mesh_profile,
        })
    }

    pub fn family(&self) -> &[Partition] {
        &self.family
    }

    pub fn finest(&self) -> &Partition {
        self.family.last().unwrap()
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn ratio_constant(&self) -> f64 {
        self.ratio_constant
    }

    pub fn mesh_profile(&self) -> &[f64] {
        &self.mesh_profile
    }

    /// Append the bisection of the finest partition.
    pub fn refine_bisect(&self) -> Self {
        let mut family = self.family.clone();
        family.push(self.finest().bisect());
        Self::from_family(family, self.kind).expect("nonempty")
    }

    /// Keep only the members whose mesh is at least `min_mesh`.
    pub fn truncate_to_mesh(&self, min_mesh: f64) -> Result<Self> {
        let family: Vec<Partition> = self
            .family
            .iter()
            .filter(|p| p.mesh() >= min_mesh * (1.0 - 1e-12))
            .cloned()
            .collect();
        Self::from_family(family, self.kind)
    }

    /// One partition per line.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for p in &self.family {
            s.push_str(&p.to_csv_line());
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let family = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(Partition::from_csv_line)
            .collect::<Result<Vec<_>>>()?;
        Self::custom(family)
    }
}

fn uniform_partition(n: u32) -> Partition {
    let m = 1u64 << n;
    Partition {
        points: (0..=m).map(|i| i as f64 / m as f64).collect(),
    }
}

/// Block `[2^{-j-1}, 2^{-j}]`, `j < n`, is cut into `2^{n-1-floor(j/2)}` equal
/// pieces, so the mesh is `2^{-n}` (attained on `[1/2, 1]`) while pieces shrink
/// geometrically towards 0.
fn geometric_dyadic_partition(n: u32) -> Partition {
    let mut points = vec![0.0];
    for j in (0..n).rev() {
        let lo = 0.5f64.powi(j as i32 + 1);
        let hi = 0.5f64.powi(j as i32);
        let pieces = 1u64 << (n - 1 - j / 2);
        for k in 0..pieces {
            points.push(lo + (hi - lo) * k as f64 / pieces as f64);
        }
    }
    points.push(1.0);
    Partition { points }
}

/// Members `n = 1..=depth` of the requested family.
pub fn make_partition_sequence(kind: PartitionKind, depth: u32) -> Result<PartitionSequence> {
    if depth == 0 {
        return Err(Error::InvalidPartition("depth must be at least 1".into()));
    }
    if depth > 40 {
        return Err(Error::InvalidPartition(format!("depth {depth} too large")));
    }
    let family = match kind {
        PartitionKind::Uniform => (1..=depth).map(uniform_partition).collect(),
        PartitionKind::GeometricDyadic => (1..=depth).map(geometric_dyadic_partition).collect(),
        PartitionKind::Custom => return Err(Error::InvalidPartition("use PartitionSequence::custom".into())),
    };
    PartitionSequence::from_family(family, kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ValidationOptions {
    /// When set, the finest mesh must also be at most this value.
    pub mesh_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ratio_constant: f64,
    pub cap: f64,
    pub final_mesh: f64,
    pub mesh_monotone: bool,
    pub mesh_vanishing: bool,
    pub passes: bool,
}

pub fn validate_condition_m(seq: &PartitionSequence, cap: f64) -> Result<ValidationReport> {
    validate_condition_m_with(seq, cap, ValidationOptions::default())
}

/// Meshes must be strictly decreasing along the family (a single partition is
/// accepted), the ratio constant must not exceed `cap`, and optionally the
/// finest mesh must reach `mesh_tolerance`.
pub fn validate_condition_m_with(
    seq: &PartitionSequence,
    cap: f64,
    options: ValidationOptions,
) -> Result<ValidationReport> {
    let ratio = seq.ratio_constant;
    if !(ratio <= cap) {
        return Err(Error::RatioUnbounded { ratio, cap });
    }
    let meshes = &seq.mesh_profile;
    let final_mesh = *meshes.last().unwrap();
    let mesh_monotone = meshes.windows(2).all(|w| w[1] < w[0]);
    let below_tol = options.mesh_tolerance.is_none_or(|tol| final_mesh <= tol);
    let mesh_vanishing = mesh_monotone && below_tol;
    if !mesh_vanishing {
        return Err(Error::MeshNotVanishing { last_mesh: final_mesh });
    }
    Ok(ValidationReport {
        ratio_constant: ratio,
        cap,
        final_mesh,
        mesh_monotone,
        mesh_vanishing,
        passes: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_depth_four() {
        let seq = make_partition_sequence(PartitionKind::Uniform, 4).unwrap();
        let p = seq.finest();
        assert_eq!(p.points().len(), 17);
        assert_eq!(p.points()[1], 1.0 / 16.0);
        assert_eq!(p.mesh(), 1.0 / 16.0);
        assert_eq!(seq.ratio_constant(), 2.0);
    }

    #[test]
    fn geometric_dyadic_skeleton_ratio() {
        let seq = make_partition_sequence(PartitionKind::GeometricDyadic, 1).unwrap();
        assert_eq!(seq.finest().points(), &[0.0, 0.5, 1.0]);
        let seq = make_partition_sequence(PartitionKind::GeometricDyadic, 12).unwrap();
        assert_eq!(seq.ratio_constant(), 2.0);
        let finest = seq.finest();
        assert_eq!(finest.mesh(), 1.0 / 4096.0);
        // the dyadic skeleton is contained in every member
        for j in 0..=12 {
            assert!(finest.points().contains(&0.5f64.powi(j)));
        }
        assert!(seq.mesh_profile().windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn uniform_depth_six_passes() {
        let seq = make_partition_sequence(PartitionKind::Uniform, 6).unwrap();
        let r = validate_condition_m(&seq, 4.0).unwrap();
        assert!(r.passes);
        assert_eq!(r.ratio_constant, 2.0);
    }

    #[test]
    fn absolute_mesh_tolerance_is_optional() {
        let seq = make_partition_sequence(PartitionKind::Uniform, 6).unwrap();
        let opts = ValidationOptions {
            mesh_tolerance: Some(DEFAULT_MESH_TOLERANCE),
        };
        assert!(matches!(
            validate_condition_m_with(&seq, 4.0, opts),
            Err(Error::MeshNotVanishing { .. })
        ));
        let seq = make_partition_sequence(PartitionKind::Uniform, 20).unwrap();
        assert!(validate_condition_m_with(&seq, 4.0, opts).is_ok());
    }

    #[test]
    fn identical_partitions_do_not_vanish() {
        let p = uniform_partition(3);
        let seq = PartitionSequence::custom(vec![p.clone(), p.clone(), p]).unwrap();
        assert!(matches!(
            validate_condition_m(&seq, 4.0),
            Err(Error::MeshNotVanishing { .. })
        ));
    }

    #[test]
    fn exploding_ratio_is_rejected() {
        let family = (1..=5)
            .map(|n| Partition::new(vec![0.0, 4f64.powi(-n), 0.5, 1.0]).unwrap())
            .collect();
        let seq = PartitionSequence::custom(family).unwrap();
        assert_eq!(seq.ratio_constant(), 2f64.powi(9));
        assert!(matches!(
            validate_condition_m(&seq, 4.0),
            Err(Error::RatioUnbounded { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let seq = make_partition_sequence(PartitionKind::GeometricDyadic, 5).unwrap();
        let back = PartitionSequence::from_csv(&seq.to_csv()).unwrap();
        assert_eq!(back.family(), seq.family());
    }

    proptest! {
        #[test]
        fn generated_sequences_pass(depth in 1u32..14, geometric in any::<bool>()) {
            let kind = if geometric { PartitionKind::GeometricDyadic } else { PartitionKind::Uniform };
            let seq = make_partition_sequence(kind, depth).unwrap();
            prop_assert!(validate_condition_m(&seq, 2.0).is_ok());
        }

        #[test]
        fn bisection_keeps_uniform_admissible(depth in 1u32..10, extra in 1usize..4) {
            let mut seq = make_partition_sequence(PartitionKind::Uniform, depth).unwrap();
            for _ in 0..extra {
                seq = seq.refine_bisect();
            }
            prop_assert!(seq.ratio_constant() <= 2.0);
            prop_assert!(validate_condition_m(&seq, 2.0).is_ok());
        }
    }
}
