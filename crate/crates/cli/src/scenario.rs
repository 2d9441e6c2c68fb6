//! Scenario files: one JSON document per run, every block optional.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use mzlab::bragg::{design_pulse, dimensionless_from_physical, AngularSpread, GratingConfig, PulseProfile, PulseTarget};
use mzlab::interferometer::{Apodization, InterferometerGeometry, SlitMode, SlitVariable};
use mzlab::magnetic::{AveragingMode, DipoleSource, FieldProfile, PathSeparation};
use mzlab::physics::{BeamProfile, LaserField, Species, VelocityDistribution};
use mzlab::signal::BackgroundMode;

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub description: Option<String>,
    pub species: SpeciesName,
    pub seed: u64,
    pub beam: BeamBlock,
    pub geometry: InterferometerGeometry,
    pub gratings: GratingsBlock,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpeciesName(pub String);

impl Default for SpeciesName {
    fn default() -> Self {
        SpeciesName("Li7".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamBlock {
    pub mean_velocity_m_per_s: f64,
    /// alpha / u.
    pub relative_spread: f64,
    pub quadrature_nodes: usize,
}

impl Default for BeamBlock {
    fn default() -> Self {
        BeamBlock { mean_velocity_m_per_s: 1060.0, relative_spread: 0.133, quadrature_nodes: 9 }
    }
}

impl BeamBlock {
    pub fn distribution(&self) -> mzlab::Result<VelocityDistribution> {
        if self.relative_spread == 0.0 {
            return VelocityDistribution::new(self.mean_velocity_m_per_s, 0.0, 1);
        }
        VelocityDistribution::with_relative_spread(self.mean_velocity_m_per_s, self.relative_spread, self.quadrature_nodes)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserBlock {
    #[serde(rename = "power_mW")]
    pub power_mw: f64,
    pub waist_m: f64,
    #[serde(rename = "detuning_GHz")]
    pub detuning_ghz: f64,
    pub profile: BeamProfile,
}

impl LaserBlock {
    pub fn field(&self, wavelength: f64) -> LaserField {
        LaserField {
            wavelength,
            detuning: 2.0 * PI * self.detuning_ghz * 1e9,
            power: self.power_mw * 1e-3,
            waist: self.waist_m,
            profile: self.profile,
        }
    }
}

/// How the three standing waves are specified.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Pulses {
    /// Splitter, mirror, splitter for the given duration.
    Designed { duration: f64 },
    Dimensionless { depth: [f64; 3], duration: [f64; 3] },
    Laser { beams: [LaserBlock; 3] },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GratingsBlock {
    pub order: i32,
    pub pulses: Pulses,
    pub tilt_z_rad: [f64; 3],
    pub x_position_m: [f64; 3],
}

impl Default for GratingsBlock {
    fn default() -> Self {
        GratingsBlock { order: 1, pulses: Pulses::Designed { duration: 3.747 }, tilt_z_rad: [0.0; 3], x_position_m: [0.0; 3] }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Experiment {
    pub diffract_scan: DiffractScan,
    pub fringes: Fringes,
    pub tilt_scan: TiltScan,
    pub mismatch_scan: MismatchScan,
    pub slit_scan: SlitScan,
    pub magnetic_scan: MagneticScan,
    pub fit: FitBlock,
    pub design_pulse: DesignBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffractScan {
    pub theta_start_rad: f64,
    pub theta_stop_rad: f64,
    pub points: usize,
    /// Which mirror (1, 2 or 3) supplies q and tau.
    pub grating: usize,
    pub profile: PulseProfile,
    /// Midpoints per slit for the collimation angles; 0 for a parallel beam.
    pub collimation_nodes: usize,
}

impl Default for DiffractScan {
    fn default() -> Self {
        DiffractScan {
            theta_start_rad: -50e-6,
            theta_stop_rad: 300e-6,
            points: 351,
            grating: 2,
            profile: PulseProfile::Square,
            collimation_nodes: 6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fringes {
    /// When both are given they fix the fringe model; otherwise it is computed
    /// from the gratings with `brightness_counts_per_s`.
    pub mean_intensity_counts_per_s: Option<f64>,
    pub visibility: Option<f64>,
    pub brightness_counts_per_s: f64,
    pub background_counts_per_s: f64,
    pub x3_start_m: f64,
    /// Length of the sweep in fringe periods.
    pub fringes: f64,
    pub points: usize,
    pub counting_time_s: f64,
    pub background_bins: usize,
}

impl Default for Fringes {
    fn default() -> Self {
        Fringes {
            mean_intensity_counts_per_s: None,
            visibility: None,
            brightness_counts_per_s: 30000.0,
            background_counts_per_s: 2000.0,
            x3_start_m: 0.0,
            fringes: 4.0,
            points: 200,
            counting_time_s: 0.1,
            background_bins: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TiltScan {
    /// Mirror (1, 2 or 3) that is rotated; the others keep their scenario tilts.
    pub grating: usize,
    pub theta_start_rad: f64,
    pub theta_stop_rad: f64,
    pub points: usize,
    pub apodization: Apodization,
    pub visibility_scale: f64,
}

impl Default for TiltScan {
    fn default() -> Self {
        TiltScan {
            grating: 3,
            theta_start_rad: -200e-6,
            theta_stop_rad: 200e-6,
            points: 161,
            apodization: Apodization::Flat,
            visibility_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MismatchScan {
    pub delta_start_m: f64,
    pub delta_stop_m: f64,
    pub points: usize,
    /// Mismatch of best visibility.
    pub offset_m: f64,
    pub visibility_scale: f64,
}

impl Default for MismatchScan {
    fn default() -> Self {
        MismatchScan { delta_start_m: -0.02, delta_stop_m: 0.03, points: 101, offset_m: 0.0, visibility_scale: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlitScan {
    pub variable: SlitVariable,
    pub width_start_m: f64,
    pub width_stop_m: f64,
    pub points: usize,
    pub mode: SlitMode,
    /// Counts per second per metre of source width per metre of collimator width.
    pub brightness_counts_per_s_m2: f64,
}

impl Default for SlitScan {
    fn default() -> Self {
        SlitScan {
            variable: SlitVariable::Detector,
            width_start_m: 0.0,
            width_stop_m: 100e-6,
            points: 26,
            mode: SlitMode::default(),
            brightness_counts_per_s_m2: 1e14,
        }
    }
}

/// Field sources for the gradient phase; the species and geometry come from
/// the scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldBlock {
    pub background: FieldProfile,
    pub dipole: DipoleSource,
    pub dipole_distance_m: f64,
    pub separation: PathSeparation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RevivalNoise {
    pub mean_intensity_counts_per_s: f64,
    pub background_counts_per_s: f64,
    /// Fringe points per current setting.
    pub points: usize,
    pub counting_time_s: f64,
    pub background_bins: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MagneticScan {
    #[serde(rename = "current_start_A")]
    pub current_start: f64,
    #[serde(rename = "current_stop_A")]
    pub current_stop: f64,
    pub points: usize,
    /// Visibility without field.
    pub visibility_scale: f64,
    pub averaging: AveragingMode,
    /// Phase per ampere at the mean velocity; computed from `field` when absent.
    #[serde(rename = "k_phi_rad_per_A")]
    pub k_phi: Option<f64>,
    pub field: Option<FieldBlock>,
    /// Simulate and fit a fringe trace at every current instead of reporting
    /// the model value.
    pub noise: Option<RevivalNoise>,
}

impl Default for MagneticScan {
    fn default() -> Self {
        MagneticScan {
            current_start: 0.0,
            current_stop: 8.0,
            points: 81,
            visibility_scale: 0.845,
            averaging: AveragingMode::ClosedForm,
            k_phi: Some(1.0),
            field: None,
            noise: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitBlock {
    pub phase_degree: usize,
    pub background: BackgroundMode,
    /// `e_0 / e_D` for the mismatch law; taken from the geometry when absent.
    pub width_ratio: Option<f64>,
}

impl Default for FitBlock {
    fn default() -> Self {
        FitBlock { phase_degree: 2, background: BackgroundMode::Record, width_ratio: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignLaser {
    pub waist_m: f64,
    #[serde(rename = "detuning_GHz")]
    pub detuning_ghz: f64,
    pub profile: BeamProfile,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignBlock {
    /// Interaction duration; the gratings block supplies it when absent.
    pub duration: Option<f64>,
    /// Beam shape used to turn depths into powers.
    pub laser: Option<DesignLaser>,
}

/// Apply `key=value` overrides. Keys are dotted paths; numeric segments index
/// arrays. Values are parsed as JSON and fall back to plain strings.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<(), CliError> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("--set '{item}': expected key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut node = &mut *doc;
        let parts: Vec<&str> = key.split('.').collect();
        for (depth, part) in parts.iter().enumerate() {
            if part.is_empty() {
                return Err(CliError::Validation(format!("--set '{key}': empty path segment")));
            }
            let last = depth + 1 == parts.len();
            node = match node {
                Value::Array(items) => {
                    let i: usize = part
                        .parse()
                        .map_err(|_| CliError::Validation(format!("--set '{key}': '{part}' is not an array index")))?;
                    let len = items.len();
                    items
                        .get_mut(i)
                        .ok_or_else(|| CliError::Validation(format!("--set '{key}': index {i} out of range (length {len})")))?
                }
                Value::Object(map) => map.entry(part.to_string()).or_insert_with(|| if last { Value::Null } else { Value::Object(Default::default()) }),
                Value::Null => {
                    *node = Value::Object(Default::default());
                    node.as_object_mut().unwrap().entry(part.to_string()).or_insert(Value::Null)
                }
                _ => return Err(CliError::Validation(format!("--set '{key}': '{part}' addresses inside a scalar"))),
            };
        }
        *node = value;
    }
    Ok(())
}

/// Deserialize with the JSON path of the first offending field in the error.
pub fn parse(doc: Value) -> Result<Scenario, CliError> {
    let s: Scenario = serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        CliError::Validation(format!("scenario field '{path}': {}", e.into_inner()))
    })?;
    s.geometry.validate()?;
    Ok(s)
}

impl Scenario {
    pub fn species(&self, table: &mzlab::constants::ConstantTable) -> Result<Species, CliError> {
        Ok(table.species(&self.species.0)?.clone())
    }

    /// Depth and duration of the three mirrors at the mean velocity.
    pub fn grating_configs(&self, species: &Species) -> mzlab::Result<[GratingConfig; 3]> {
        let p = self.gratings.order;
        let u = self.beam.mean_velocity_m_per_s;
        let (depth, duration) = match &self.gratings.pulses {
            Pulses::Designed { duration } => {
                let split = design_pulse(p, *duration, PulseTarget::Splitter)?;
                let mirror = design_pulse(p, *duration, PulseTarget::Mirror)?;
                ([split, mirror, split], [*duration; 3])
            }
            Pulses::Dimensionless { depth, duration } => (*depth, *duration),
            Pulses::Laser { beams } => {
                let mut q = [0.0; 3];
                let mut tau = [0.0; 3];
                for (j, b) in beams.iter().enumerate() {
                    (q[j], tau[j]) = dimensionless_from_physical(&b.field(self.geometry.laser_wavelength), species, u)?;
                }
                (q, tau)
            }
        };
        Ok(std::array::from_fn(|j| GratingConfig {
            order: p,
            depth: depth[j],
            duration: duration[j],
            tilt_y: 0.0,
            tilt_z: self.gratings.tilt_z_rad[j],
            x_position: self.gratings.x_position_m[j],
        }))
    }

    pub fn collimation(&self, nodes: usize) -> AngularSpread {
        if nodes == 0 {
            return AngularSpread::None;
        }
        AngularSpread::Collimation {
            source_width: self.geometry.source_width,
            collimator_width: self.geometry.collimator_width,
            separation: self.geometry.collimation_length(),
            nodes,
        }
    }
}
