use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use mzlab::bragg::{
    bragg_window, design_pulse, diffraction_scan, dimensionless_from_physical, GratingConfig, PulseTarget, ScanSetup, TwoLevel,
};
use mzlab::constants::{ConstantTable, CONSTANTS_ENV};
use mzlab::interferometer::{
    enumerate_beams, mismatch_visibility, slit_scan, tilt_visibility, velocity_average, GratingAmplitudes, InterferometerGeometry,
    SlitStudy,
};
use mzlab::io::{self, Table};
use mzlab::magnetic::{averaged_visibility, extract_velocity_spread, gradient_phase, DipoleSource, MagneticScenario};
use mzlab::physics::{LaserField, Species, VelocityDistribution};
use mzlab::signal::{fit_fringes, fit_sinc, synthesize_counts, FringeFitOptions, Provenance, SincLaw, Sweep, SynthesisOptions};
use mzlab::interferometer::FringeModel;

use crate::scenario::{self, Scenario};
use crate::{Cli, CliError, Command};

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    mzlab_version: &'a str,
    seed: u64,
    inputs_sha256: String,
    constants: String,
    outputs: Vec<String>,
    scenario: &'a Scenario,
}

struct Run<'a> {
    name: &'static str,
    scenario: Scenario,
    table: ConstantTable,
    out: &'a Path,
    outputs: Vec<PathBuf>,
    extra_input: Vec<u8>,
}

impl Run<'_> {
    fn species(&self) -> Result<Species, CliError> {
        self.scenario.species(&self.table)
    }

    fn path(&mut self, file: &str) -> PathBuf {
        let p = self.out.join(file);
        self.outputs.push(p.clone());
        p
    }

    fn write_table(&mut self, file: &str, table: &Table) -> Result<(), CliError> {
        let p = self.path(file);
        table.save(&p)?;
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, file: &str, value: &T) -> Result<(), CliError> {
        let p = self.path(file);
        io::save_json(value, &p)?;
        Ok(())
    }

    fn finish(self) -> Result<(), CliError> {
        let resolved = serde_json::to_string(&self.scenario).map_err(|e| CliError::Runtime(e.to_string()))?;
        let mut h = Sha256::new();
        h.update(self.name.as_bytes());
        h.update(b"\n");
        h.update(resolved.as_bytes());
        h.update(b"\n");
        h.update(self.table.to_json().as_bytes());
        h.update(&self.extra_input);
        let manifest = Manifest {
            subcommand: self.name,
            mzlab_version: env!("CARGO_PKG_VERSION"),
            seed: self.scenario.seed,
            inputs_sha256: hex::encode(h.finalize()),
            constants: std::env::var(CONSTANTS_ENV).unwrap_or_else(|_| "built-in".into()),
            outputs: self.outputs.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect(),
            scenario: &self.scenario,
        };
        let path = self.out.join(format!("{}.manifest.json", self.name));
        io::save_json(&manifest, &path)?;
        for p in &self.outputs {
            println!("wrote {}", p.display());
        }
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn load_scenario(cli: &Cli) -> Result<Scenario, CliError> {
    let mut doc = match &cli.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read scenario {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        None => Value::Object(Default::default()),
    };
    scenario::apply_overrides(&mut doc, &cli.overrides)?;
    let mut s = scenario::parse(doc)?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn linspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if n < 2 {
        return Err(CliError::Validation("a scan needs at least 2 points".into()));
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn mirror_index(g: usize) -> Result<usize, CliError> {
    if (1..=3).contains(&g) {
        Ok(g - 1)
    } else {
        Err(CliError::Validation(format!("grating must be 1, 2 or 3, got {g}")))
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let scenario = load_scenario(cli)?;
    let table = ConstantTable::from_env()?;
    std::fs::create_dir_all(&cli.out)?;
    let name = match cli.command {
        Command::DiffractScan => "diffract_scan",
        Command::Fringes => "fringes",
        Command::TiltScan => "tilt_scan",
        Command::MismatchScan => "mismatch_scan",
        Command::SlitScan => "slit_scan",
        Command::MagneticScan => "magnetic_scan",
        Command::Fit { .. } => "fit",
        Command::DesignPulse => "design_pulse",
        Command::Constants => "constants",
    };
    let mut run = Run { name, scenario, table, out: &cli.out, outputs: Vec::new(), extra_input: Vec::new() };
    match &cli.command {
        Command::DiffractScan => diffract(&mut run)?,
        Command::Fringes => fringes(&mut run)?,
        Command::TiltScan => tilt(&mut run)?,
        Command::MismatchScan => mismatch(&mut run)?,
        Command::SlitScan => slits(&mut run)?,
        Command::MagneticScan => magnetic(&mut run)?,
        Command::Fit { input } => fit(&mut run, input)?,
        Command::DesignPulse => design(&mut run)?,
        Command::Constants => {
            let p = run.path("constants.json");
            std::fs::write(p, run.table.to_json())?;
        }
    }
    run.finish()
}

fn diffract(run: &mut Run) -> Result<(), CliError> {
    let s = &run.scenario;
    let e = &s.experiment.diffract_scan;
    let species = run.species()?;
    let g = s.grating_configs(&species)?[mirror_index(e.grating)?];
    let setup = ScanSetup {
        species,
        laser_wavelength: s.geometry.laser_wavelength,
        beam: s.beam.distribution()?,
        angular: s.collimation(e.collimation_nodes),
        depth: g.depth,
        duration: g.duration,
        profile: e.profile,
        theta_start: e.theta_start_rad,
        theta_stop: e.theta_stop_rad,
        points: e.points,
    };
    let mut t = Table::new(&io::DIFFRACTION_HEADER);
    for p in diffraction_scan(&setup)? {
        t.push(vec![p.theta_y, p.transmitted]);
    }
    run.write_table("diffract_scan.csv", &t)
}

/// Mean B1 intensity per unit flux and the complex fringe amplitude, averaged
/// over the velocity distribution at exact Bragg incidence.
fn b1_amplitudes(gratings: &[GratingConfig; 3], geom: &InterferometerGeometry, dist: &VelocityDistribution) -> mzlab::Result<(f64, Complex64)> {
    let p = gratings[0].order;
    let u = dist.mean;
    let at = |v: f64| -> mzlab::Result<(f64, Complex64)> {
        let mut amps = [GratingAmplitudes::identity(); 3];
        for (j, g) in gratings.iter().enumerate() {
            let g = g.at_velocity(u, v);
            amps[j] = GratingAmplitudes::new(TwoLevel::new(p, g.depth, g.duration, 0.0)?, 0.0);
        }
        let tree = enumerate_beams(&amps, p, 0.0, 0.0, 0.0, geom);
        let upper = tree.leaf([p, -p, 0]).map_or(Complex64::new(0.0, 0.0), |l| l.amplitude);
        let lower = tree.leaf([0, p, -p]).map_or(Complex64::new(0.0, 0.0), |l| l.amplitude);
        Ok((upper.norm_sqr() + lower.norm_sqr(), 2.0 * upper * lower.conj()))
    };
    at(u)?;
    let mean = velocity_average(|v| at(v).map_or(0.0, |r| r.0), dist);
    let re = velocity_average(|v| at(v).map_or(0.0, |r| r.1.re), dist);
    let im = velocity_average(|v| at(v).map_or(0.0, |r| r.1.im), dist);
    Ok((mean, Complex64::new(re, im)))
}

fn fringes(run: &mut Run) -> Result<(), CliError> {
    let s = &run.scenario;
    let e = &s.experiment.fringes;
    let p = s.gratings.order;
    let geom = &s.geometry;
    let model = match (e.mean_intensity_counts_per_s, e.visibility) {
        (Some(i0), Some(v)) => FringeModel::new(i0, v, e.background_counts_per_s)?,
        (None, None) => {
            let species = run.species()?;
            let (mean, z) = b1_amplitudes(&s.grating_configs(&species)?, geom, &s.beam.distribution()?)?;
            let v = if mean > 0.0 { z.norm() / mean } else { 0.0 };
            let mut m = FringeModel::new(e.brightness_counts_per_s * mean, v.min(1.0), e.background_counts_per_s)?;
            m.phase_offset = z.arg();
            m
        }
        _ => return Err(CliError::Validation("fringes: give both mean_intensity_counts_per_s and visibility, or neither".into())),
    };
    let x = s.gratings.x_position_m;
    let pk = p as f64 * geom.k_g();
    let span = e.fringes * geom.grating_period() / p as f64;
    let drive = linspace(e.x3_start_m, e.x3_start_m + span, e.points)?;
    let sweep = Sweep { drive, phase_coefficients: vec![pk * (2.0 * x[1] - x[0]), -pk] };
    let opts = SynthesisOptions {
        counting_time: e.counting_time_s,
        seed: s.seed,
        background_bins: e.background_bins,
        burst: None,
    };
    let mut trace = synthesize_counts(&model, &sweep, &opts)?;
    trace.provenance = Provenance::Synthetic { model, phase_coefficients: sweep.phase_coefficients.clone() };
    let mut expected = Table::new(&io::FRINGE_HEADER);
    for &x3 in &sweep.drive {
        expected.push(vec![x3, model.rate(sweep.phase(x3))]);
    }
    run.write_table("fringes.csv", &expected)?;
    let path = run.path("trace.csv");
    io::save_trace(&trace, &path)?;
    run.outputs.push(io::sidecar_path(&path));
    Ok(())
}

fn tilt(run: &mut Run) -> Result<(), CliError> {
    let s = &run.scenario;
    let e = &s.experiment.tilt_scan;
    let k = mirror_index(e.grating)?;
    let mut t = Table::new(&io::TILT_HEADER);
    for theta in linspace(e.theta_start_rad, e.theta_stop_rad, e.points)? {
        let mut tilts = s.gratings.tilt_z_rad;
        tilts[k] = theta;
        t.push(vec![theta, e.visibility_scale * tilt_visibility(tilts, s.gratings.order, &s.geometry, e.apodization)]);
    }
    run.write_table("tilt_scan.csv", &t)
}

fn mismatch(run: &mut Run) -> Result<(), CliError> {
    let s = &run.scenario;
    let e = &s.experiment.mismatch_scan;
    let mut t = Table::new(&io::MISMATCH_HEADER);
    for dl in linspace(e.delta_start_m, e.delta_stop_m, e.points)? {
        t.push(vec![dl, e.visibility_scale * mismatch_visibility(dl - e.offset_m, s.gratings.order, &s.geometry)]);
    }
    run.write_table("mismatch_scan.csv", &t)
}

fn slits(run: &mut Run) -> Result<(), CliError> {
    let s = &run.scenario;
    let e = &s.experiment.slit_scan;
    let species = run.species()?;
    let study = SlitStudy {
        gratings: s.grating_configs(&species)?,
        species,
        geometry: s.geometry,
        beam: s.beam.distribution()?,
        mode: e.mode,
        brightness: e.brightness_counts_per_s_m2,
    };
    let widths = linspace(e.width_start_m, e.width_stop_m, e.points)?;
    let mut t = Table::new(&io::SLIT_HEADER);
    for p in slit_scan(&study, e.variable, &widths)? {
        t.push(vec![p.width, p.mean_intensity, p.visibility]);
    }
    run.write_table("slit_scan.csv", &t)
}

fn k_phi(run: &Run) -> Result<f64, CliError> {
    let s = &run.scenario;
    let e = &s.experiment.magnetic_scan;
    match (&e.field, e.k_phi) {
        (Some(f), None) => {
            let dipole = match f.dipole {
                DipoleSource::Coil { moment_per_ampere_m2, .. } => DipoleSource::Coil { current: 1.0, moment_per_ampere_m2 },
                DipoleSource::Moment { .. } => {
                    return Err(CliError::Validation("magnetic_scan.field.dipole must be a coil to sweep the current".into()))
                }
            };
            let sc = MagneticScenario {
                species: run.species()?,
                geometry: s.geometry,
                background: f.background.clone(),
                dipole,
                dipole_distance: f.dipole_distance_m,
                separation: f.separation,
            };
            Ok(gradient_phase(&sc, s.gratings.order, s.beam.mean_velocity_m_per_s)?)
        }
        (None, Some(k)) => Ok(k),
        (None, None) => Err(CliError::Validation("magnetic_scan: set k_phi_rad_per_A or field".into())),
        (Some(_), Some(_)) => Err(CliError::Validation("magnetic_scan: set only one of k_phi_rad_per_A and field".into())),
    }
}

/// Per-point seed so that every current setting has its own noise stream.
fn point_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn magnetic(run: &mut Run) -> Result<(), CliError> {
    let k = k_phi(run)?;
    let s = &run.scenario;
    let e = &s.experiment.magnetic_scan;
    let dist = s.beam.distribution()?;
    let mut t = Table::new(&io::REVIVAL_HEADER);
    for (i, current) in linspace(e.current_start, e.current_stop, e.points)?.into_iter().enumerate() {
        let v = e.visibility_scale * averaged_visibility(k * current, &dist, e.averaging).abs();
        match &e.noise {
            None => t.push(vec![current, v, 0.0]),
            Some(n) => {
                let model = FringeModel::new(n.mean_intensity_counts_per_s, v.min(1.0), n.background_counts_per_s)?;
                let opts = SynthesisOptions {
                    counting_time: n.counting_time_s,
                    seed: point_seed(s.seed, i),
                    background_bins: n.background_bins,
                    burst: None,
                };
                let trace = synthesize_counts(&model, &Sweep::linear(n.points, 2.0, 0.0), &opts)?;
                let fit = fit_fringes(&trace, &FringeFitOptions { phase_degree: 1, ..Default::default() })?;
                t.push(vec![current, fit.visibility, fit.visibility_sigma]);
            }
        }
    }
    run.write_table("magnetic_scan.csv", &t)
}

fn header_is(t: &Table, h: &[&str]) -> bool {
    t.header.len() == h.len() && t.header.iter().zip(h).all(|(a, b)| a == b)
}

fn fit(run: &mut Run, input: &Path) -> Result<(), CliError> {
    run.extra_input = std::fs::read(input).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", input.display())))?;
    let table = Table::read(run.extra_input.as_slice())?;
    let e = run.scenario.experiment.fit.clone();
    let pairs = |t: &Table| t.rows.iter().map(|r| (r[0], r[1])).collect::<Vec<_>>();
    if header_is(&table, &io::TRACE_HEADER) {
        let sidecar = io::sidecar_path(input);
        if sidecar.exists() {
            run.extra_input.extend(std::fs::read(&sidecar)?);
        }
        let trace = io::load_trace(input)?;
        let r = fit_fringes(&trace, &FringeFitOptions { phase_degree: e.phase_degree, background: e.background })?;
        run.write_json("fit.json", &r)
    } else if header_is(&table, &io::TILT_HEADER) {
        let r = fit_sinc(&pairs(&table), SincLaw::Tilt)?;
        run.write_json("fit.json", &r)
    } else if header_is(&table, &io::MISMATCH_HEADER) {
        let g = &run.scenario.geometry;
        let ratio = e.width_ratio.unwrap_or(g.source_width / g.detector_width);
        let r = fit_sinc(&pairs(&table), SincLaw::Mismatch { width_ratio: ratio })?;
        run.write_json("fit.json", &r)
    } else if header_is(&table, &io::REVIVAL_HEADER) {
        let pts: Vec<_> = table.rows.iter().map(|r| (r[0], r[1], r[2])).collect();
        let r = extract_velocity_spread(&pts)?;
        run.write_json("fit.json", &r)
    } else {
        Err(CliError::Validation(format!("{}: unrecognised header {:?}", input.display(), table.header)))
    }
}

#[derive(Serialize)]
struct PulseDesign {
    order: i32,
    duration: f64,
    q_splitter: f64,
    q_mirror: f64,
    /// Upper end of the depth range where the two-level formula holds.
    q_window: f64,
    inside_window: bool,
    #[serde(rename = "splitter_power_mW", skip_serializing_if = "Option::is_none")]
    splitter_power_mw: Option<f64>,
    #[serde(rename = "mirror_power_mW", skip_serializing_if = "Option::is_none")]
    mirror_power_mw: Option<f64>,
}

fn design(run: &mut Run) -> Result<(), CliError> {
    let s = &run.scenario;
    let e = &s.experiment.design_pulse;
    let p = s.gratings.order;
    let species = run.species()?;
    // depth per watt and duration of the described beam
    let per_watt = match &e.laser {
        Some(l) => {
            let field = LaserField {
                wavelength: s.geometry.laser_wavelength,
                detuning: 2.0 * std::f64::consts::PI * l.detuning_ghz * 1e9,
                power: 1.0,
                waist: l.waist_m,
                profile: l.profile,
            };
            Some(dimensionless_from_physical(&field, &species, s.beam.mean_velocity_m_per_s)?)
        }
        None => None,
    };
    let duration = match (per_watt, e.duration) {
        (Some((_, tau)), _) => tau,
        (None, Some(tau)) => tau,
        (None, None) => s.grating_configs(&species)?[1].duration,
    };
    let q_splitter = design_pulse(p, duration, PulseTarget::Splitter)?;
    let q_mirror = design_pulse(p, duration, PulseTarget::Mirror)?;
    let q_window = bragg_window(p)?;
    let d = PulseDesign {
        order: p,
        duration,
        q_splitter,
        q_mirror,
        q_window,
        inside_window: q_mirror <= q_window,
        splitter_power_mw: per_watt.map(|(q1, _)| 1e3 * q_splitter / q1),
        mirror_power_mw: per_watt.map(|(q1, _)| 1e3 * q_mirror / q1),
    };
    run.write_json("design_pulse.json", &d)
}
