//! Physical constant table.
//!
//! Every numerical constant used by the simulation lives in
//! `data/constants.json`, which is compiled into the library. The same file is
//! what `mzlab constants` prints, so tests, oracles and the CLI all share one
//! table. Setting `MZLAB_CONSTANTS=<path>` swaps in a different species table;
//! the fundamental constants are fixed (CODATA 2018) and an override file must
//! repeat them unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::Species;

/// Environment variable naming an alternative constant table.
pub const CONSTANTS_ENV: &str = "MZLAB_CONSTANTS";

const TABLE_JSON: &str = include_str!("../data/constants.json");

pub const PLANCK_H: f64 = 6.62607015e-34;
pub const HBAR: f64 = 1.054571817e-34;
pub const BOHR_MAGNETON: f64 = 9.2740100783e-24;
pub const MU0: f64 = 1.25663706212e-6;
pub const ATOMIC_MASS_UNIT: f64 = 1.6605390666e-27;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fundamental {
    #[serde(rename = "planck_h_J_s")]
    pub planck_h: f64,
    #[serde(rename = "hbar_J_s")]
    pub hbar: f64,
    #[serde(rename = "bohr_magneton_J_per_T")]
    pub bohr_magneton: f64,
    #[serde(rename = "vacuum_permeability_N_per_A2")]
    pub mu0: f64,
    #[serde(rename = "atomic_mass_unit_kg")]
    pub atomic_mass_unit: f64,
    #[serde(rename = "speed_of_light_m_per_s")]
    pub speed_of_light: f64,
}

impl Fundamental {
    pub const CODATA_2018: Fundamental = Fundamental {
        planck_h: PLANCK_H,
        hbar: HBAR,
        bohr_magneton: BOHR_MAGNETON,
        mu0: MU0,
        atomic_mass_unit: ATOMIC_MASS_UNIT,
        speed_of_light: SPEED_OF_LIGHT,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantTable {
    pub fundamental: Fundamental,
    pub species: Vec<Species>,
}

impl ConstantTable {
    /// The built-in table.
    pub fn standard() -> ConstantTable {
        Self::parse(TABLE_JSON).expect("embedded constant table is valid")
    }

    pub fn parse(json: &str) -> Result<ConstantTable> {
        let table: ConstantTable = serde_json::from_str(json)?;
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: &std::path::Path) -> Result<ConstantTable> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The table named by `MZLAB_CONSTANTS`, or the built-in one.
    pub fn from_env() -> Result<ConstantTable> {
        match std::env::var_os(CONSTANTS_ENV) {
            Some(path) => Self::load(std::path::Path::new(&path)),
            None => Ok(Self::standard()),
        }
    }

    pub fn species(&self, name: &str) -> Result<&Species> {
        self.species
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Invalid(format!("unknown species '{name}'")))
    }

    /// Pretty JSON, byte-identical to `data/constants.json` for the standard table.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }

    fn validate(&self) -> Result<()> {
        if self.fundamental != Fundamental::CODATA_2018 {
            return Err(Error::Invalid(
                "fundamental constants in a constant table must match CODATA 2018".into(),
            ));
        }
        for s in &self.species {
            s.validate()?;
        }
        Ok(())
    }
}

/// The embedded JSON text, exactly as shipped.
pub fn standard_table_json() -> &'static str {
    TABLE_JSON
}
