//! Scenario files: strict JSON parsing, defaults, command-line overrides and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::maps::{MapDescriptor, MapKind, QcMap};

use super::report::ReportFormat;

/// Pipeline selected by a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Roundtrip,
    Eig,
    Transfer,
    Isospectral,
    Stability,
    Functionals,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Roundtrip,
        ScenarioKind::Eig,
        ScenarioKind::Transfer,
        ScenarioKind::Isospectral,
        ScenarioKind::Stability,
        ScenarioKind::Functionals,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Roundtrip => "roundtrip",
            ScenarioKind::Eig => "eig",
            ScenarioKind::Transfer => "transfer",
            ScenarioKind::Isospectral => "isospectral",
            ScenarioKind::Stability => "stability",
            ScenarioKind::Functionals => "functionals",
        }
    }

    /// Kinds whose reports tabulate eigenvalues per mode.
    pub fn is_spectral(&self) -> bool {
        matches!(
            self,
            ScenarioKind::Eig | ScenarioKind::Transfer | ScenarioKind::Isospectral | ScenarioKind::Stability
        )
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown scenario kind '{s}'")))
    }
}

/// A map given either as one descriptor or as a list composed left to right.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Single(MapDescriptor),
    Chain(Vec<MapDescriptor>),
}

impl MapSpec {
    /// The equivalent single descriptor; a chain becomes a composition.
    pub fn descriptor(&self) -> MapDescriptor {
        match self {
            MapSpec::Single(d) => d.clone(),
            MapSpec::Chain(maps) => MapDescriptor::Composition { maps: maps.clone() },
        }
    }

    pub fn build(&self) -> Result<QcMap> {
        self.descriptor().build()
    }
}

impl From<MapDescriptor> for MapSpec {
    fn from(d: MapDescriptor) -> Self {
        MapSpec::Single(d)
    }
}

impl Serialize for MapSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MapSpec::Single(d) => d.serialize(serializer),
            MapSpec::Chain(maps) => maps.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for MapSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let value = serde_json::Value::deserialize(deserializer)?;
        if value.is_array() {
            let maps: Vec<MapDescriptor> =
                serde_json::from_value(value).map_err(|e| D::Error::custom(format!("map list: {e}")))?;
            if maps.is_empty() {
                return Err(D::Error::custom("map list is empty"));
            }
            Ok(MapSpec::Chain(maps))
        } else {
            serde_json::from_value(value)
                .map(MapSpec::Single)
                .map_err(|e| D::Error::custom(format!("map descriptor: {e}")))
        }
    }
}

fn default_mesh() -> [usize; 2] {
    [32, 128]
}
fn default_modes() -> usize {
    6
}
fn default_beta() -> f64 {
    2.0
}
fn default_tol() -> f64 {
    1e-8
}
fn default_rel_tol() -> f64 {
    0.015
}
fn default_trials() -> usize {
    1000
}

/// A validated scenario. Construct with [`parse_config`] or [`Scenario::from_json_str`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// Single map for transfer, isospectral and eig.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    /// Map pair for stability and functionals; extra maps for roundtrip.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub maps: Vec<MapSpec>,
    /// `[n_r, n_theta]`.
    #[serde(default = "default_mesh")]
    pub mesh: [usize; 2],
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Eigensolver residual and quadrature tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Relative tolerance for per-mode comparisons in transfer and isospectral runs.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Random samples drawn by the roundtrip battery.
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<ReportFormat>,
}

/// Values that replace the corresponding scenario fields when present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mesh: Option<[usize; 2]>,
    pub modes: Option<usize>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<ReportFormat>,
}

/// Reads and validates a scenario file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Scenario::from_json_str(&text).map_err(|e| e.context(path.display().to_string()))
}

/// Reads a scenario file for the pipeline `kind`. A file without a `kind` key
/// takes `kind`; a file naming a different kind is rejected.
pub fn parse_config_for(path: impl AsRef<Path>, kind: ScenarioKind) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Scenario::from_json_str_for(&text, kind).map_err(|e| e.context(path.display().to_string()))
}

impl Scenario {
    /// A scenario of the given kind with every field at its default.
    pub fn new(kind: ScenarioKind) -> Self {
        Scenario {
            kind,
            map: None,
            maps: Vec::new(),
            mesh: default_mesh(),
            modes: default_modes(),
            beta: default_beta(),
            tol: default_tol(),
            rel_tol: default_rel_tol(),
            seed: 0,
            trials: default_trials(),
            output: None,
            format: None,
        }
    }

    pub fn with_map(mut self, map: impl Into<MapSpec>) -> Self {
        self.map = Some(map.into());
        self
    }

    pub fn with_maps(mut self, maps: Vec<MapSpec>) -> Self {
        self.maps = maps;
        self
    }

    /// Strict parse followed by [`Scenario::validate`].
    pub fn from_json_str(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Like [`Scenario::from_json_str`], filling in or checking the kind.
    pub fn from_json_str_for(text: &str, kind: ScenarioKind) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let s = match value.get("kind") {
            Some(_) => Scenario::from_json_str(text)?,
            None => {
                let mut value = value;
                let obj = value
                    .as_object_mut()
                    .ok_or_else(|| Error::Parse("scenario must be a JSON object".into()))?;
                obj.insert("kind".into(), serde_json::Value::String(kind.as_str().into()));
                let s: Scenario = serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
                s.validate()?;
                s
            }
        };
        if s.kind != kind {
            return Err(Error::Validation(format!("scenario file is a {} scenario, not {kind}", s.kind)));
        }
        Ok(s)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Applies `o` and validates the result.
    pub fn apply_overrides(mut self, o: &Overrides) -> Result<Self> {
        if let Some(mesh) = o.mesh {
            self.mesh = mesh;
        }
        if let Some(modes) = o.modes {
            self.modes = modes;
        }
        if let Some(beta) = o.beta {
            self.beta = beta;
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if o.output.is_some() {
            self.output = o.output.clone();
        }
        if o.format.is_some() {
            self.format = o.format;
        }
        self.validate()?;
        Ok(self)
    }

    /// Every map named by the scenario, `map` first.
    pub fn map_specs(&self) -> Vec<&MapSpec> {
        self.map.iter().chain(self.maps.iter()).collect()
    }

    /// Builds every map named by the scenario.
    pub fn build_maps(&self) -> Result<Vec<QcMap>> {
        self.map_specs()
            .into_iter()
            .enumerate()
            .map(|(i, m)| m.build().map_err(|e| Error::Validation(format!("map {i}: {e}"))))
            .collect()
    }

    /// Checks ranges, map counts and that every descriptor builds.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        let [n_r, n_theta] = self.mesh;
        if n_r < 1 || n_theta < 3 {
            return bad(format!("mesh [{n_r}, {n_theta}] needs n_r >= 1 and n_theta >= 3"));
        }
        if self.kind == ScenarioKind::Stability && (n_r < 2 || n_theta < 6) {
            return bad(format!("stability mesh [{n_r}, {n_theta}] needs n_r >= 2 and n_theta >= 6 for the coarse level"));
        }
        if self.kind.is_spectral() && self.modes < 2 {
            return bad(format!("modes = {} must be >= 2 for {} scenarios", self.modes, self.kind));
        }
        if !(self.beta > 1.0) || !self.beta.is_finite() {
            return bad(format!("beta = {} must be a finite number > 1", self.beta));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol = {} must lie in (0, 1)", self.tol));
        }
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return bad(format!("rel_tol = {} must be a finite number > 0", self.rel_tol));
        }
        if self.kind == ScenarioKind::Roundtrip && self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        let count = self.map_specs().len();
        match self.kind {
            ScenarioKind::Transfer | ScenarioKind::Isospectral if count != 1 => {
                return bad(format!("{} needs exactly one map, got {count}", self.kind));
            }
            ScenarioKind::Eig if count > 1 => {
                return bad(format!("eig takes at most one map, got {count}"));
            }
            ScenarioKind::Stability | ScenarioKind::Functionals if count != 2 => {
                return bad(format!("{} needs a pair of maps, got {count}", self.kind));
            }
            _ => {}
        }
        let maps = self.build_maps()?;
        if self.kind == ScenarioKind::Isospectral && maps[0].kind() != MapKind::AffineStretch {
            return bad(format!("isospectral needs an affine_stretch map, got {:?}", maps[0].kind()));
        }
        Ok(())
    }
}
