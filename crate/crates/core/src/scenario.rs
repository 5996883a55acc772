//! Scenario files, presets and the batch runner behind the command-line tool.
//!
//! A scenario is a TOML document. All lengths are in wavelengths.
//!
//! ```toml
//! name = "dimer-chain"
//!
//! [lattice]
//! sites = 18
//! spacing = 0.4
//! center_offset = 0.0
//! wannier = { kind = "gaussian", width = 0.05 }   # or { kind = "point" }
//!
//! [optics]
//! numerical_aperture = 0.5
//!
//! [state]
//! kind = "dimer"          # product (with m = [...]), defect, unpolarized, trimer
//!
//! [[protocols]]
//! kind = "coherent"
//!
//! [[protocols]]
//! kind = "correlated-pair"
//! separation = 0.4
//!
//! [grid]
//! samples = 513
//! normalization = "max-one"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{oscillation_report, RESOLVABILITY_THRESHOLD};
use crate::error::{Error, Result};
use crate::imaging::{
    centroid_amplitude_image, centroid_intensity_image, coherent_image, correlated_pair_image,
    separation_steps, site_pair_probe, twophoton_absorption_image, GridRequest, ProbeTable,
    DEFAULT_SAMPLES,
};
use crate::kernels::QuadratureSpec;
use crate::model::{
    AxisKind, ImageGrid, LatticeGeometry, Normalization, OpticsConfig, WannierEnvelope,
};
use crate::states::{correlation_matrix, defect_lattice_spec, CorrelationMatrix, SpinStateSpec};

pub const TOOL_NAME: &str = "lattice-imaging";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Relative paths are resolved against the scenario file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub lattice: LatticeSection,
    pub optics: OpticsSection,
    pub state: StateSection,
    pub protocols: Vec<Protocol>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub sites: usize,
    pub spacing: f64,
    #[serde(default)]
    pub center_offset: f64,
    #[serde(default)]
    pub wannier: WannierSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Tagged", into = "Tagged")]
pub enum WannierSection {
    #[default]
    Point,
    Gaussian {
        width: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsSection {
    #[serde(default = "unit_wavelength")]
    pub wavelength: f64,
    pub numerical_aperture: f64,
}

fn unit_wavelength() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Tagged", into = "Tagged")]
pub enum StateSection {
    Product {
        m: Vec<i32>,
        spin: u32,
    },
    /// Fully polarised chain with one `m = 0` site (1-based).
    Defect {
        defect_site: usize,
    },
    Unpolarized,
    Dimer,
    Trimer,
}

/// Flat on-disk form of the `kind`-tagged tables. Every variant is read
/// through it so that keys belonging to another variant are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tagged {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spin: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    defect_site: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    separation: Option<f64>,
}

impl Tagged {
    fn kind(kind: &str) -> Self {
        Self {
            kind: kind.into(),
            ..Default::default()
        }
    }

    /// Fails when a key outside `allowed` is present.
    fn only(&self, allowed: &[&str]) -> std::result::Result<(), String> {
        let present = [
            ("width", self.width.is_some()),
            ("m", self.m.is_some()),
            ("spin", self.spin.is_some()),
            ("defect_site", self.defect_site.is_some()),
            ("separation", self.separation.is_some()),
        ];
        match present.iter().find(|(k, p)| *p && !allowed.contains(k)) {
            Some((k, _)) => Err(format!("key `{k}` is not valid for kind `{}`", self.kind)),
            None => Ok(()),
        }
    }

    fn require<T>(value: Option<T>, key: &str, kind: &str) -> std::result::Result<T, String> {
        value.ok_or_else(|| format!("kind `{kind}` needs `{key}`"))
    }

    fn unknown(&self, expected: &str) -> String {
        format!("unknown kind `{}`, expected one of {expected}", self.kind)
    }
}

impl TryFrom<Tagged> for WannierSection {
    type Error = String;

    fn try_from(t: Tagged) -> std::result::Result<Self, String> {
        match t.kind.as_str() {
            "point" => t.only(&[]).map(|_| WannierSection::Point),
            "gaussian" => {
                t.only(&["width"])?;
                let width = Tagged::require(t.width, "width", &t.kind)?;
                Ok(WannierSection::Gaussian { width })
            }
            _ => Err(t.unknown("point, gaussian")),
        }
    }
}

impl From<WannierSection> for Tagged {
    fn from(w: WannierSection) -> Self {
        match w {
            WannierSection::Point => Tagged::kind("point"),
            WannierSection::Gaussian { width } => Tagged {
                width: Some(width),
                ..Tagged::kind("gaussian")
            },
        }
    }
}

impl TryFrom<Tagged> for StateSection {
    type Error = String;

    fn try_from(t: Tagged) -> std::result::Result<Self, String> {
        match t.kind.as_str() {
            "product" => {
                t.only(&["m", "spin"])?;
                Ok(StateSection::Product {
                    m: Tagged::require(t.m, "m", "product")?,
                    spin: t.spin.unwrap_or(1),
                })
            }
            "defect" => {
                t.only(&["defect_site"])?;
                let defect_site = Tagged::require(t.defect_site, "defect_site", "defect")?;
                Ok(StateSection::Defect { defect_site })
            }
            "unpolarized" => t.only(&[]).map(|_| StateSection::Unpolarized),
            "dimer" => t.only(&[]).map(|_| StateSection::Dimer),
            "trimer" => t.only(&[]).map(|_| StateSection::Trimer),
            _ => Err(t.unknown("product, defect, unpolarized, dimer, trimer")),
        }
    }
}

impl From<StateSection> for Tagged {
    fn from(s: StateSection) -> Self {
        match s {
            StateSection::Product { m, spin } => Tagged {
                m: Some(m),
                spin: Some(spin),
                ..Tagged::kind("product")
            },
            StateSection::Defect { defect_site } => Tagged {
                defect_site: Some(defect_site),
                ..Tagged::kind("defect")
            },
            StateSection::Unpolarized => Tagged::kind("unpolarized"),
            StateSection::Dimer => Tagged::kind("dimer"),
            StateSection::Trimer => Tagged::kind("trimer"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Tagged", into = "Tagged")]
pub enum Protocol {
    Coherent,
    TwophotonAbsorption,
    CentroidIntensity,
    CentroidAmplitude,
    CorrelatedPair { separation: f64 },
}

impl TryFrom<Tagged> for Protocol {
    type Error = String;

    fn try_from(t: Tagged) -> std::result::Result<Self, String> {
        let unit = |p: Protocol| t.only(&[]).map(|_| p);
        match t.kind.as_str() {
            "coherent" => unit(Protocol::Coherent),
            "twophoton-absorption" => unit(Protocol::TwophotonAbsorption),
            "centroid-intensity" => unit(Protocol::CentroidIntensity),
            "centroid-amplitude" => unit(Protocol::CentroidAmplitude),
            "correlated-pair" => {
                t.only(&["separation"])?;
                let separation = Tagged::require(t.separation, "separation", &t.kind)?;
                Ok(Protocol::CorrelatedPair { separation })
            }
            _ => Err(t.unknown(
                "coherent, twophoton-absorption, centroid-intensity, centroid-amplitude, correlated-pair",
            )),
        }
    }
}

impl From<Protocol> for Tagged {
    fn from(p: Protocol) -> Self {
        match p {
            Protocol::CorrelatedPair { separation } => Tagged {
                separation: Some(separation),
                ..Tagged::kind("correlated-pair")
            },
            other => Tagged::kind(&other.tag()),
        }
    }
}

impl Protocol {
    /// File-name tag, unique within a scenario.
    pub fn tag(&self) -> String {
        match self {
            Protocol::Coherent => "coherent".into(),
            Protocol::TwophotonAbsorption => "twophoton-absorption".into(),
            Protocol::CentroidIntensity => "centroid-intensity".into(),
            Protocol::CentroidAmplitude => "centroid-amplitude".into(),
            Protocol::CorrelatedPair { separation } => format!("correlated-pair-d{separation}"),
        }
    }

    pub fn axis(&self) -> AxisKind {
        match self {
            Protocol::Coherent | Protocol::TwophotonAbsorption => AxisKind::Line,
            Protocol::CentroidIntensity | Protocol::CentroidAmplitude => AxisKind::Centroid,
            Protocol::CorrelatedPair { .. } => AxisKind::Plane,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Sample range; the lattice extent padded by 2λ when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default = "default_edge_margin")]
    pub edge_margin: usize,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_edge_margin() -> usize {
    crate::analysis::DEFAULT_EDGE_MARGIN
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            range: None,
            normalization: Normalization::default(),
            edge_margin: default_edge_margin(),
        }
    }
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub panels: Option<usize>,
    pub samples: Option<usize>,
    pub normalization: Option<Normalization>,
}

/// Model objects built from a validated scenario.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub lattice: LatticeGeometry,
    pub optics: OpticsConfig,
    pub state: SpinStateSpec,
    pub correlations: CorrelationMatrix,
    pub warnings: Vec<String>,
}

struct SectionError {
    section: &'static str,
    error: Error,
}

fn section<T>(name: &'static str, r: Result<T>) -> std::result::Result<T, SectionError> {
    r.map_err(|error| SectionError {
        section: name,
        error,
    })
}

impl Scenario {
    /// Parses and validates a scenario. Errors carry the line of the
    /// offending key or section.
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        if let Err(e) = scenario.resolve_sections() {
            let prefix = match anchor_line(src, e.section) {
                Some(n) => format!("line {n}: "),
                None => String::new(),
            };
            return Err(Error::Config(format!(
                "{prefix}[{}] {}",
                e.section, e.error
            )));
        }
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&src)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(p) = overrides.panels {
            self.quadrature.panels = p;
        }
        if let Some(s) = overrides.samples {
            self.grid.samples = s;
        }
        if let Some(n) = overrides.normalization {
            self.grid.normalization = n;
        }
    }

    pub fn resolve(&self) -> Result<ResolvedScenario> {
        self.resolve_sections()
            .map_err(|e| Error::Config(format!("[{}] {}", e.section, e.error)))
    }

    fn resolve_sections(&self) -> std::result::Result<ResolvedScenario, SectionError> {
        let name_ok = !self.name.is_empty()
            && self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
        if !name_ok {
            return Err(SectionError {
                section: "name",
                error: Error::invalid(
                    "name",
                    format!(
                        "{:?} must be non-empty ASCII letters, digits, '-', '_' or '.'",
                        self.name
                    ),
                ),
            });
        }

        let l = &self.lattice;
        let envelope = match l.wannier {
            WannierSection::Point => WannierEnvelope::Point,
            WannierSection::Gaussian { width } => {
                section("lattice", WannierEnvelope::gaussian(width))?
            }
        };
        let lattice = section(
            "lattice",
            LatticeGeometry::new(l.sites, l.spacing, l.center_offset, envelope),
        )?;
        let optics = section(
            "optics",
            OpticsConfig::new(self.optics.wavelength, self.optics.numerical_aperture),
        )?;

        let state = section(
            "state",
            match &self.state {
                StateSection::Product { m, spin } => {
                    if m.len() != l.sites {
                        Err(Error::DimensionMismatch {
                            expected: l.sites,
                            found: m.len(),
                        })
                    } else {
                        SpinStateSpec::product_with_spin(m.clone(), *spin)
                    }
                }
                StateSection::Defect { defect_site } => defect_lattice_spec(l.sites, *defect_site),
                StateSection::Unpolarized => SpinStateSpec::unpolarized(l.sites),
                StateSection::Dimer => SpinStateSpec::dimer(l.sites),
                StateSection::Trimer => SpinStateSpec::trimer(l.sites),
            },
        )?;

        if self.protocols.is_empty() {
            return Err(SectionError {
                section: "protocols",
                error: Error::invalid("protocols", "at least one protocol is required"),
            });
        }
        let mut tags: Vec<String> = Vec::new();
        for p in &self.protocols {
            if let Protocol::CorrelatedPair { separation } = p {
                if !(separation.is_finite() && *separation > 0.0) {
                    return Err(SectionError {
                        section: "protocols",
                        error: Error::invalid(
                            "protocols",
                            format!(
                                "correlated-pair separation must be positive, got {separation}"
                            ),
                        ),
                    });
                }
            }
            let tag = p.tag();
            if tags.contains(&tag) {
                return Err(SectionError {
                    section: "protocols",
                    error: Error::invalid("protocols", format!("protocol {tag} listed twice")),
                });
            }
            tags.push(tag);
        }

        if self.grid.edge_margin == 0 {
            return Err(SectionError {
                section: "grid",
                error: Error::invalid("grid", "edge_margin must be at least 1"),
            });
        }
        section(
            "grid",
            grid_request(&self.grid, &lattice, &optics, AxisKind::Line),
        )?;
        section("quadrature", self.quadrature.validate())?;

        Ok(ResolvedScenario {
            correlations: correlation_matrix(&state),
            warnings: lattice.validation_warnings(),
            lattice,
            optics,
            state,
        })
    }
}

fn grid_request(
    grid: &GridSection,
    lattice: &LatticeGeometry,
    optics: &OpticsConfig,
    axis: AxisKind,
) -> Result<GridRequest> {
    let req = match grid.range {
        Some([lo, hi]) => GridRequest::new(axis, lo, hi, grid.samples)?,
        None => GridRequest::around(lattice, optics, axis, grid.samples)?,
    };
    Ok(req.with_normalization(grid.normalization))
}

/// 1-based line of the first `[section]` header or `key =` assignment.
fn anchor_line(src: &str, section: &str) -> Option<usize> {
    let header = format!("[{section}]");
    let array = format!("[[{section}]]");
    src.lines()
        .position(|line| {
            let t = line.trim_start();
            t.starts_with(&header)
                || t.starts_with(&array)
                || t.strip_prefix(section)
                    .is_some_and(|rest| rest.trim_start().starts_with('=') || rest.starts_with('.'))
        })
        .map(|i| i + 1)
}

/// Files written by one scenario run, relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl RunSummary {
    fn extend(&mut self, other: RunSummary) {
        self.files.extend(other.files);
        self.warnings.extend(other.warnings);
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    scenario: &'a str,
    protocol: &'a Protocol,
    axis: AxisKind,
    samples: usize,
    range: [f64; 2],
    normalization: Normalization,
    raw_max: f64,
    band_limit: f64,
    xi_radius: f64,
    quadrature: &'a QuadratureSpec,
    lattice: &'a LatticeSection,
    site_positions: Vec<f64>,
    optics: &'a OpticsSection,
    state: &'a StateSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe_resolution_ratio: Option<f64>,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct ReportFile<'a> {
    scenario: &'a str,
    protocol: String,
    threshold: f64,
    resolved: bool,
    report: crate::analysis::OscillationReport,
}

struct ProtocolOutput {
    files: Vec<(String, String)>,
    warnings: Vec<String>,
}

fn fmt_row(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn line_csv(image: &ImageGrid) -> String {
    let label = if image.axis == AxisKind::Centroid {
        "X"
    } else {
        "x"
    };
    let mut out = format!("{label},intensity\n");
    for (x, v) in image.coords.iter().zip(&image.values) {
        out.push_str(&fmt_row([*x, *v]));
        out.push('\n');
    }
    out
}

fn plane_csv(image: &ImageGrid) -> String {
    let mut out = String::from("x1\\x2,");
    out.push_str(&fmt_row(image.coords2.iter().copied()));
    out.push('\n');
    let cols = image.coords2.len();
    for (i, x1) in image.coords.iter().enumerate() {
        out.push_str(&x1.to_string());
        out.push(',');
        out.push_str(&fmt_row(
            image.values[i * cols..(i + 1) * cols].iter().copied(),
        ));
        out.push('\n');
    }
    out
}

fn probe_csv(table: &ProbeTable) -> String {
    let mut out = String::from("site,x1,x2,value,edge\n");
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.site, r.x1, r.x2, r.value, r.edge
        ));
    }
    out
}

fn sites_csv(res: &ResolvedScenario) -> String {
    let mut out = String::from("site,x,mean,second_moment\n");
    let c = &res.correlations;
    for (j, x) in res.lattice.site_positions().iter().enumerate() {
        out.push_str(&format!(
            "{},{}\n",
            j + 1,
            fmt_row([*x, c.means()[j], c.moment(j, j)])
        ));
    }
    out
}

fn run_protocol(
    sc: &Scenario,
    res: &ResolvedScenario,
    protocol: &Protocol,
) -> Result<ProtocolOutput> {
    let (corr, lattice, optics, quad) =
        (&res.correlations, &res.lattice, &res.optics, &sc.quadrature);
    let grid = grid_request(&sc.grid, lattice, optics, protocol.axis())?;
    let stem = format!("{}_{}", sc.name, protocol.tag());
    let mut warnings = Vec::new();
    let mut files = Vec::new();
    let mut probe_ratio = None;

    let image = match *protocol {
        Protocol::Coherent => coherent_image(corr, lattice, optics, &grid, quad)?,
        Protocol::TwophotonAbsorption => {
            twophoton_absorption_image(corr, lattice, optics, &grid, quad)?
        }
        Protocol::CentroidIntensity => {
            centroid_intensity_image(corr, lattice, optics, &grid, quad)?
        }
        Protocol::CentroidAmplitude => {
            centroid_amplitude_image(corr, lattice, optics, &grid, quad)?
        }
        Protocol::CorrelatedPair { separation } => {
            let out = correlated_pair_image(corr, lattice, optics, separation, &grid, quad)?;
            warnings.extend(out.warnings);
            if let Some(steps) = separation_steps(lattice, separation) {
                if steps < lattice.site_count() {
                    let table = site_pair_probe(corr, lattice, optics, steps)?;
                    warnings.extend(table.warnings.iter().cloned());
                    probe_ratio = Some(table.resolution_ratio);
                    files.push((format!("{stem}_probe.csv"), probe_csv(&table)));
                }
            }
            out.image
        }
    };

    if image.axis == AxisKind::Plane {
        files.insert(0, (format!("{stem}.csv"), plane_csv(&image)));
    } else {
        files.insert(0, (format!("{stem}.csv"), line_csv(&image)));
        let m = lattice.site_count();
        let margin = sc.grid.edge_margin.min(m.saturating_sub(2) / 2);
        if margin == 0 {
            warnings.push(format!(
                "{m} sites leave no interior window; analysis report skipped"
            ));
        } else {
            if margin < sc.grid.edge_margin {
                warnings.push(format!(
                    "edge margin reduced from {} to {margin} for a {m}-site chain",
                    sc.grid.edge_margin
                ));
            }
            match oscillation_report(&image, lattice, margin) {
                Ok(report) => {
                    let file = ReportFile {
                        scenario: &sc.name,
                        protocol: protocol.tag(),
                        threshold: RESOLVABILITY_THRESHOLD,
                        resolved: report.visibility >= RESOLVABILITY_THRESHOLD,
                        report,
                    };
                    files.push((format!("{stem}.report.json"), to_json(&file)?));
                }
                Err(e @ Error::InvalidSpec { .. }) => {
                    warnings.push(format!("analysis report skipped: {e}"));
                }
                Err(e) => return Err(e),
            }
        }
    }

    let meta = Metadata {
        tool: TOOL_NAME,
        version: VERSION,
        scenario: &sc.name,
        protocol,
        axis: image.axis,
        samples: grid.samples,
        range: [grid.min, grid.max],
        normalization: image.normalization,
        raw_max: image.raw_max,
        band_limit: optics.band_limit(),
        xi_radius: quad.xi_radius(optics.band_limit()),
        quadrature: quad,
        lattice: &sc.lattice,
        site_positions: lattice.site_positions(),
        optics: &sc.optics,
        state: &sc.state,
        probe_resolution_ratio: probe_ratio,
        warnings: &warnings,
    };
    files.insert(1, (format!("{stem}.meta.json"), to_json(&meta)?));
    Ok(ProtocolOutput { files, warnings })
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(PathBuf::from(name))
}

/// Runs every protocol of `scenario` and writes its files into `out_dir`.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<RunSummary> {
    let res = scenario.resolve()?;
    let outputs: Vec<ProtocolOutput> = scenario
        .protocols
        .par_iter()
        .map(|p| {
            run_protocol(scenario, &res, p).map_err(|e| Error::Protocol {
                protocol: p.tag(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut summary = RunSummary {
        warnings: res.warnings.clone(),
        ..Default::default()
    };
    let echo = scenario.to_toml_string()?;
    summary.files.push(write(
        out_dir,
        &format!("{}.scenario.toml", scenario.name),
        &echo,
    )?);
    summary.files.push(write(
        out_dir,
        &format!("{}_sites.csv", scenario.name),
        &sites_csv(&res),
    )?);
    for out in outputs {
        for (name, contents) in &out.files {
            summary.files.push(write(out_dir, name, contents)?);
        }
        summary.warnings.extend(out.warnings);
    }
    Ok(summary)
}

/// Loads a scenario file, applies overrides and runs it. Output goes to the
/// scenario's `output_dir`, or `out/` beside the file.
pub fn run_config(path: &Path, overrides: &Overrides) -> Result<RunSummary> {
    let mut scenario = Scenario::load(path)?;
    scenario.apply(overrides);
    let base = path.parent().unwrap_or(Path::new("."));
    let out = base.join(
        scenario
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out")),
    );
    run_scenario(&scenario, &out)
}

pub fn run_preset(name: &str, out_dir: &Path, overrides: &Overrides) -> Result<RunSummary> {
    let scenarios = preset(name).ok_or_else(|| {
        let known: Vec<&str> = list_presets().iter().map(|p| p.0).collect();
        Error::Config(format!(
            "unknown preset {name:?}; available: {}",
            known.join(", ")
        ))
    })?;
    let mut summary = RunSummary::default();
    for mut sc in scenarios {
        sc.apply(overrides);
        summary.extend(run_scenario(&sc, out_dir)?);
    }
    Ok(summary)
}

pub fn list_presets() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "fig2",
            "five atoms at 0.9λ with an m = 0 defect at x = -0.45λ, NA 2/3, four protocols",
        ),
        (
            "fig3",
            "18-site unpolarized, dimer and trimer chains at 0.4λ, NA 1/2, coherent and centroid",
        ),
        (
            "fig4",
            "12-site chains at a = λ, NA 1/2, correlated pairs displaced by a and 2a",
        ),
    ]
}

fn chain(
    name: String,
    sites: usize,
    spacing: f64,
    na: f64,
    state: StateSection,
    protocols: Vec<Protocol>,
) -> Scenario {
    Scenario {
        name,
        description: None,
        output_dir: None,
        lattice: LatticeSection {
            sites,
            spacing,
            center_offset: 0.0,
            wannier: WannierSection::Point,
        },
        optics: OpticsSection {
            wavelength: 1.0,
            numerical_aperture: na,
        },
        state,
        protocols,
        grid: GridSection::default(),
        quadrature: QuadratureSpec::default(),
    }
}

pub fn preset(name: &str) -> Option<Vec<Scenario>> {
    let blocks = |prefix: &'static str| {
        [
            ("unpolarized", StateSection::Unpolarized),
            ("dimer", StateSection::Dimer),
            ("trimer", StateSection::Trimer),
        ]
        .into_iter()
        .map(move |(tag, state)| (format!("{prefix}-{tag}"), state))
    };
    match name {
        "fig2" => {
            // five sites shifted by half a spacing put site 2 at -0.45λ
            let mut sc = chain(
                "fig2".into(),
                5,
                0.9,
                2.0 / 3.0,
                StateSection::Defect { defect_site: 2 },
                vec![
                    Protocol::Coherent,
                    Protocol::TwophotonAbsorption,
                    Protocol::CentroidIntensity,
                    Protocol::CentroidAmplitude,
                ],
            );
            sc.lattice.center_offset = 0.45;
            Some(vec![sc])
        }
        "fig3" => Some(
            blocks("fig3")
                .map(|(name, state)| {
                    chain(
                        name,
                        18,
                        0.4,
                        0.5,
                        state,
                        vec![Protocol::Coherent, Protocol::CentroidIntensity],
                    )
                })
                .collect(),
        ),
        "fig4" => Some(
            blocks("fig4")
                .map(|(name, state)| {
                    let mut sc = chain(
                        name,
                        12,
                        1.0,
                        0.5,
                        state,
                        vec![
                            Protocol::CorrelatedPair { separation: 1.0 },
                            Protocol::CorrelatedPair { separation: 2.0 },
                        ],
                    );
                    sc.grid.samples = 257;
                    sc
                })
                .collect(),
        ),
        _ => None,
    }
}
