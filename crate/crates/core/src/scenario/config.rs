//! Plain-text scenario configuration: `[section]` headers with `key = value`
//! lines, comma-separated lists, and repeated subsections for actuators,
//! sensors, and reference terms.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::mesh_fem::{BoundaryProfile, ScalarField, TrigAxis, TrigKind, TrigTerm, VectorField2};
use crate::models::{ActuatorSpec2d, BcVariant, BeamSensor, MeshSource, Perturbation, PlantSpec};
use crate::signals::{
    fourier_truncate, triangle_wave, trapezoid_wave, PiecewiseLinearWave, ReferenceSignal,
    SignalTerm,
};
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub plant: PlantSpec,
    pub eta: f64,
    /// Requested extension variant for the beam family.
    pub beam_extension: BeamExtensionChoice,
    pub reference: ReferenceSignal,
    pub synthesis: SynthesisConfig,
    pub simulation: SimulationConfig,
    pub perturbation: Option<Perturbation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamExtensionChoice {
    V1,
    V2,
}

#[derive(Debug, Clone)]
pub struct SynthesisConfig {
    pub design_resolution: usize,
    pub reduced_order: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Scalars applied as diagonal weights.
    pub r1: f64,
    pub r2: f64,
    pub q0_scale: f64,
    pub q1_scale: f64,
    pub q2_scale: f64,
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub resolution: usize,
    pub t_final: f64,
    pub dt: f64,
    /// Initial deflection/state field and its named preset.
    pub initial: ScalarField,
    /// Beam only: initial velocity field.
    pub initial_velocity: Option<ScalarField>,
    /// Constant fill for the controller state.
    pub controller_init: f64,
    pub fit_window: Option<(f64, f64)>,
}

struct Entry {
    key: String,
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn parse_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or(Error::ParseError { line, message: "unterminated section header".into() })?;
            sections.push(Section { name: name.trim().to_string(), line, entries: vec![] });
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(Error::ParseError { line, message: format!("expected `key = value`, got `{body}`") });
        };
        let key = body[..eq].trim().to_string();
        let value = body[eq + 1..].trim().to_string();
        let Some(section) = sections.last_mut() else {
            return Err(Error::ParseError { line, message: "entry before any [section] header".into() });
        };
        section.entries.push(Entry { key, value, line });
    }
    Ok(sections)
}

struct SectionView<'a> {
    section: &'a Section,
}

impl<'a> SectionView<'a> {
    fn get(&self, key: &str) -> Option<&'a Entry> {
        self.section.entries.iter().find(|e| e.key == key)
    }

    fn require(&self, key: &str) -> Result<&'a Entry> {
        self.get(key).ok_or_else(|| Error::ParseError {
            line: self.section.line,
            message: format!("section [{}] is missing `{key}`", self.section.name),
        })
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let e = self.require(key)?;
        parse_f64(&e.value, e.line)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(e) => parse_f64(&e.value, e.line),
            None => Ok(default),
        }
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let e = self.require(key)?;
        e.value.parse::<usize>().map_err(|_| Error::ParseError {
            line: e.line,
            message: format!("`{}` is not a non-negative integer", e.value),
        })
    }

    fn field(&self, key: &str) -> Result<ScalarField> {
        let e = self.require(key)?;
        parse_field(&e.value, e.line)
    }

    fn field_opt(&self, key: &str) -> Result<Option<ScalarField>> {
        match self.get(key) {
            Some(e) => Ok(Some(parse_field(&e.value, e.line)?)),
            None => Ok(None),
        }
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::ParseError { line, message: format!("`{s}` is not a number") })
}

fn parse_f64_list(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split_whitespace().map(|t| parse_f64(t, line)).collect()
}

/// Field grammar: `constant c` | `linear c0 cx [cy]` |
/// `trig c0 [cosx:k:amp sinx:k:amp cosy:k:amp siny:k:amp ...]` |
/// `interval a b` | `rect x0 x1 y0 y1`.
pub fn parse_field(s: &str, line: usize) -> Result<ScalarField> {
    let toks: Vec<&str> = s.split_whitespace().collect();
    let bad = |msg: &str| Error::ParseError { line, message: format!("field `{s}`: {msg}") };
    match toks.first().copied() {
        Some("constant") if toks.len() == 2 => Ok(ScalarField::Constant(parse_f64(toks[1], line)?)),
        Some("linear") if toks.len() == 3 || toks.len() == 4 => Ok(ScalarField::Linear {
            c0: parse_f64(toks[1], line)?,
            cx: parse_f64(toks[2], line)?,
            cy: if toks.len() == 4 { parse_f64(toks[3], line)? } else { 0.0 },
        }),
        Some("trig") if toks.len() >= 2 => {
            let c0 = parse_f64(toks[1], line)?;
            let mut terms = Vec::new();
            for t in &toks[2..] {
                let parts: Vec<&str> = t.split(':').collect();
                if parts.len() != 3 {
                    return Err(bad("trig terms are kind:freq:amp"));
                }
                let (axis, kind) = match parts[0] {
                    "cosx" => (TrigAxis::X, TrigKind::Cos),
                    "sinx" => (TrigAxis::X, TrigKind::Sin),
                    "cosy" => (TrigAxis::Y, TrigKind::Cos),
                    "siny" => (TrigAxis::Y, TrigKind::Sin),
                    other => return Err(bad(&format!("unknown trig kind `{other}`"))),
                };
                terms.push(TrigTerm {
                    axis,
                    kind,
                    freq: parse_f64(parts[1], line)?,
                    amp: parse_f64(parts[2], line)?,
                });
            }
            Ok(ScalarField::Trig { c0, terms })
        }
        Some("interval") if toks.len() == 3 => Ok(ScalarField::IndicatorInterval {
            a: parse_f64(toks[1], line)?,
            b: parse_f64(toks[2], line)?,
        }),
        Some("rect") if toks.len() == 5 => Ok(ScalarField::IndicatorRect {
            x0: parse_f64(toks[1], line)?,
            x1: parse_f64(toks[2], line)?,
            y0: parse_f64(toks[3], line)?,
            y1: parse_f64(toks[4], line)?,
        }),
        _ => Err(bad("expected constant | linear | trig | interval | rect")),
    }
}

/// Named initial-condition presets with amplitude.
fn parse_initial(s: &str, line: usize) -> Result<ScalarField> {
    let toks: Vec<&str> = s.split_whitespace().collect();
    let amp = if toks.len() >= 2 { parse_f64(toks[1], line)? } else { 1.0 };
    match toks.first().copied() {
        Some("zero") => Ok(ScalarField::Constant(0.0)),
        Some("constant") => Ok(ScalarField::Constant(amp)),
        Some("sin_profile") => Ok(ScalarField::Trig {
            c0: 0.0,
            terms: vec![TrigTerm { axis: TrigAxis::X, kind: TrigKind::Sin, freq: 1.0, amp }],
        }),
        Some("cos5_minus_two") => Ok(ScalarField::Trig {
            c0: -2.0 * amp,
            terms: vec![TrigTerm { axis: TrigAxis::X, kind: TrigKind::Cos, freq: 5.0, amp }],
        }),
        Some("sin5") => Ok(ScalarField::Trig {
            c0: 0.0,
            terms: vec![TrigTerm { axis: TrigAxis::X, kind: TrigKind::Sin, freq: 5.0, amp }],
        }),
        _ => Err(Error::ParseError {
            line,
            message: format!("unknown initial preset `{s}`; use zero | constant | sin_profile | cos5_minus_two | sin5"),
        }),
    }
}

fn parse_profile(s: &str, line: usize) -> Result<BoundaryProfile> {
    let toks: Vec<&str> = s.split_whitespace().collect();
    match (toks.first().copied(), toks.len()) {
        (Some("sine"), 2) => {
            let k = toks[1].parse::<u32>().map_err(|_| Error::ParseError {
                line,
                message: format!("profile harmonic `{}` must be a positive integer", toks[1]),
            })?;
            if k == 0 {
                return Err(Error::ParseError { line, message: "profile harmonic must be >= 1".into() });
            }
            Ok(BoundaryProfile::SinePi { k })
        }
        _ => Err(Error::ParseError { line, message: format!("unknown profile `{s}`; use `sine <k>`") }),
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let sections = parse_sections(text)?;
    let find = |name: &str| -> Result<SectionView<'_>> {
        sections
            .iter()
            .find(|s| s.name == name)
            .map(|section| SectionView { section })
            .ok_or_else(|| Error::ParseError { line: 0, message: format!("missing [{name}] section") })
    };
    let all = |name: &str| -> Vec<SectionView<'_>> {
        sections.iter().filter(|s| s.name == name).map(|section| SectionView { section }).collect()
    };

    // Plant.
    let plant_sec = find("plant")?;
    let family = plant_sec.require("family")?;
    let plant = match family.value.as_str() {
        "heat1d_neumann" => {
            let sensors = all("plant.sensor")
                .iter()
                .map(|s| s.field("field"))
                .collect::<Result<Vec<_>>>()?;
            PlantSpec::Heat1dNeumann {
                nu: plant_sec.f64_or("nu", 1.0)?,
                alpha: plant_sec.f64_or("alpha", 0.0)?,
                sensors,
            }
        }
        "parabolic2d" => {
            let mesh_entry = plant_sec.require("mesh")?;
            let toks: Vec<&str> = mesh_entry.value.split_whitespace().collect();
            let mesh = match toks.first().copied() {
                Some("rect") if toks.len() == 5 => MeshSource::Rect {
                    x_range: (parse_f64(toks[1], mesh_entry.line)?, parse_f64(toks[2], mesh_entry.line)?),
                    y_range: (parse_f64(toks[3], mesh_entry.line)?, parse_f64(toks[4], mesh_entry.line)?),
                    tags: [0, 1, 2, 3],
                },
                Some("file") if toks.len() == 2 => MeshSource::File(PathBuf::from(toks[1])),
                _ => {
                    return Err(Error::ParseError {
                        line: mesh_entry.line,
                        message: "mesh must be `rect x0 x1 y0 y1` or `file <path>`".into(),
                    })
                }
            };
            let actuators = all("plant.actuator")
                .iter()
                .map(|s| -> Result<ActuatorSpec2d> {
                    let tag_entry = s.require("tag")?;
                    let tag = tag_entry.value.parse::<u32>().map_err(|_| Error::ParseError {
                        line: tag_entry.line,
                        message: format!("bad boundary tag `{}`", tag_entry.value),
                    })?;
                    let prof = s.require("profile")?;
                    Ok(ActuatorSpec2d { tag, profile: parse_profile(&prof.value, prof.line)? })
                })
                .collect::<Result<Vec<_>>>()?;
            let sensors = all("plant.sensor")
                .iter()
                .map(|s| s.field("field"))
                .collect::<Result<Vec<_>>>()?;
            PlantSpec::Parabolic2d {
                nu: plant_sec.f64("nu")?,
                alpha: plant_sec.field("alpha_field")?,
                beta: VectorField2 {
                    x: plant_sec.field_opt("beta_x")?.unwrap_or(ScalarField::Constant(0.0)),
                    y: plant_sec.field_opt("beta_y")?.unwrap_or(ScalarField::Constant(0.0)),
                },
                mesh,
                actuators,
                sensors,
            }
        }
        "beam_kv" => {
            let bc_variant = match plant_sec.get("bc_variant").map(|e| e.value.as_str()) {
                None | Some("shear_free_moment") => BcVariant::ShearFreeMoment,
                Some("combined_moment") => BcVariant::CombinedMoment,
                Some(other) => {
                    return Err(Error::ParseError {
                        line: plant_sec.section.line,
                        message: format!("unknown bc_variant `{other}`"),
                    })
                }
            };
            let sensors = all("plant.sensor")
                .iter()
                .map(|s| -> Result<BeamSensor> {
                    Ok(BeamSensor {
                        deflection: s.field_opt("deflection")?,
                        velocity: s.field_opt("velocity")?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            PlantSpec::BeamKv {
                length: plant_sec.f64("length")?,
                alpha: plant_sec.f64("alpha")?,
                beta: plant_sec.f64("beta")?,
                gamma: plant_sec.f64("gamma")?,
                bc_variant,
                sensors,
            }
        }
        other => {
            return Err(Error::ParseError {
                line: family.line,
                message: format!("unknown plant family `{other}`"),
            })
        }
    };
    plant.validate()?;

    // Extension.
    let ext_sec = find("extension")?;
    let eta = ext_sec.f64("eta")?;
    let beam_extension = match ext_sec.get("variant").map(|e| e.value.as_str()) {
        None | Some("beam_v1") => BeamExtensionChoice::V1,
        Some("beam_v2") => BeamExtensionChoice::V2,
        Some(other) => {
            return Err(Error::ParseError {
                line: ext_sec.section.line,
                message: format!("unknown extension variant `{other}`"),
            })
        }
    };

    // Reference signal.
    let ref_sec = find("reference")?;
    let p = plant.output_dim();
    let ref_type = ref_sec.require("type")?;
    let reference = match ref_type.value.as_str() {
        "terms" => {
            let mut terms = Vec::new();
            for term_sec in all("reference.term") {
                let omega = term_sec.f64("omega")?;
                let n = term_sec.usize("n")?;
                let parse_coeff = |key: &str| -> Result<DenseMatrix> {
                    match term_sec.get(key) {
                        None => Ok(DenseMatrix::zeros(p, n)),
                        Some(e) => {
                            let rows: Vec<Vec<f64>> = e
                                .value
                                .split(',')
                                .map(|part| parse_f64_list(part, e.line))
                                .collect::<Result<Vec<_>>>()?;
                            if rows.len() != p || rows.iter().any(|r| r.len() != n) {
                                return Err(Error::ParseError {
                                    line: e.line,
                                    message: format!(
                                        "`{key}` must give {p} comma-separated rows of {n} coefficients"
                                    ),
                                });
                            }
                            Ok(DenseMatrix::from_fn(p, n, |i, j| rows[i][j]))
                        }
                    }
                };
                terms.push(SignalTerm { omega, a: parse_coeff("a")?, b: parse_coeff("b")? });
            }
            terms.sort_by(|x, y| x.omega.partial_cmp(&y.omega).unwrap());
            ReferenceSignal::new(p, terms)?
        }
        "waveform" => {
            let period = ref_sec.f64("period")?;
            let q = ref_sec.usize("q")?;
            let shapes = all("reference.waveform");
            if shapes.len() != p {
                return Err(Error::ParseError {
                    line: ref_sec.section.line,
                    message: format!(
                        "waveform reference needs one [reference.waveform] per output ({p}), got {}",
                        shapes.len()
                    ),
                });
            }
            let mut waves: Vec<PiecewiseLinearWave> = Vec::with_capacity(p);
            for s in &shapes {
                let shape = s.require("shape")?;
                let wave = match shape.value.as_str() {
                    "triangle" => triangle_wave(period),
                    "trapezoid" => trapezoid_wave(period),
                    "custom" => {
                        let pts = s.require("points")?;
                        let mut breakpoints = Vec::new();
                        for part in pts.value.split(',') {
                            let kv: Vec<&str> = part.trim().split(':').collect();
                            if kv.len() != 2 {
                                return Err(Error::ParseError {
                                    line: pts.line,
                                    message: "points are `t:value, t:value, ...`".into(),
                                });
                            }
                            breakpoints
                                .push((parse_f64(kv[0], pts.line)?, vec![parse_f64(kv[1], pts.line)?]));
                        }
                        PiecewiseLinearWave::new(period, breakpoints)?
                    }
                    other => {
                        return Err(Error::ParseError {
                            line: shape.line,
                            message: format!("unknown waveform shape `{other}`"),
                        })
                    }
                };
                waves.push(wave);
            }
            // Merge per-output waves into one p-valued wave by sampling at
            // the union of breakpoint times (exact for piecewise-linear).
            let mut times: Vec<f64> = waves.iter().flat_map(|w| w.breakpoints.iter().map(|b| b.0)).collect();
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            let breakpoints: Vec<(f64, Vec<f64>)> = times
                .into_iter()
                .map(|t| (t, waves.iter().map(|w| w.eval(t)[0]).collect()))
                .collect();
            let merged = PiecewiseLinearWave::new(period, breakpoints)?;
            fourier_truncate(&merged, q)?
        }
        other => {
            return Err(Error::ParseError {
                line: ref_type.line,
                message: format!("reference type must be `terms` or `waveform`, got `{other}`"),
            })
        }
    };

    // Synthesis.
    let syn = find("synthesis")?;
    let synthesis = SynthesisConfig {
        design_resolution: syn.usize("design_resolution")?,
        reduced_order: syn.usize("reduced_order")?,
        alpha1: syn.f64("alpha1")?,
        alpha2: syn.f64("alpha2")?,
        r1: syn.f64_or("r1", 1.0)?,
        r2: syn.f64_or("r2", 1.0)?,
        q0_scale: syn.f64_or("q0", 1.0)?,
        q1_scale: syn.f64_or("q1", 1.0)?,
        q2_scale: syn.f64_or("q2", 1.0)?,
    };

    // Simulation.
    let sim = find("simulation")?;
    let init_entry = sim.require("initial")?;
    let initial = parse_initial(&init_entry.value, init_entry.line)?;
    let initial_velocity = match sim.get("initial_velocity") {
        Some(e) => Some(parse_initial(&e.value, e.line)?),
        None => None,
    };
    let fit_window = match sim.get("fit_window") {
        Some(e) => {
            let vals = parse_f64_list(&e.value, e.line)?;
            if vals.len() != 2 {
                return Err(Error::ParseError {
                    line: e.line,
                    message: "fit_window takes two numbers `t0 t1`".into(),
                });
            }
            Some((vals[0], vals[1]))
        }
        None => None,
    };
    let simulation = SimulationConfig {
        resolution: sim.usize("resolution")?,
        t_final: sim.f64("t_final")?,
        dt: sim.f64("dt")?,
        initial,
        initial_velocity,
        controller_init: sim.f64_or("controller_init", 0.0)?,
        fit_window,
    };

    // Optional perturbation.
    let perturbation = sections.iter().find(|s| s.name == "perturbation").map(|section| {
        let view = SectionView { section };
        Ok::<Perturbation, Error>(Perturbation {
            nu_factor: view.f64_or("nu_factor", 1.0)?,
            alpha_factor: view.f64_or("alpha_factor", 1.0)?,
            alpha_shift: view.f64_or("alpha_shift", 0.0)?,
            beta_factor: view.f64_or("beta_factor", 1.0)?,
            gamma_factor: view.f64_or("gamma_factor", 1.0)?,
        })
    });
    let perturbation = match perturbation {
        Some(r) => Some(r?),
        None => None,
    };

    Ok(ScenarioConfig {
        plant,
        eta,
        beam_extension,
        reference,
        synthesis,
        simulation,
        perturbation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const HEAT_DEMO: &str = "\
# heat tracking demo
[plant]
family = heat1d_neumann
nu = 1.0

[plant.sensor]
field = interval 0.3 0.7

[extension]
eta = 1.0

[reference]
type = terms

[reference.term]
omega = 0.0
n = 1
a = 1.0

[reference.term]
omega = 2.0
n = 1
b = 1.0

[synthesis]
design_resolution = 60
reduced_order = 12
alpha1 = 0.5
alpha2 = 0.5

[simulation]
resolution = 120
t_final = 60.0
dt = 0.01
initial = sin_profile 0.25
fit_window = 5.0 20.0
";

    #[test]
    fn heat_demo_parses() {
        let cfg = parse_config(HEAT_DEMO).unwrap();
        assert_eq!(cfg.plant.family_name(), "heat1d_neumann");
        assert_eq!(cfg.reference.terms.len(), 2);
        assert_eq!(cfg.synthesis.design_resolution, 60);
        assert_eq!(cfg.simulation.resolution, 120);
        assert!(cfg.perturbation.is_none());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "[plant]\nfamily = heat1d_neumann\nnonsense line\n";
        match parse_config(bad) {
            Err(Error::ParseError { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn waveform_reference_truncates() {
        let cfg_text = "\
[plant]
family = heat1d_neumann

[plant.sensor]
field = interval 0.2 0.8

[extension]
eta = 1.0

[reference]
type = waveform
period = 2.0
q = 3

[reference.waveform]
shape = triangle

[synthesis]
design_resolution = 10
reduced_order = 4
alpha1 = 0.5
alpha2 = 0.5

[simulation]
resolution = 20
t_final = 10.0
dt = 0.01
initial = zero
";
        let cfg = parse_config(cfg_text).unwrap();
        assert_eq!(cfg.reference.terms.len(), 4); // k = 0..=3
        assert!((cfg.reference.terms[0].a[(0, 0)] + 0.5).abs() < 1e-10);
    }
}
