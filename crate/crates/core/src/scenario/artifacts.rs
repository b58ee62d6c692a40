//! Run artifacts: controller files, trajectory and Hankel-value CSVs, and
//! the plant fingerprint binding controllers to the scenario they were
//! designed for. All files are plain UTF-8 text with dot decimals.

use crate::error::{Error, Result};
use crate::extended::ExtendedVariant;
use crate::matrix::DenseMatrix;
use crate::mesh_fem::{BoundaryProfile, ScalarField};
use crate::models::{MeshSource, PlantSpec};
use crate::sim::{DecayFit, SimResult};
use crate::synthesis::ControllerRealization;
use sha2::{Digest, Sha256};

/// Canonical, whitespace-stable description of the plant section; the hash
/// of this string ties a controller file to its plant.
pub fn canonical_plant_string(spec: &PlantSpec) -> String {
    fn field(f: &ScalarField) -> String {
        match f {
            ScalarField::Constant(c) => format!("constant({c:?})"),
            ScalarField::Linear { c0, cx, cy } => format!("linear({c0:?},{cx:?},{cy:?})"),
            ScalarField::Trig { c0, terms } => {
                let mut s = format!("trig({c0:?}");
                for t in terms {
                    s.push_str(&format!(
                        ",{:?}{:?}:{:?}:{:?}",
                        t.axis, t.kind, t.freq, t.amp
                    ));
                }
                s.push(')');
                s
            }
            ScalarField::IndicatorInterval { a, b } => format!("interval({a:?},{b:?})"),
            ScalarField::IndicatorRect { x0, x1, y0, y1 } => {
                format!("rect({x0:?},{x1:?},{y0:?},{y1:?})")
            }
        }
    }
    match spec {
        PlantSpec::Heat1dNeumann { nu, alpha, sensors } => {
            let s: Vec<String> = sensors.iter().map(field).collect();
            format!("heat1d_neumann;nu={nu:?};alpha={alpha:?};sensors={}", s.join("|"))
        }
        PlantSpec::Parabolic2d { nu, alpha, beta, mesh, actuators, sensors } => {
            let mesh_s = match mesh {
                MeshSource::Rect { x_range, y_range, tags } => format!(
                    "rect({:?},{:?},{:?},{:?};tags={:?})",
                    x_range.0, x_range.1, y_range.0, y_range.1, tags
                ),
                MeshSource::File(p) => format!("file({})", p.display()),
            };
            let act: Vec<String> = actuators
                .iter()
                .map(|a| {
                    let BoundaryProfile::SinePi { k } = a.profile;
                    format!("tag={};sine({k})", a.tag)
                })
                .collect();
            let sen: Vec<String> = sensors.iter().map(field).collect();
            format!(
                "parabolic2d;nu={nu:?};alpha={};beta=({},{});mesh={};actuators={};sensors={}",
                field(alpha),
                field(&beta.x),
                field(&beta.y),
                mesh_s,
                act.join("|"),
                sen.join("|")
            )
        }
        PlantSpec::BeamKv { length, alpha, beta, gamma, bc_variant, sensors } => {
            let sen: Vec<String> = sensors
                .iter()
                .map(|s| {
                    format!(
                        "defl={};vel={}",
                        s.deflection.as_ref().map(field).unwrap_or_else(|| "none".into()),
                        s.velocity.as_ref().map(field).unwrap_or_else(|| "none".into())
                    )
                })
                .collect();
            format!(
                "beam_kv;l={length:?};alpha={alpha:?};beta={beta:?};gamma={gamma:?};bc={bc_variant:?};sensors={}",
                sen.join("|")
            )
        }
    }
}

pub fn plant_hash(spec: &PlantSpec) -> String {
    let digest = Sha256::digest(canonical_plant_string(spec).as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Controller artifact: the realization plus the metadata needed to rebuild
/// the matching extended simulation plant.
#[derive(Debug, Clone)]
pub struct ControllerArtifact {
    pub plant_hash: String,
    pub eta: f64,
    pub variant: ExtendedVariant,
    pub controller: ControllerRealization,
}

fn variant_name(v: ExtendedVariant) -> &'static str {
    match v {
        ExtendedVariant::ParabolicFirstOrder => "parabolic_first_order",
        ExtendedVariant::BeamV1 => "beam_v1",
        ExtendedVariant::BeamV2 => "beam_v2",
    }
}

fn variant_from_name(s: &str, line: usize) -> Result<ExtendedVariant> {
    match s {
        "parabolic_first_order" => Ok(ExtendedVariant::ParabolicFirstOrder),
        "beam_v1" => Ok(ExtendedVariant::BeamV1),
        "beam_v2" => Ok(ExtendedVariant::BeamV2),
        _ => Err(Error::ParseError { line, message: format!("unknown variant `{s}`") }),
    }
}

fn write_matrix(out: &mut String, name: &str, m: &DenseMatrix) {
    out.push_str(&format!("matrix {name} {} {}\n", m.rows(), m.cols()));
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

pub fn controller_to_string(art: &ControllerArtifact) -> String {
    let mut out = String::new();
    out.push_str("regsynth-controller v1\n");
    out.push_str(&format!("plant_hash {}\n", art.plant_hash));
    out.push_str(&format!("eta {:.16e}\n", art.eta));
    out.push_str(&format!("variant {}\n", variant_name(art.variant)));
    let c = &art.controller;
    write_matrix(&mut out, "g1", &c.g1);
    write_matrix(&mut out, "g2", &c.g2);
    write_matrix(&mut out, "k1", &c.k1);
    write_matrix(&mut out, "a_lr", &c.a_lr);
    write_matrix(&mut out, "b_lr", &c.b_lr);
    write_matrix(&mut out, "l_r", &c.l_r);
    write_matrix(&mut out, "k2_r", &c.k2_r);
    let hsv_row = DenseMatrix::from_fn(1, c.hsv.len(), |_, j| c.hsv[j]);
    write_matrix(&mut out, "hsv", &hsv_row);
    out
}

pub fn controller_from_string(text: &str) -> Result<ControllerArtifact> {
    let mut lines = text.lines().enumerate().peekable();
    let mut next_line = |expect: &str| -> Result<(usize, String)> {
        for (idx, raw) in lines.by_ref() {
            let body = raw.trim();
            if body.is_empty() {
                continue;
            }
            return Ok((idx + 1, body.to_string()));
        }
        Err(Error::ParseError { line: 0, message: format!("unexpected end of file, wanted {expect}") })
    };
    let (line, header) = next_line("header")?;
    if header != "regsynth-controller v1" {
        return Err(Error::ParseError { line, message: "not a regsynth controller file".into() });
    }
    let (line, hash_line) = next_line("plant_hash")?;
    let plant_hash = hash_line
        .strip_prefix("plant_hash ")
        .ok_or(Error::ParseError { line, message: "expected `plant_hash <hex>`".into() })?
        .trim()
        .to_string();
    let (line, eta_line) = next_line("eta")?;
    let eta: f64 = eta_line
        .strip_prefix("eta ")
        .ok_or(Error::ParseError { line, message: "expected `eta <value>`".into() })?
        .trim()
        .parse()
        .map_err(|_| Error::ParseError { line, message: "bad eta value".into() })?;
    let (line, var_line) = next_line("variant")?;
    let variant = variant_from_name(
        var_line
            .strip_prefix("variant ")
            .ok_or(Error::ParseError { line, message: "expected `variant <name>`".into() })?
            .trim(),
        line,
    )?;

    let mut read_matrix = |name: &str| -> Result<DenseMatrix> {
        let (line, head) = next_line("matrix header")?;
        let toks: Vec<&str> = head.split_whitespace().collect();
        if toks.len() != 4 || toks[0] != "matrix" || toks[1] != name {
            return Err(Error::ParseError {
                line,
                message: format!("expected `matrix {name} <rows> <cols>`, got `{head}`"),
            });
        }
        let rows: usize = toks[2].parse().map_err(|_| Error::ParseError { line, message: "bad row count".into() })?;
        let cols: usize = toks[3].parse().map_err(|_| Error::ParseError { line, message: "bad column count".into() })?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (line, row) = next_line("matrix row")?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::ParseError { line, message: format!("bad number `{t}`") }))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != cols {
                return Err(Error::ParseError {
                    line,
                    message: format!("row has {} entries, expected {cols}", vals.len()),
                });
            }
            data.extend(vals);
        }
        DenseMatrix::from_vec(rows, cols, data)
    };

    let g1 = read_matrix("g1")?;
    let g2 = read_matrix("g2")?;
    let k1 = read_matrix("k1")?;
    let a_lr = read_matrix("a_lr")?;
    let b_lr = read_matrix("b_lr")?;
    let l_r = read_matrix("l_r")?;
    let k2_r = read_matrix("k2_r")?;
    let hsv_m = read_matrix("hsv")?;
    let hsv = (0..hsv_m.cols()).map(|j| hsv_m[(0, j)]).collect();
    Ok(ControllerArtifact {
        plant_hash,
        eta,
        variant,
        controller: ControllerRealization { g1, g2, k1, a_lr, b_lr, l_r, k2_r, hsv },
    })
}

/// Trajectory CSV: `t,y1..yp,yref1..yrefp,e1..ep,u1..um`, 17 significant
/// digits per value.
pub fn trajectory_csv(res: &SimResult) -> String {
    let p = res.outputs.first().map(|y| y.len()).unwrap_or(0);
    let m = res.input.first().map(|u| u.len()).unwrap_or(0);
    let mut out = String::new();
    out.push('t');
    for k in 1..=p {
        out.push_str(&format!(",y{k}"));
    }
    for k in 1..=p {
        out.push_str(&format!(",yref{k}"));
    }
    for k in 1..=p {
        out.push_str(&format!(",e{k}"));
    }
    for k in 1..=m {
        out.push_str(&format!(",u{k}"));
    }
    out.push('\n');
    for i in 0..res.times.len() {
        out.push_str(&format!("{:.16e}", res.times[i]));
        for v in &res.outputs[i] {
            out.push_str(&format!(",{v:.16e}"));
        }
        for v in &res.reference[i] {
            out.push_str(&format!(",{v:.16e}"));
        }
        for v in &res.error[i] {
            out.push_str(&format!(",{v:.16e}"));
        }
        for v in &res.input[i] {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    out
}

/// Hankel singular value CSV: `index,value`.
pub fn hsv_csv(hsv: &[f64]) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in hsv.iter().enumerate() {
        out.push_str(&format!("{},{v:.16e}\n", i + 1));
    }
    out
}

pub fn decay_report(fit: &DecayFit, max_tail: f64, tail_from: f64, abscissa: f64) -> String {
    format!(
        "closed-loop spectral abscissa: {abscissa:.6e}\n\
         decay fit window: [{:.3}, {:.3}]\n\
         M_e = {:.6e}\n\
         w_e = {:.6e}\n\
         fit residual (rms log): {:.3e}\n\
         decaying: {}\n\
         max ||e(t)|| for t >= {:.3}: {:.6e}\n",
        fit.window.0,
        fit.window.1,
        fit.m_e,
        fit.w_e,
        fit.residual,
        fit.is_decaying(),
        tail_from,
        max_tail
    )
}
