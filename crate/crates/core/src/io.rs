//! CSV and SVG emission with JSON provenance sidecars.
//!
//! Floats are written with 17 significant digits so a CSV reproduces the
//! computed bits exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bellman::GridFunction;
use crate::ergopt::{EmpiricalMeasure, ScheduleRow};
use crate::error::Result;
use crate::skew::PointCloud;

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Header `x,y`.
pub fn write_cloud_csv(path: &Path, cloud: &PointCloud) -> Result<()> {
    write_rows(
        path,
        &["x", "y"],
        cloud.points.iter().map(|&(x, y)| [fmt_f64(x), fmt_f64(y)]),
    )
}

/// Header `x,v`, one row per node.
pub fn write_grid_csv(path: &Path, g: &GridFunction) -> Result<()> {
    write_rows(
        path,
        &["x", "v"],
        g.values()
            .iter()
            .enumerate()
            .map(|(i, &v)| [fmt_f64(g.node(i)), fmt_f64(v)]),
    )
}

/// Header `lambda,umax,ulebesgue,oracle,gap`.
pub fn write_schedule_csv(path: &Path, rows: &[ScheduleRow]) -> Result<()> {
    write_rows(
        path,
        &["lambda", "umax", "ulebesgue", "oracle", "gap"],
        rows.iter().map(|r| {
            [r.lambda, r.umax, r.ulebesgue, r.oracle, r.gap]
                .into_iter()
                .map(fmt_f64)
                .collect::<Vec<_>>()
        }),
    )
}

/// Header `x,c,a,w`.
pub fn write_measure_csv(path: &Path, mu: &EmpiricalMeasure) -> Result<()> {
    write_rows(
        path,
        &["x", "c", "a", "w"],
        mu.atoms
            .iter()
            .map(|t| [fmt_f64(t.x), t.c.to_string(), t.a.to_string(), fmt_f64(t.w)]),
    )
}

/// Hex SHA-256 of a value's JSON serialisation.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Provenance written next to every CSV.
#[derive(Clone, Debug, Serialize)]
pub struct Sidecar<T: Serialize> {
    pub artifact: String,
    pub config_hash: String,
    pub seed: u64,
    pub lambda: f64,
    pub details: T,
}

/// `foo.csv` gets `foo.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut file = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

pub fn write_sidecar<T: Serialize>(csv: &Path, sidecar: &Sidecar<T>) -> Result<()> {
    write_json(&sidecar_path(csv), sidecar)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mark {
    Dots,
    Line,
}

/// One layer of an SVG plot.
#[derive(Clone, Debug)]
pub struct Series<'a> {
    pub points: &'a [(f64, f64)],
    pub color: &'a str,
    pub mark: Mark,
}

/// Dots drawn per layer; larger layers are thinned evenly.
pub const MAX_DOTS: usize = 20_000;

/// Plain scatter/polyline plot over the data bounds.
pub fn write_svg(path: &Path, title: &str, layers: &[Series<'_>]) -> Result<()> {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const PAD: f64 = 40.0;
    let all = layers.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{PAD}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
        escape(title)
    ));
    s.push_str(&format!(
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    ));
    s.push_str(&format!(
        "<text x=\"{PAD}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">x: [{x0:.3}, {x1:.3}]  y: [{y0:.3}, {y1:.3}]</text>\n",
        H - 12.0
    ));
    for layer in layers {
        match layer.mark {
            Mark::Dots => {
                s.push_str(&format!("<g fill=\"{}\">\n", layer.color));
                let stride = layer.points.len().div_ceil(MAX_DOTS).max(1);
                for &(x, y) in layer.points.iter().step_by(stride) {
                    s.push_str(&format!(
                        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"0.8\"/>\n",
                        sx(x),
                        sy(y)
                    ));
                }
                s.push_str("</g>\n");
            }
            Mark::Line => {
                let pts: Vec<String> = layer
                    .points
                    .iter()
                    .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                    .collect();
                s.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"{}\"/>\n",
                    layer.color,
                    pts.join(" ")
                ));
            }
        }
    }
    s.push_str("</svg>\n");
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, s)?;
    Ok(())
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skew::CloudMeta;

    #[test]
    fn csv_round_trips_bits() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let cloud = PointCloud {
            points: vec![(0.1, 1.0 / 3.0), (0.7, -2.5e-300)],
            error_radius: 0.0,
            meta: CloudMeta::default(),
        };
        write_cloud_csv(&p, &cloud).unwrap();
        let mut r = csv::Reader::from_path(&p).unwrap();
        assert_eq!(r.headers().unwrap(), vec!["x", "y"]);
        let back: Vec<(f64, f64)> = r
            .records()
            .map(|rec| {
                let rec = rec.unwrap();
                (rec[0].parse().unwrap(), rec[1].parse().unwrap())
            })
            .collect();
        assert_eq!(back, cloud.points);
    }

    #[test]
    fn hash_is_stable() {
        let a = config_hash(&serde_json::json!({"lambda": 0.48})).unwrap();
        assert_eq!(
            a,
            config_hash(&serde_json::json!({"lambda": 0.48})).unwrap()
        );
        assert_ne!(
            a,
            config_hash(&serde_json::json!({"lambda": 0.49})).unwrap()
        );
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn svg_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let svg = dir.path().join("sub/p.svg");
        let pts = [(0.0, 1.0), (0.5, 2.0)];
        write_svg(
            &svg,
            "a < b",
            &[
                Series {
                    points: &pts,
                    color: "black",
                    mark: Mark::Dots,
                },
                Series {
                    points: &pts,
                    color: "green",
                    mark: Mark::Line,
                },
            ],
        )
        .unwrap();
        let text = fs::read_to_string(&svg).unwrap();
        assert!(text.contains("<polyline") && text.contains("a &lt; b"));

        let csv = dir.path().join("g.csv");
        write_grid_csv(&csv, &GridFunction::zeros(4)).unwrap();
        write_sidecar(
            &csv,
            &Sidecar {
                artifact: "grid".into(),
                config_hash: "h".into(),
                seed: 1,
                lambda: 0.5,
                details: (),
            },
        )
        .unwrap();
        assert!(sidecar_path(&csv).exists());
        assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 5);
    }
}
