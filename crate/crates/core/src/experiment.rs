//! Reproducible experiment runners.
//!
//! Each run resolves its parameters against a table of defaults, writes its
//! artifacts (diagrams as JSON, curves and plot data as CSV, selection traces,
//! SVG renderings) into the output directory and finishes with a
//! `manifest.json` listing parameters, seed, version and files. Replicates run
//! concurrently on seeds `seed + replicate`; aggregation is sequential, so
//! identical specs give byte-identical files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::data::{
    gen_circle, gen_interlocked_circles, gen_uniform_box, image_to_pointcloud, matern_outliers, random_rotation,
    rescaled_intensity, rotate_into, IntensityImage, Window,
};
use crate::error::{Error, Result};
use crate::filtration::PowerParam;
use crate::geometry::{
    eval_weights, partition, DtmMode, PointCloud, WeightAssignment, WeightEvaluator, WeightFunctionKind,
};
use crate::grid::{lower_star_diagram, sample_grid, BBox};
use crate::io::point_cloud_to_csv;
use crate::metrics::{birth_influence, bottleneck_distance, winf_influence};
use crate::persistence::{max_persistence, weighted_rips_diagram, FlagOptions, PersistenceDiagram};
use crate::rng::{derive_seed, seeded};
use crate::selection::{build_ladder, heuristic_trace, lepski_select, LepskiConfig, Pipeline, StandardCondition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    AdaptiveQ,
    SublevelCompare,
    Highdim,
    ImageRecover,
    Influence,
}

impl ExperimentName {
    pub const ALL: [Self; 5] =
        [Self::AdaptiveQ, Self::SublevelCompare, Self::Highdim, Self::ImageRecover, Self::Influence];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AdaptiveQ => "adaptive_q",
            Self::SublevelCompare => "sublevel_compare",
            Self::Highdim => "highdim",
            Self::ImageRecover => "image_recover",
            Self::Influence => "influence",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter { name: "experiment".into(), value: s.into() })
    }
}

/// Default parameter table. Every key listed here is required at run time.
pub fn default_parameters(name: ExperimentName) -> BTreeMap<String, String> {
    let circle: &[(&str, &str)] =
        &[("radius", "1"), ("sigma", "0.01"), ("mean_offspring", "10"), ("cluster_radius", "0.3")];
    let lepski: &[(&str, &str)] =
        &[("m_min", "20"), ("m_max", "200"), ("theta", "1.07"), ("delta", "0.1"), ("a", "1"), ("b", "2")];
    let own: &[(&str, &str)] = match name {
        ExperimentName::AdaptiveQ => &[
            ("n", "500"),
            ("replicates", "30"),
            ("m_low", "50"),
            ("m_high", "150"),
            ("heuristic_replicates", "50"),
            ("p", "1"),
            ("dim", "1"),
        ],
        ExperimentName::SublevelCompare => {
            &[("n", "500"), ("m", "50"), ("resolution", "0.5"), ("q", "lepski"), ("p", "1"), ("dim", "1")]
        }
        ExperimentName::Highdim => &[
            ("n_per_circle", "200"),
            ("outlier_fraction", "0.125"),
            ("ambient_dim", "100"),
            ("box", "0.2"),
            ("m_min", "10"),
            ("m_max", "100"),
            ("theta", "1.07"),
            ("delta", "0.1"),
            ("a", "1"),
            ("b", "100"),
            ("p", "1"),
        ],
        ExperimentName::ImageRecover => &[
            ("clean_image", "digit6"),
            ("contaminated_image", "digit8"),
            ("points_per_unit_intensity", "10"),
            ("budget", "0.1"),
            ("p", "1"),
        ],
        ExperimentName::Influence => &[
            ("n", "500"),
            ("radius", "1"),
            ("sigma", "0"),
            ("m_values", "10,20,30,40,50,60,70,80,90,100,110,120"),
            ("replicates", "10"),
            ("q", "100"),
            ("k", "50"),
            ("box", "0.1"),
            ("grid_extent", "1.5"),
            ("grid_resolution", "0.05"),
            ("p", "1"),
        ],
    };
    let shared: Vec<(&str, &str)> = match name {
        ExperimentName::AdaptiveQ => circle.iter().chain(lepski).copied().collect(),
        ExperimentName::SublevelCompare => circle.iter().chain(lepski).copied().collect(),
        _ => Vec::new(),
    };
    shared.into_iter().chain(own.iter().copied()).map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    /// Experiment `name` with its default parameters.
    pub fn new(name: ExperimentName, seed: u64, output_dir: impl Into<PathBuf>) -> Self {
        Self { name, parameters: default_parameters(name), seed, output_dir: output_dir.into() }
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        let defaults = default_parameters(self.name);
        if let Some(key) = defaults.keys().find(|k| !self.parameters.contains_key(*k)) {
            return Err(Error::MissingParameter(key.clone()));
        }
        if let Some(key) = self.parameters.keys().find(|k| !defaults.contains_key(*k)) {
            return Err(Error::InvalidParameter { name: key.clone(), value: "unknown parameter".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: ExperimentName,
    pub version: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, String>,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub manifest: Manifest,
    /// Same content as `summary.json`.
    pub summary: serde_json::Value,
}

/// Runs one experiment and writes its artifacts.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    fs::create_dir_all(&spec.output_dir)?;
    let params = Params(&spec.parameters);
    let mut out = Artifacts { dir: spec.output_dir.clone(), files: Vec::new(), notes: Vec::new() };
    let summary = match spec.name {
        ExperimentName::AdaptiveQ => adaptive_q(&params, spec.seed, &mut out)?,
        ExperimentName::SublevelCompare => sublevel_compare(&params, spec.seed, &mut out)?,
        ExperimentName::Highdim => highdim(&params, spec.seed, &mut out)?,
        ExperimentName::ImageRecover => image_recover(&params, spec.seed, &mut out)?,
        ExperimentName::Influence => influence(&params, spec.seed, &mut out)?,
    };
    out.json("summary.json", &summary)?;
    let manifest = Manifest {
        experiment: spec.name,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: spec.seed,
        parameters: spec.parameters.clone(),
        files: out.files.clone(),
        notes: out.notes.clone(),
    };
    fs::write(spec.output_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(ExperimentOutcome { manifest, summary })
}

struct Params<'a>(&'a BTreeMap<String, String>);

impl Params<'_> {
    fn raw(&self, key: &str) -> Result<&str> {
        self.0.get(key).map(String::as_str).ok_or_else(|| Error::MissingParameter(key.into()))
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key)?;
        raw.trim().parse().map_err(|_| Error::InvalidParameter { name: key.into(), value: raw.into() })
    }

    fn usize(&self, key: &str) -> Result<usize> {
        self.parse(key)
    }

    fn f64(&self, key: &str) -> Result<f64> {
        self.parse(key)
    }

    fn power(&self) -> Result<PowerParam> {
        self.raw("p")?.parse()
    }

    fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let raw = self.raw(key)?;
        raw.split(',')
            .map(|t| t.trim().parse().map_err(|_| Error::InvalidParameter { name: key.into(), value: raw.into() }))
            .collect()
    }

    fn lepski(&self) -> Result<LepskiConfig> {
        let ab = StandardCondition::new(self.f64("a")?, self.f64("b")?)?;
        Ok(LepskiConfig::new(self.usize("m_min")?, self.usize("m_max")?, self.f64("theta")?, self.f64("delta")?, ab))
    }
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
    notes: Vec<String>,
}

impl Artifacts {
    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, serde_json::to_string_pretty(value)?)
    }

    /// JSON, CSV and SVG renderings of one diagram.
    fn diagram(&mut self, stem: &str, diagram: &PersistenceDiagram, title: &str) -> Result<()> {
        self.write(&format!("{stem}.json"), diagram.to_json()?)?;
        self.write(&format!("{stem}.csv"), diagram.to_csv())?;
        self.write(&format!("{stem}.svg"), diagram_svg(diagram, title))
    }
}

/// Independent sub-stream `tag` of a replicate seed.
fn stream(seed: u64, tag: u64) -> u64 {
    seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn contaminated_circle(params: &Params, n: usize, m: usize, seed: u64) -> Result<(PointCloud, usize)> {
    let mut pts = gen_circle(n, params.f64("radius")?, params.f64("sigma")?, stream(seed, 1))?.to_vecs();
    let outliers = matern_outliers(
        m,
        Window::default(),
        params.f64("mean_offspring")?,
        params.f64("cluster_radius")?,
        stream(seed, 2),
    )?;
    pts.extend(outliers);
    Ok((PointCloud::new(pts)?, n))
}

fn top_persistences(diagram: &PersistenceDiagram, dim: usize, count: usize) -> Vec<f64> {
    let mut p = diagram.finite_persistences(dim);
    p.sort_by(|a, b| b.total_cmp(a));
    p.truncate(count);
    p
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = values.into_iter().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

#[derive(Debug, Clone, Serialize)]
struct AdaptiveRow {
    replicate: usize,
    m: usize,
    n: usize,
    m_lepski: usize,
    rel_err_lepski: f64,
    no_admissible_rung: bool,
    m_resample: Option<usize>,
    rel_err_resample: Option<f64>,
}

fn adaptive_q(params: &Params, seed: u64, out: &mut Artifacts) -> Result<serde_json::Value> {
    let n = params.usize("n")?;
    let replicates = params.usize("replicates")?;
    let (m_low, m_high) = (params.usize("m_low")?, params.usize("m_high")?);
    if m_low > m_high {
        return Err(Error::InvalidParameter { name: "m_low".into(), value: m_low.to_string() });
    }
    let n_resample = params.usize("heuristic_replicates")?;
    let (p, dim) = (params.power()?, params.usize("dim")?);
    let base = params.lepski()?;

    let results = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(seed, r as u64);
            let m = seeded(stream(rep_seed, 0)).random_range(m_low..=m_high);
            let (cloud, _) = contaminated_circle(params, n, m, rep_seed)?;
            let config = LepskiConfig { partition_seed: Some(stream(rep_seed, 3)), ..base };
            let lepski = lepski_select(&cloud, &config, Pipeline::Weighted { p, max_dim: 2, t_max: None }, dim)?;
            let resample = if n_resample >= 2 {
                let grid: Vec<usize> = build_ladder(&config, cloud.len())?.iter().map(|&(_, m)| 2 * m + 1).collect();
                Some(heuristic_trace(&cloud, &grid, n_resample, stream(rep_seed, 4), p, 2, dim)?)
            } else {
                None
            };
            Ok((m, cloud.len(), lepski, resample))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(replicates);
    let mut csv =
        String::from("replicate,m,n,m_lepski,rel_err_lepski,no_admissible_rung,m_resample,rel_err_resample\n");
    for (r, (m, n_total, lepski, resample)) in results.iter().enumerate() {
        out.json(&format!("traces/replicate_{r:03}_lepski.json"), lepski)?;
        if let Some(trace) = resample {
            out.json(&format!("traces/replicate_{r:03}_resample.json"), trace)?;
            let curve: String = trace.curve.iter().map(|c| format!("{},{}\n", c.q, c.value)).collect();
            out.write(&format!("curves/replicate_{r:03}_resample.csv"), format!("q,sum_bottleneck\n{curve}"))?;
        }
        let rel = |mh: usize| (mh as f64 - *m as f64) / *m as f64;
        let row = AdaptiveRow {
            replicate: r,
            m: *m,
            n: *n_total,
            m_lepski: lepski.chosen_m(),
            rel_err_lepski: rel(lepski.chosen_m()),
            no_admissible_rung: lepski.no_admissible_rung,
            m_resample: resample.as_ref().map(|t| t.chosen_m()),
            rel_err_resample: resample.as_ref().map(|t| rel(t.chosen_m())),
        };
        let opt = |v: Option<String>| v.unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.replicate,
            row.m,
            row.n,
            row.m_lepski,
            row.rel_err_lepski,
            row.no_admissible_rung,
            opt(row.m_resample.map(|v| v.to_string())),
            opt(row.rel_err_resample.map(|v| v.to_string())),
        ));
        rows.push(row);
    }
    out.write("relative_error.csv", csv)?;
    let covered = rows.iter().filter(|r| r.m_lepski >= r.m).count();
    Ok(json!({
        "replicates": replicates,
        "lepski_at_least_m": covered,
        "lepski_at_least_m_fraction": covered as f64 / replicates.max(1) as f64,
        "mean_rel_err_lepski": mean(rows.iter().map(|r| r.rel_err_lepski)),
        "mean_rel_err_resample": mean(rows.iter().filter_map(|r| r.rel_err_resample)),
        "rows": rows,
    }))
}

fn sublevel_compare(params: &Params, seed: u64, out: &mut Artifacts) -> Result<serde_json::Value> {
    let (n, m) = (params.usize("n")?, params.usize("m")?);
    let resolution = params.f64("resolution")?;
    let (p, dim) = (params.power()?, params.usize("dim")?);
    let (cloud, n_in) = contaminated_circle(params, n, m, seed)?;
    let partition_seed = stream(seed, 3);
    let q = match params.raw("q")? {
        "lepski" => {
            let config = LepskiConfig { partition_seed: Some(partition_seed), ..params.lepski()? };
            let trace = lepski_select(&cloud, &config, Pipeline::Weighted { p, max_dim: 2, t_max: None }, dim)?;
            out.json("selection_trace.json", &trace)?;
            trace.chosen_q
        }
        _ => params.usize("q")?,
    };
    let kind = WeightFunctionKind::MomDist { q, seed: Some(partition_seed) };
    let weights = eval_weights(&cloud, &kind, &cloud)?;
    let weighted = weighted_rips_diagram(&cloud, &weights, p, FlagOptions::default())?;
    let bbox = BBox::around(&cloud, weights.max())?;
    let grid = sample_grid(&cloud, &kind, bbox, resolution)?;
    let sublevel = lower_star_diagram(&grid)?;

    out.write("point_cloud.csv", point_cloud_to_csv(&cloud))?;
    out.write("weights.csv", weights.to_csv())?;
    out.write("grid.csv", grid.to_csv())?;
    out.diagram("diagram_weighted", &weighted, "weighted Rips")?;
    out.diagram("diagram_sublevel", &sublevel, "grid sublevel")?;
    out.notes.push(format!("grid over [{}, {}] x [{}, {}]", bbox.lo[0], bbox.hi[0], bbox.lo[1], bbox.hi[1]));

    let sup_inliers = weights.values[..n_in].iter().copied().fold(0.0, f64::max);
    let distance = bottleneck_distance(&sublevel, &weighted, dim);
    let bound = sup_inliers + resolution * 2f64.sqrt();
    Ok(json!({
        "q": q,
        "n": cloud.len(),
        "bottleneck": distance,
        "sup_inlier_weight": sup_inliers,
        "bound": bound,
        "within_bound": distance <= bound,
    }))
}

fn highdim(params: &Params, seed: u64, out: &mut Artifacts) -> Result<serde_json::Value> {
    let n_per = params.usize("n_per_circle")?;
    let frac = params.f64("outlier_fraction")?;
    if !(0.0..0.5).contains(&frac) {
        return Err(Error::InvalidParameter { name: "outlier_fraction".into(), value: frac.to_string() });
    }
    let d = params.usize("ambient_dim")?;
    let half = params.f64("box")?;
    let p = params.power()?;
    let base = params.lepski()?;

    let circles = gen_interlocked_circles(n_per, stream(seed, 1))?;
    let mut pts = rotate_into(&circles.to_vecs(), &random_rotation(d, stream(seed, 2))?)?;
    let n = pts.len();
    let m = (frac * n as f64).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded(stream(seed, 3)));
    let replaced = &idx[..m];
    for (&i, o) in replaced.iter().zip(gen_uniform_box(m, -half, half, d, stream(seed, 4))?) {
        pts[i] = o;
    }
    let cloud = PointCloud::new(pts)?;

    let config = LepskiConfig { partition_seed: Some(stream(seed, 5)), ..base };
    let trace = lepski_select(&cloud, &config, Pipeline::Weighted { p, max_dim: 2, t_max: None }, 1)?;
    let q = trace.chosen_q;
    let mom = diagram_for(&cloud, &WeightFunctionKind::MomDist { q, seed: config.partition_seed }, p)?;
    let dtm = diagram_for(&cloud, &WeightFunctionKind::Dtm { k: q, mode: DtmMode::Rms }, p)?;

    out.json("selection_trace.json", &trace)?;
    out.write("point_cloud.csv", point_cloud_to_csv(&cloud))?;
    let mut replaced_sorted = replaced.to_vec();
    replaced_sorted.sort_unstable();
    out.write("outlier_indices.csv", replaced_sorted.iter().map(|i| format!("{i}\n")).collect::<String>())?;
    out.diagram("diagram_momdist", &mom, &format!("MoM-Dist, Q = {q}"))?;
    out.diagram("diagram_dtm", &dtm, &format!("DTM, k = {q}"))?;

    let dominant = |top: &[f64]| top.len() >= 2 && top.get(2).is_none_or(|&third| top[1] > 3.0 * third);
    let (tm, td) = (top_persistences(&mom, 1, 3), top_persistences(&dtm, 1, 3));
    Ok(json!({
        "n": n,
        "outliers": m,
        "q": q,
        "momdist_top_h1": tm,
        "dtm_top_h1": td,
        "momdist_two_dominant": dominant(&tm),
        "dtm_two_dominant": dominant(&td),
    }))
}

fn diagram_for(cloud: &PointCloud, kind: &WeightFunctionKind, p: PowerParam) -> Result<PersistenceDiagram> {
    weighted_rips_diagram(cloud, &eval_weights(cloud, kind, cloud)?, p, FlagOptions::default())
}

fn load_image(spec: &str) -> Result<IntensityImage> {
    match spec {
        "digit6" => Ok(crate::data::fixtures::digit6()),
        "digit8" => Ok(crate::data::fixtures::digit8()),
        path => IntensityImage::from_pgm(&fs::read(Path::new(path))?),
    }
}

fn image_recover(params: &Params, seed: u64, out: &mut Artifacts) -> Result<serde_json::Value> {
    let clean_img = load_image(params.raw("clean_image")?)?;
    let cont_img = load_image(params.raw("contaminated_image")?)?;
    let factor = params.f64("points_per_unit_intensity")?;
    let budget = params.f64("budget")?;
    if !(budget > 0.0 && budget < 0.5) {
        return Err(Error::InvalidParameter { name: "budget".into(), value: budget.to_string() });
    }
    let p = params.power()?;

    let clean = PointCloud::new(image_to_pointcloud(&clean_img, factor, stream(seed, 1))?)?;
    let cont = PointCloud::new(image_to_pointcloud(&cont_img, factor, stream(seed, 2))?)?;
    let q = 1 + 2 * (budget * clean.len() as f64).ceil() as usize;
    let partition_seed = stream(seed, 3);

    let plain_clean = diagram_for(&clean, &WeightFunctionKind::PlainDistance, p)?;
    let plain_cont = diagram_for(&cont, &WeightFunctionKind::PlainDistance, p)?;
    let mom = diagram_for(&cont, &WeightFunctionKind::MomDist { q, seed: Some(partition_seed) }, p)?;
    let part = partition(&cont, q, partition_seed, true)?;
    let centers = cont_img.pixel_centers();
    let rescaled = rescaled_intensity(&cont, &part, &centers)?;

    out.write("clean_points.csv", point_cloud_to_csv(&clean))?;
    out.write("contaminated_points.csv", point_cloud_to_csv(&cont))?;
    out.diagram("diagram_plain_clean", &plain_clean, "distance function, clean")?;
    out.diagram("diagram_plain_contaminated", &plain_cont, "distance function, contaminated")?;
    out.diagram("diagram_momdist", &mom, &format!("MoM-Dist, Q = {q}"))?;
    let mut csv = String::from("row,col,x,y,original,rescaled\n");
    for (i, (c, v)) in centers.iter().zip(&rescaled).enumerate() {
        let (row, col) = (i / cont_img.width, i % cont_img.width);
        csv.push_str(&format!("{row},{col},{},{},{},{v}\n", c[0], c[1], cont_img.get(row, col)));
    }
    out.write("rescaled_intensity.csv", csv)?;
    out.notes.push("rescaled intensity maximum taken over pixel centers".into());

    Ok(json!({
        "n_clean": clean.len(),
        "n": cont.len(),
        "q": q,
        "plain_clean_top_h1": top_persistences(&plain_clean, 1, 3),
        "plain_contaminated_top_h1": top_persistences(&plain_cont, 1, 3),
        "momdist_top_h1": top_persistences(&mom, 1, 3),
    }))
}

/// One method's measurements on one contaminated replicate.
#[derive(Debug, Clone, Serialize)]
struct InfluenceRow {
    m: usize,
    replicate: usize,
    method: &'static str,
    delta_b: f64,
    max_h1_persistence: f64,
    winf_h1: f64,
    sup_gap: f64,
}

fn influence(params: &Params, seed: u64, out: &mut Artifacts) -> Result<serde_json::Value> {
    let n = params.usize("n")?;
    let (radius, sigma) = (params.f64("radius")?, params.f64("sigma")?);
    let m_values = params.usize_list("m_values")?;
    let replicates = params.usize("replicates")?;
    let (q, k) = (params.usize("q")?, params.usize("k")?);
    let half = params.f64("box")?;
    let (extent, res) = (params.f64("grid_extent")?, params.f64("grid_resolution")?);
    let p = params.power()?;
    if !(extent > 0.0 && res > 0.0) {
        return Err(Error::InvalidParameter { name: "grid_resolution".into(), value: res.to_string() });
    }
    let steps = (2.0 * extent / res + 1e-9).floor() as usize;
    let grid: Vec<[f64; 2]> = (0..=steps)
        .flat_map(|i| (0..=steps).map(move |j| [-extent + i as f64 * res, -extent + j as f64 * res]))
        .collect();
    out.notes.push(format!(
        "sup-norm gap evaluated on the sample points and a {res}-spaced grid over [-{extent}, {extent}]^2"
    ));

    let clean: Vec<(PointCloud, PersistenceDiagram, WeightEvaluator)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let cloud = gen_circle(n, radius, sigma, stream(derive_seed(seed, r as u64), 1))?;
            let diagram = diagram_for(&cloud, &WeightFunctionKind::PlainDistance, p)?;
            let eval = WeightEvaluator::new(&cloud, &WeightFunctionKind::PlainDistance)?;
            Ok((cloud, diagram, eval))
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = m_values.iter().flat_map(|&m| (0..replicates).map(move |r| (m, r))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(m, r)| {
            let rep_seed = derive_seed(seed, r as u64);
            let (cloud, d_clean, f_clean) = &clean[r];
            let outliers = gen_uniform_box(m, -half, half, 2, stream(rep_seed, 100 + m as u64))?;
            let x0 = outliers
                .first()
                .cloned()
                .ok_or(Error::InvalidParameter { name: "m_values".into(), value: "0".into() })?;
            let mut pts = cloud.to_vecs();
            pts.extend(outliers);
            let composite = PointCloud::new(pts)?;
            let mut probe: Vec<Vec<f64>> = grid.iter().map(|g| g.to_vec()).collect();
            probe.extend(composite.points().map(<[f64]>::to_vec));
            let methods = [
                ("plain", WeightFunctionKind::PlainDistance),
                ("momdist", WeightFunctionKind::MomDist { q, seed: Some(stream(rep_seed, 200 + m as u64)) }),
                ("dtm", WeightFunctionKind::Dtm { k, mode: DtmMode::Rms }),
            ];
            methods
                .into_iter()
                .map(|(method, kind)| {
                    let f = WeightEvaluator::new(&composite, &kind)?;
                    let weights = WeightAssignment { values: f.eval_many(composite.points().collect::<Vec<_>>())? };
                    let diagram = weighted_rips_diagram(&composite, &weights, p, FlagOptions::default())?;
                    Ok(InfluenceRow {
                        m,
                        replicate: r,
                        method,
                        delta_b: birth_influence(f_clean, &f, &x0)?,
                        max_h1_persistence: max_persistence(&diagram, 1),
                        winf_h1: bottleneck_distance(&diagram, d_clean, 1),
                        sup_gap: winf_influence(f_clean, &f, &probe)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();

    let mut csv = String::from("m,replicate,method,delta_b,max_h1_persistence,winf_h1,sup_gap\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.m, r.replicate, r.method, r.delta_b, r.max_h1_persistence, r.winf_h1, r.sup_gap
        ));
    }
    out.write("influence_replicates.csv", csv)?;

    let mut curves = Vec::new();
    let mut csv = String::from("m,method,delta_b,max_h1_persistence,winf_h1,sup_gap\n");
    for &m in &m_values {
        for method in ["plain", "momdist", "dtm"] {
            let sel: Vec<&InfluenceRow> = rows.iter().filter(|r| r.m == m && r.method == method).collect();
            let avg = |f: fn(&InfluenceRow) -> f64| mean(sel.iter().map(|r| f(r)));
            let point = json!({
                "m": m,
                "method": method,
                "delta_b": avg(|r| r.delta_b),
                "max_h1_persistence": avg(|r| r.max_h1_persistence),
                "winf_h1": avg(|r| r.winf_h1),
                "sup_gap": avg(|r| r.sup_gap),
            });
            csv.push_str(&format!(
                "{m},{method},{},{},{},{}\n",
                point["delta_b"], point["max_h1_persistence"], point["winf_h1"], point["sup_gap"]
            ));
            curves.push(point);
        }
    }
    out.write("influence_curves.csv", csv)?;
    Ok(json!({ "q": q, "k": k, "curves": curves, "rows": rows }))
}

/// Minimal SVG persistence-diagram plot: H0 in blue, H1 in orange,
/// essential classes on a dashed line above the finite range.
pub fn diagram_svg(diagram: &PersistenceDiagram, title: &str) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 40.0;
    let finite = diagram.pairs.iter().flat_map(|p| [p.birth, p.death]).filter(|v| v.is_finite());
    let hi = finite.fold(0.0, f64::max).max(1e-9) * 1.1;
    let scale = |v: f64| PAD + (SIZE - 2.0 * PAD) * v / hi;
    let y = |v: f64| SIZE - scale(v);
    let inf_y = PAD / 2.0;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    );
    s.push_str(&format!("<title>{}</title>\n", escape(title)));
    s.push_str(&format!(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{3}\" stroke=\"#999\"/>\n",
        scale(0.0),
        y(0.0),
        scale(hi),
        y(hi)
    ));
    s.push_str(&format!(
        "<line x1=\"{PAD}\" y1=\"{inf_y}\" x2=\"{}\" y2=\"{inf_y}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
        SIZE - PAD
    ));
    s.push_str(&format!("<text x=\"{PAD}\" y=\"{}\" font-size=\"12\">{}</text>\n", SIZE - 8.0, escape(title)));
    for p in &diagram.pairs {
        let color = if p.dim == 0 { "#1f77b4" } else { "#ff7f0e" };
        let cy = if p.death.is_finite() { y(p.death) } else { inf_y };
        s.push_str(&format!("<circle cx=\"{:.2}\" cy=\"{cy:.2}\" r=\"3\" fill=\"{color}\"/>\n", scale(p.birth)));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for name in ExperimentName::ALL {
            assert_eq!(name.as_str().parse::<ExperimentName>().unwrap(), name);
        }
        assert!("nope".parse::<ExperimentName>().is_err());
    }

    #[test]
    fn missing_parameter_is_named() {
        let mut spec = ExperimentSpec::new(ExperimentName::Influence, 1, "unused");
        spec.parameters.remove("k");
        match spec.validate() {
            Err(Error::MissingParameter(name)) => assert_eq!(name, "k"),
            other => panic!("unexpected {other:?}"),
        }
        let spec = ExperimentSpec::new(ExperimentName::Influence, 1, "unused").set("bogus", 3);
        assert!(matches!(spec.validate(), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn svg_contains_every_point() {
        let d = PersistenceDiagram::new(vec![
            crate::persistence::PersistencePair::new(0, 0.0, f64::INFINITY),
            crate::persistence::PersistencePair::new(1, 0.2, 0.9),
        ]);
        let svg = diagram_svg(&d, "a < b");
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("a &lt; b"));
    }
}
