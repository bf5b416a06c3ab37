//! Synthetic point clouds, random rotations, and grayscale images.

use std::f64::consts::TAU;

use rand::Rng as _;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{momdist, BlockPartition, PointCloud};
use crate::rng::seeded;

/// `n` points at uniformly random angles on a centred circle, each
/// coordinate perturbed by `N(0, noise_sigma^2)`.
pub fn gen_circle(n: usize, radius: f64, noise_sigma: f64, seed: u64) -> Result<PointCloud> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter { name: "radius".into(), value: radius.to_string() });
    }
    let noise = Normal::new(0.0, noise_sigma)
        .map_err(|_| Error::InvalidParameter { name: "noise_sigma".into(), value: noise_sigma.to_string() })?;
    let mut rng = seeded(seed);
    let pts = (0..n)
        .map(|_| {
            let a = rng.random_range(0.0..TAU);
            let (s, c) = a.sin_cos();
            vec![radius * c + noise.sample(&mut rng), radius * s + noise.sample(&mut rng)]
        })
        .collect();
    PointCloud::new(pts)
}

/// Axis-aligned planar window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Window {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Window {
    pub fn area(&self) -> f64 {
        (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }
}

impl Default for Window {
    fn default() -> Self {
        Self { lo: [-3.0, -3.0], hi: [3.0, 3.0] }
    }
}

/// Output of the Matérn cluster process; children outside the window are dropped.
#[derive(Debug, Clone, Default)]
pub struct MaternSample {
    pub parents: Vec<[f64; 2]>,
    pub points: Vec<[f64; 2]>,
}

impl MaternSample {
    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.to_vec()).collect()
    }
}

fn poisson(rng: &mut crate::rng::Rng, mean: f64) -> Result<usize> {
    if mean == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean)
        .map_err(|_| Error::InvalidParameter { name: "intensity".into(), value: mean.to_string() })?;
    Ok(d.sample(rng) as usize)
}

/// Matérn cluster process: Poisson parents, each with a Poisson number of
/// children uniform in the disk of `cluster_radius` around it.
pub fn gen_matern_cluster(
    window: Window,
    parent_intensity: f64,
    mean_offspring: f64,
    cluster_radius: f64,
    seed: u64,
) -> Result<MaternSample> {
    for (name, v) in
        [("parent_intensity", parent_intensity), ("mean_offspring", mean_offspring), ("cluster_radius", cluster_radius)]
    {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter { name: name.into(), value: v.to_string() });
        }
    }
    if !(window.area() > 0.0) {
        return Err(Error::InvalidParameter { name: "window".into(), value: format!("{window:?}") });
    }
    let mut rng = seeded(seed);
    let k = poisson(&mut rng, parent_intensity * window.area())?;
    let mut out = MaternSample::default();
    for _ in 0..k {
        let parent = [rng.random_range(window.lo[0]..window.hi[0]), rng.random_range(window.lo[1]..window.hi[1])];
        out.parents.push(parent);
        for _ in 0..poisson(&mut rng, mean_offspring)? {
            let r = cluster_radius * rng.random::<f64>().sqrt();
            let (s, c) = rng.random_range(0.0..TAU).sin_cos();
            let child = [parent[0] + r * c, parent[1] + r * s];
            if window.contains(child) {
                out.points.push(child);
            }
        }
    }
    Ok(out)
}

/// Exactly `m` Matérn outliers: the process is rerun with derived seeds
/// until it yields at least `m` points, then truncated. The parent intensity
/// targets `m` points in expectation.
pub fn matern_outliers(
    m: usize,
    window: Window,
    mean_offspring: f64,
    cluster_radius: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if m == 0 {
        return Ok(Vec::new());
    }
    let intensity = m as f64 / (window.area() * mean_offspring);
    for attempt in 0..1000u64 {
        let s = gen_matern_cluster(
            window,
            intensity,
            mean_offspring,
            cluster_radius,
            crate::rng::derive_seed(seed, attempt << 32),
        )?;
        if s.points.len() >= m {
            return Ok(s.points[..m].iter().map(|p| p.to_vec()).collect());
        }
    }
    Err(Error::InvalidConfig(format!("Matérn process never produced {m} points")))
}

/// `m` points uniform in `[low, high]^d`.
pub fn gen_uniform_box(m: usize, low: f64, high: f64, d: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if !(low < high) {
        return Err(Error::InvalidParameter { name: "box".into(), value: format!("[{low}, {high}]") });
    }
    let mut rng = seeded(seed);
    Ok((0..m).map(|_| (0..d).map(|_| rng.random_range(low..high)).collect()).collect())
}

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        Self { n, data: (0..n * n).map(|k| self.data[(k % n) * n + k / n]).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                for c in 0..n {
                    data[r * n + c] += a * other.get(k, c);
                }
            }
        }
        Self { n, data }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|r| (0..self.n).map(|c| self.get(r, c) * x[c]).sum()).collect()
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs())).unwrap_or(k);
            if a[p * n + k] == 0.0 {
                return 0.0;
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det *= pivot;
            for r in k + 1..n {
                let f = a[r * n + k] / pivot;
                for c in k..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
            }
        }
        det
    }
}

/// Uniformly random rotation of `R^d`: modified Gram–Schmidt on the columns
/// of a Gaussian matrix, with the last column negated if needed so that the
/// determinant is `+1`.
pub fn random_rotation(d: usize, seed: u64) -> Result<Matrix> {
    if d == 0 {
        return Err(Error::InvalidParameter { name: "d".into(), value: "0".into() });
    }
    let mut rng = seeded(seed);
    // cols[c] is column c
    let mut cols: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    for c in 0..d {
        let (done, rest) = cols.split_at_mut(c);
        let col = &mut rest[0];
        for prev in done.iter() {
            let dot: f64 = col.iter().zip(prev).map(|(a, b)| a * b).sum();
            col.iter_mut().zip(prev).for_each(|(v, p)| *v -= dot * p);
        }
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        col.iter_mut().for_each(|v| *v /= norm);
    }
    let mut m = Matrix { n: d, data: (0..d * d).map(|k| cols[k % d][k / d]).collect() };
    if m.det() < 0.0 {
        for r in 0..d {
            m.data[r * d + d - 1] = -m.data[r * d + d - 1];
        }
    }
    Ok(m)
}

/// Pads each point with zeros to the matrix size and rotates it.
pub fn rotate_into(points: &[Vec<f64>], rotation: &Matrix) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .map(|p| {
            if p.len() > rotation.n {
                return Err(Error::DimensionMismatch { expected: rotation.n, got: p.len() });
            }
            let mut x = p.clone();
            x.resize(rotation.n, 0.0);
            Ok(rotation.apply(&x))
        })
        .collect()
}

/// Two linked unit circles in `R^3`: one in the xy-plane about the origin,
/// one in the xz-plane about `(1, 0, 0)`.
pub fn gen_interlocked_circles(n_per_circle: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = seeded(seed);
    let mut pts = Vec::with_capacity(2 * n_per_circle);
    for _ in 0..n_per_circle {
        let (s, c) = rng.random_range(0.0..TAU).sin_cos();
        pts.push(vec![c, s, 0.0]);
    }
    for _ in 0..n_per_circle {
        let (s, c) = rng.random_range(0.0..TAU).sin_cos();
        pts.push(vec![1.0 + c, 0.0, s]);
    }
    PointCloud::new(pts)
}

/// Grayscale image with intensities in `[0, 1]`; row 0 is the top row.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage {
    pub width: usize,
    pub height: usize,
    pub intensities: Vec<f64>,
}

impl IntensityImage {
    pub fn new(width: usize, height: usize, intensities: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || intensities.len() != width * height {
            return Err(Error::InvalidConfig(format!("{width}x{height} image with {} values", intensities.len())));
        }
        let intensities = intensities.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(Self { width, height, intensities })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.intensities[row * self.width + col]
    }

    /// Parses ASCII (P2) or binary (P5) PGM, normalising by the maxval.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut token = || -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Parse("truncated PGM header".into()));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        let magic = token()?;
        let num = |s: String| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad PGM number `{s}`")));
        let width = num(token()?)?;
        let height = num(token()?)?;
        let maxval = num(token()?)?;
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Parse(format!("PGM maxval {maxval} out of range")));
        }
        let count = width * height;
        let raw: Vec<usize> = match magic.as_str() {
            "P2" => (0..count).map(|_| token().and_then(num)).collect::<Result<_>>()?,
            "P5" => {
                let body = &bytes[(pos + 1).min(bytes.len())..];
                let wide = maxval > 255;
                let need = if wide { 2 * count } else { count };
                if body.len() < need {
                    return Err(Error::Parse("truncated PGM raster".into()));
                }
                if wide {
                    body.chunks_exact(2).take(count).map(|c| ((c[0] as usize) << 8) | c[1] as usize).collect()
                } else {
                    body[..count].iter().map(|&b| b as usize).collect()
                }
            }
            other => return Err(Error::Parse(format!("unsupported image format `{other}`"))),
        };
        Self::new(width, height, raw.into_iter().map(|v| v as f64 / maxval as f64).collect())
    }

    /// Plain ASCII PGM with maxval 255.
    pub fn to_pgm(&self) -> String {
        let mut s = format!("P2\n{} {}\n255\n", self.width, self.height);
        for r in 0..self.height {
            let row: Vec<String> =
                (0..self.width).map(|c| ((self.get(r, c) * 255.0).round() as u32).to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Lower-left corner of the unit square occupied by a pixel, with the
    /// image upright in the plane.
    pub fn pixel_origin(&self, row: usize, col: usize) -> [f64; 2] {
        [col as f64, (self.height - 1 - row) as f64]
    }

    /// Pixel centres in storage order.
    pub fn pixel_centers(&self) -> Vec<[f64; 2]> {
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| (r, c)))
            .map(|(r, c)| {
                let o = self.pixel_origin(r, c);
                [o[0] + 0.5, o[1] + 0.5]
            })
            .collect()
    }
}

/// Per pixel, `round(points_per_unit_intensity * intensity)` points uniform in its square.
pub fn image_to_pointcloud(img: &IntensityImage, points_per_unit_intensity: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if !(points_per_unit_intensity > 0.0) {
        return Err(Error::InvalidParameter {
            name: "points_per_unit_intensity".into(),
            value: points_per_unit_intensity.to_string(),
        });
    }
    let mut rng = seeded(seed);
    let mut pts = Vec::new();
    for r in 0..img.height {
        for c in 0..img.width {
            let k = (points_per_unit_intensity * img.get(r, c)).round() as usize;
            let o = img.pixel_origin(r, c);
            for _ in 0..k {
                pts.push(vec![o[0] + rng.random::<f64>(), o[1] + rng.random::<f64>()]);
            }
        }
    }
    Ok(pts)
}

/// `(max d - d(p)) / max d` with `d` the MoM distance and the max taken over `pixel_centers`.
pub fn rescaled_intensity(cloud: &PointCloud, part: &BlockPartition, pixel_centers: &[[f64; 2]]) -> Result<Vec<f64>> {
    let d = pixel_centers.iter().map(|p| momdist(cloud, part, p)).collect::<Result<Vec<f64>>>()?;
    let top = d.iter().copied().fold(0.0, f64::max);
    if !(top > 0.0) {
        return Err(Error::DegenerateRescale);
    }
    Ok(d.into_iter().map(|v| (top - v) / top).collect())
}

/// Clean and contaminated digit images shipped with the crate.
pub mod fixtures {
    use super::IntensityImage;

    pub const DIGIT6_PGM: &[u8] = include_bytes!("../fixtures/digit6.pgm");
    pub const DIGIT8_PGM: &[u8] = include_bytes!("../fixtures/digit8.pgm");

    pub fn digit6() -> IntensityImage {
        IntensityImage::from_pgm(DIGIT6_PGM).expect("bundled fixture parses")
    }

    pub fn digit8() -> IntensityImage {
        IntensityImage::from_pgm(DIGIT8_PGM).expect("bundled fixture parses")
    }
}
