//! Point-cloud CSV files: one point per row, comma-separated floats.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Parses CSV text, skipping one header line when `header` is set. Blank
/// lines are ignored.
pub fn parse_point_cloud(text: &str, header: bool) -> Result<PointCloud> {
    let mut pts = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(usize::from(header)) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number `{}`", lineno + 1, t.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        pts.push(row);
    }
    PointCloud::new(pts)
}

pub fn read_point_cloud(path: impl AsRef<Path>, header: bool) -> Result<PointCloud> {
    parse_point_cloud(&fs::read_to_string(path)?, header)
}

pub fn point_cloud_to_csv(cloud: &PointCloud) -> String {
    let mut out = String::new();
    for p in cloud.points() {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_point_cloud(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    Ok(fs::write(path, point_cloud_to_csv(cloud))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_header() {
        let c = PointCloud::new(vec![vec![0.1, -2.0], vec![3.0, 1e-7]]).unwrap();
        let text = point_cloud_to_csv(&c);
        assert_eq!(parse_point_cloud(&text, false).unwrap(), c);
        assert_eq!(parse_point_cloud(&format!("x,y\n{text}\n"), true).unwrap(), c);
        assert!(parse_point_cloud(&format!("x,y\n{text}"), false).is_err());
        assert!(parse_point_cloud("1,2\n3\n", false).is_err());
    }
}
