//! Grid and tabular datasets: loading, writing, and offline stand-ins.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::domain::FiniteDomain;
use crate::error::{BaxError, Result};

/// Rows × cols height table, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDataset {
    pub rows: usize,
    pub cols: usize,
    pub heights: Vec<f64>,
}

impl GridDataset {
    pub fn new(rows: usize, cols: usize, heights: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(BaxError::EmptyInput("grid"));
        }
        if heights.len() != rows * cols {
            return Err(BaxError::DimensionMismatch {
                expected: rows * cols,
                found: heights.len(),
            });
        }
        Ok(GridDataset { rows, cols, heights })
    }

    pub fn height(&self, row: usize, col: usize) -> f64 {
        self.heights[row * self.cols + col]
    }

    /// Normalized `(row, col)` coordinates of every cell, row-major.
    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        let scale = |i: usize, n: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| vec![scale(r, self.rows), scale(c, self.cols)]))
            .collect()
    }
}

fn csv_error(e: csv::Error) -> BaxError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::Io(err) => BaxError::Io(err.to_string()),
        _ => BaxError::Parse {
            line,
            message: e.to_string(),
        },
    }
}

fn parse_field(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| BaxError::Parse {
        line,
        message: format!("not a number: {field:?}"),
    })
}

/// Read a comma-separated height grid: one row per line, equal lengths.
pub fn read_grid<R: Read>(reader: R) -> Result<GridDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut heights = Vec::new();
    let mut rows = 0;
    let mut cols = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        for f in rec.iter() {
            heights.push(parse_field(f, line)?);
        }
        cols = rec.len();
        rows += 1;
    }
    GridDataset::new(rows, cols, heights)
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<GridDataset> {
    read_grid(File::open(path)?)
}

pub fn write_grid(grid: &GridDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in 0..grid.rows {
        let row: Vec<String> = (0..grid.cols).map(|c| format!("{:?}", grid.height(r, c))).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// The grid as a finite domain over `[0, 1]²` plus its height table.
pub fn grid_to_finite_domain(grid: &GridDataset) -> Result<(FiniteDomain, Vec<f64>)> {
    Ok((FiniteDomain::new(grid.coordinates())?, grid.heights.clone()))
}

/// An 87 × 61 volcano-shaped height field (integer metres), used when the
/// real survey file is not available. Same layout and similar range.
pub fn synthetic_volcano(seed: u64) -> GridDataset {
    let (rows, cols) = (87, 61);
    let mut rng = StdRng::seed_from_u64(seed);
    let bumps: Vec<(f64, f64, f64, f64)> = (0..12)
        .map(|_| {
            (
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random_range(-8.0..12.0),
                rng.random_range(0.005..0.03),
            )
        })
        .collect();
    let mut heights = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let x = r as f64 / (rows - 1) as f64;
            let y = c as f64 / (cols - 1) as f64;
            let d2 = (x - 0.45).powi(2) + (y - 0.55).powi(2);
            let cone = 95.0 * (-d2 / 0.06).exp();
            let crater = 25.0 * (-((x - 0.42).powi(2) + (y - 0.52).powi(2)) / 0.004).exp();
            let ridge = 12.0 * (-((x - 0.75).powi(2)) / 0.02).exp() * (1.0 - y);
            let extra: f64 = bumps
                .iter()
                .map(|(bx, by, h, w)| h * (-((x - bx).powi(2) + (y - by).powi(2)) / w).exp())
                .sum();
            heights.push((94.0 + cone - crater + ridge + extra).round());
        }
    }
    GridDataset { rows, cols, heights }
}

/// Nearest-rank `p`-quantile: the `⌈p·n⌉`-th smallest value (the minimum
/// for `p = 0`).
pub fn quantile_threshold(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(BaxError::EmptyInput("quantile values"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(BaxError::InvalidParameter(format!("quantile level {p} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // 0.55 * 100 is 55.000000000000007 in binary, so trim round-off first
    let rank = ((p * sorted.len() as f64 - 1e-9).ceil() as usize).max(1);
    Ok(sorted[rank - 1])
}

/// Records with an embedding and a measured intervention value.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub ids: Vec<String>,
    /// `N × d` embedding, one record per row.
    pub embedding: DMatrix<f64>,
    pub values: Vec<f64>,
}

impl TabularDataset {
    pub fn new(ids: Vec<String>, embedding: DMatrix<f64>, values: Vec<f64>) -> Result<Self> {
        if ids.is_empty() {
            return Err(BaxError::EmptyInput("tabular dataset"));
        }
        if embedding.nrows() != ids.len() || values.len() != ids.len() {
            return Err(BaxError::DimensionMismatch {
                expected: ids.len(),
                found: if embedding.nrows() != ids.len() {
                    embedding.nrows()
                } else {
                    values.len()
                },
            });
        }
        Ok(TabularDataset { ids, embedding, values })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn width(&self) -> usize {
        self.embedding.ncols()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.embedding.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// Keep the `n` records with the highest values, in original order.
    pub fn top_by_value(&self, n: usize) -> Self {
        if n >= self.len() {
            return self.clone();
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]).then(a.cmp(&b)));
        let mut keep: Vec<usize> = order[..n].to_vec();
        keep.sort_unstable();
        TabularDataset {
            ids: keep.iter().map(|&i| self.ids[i].clone()).collect(),
            embedding: self.embedding.select_rows(&keep),
            values: keep.iter().map(|&i| self.values[i]).collect(),
        }
    }
}

/// Read `id,<e1..ed>,value` records (with that header).
pub fn read_tabular<R: Read>(reader: R) -> Result<TabularDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.len() < 3 || &header[0] != "id" || &header[header.len() - 1] != "value" {
        return Err(BaxError::Parse {
            line: 1,
            message: "expected header id,<embedding columns>,value".into(),
        });
    }
    let width = header.len() - 2;
    let mut ids = Vec::new();
    let mut flat = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        ids.push(rec[0].to_string());
        for f in rec.iter().skip(1).take(width) {
            flat.push(parse_field(f, line)?);
        }
        values.push(parse_field(&rec[width + 1], line)?);
    }
    let n = ids.len();
    TabularDataset::new(ids, DMatrix::from_row_slice(n, width, &flat), values)
}

pub fn load_tabular(path: impl AsRef<Path>) -> Result<TabularDataset> {
    read_tabular(File::open(path)?)
}

pub fn write_tabular(td: &TabularDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let cols: Vec<String> = (1..=td.width()).map(|j| format!("e{j}")).collect();
    writeln!(w, "id,{},value", cols.join(","))?;
    for i in 0..td.len() {
        let emb: Vec<String> = td.embedding.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{},{},{:?}", td.ids[i], emb.join(","), td.values[i])?;
    }
    w.flush()?;
    Ok(())
}

/// Offline stand-in for an assay table: embeddings are noisy linear images
/// of a 5-dimensional latent factor and the value is a smooth function of
/// that factor.
pub fn synthetic_tabular(records: usize, width: usize, seed: u64) -> Result<TabularDataset> {
    const LATENT: usize = 5;
    if records == 0 || width == 0 {
        return Err(BaxError::EmptyInput("synthetic table shape"));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mixing = DMatrix::from_fn(LATENT, width, |_, _| rng.sample::<f64, _>(StandardNormal));
    let latent = DMatrix::from_fn(records, LATENT, |_, _| rng.sample::<f64, _>(StandardNormal));
    let noise = DMatrix::from_fn(records, width, |_, _| 0.1 * rng.sample::<f64, _>(StandardNormal));
    let embedding = &latent * &mixing + noise;
    let values = (0..records)
        .map(|i| {
            let z = latent.row(i);
            (1.5 * z[0]).sin() + 0.5 * z[1] - 0.3 * z[2] * z[2] + 0.2 * z[3] * z[4]
        })
        .collect();
    let ids = (0..records).map(|i| format!("g{i:05}")).collect();
    TabularDataset::new(ids, embedding, values)
}

/// Affinely map each coordinate of a point table onto `[0, 1]`; constant
/// coordinates map to 0.5.
pub fn normalize_points(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    let d = first.len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in points {
        for j in 0..d {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    points
        .iter()
        .map(|p| {
            (0..d)
                .map(|j| {
                    if hi[j] > lo[j] {
                        (p[j] - lo[j]) / (hi[j] - lo[j])
                    } else {
                        0.5
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile_threshold(&v, 0.55).unwrap(), 55.0);
        assert_eq!(quantile_threshold(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile_threshold(&v, 1.0).unwrap(), 100.0);
        assert!(quantile_threshold(&[], 0.5).is_err());
    }

    #[test]
    fn small_grid_parses() {
        let g = read_grid("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!((g.rows, g.cols), (2, 2));
        let (dom, vals) = grid_to_finite_domain(&g).unwrap();
        assert_eq!(dom.len(), 4);
        assert_eq!(vals, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(dom.points()[3], vec![1.0, 1.0]);
    }

    #[test]
    fn ragged_grid_reports_line() {
        match read_grid("1,2\n3,4\n5\n".as_bytes()) {
            Err(BaxError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match read_grid("1,2\n3,x\n".as_bytes()) {
            Err(BaxError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn synthetic_volcano_shape() {
        let g = synthetic_volcano(0);
        assert_eq!(g.heights.len(), 5307);
        assert_eq!(synthetic_volcano(0), g);
    }

    #[test]
    fn tabular_header_is_checked() {
        assert!(read_tabular("a,b,c\n1,2,3\n".as_bytes()).is_err());
        let t = read_tabular("id,e1,e2,value\nx,1,2,3\ny,4,5,6\n".as_bytes()).unwrap();
        assert_eq!(t.width(), 2);
        assert_eq!(t.values, vec![3.0, 6.0]);
        assert_eq!(t.embedding[(1, 0)], 4.0);
    }

    #[test]
    fn top_by_value_keeps_order() {
        let t = read_tabular("id,e1,value\na,0,1\nb,1,5\nc,2,3\n".as_bytes()).unwrap();
        let top = t.top_by_value(2);
        assert_eq!(top.ids, vec!["b".to_string(), "c".to_string()]);
    }

    #[test]
    fn normalization_maps_to_unit_cube() {
        let n = normalize_points(&[vec![-2.0, 3.0], vec![2.0, 3.0], vec![0.0, 3.0]]);
        assert_eq!(n, vec![vec![0.0, 0.5], vec![1.0, 0.5], vec![0.5, 0.5]]);
    }
}
