//! CSV files: embeddings, label maps, cluster labels and tissue reports.
//! Comma separated, LF line endings, header row first; floats carry 17
//! significant digits so that reading back is exact.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::matrix::RowMatrix;
use crate::pipeline::{ClusterSummary, LabelMap, TissueClass, TissueReport};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn column_map(headers: &csv::StringRecord) -> HashMap<String, usize> {
    headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.to_string(), i))
        .collect()
}

fn parse_field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    col: usize,
    line: usize,
    name: &str,
) -> Result<T> {
    let raw = rec.get(col).unwrap_or("");
    raw.parse().map_err(|_| Error::SyntaxError {
        line,
        message: format!("bad {name} value `{raw}`"),
    })
}

/// Writes `x,y,dim1,...` (or `row,dim1,...` without voxel positions),
/// skipping rows whose `active` flag is false.
pub fn write_embedding_csv<W: Write>(
    mut w: W,
    voxel_index: Option<&[(usize, usize)]>,
    coords: &RowMatrix,
    active: Option<&[bool]>,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(if voxel_index.is_some() { "x,y" } else { "row" });
    for c in 0..coords.cols() {
        out.push_str(&format!(",dim{}", c + 1));
    }
    out.push('\n');
    for i in 0..coords.rows() {
        if active.is_some_and(|a| !a[i]) {
            continue;
        }
        match voxel_index {
            Some(v) => out.push_str(&format!("{},{}", v[i].0, v[i].1)),
            None => out.push_str(&i.to_string()),
        }
        for &x in coords.row(i) {
            out.push(',');
            out.push_str(&fmt_f64(x));
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

/// Embedding coordinates from the `dim*` columns, with voxel positions when
/// `x` and `y` columns are present.
pub fn read_embedding_csv<R: Read>(r: R) -> Result<(Option<Vec<(usize, usize)>>, RowMatrix)> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    let cols = column_map(&headers);
    let mut dims: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            h.strip_prefix("dim")
                .and_then(|d| d.parse().ok())
                .map(|d: usize| (d, i))
        })
        .collect();
    dims.sort_unstable();
    if dims.is_empty() {
        return Err(Error::Format("embedding CSV has no dim columns".into()));
    }
    let xy = match (cols.get("x"), cols.get("y")) {
        (Some(&x), Some(&y)) => Some((x, y)),
        _ => None,
    };
    let mut data = Vec::new();
    let mut index = Vec::new();
    let mut rows = 0;
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        for &(_, c) in &dims {
            data.push(parse_field::<f64>(&rec, c, line, "coordinate")?);
        }
        if let Some((x, y)) = xy {
            index.push((
                parse_field(&rec, x, line, "x")?,
                parse_field(&rec, y, line, "y")?,
            ));
        }
        rows += 1;
    }
    let m = RowMatrix::from_vec(rows, dims.len(), data)?;
    Ok((xy.map(|_| index), m))
}

/// One record per voxel in raster order: `x,y,label,tissue_class`.
pub fn write_labelmap_csv<W: Write>(mut w: W, lm: &LabelMap) -> Result<()> {
    let mut out = String::from("x,y,label,tissue_class\n");
    for y in 0..lm.height {
        for x in 0..lm.width {
            let i = y * lm.width + x;
            out.push_str(&format!("{x},{y},{},{}\n", lm.labels[i], lm.tissue[i]));
        }
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

/// Grid size is inferred from the largest coordinates; unlisted voxels are
/// background.
pub fn read_labelmap_csv<R: Read>(r: R, spacing: (f64, f64)) -> Result<LabelMap> {
    let mut rdr = reader(r);
    let cols = column_map(rdr.headers()?);
    let need = |name: &str| {
        cols.get(name)
            .copied()
            .ok_or_else(|| Error::Format(format!("label map CSV lacks a `{name}` column")))
    };
    let (cx, cy, cl) = (need("x")?, need("y")?, need("label")?);
    let ct = cols.get("tissue_class").copied();
    let mut recs = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let x: usize = parse_field(&rec, cx, line, "x")?;
        let y: usize = parse_field(&rec, cy, line, "y")?;
        let label: i64 = parse_field(&rec, cl, line, "label")?;
        let class = match ct.and_then(|c| rec.get(c)).filter(|s| !s.is_empty()) {
            Some(s) => s.parse::<TissueClass>()?,
            None if label < 0 => TissueClass::Background,
            None => TissueClass::Normal,
        };
        recs.push((x, y, label, class));
    }
    let width = recs.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let height = recs.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    let mut lm = LabelMap::background(width, height, spacing);
    for (x, y, label, class) in recs {
        lm.labels[y * width + x] = label;
        lm.tissue[y * width + x] = class;
    }
    LabelMap::new(lm.width, lm.height, spacing, lm.labels, lm.tissue)
}

/// Cluster labels row-aligned with an embedding CSV.
pub fn write_labels_csv<W: Write>(
    mut w: W,
    voxel_index: Option<&[(usize, usize)]>,
    labels: &[usize],
) -> Result<()> {
    let mut out = String::from(if voxel_index.is_some() {
        "x,y,label\n"
    } else {
        "row,label\n"
    });
    for (i, l) in labels.iter().enumerate() {
        match voxel_index {
            Some(v) => out.push_str(&format!("{},{},{l}\n", v[i].0, v[i].1)),
            None => out.push_str(&format!("{i},{l}\n")),
        }
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn write_report_csv<W: Write>(mut w: W, report: &TissueReport) -> Result<()> {
    let mut out = String::from("tissue_class,count,area_mm2");
    if let Some(first) = report.classes.first() {
        for c in &first.channels {
            out.push_str(&format!(",{0}_mean,{0}_sd", c.name));
        }
    }
    out.push('\n');
    for c in &report.classes {
        out.push_str(&format!("{},{},{}", c.class, c.count, fmt_f64(c.area_mm2)));
        for s in &c.channels {
            out.push_str(&format!(",{},{}", fmt_f64(s.mean), fmt_f64(s.sd)));
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn write_clusters_csv<W: Write>(mut w: W, clusters: &[ClusterSummary]) -> Result<()> {
    let mut out = String::from("label,size,mean_adc,mean_perfusion,tissue_class\n");
    for c in clusters {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.label,
            c.size,
            fmt_f64(c.mean_adc),
            fmt_f64(c.mean_perfusion),
            c.class
        ));
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn embedding_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..300)
            .map(|_| {
                rng.random::<f64>()
                    * 10f64.powi(rng.random_range(-300..300))
                    * if rng.random() { -1.0 } else { 1.0 }
            })
            .collect();
        let m = RowMatrix::from_vec(100, 3, data).unwrap();
        let idx: Vec<(usize, usize)> = (0..100).map(|i| (i % 10, i / 10)).collect();
        let mut buf = Vec::new();
        write_embedding_csv(&mut buf, Some(&idx), &m, None).unwrap();
        let (back_idx, back) = read_embedding_csv(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back_idx.unwrap(), idx);
        assert!(!buf.contains(&b'\r'));
    }

    #[test]
    fn labelmap_round_trip() {
        let lm = LabelMap::new(
            2,
            2,
            (0.25, 0.25),
            vec![-1, 0, 1, 0],
            vec![
                TissueClass::Background,
                TissueClass::Normal,
                TissueClass::Infarcted,
                TissueClass::Normal,
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_labelmap_csv(&mut buf, &lm).unwrap();
        assert_eq!(read_labelmap_csv(buf.as_slice(), (0.25, 0.25)).unwrap(), lm);
    }

    #[test]
    fn syntax_errors_carry_line() {
        let text = "x,y,label\n0,0,1\n1,zero,1\n";
        match read_labelmap_csv(text.as_bytes(), (1.0, 1.0)) {
            Err(Error::SyntaxError { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
