//! ASCII PLY and plain-text XYZ readers and writers.
//!
//! Coordinates are written with the shortest representation that parses back
//! to the same value, so round trips are exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::PointCloud;
use crate::{Error, Real, Result};

pub fn to_ply_string<T: Real>(cloud: &PointCloud<T>) -> String {
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", cloud.len());
    s.push_str("property float x\nproperty float y\nproperty float z\n");
    if cloud.labels().is_some() {
        s.push_str("property uchar part\n");
    }
    s.push_str("end_header\n");
    write_rows(&mut s, cloud);
    s
}

pub fn to_xyz_string<T: Real>(cloud: &PointCloud<T>) -> String {
    let mut s = String::new();
    write_rows(&mut s, cloud);
    s
}

fn write_rows<T: Real>(s: &mut String, cloud: &PointCloud<T>) {
    for (i, p) in cloud.points().iter().enumerate() {
        let _ = write!(s, "{} {} {}", p[0].to_f64_lossy(), p[1].to_f64_lossy(), p[2].to_f64_lossy());
        if let Some(l) = cloud.labels() {
            let _ = write!(s, " {}", l[i]);
        }
        s.push('\n');
    }
}

fn parse_num<T: Real>(tok: &str, line: usize) -> Result<T> {
    let v: f64 = tok.parse().map_err(|_| Error::Parse(format!("line {line}: bad number {tok:?}")))?;
    Ok(T::lit(v))
}

fn parse_label(tok: &str, line: usize) -> Result<u8> {
    tok.parse().map_err(|_| Error::Parse(format!("line {line}: bad part label {tok:?}")))
}

pub fn parse_xyz<T: Real>(text: &str) -> Result<PointCloud<T>> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut labelled: Option<bool> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let has_label = match toks.len() {
            3 => false,
            4 => true,
            k => return Err(Error::Parse(format!("line {}: expected 3 or 4 fields, found {k}", ln + 1))),
        };
        if *labelled.get_or_insert(has_label) != has_label {
            return Err(Error::Parse(format!("line {}: inconsistent label column", ln + 1)));
        }
        points.push([parse_num(toks[0], ln + 1)?, parse_num(toks[1], ln + 1)?, parse_num(toks[2], ln + 1)?]);
        if has_label {
            labels.push(parse_label(toks[3], ln + 1)?);
        }
    }
    if labelled == Some(true) {
        PointCloud::with_labels(points, labels)
    } else {
        PointCloud::new(points)
    }
}

pub fn parse_ply<T: Real>(text: &str) -> Result<PointCloud<T>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::Parse("missing ply magic".into())),
    }
    let mut count: Option<usize> = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    for (ln, l) in lines.by_ref() {
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", _] => {}
            ["format", ..] => return Err(Error::Parse("only ascii PLY is supported".into())),
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", "vertex", n] => {
                count = Some(n.parse().map_err(|_| Error::Parse(format!("line {}: bad vertex count", ln + 1)))?);
                in_vertex = true;
            }
            ["element", _, n] => {
                if *n != "0" {
                    return Err(Error::Parse(format!("line {}: only vertex elements are supported", ln + 1)));
                }
                in_vertex = false;
            }
            ["property", "list", ..] if in_vertex => {
                return Err(Error::Parse(format!("line {}: list properties are not supported", ln + 1)))
            }
            ["property", _, name] => {
                if in_vertex {
                    props.push(name.to_string());
                }
            }
            ["end_header"] => break,
            _ => return Err(Error::Parse(format!("line {}: unexpected header line {l:?}", ln + 1))),
        }
    }
    let count = count.ok_or_else(|| Error::Parse("no vertex element".into()))?;
    let col = |name: &str| props.iter().position(|p| p == name);
    let (x, y, z) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(Error::Parse("vertex element lacks x/y/z".into())),
    };
    let part = col("part");
    let mut points = Vec::with_capacity(count);
    let mut labels = Vec::new();
    for (ln, l) in lines {
        if points.len() == count {
            break;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != props.len() {
            return Err(Error::Parse(format!("line {}: expected {} values", ln + 1, props.len())));
        }
        points.push([parse_num(toks[x], ln + 1)?, parse_num(toks[y], ln + 1)?, parse_num(toks[z], ln + 1)?]);
        if let Some(p) = part {
            labels.push(parse_label(toks[p], ln + 1)?);
        }
    }
    if points.len() != count {
        return Err(Error::Parse(format!("expected {count} vertices, found {}", points.len())));
    }
    if part.is_some() {
        PointCloud::with_labels(points, labels)
    } else {
        PointCloud::new(points)
    }
}

/// Writes `.ply` or anything else as XYZ, chosen by extension.
pub fn write_cloud<T: Real>(path: &Path, cloud: &PointCloud<T>) -> Result<()> {
    let text = if is_ply(path) { to_ply_string(cloud) } else { to_xyz_string(cloud) };
    fs::write(path, text)?;
    Ok(())
}

pub fn read_cloud<T: Real>(path: &Path) -> Result<PointCloud<T>> {
    let text = fs::read_to_string(path)?;
    if is_ply(path) {
        parse_ply(&text)
    } else {
        parse_xyz(&text)
    }
}

fn is_ply(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_with_comments() {
        let c: PointCloud<f64> = parse_xyz("# header\n0 1 2 3\n\n4 5 6 1 # trailing\n").unwrap();
        assert_eq!(c.points(), &[[0.0, 1.0, 2.0], [4.0, 5.0, 6.0]]);
        assert_eq!(c.labels(), Some(&[3u8, 1][..]));
    }

    #[test]
    fn xyz_mixed_columns_rejected() {
        assert!(parse_xyz::<f64>("0 0 0\n1 1 1 2\n").is_err());
    }

    #[test]
    fn ply_roundtrip_exact() {
        let c = PointCloud::with_labels(vec![[0.1, -2.5e-7, 1.0 / 3.0], [7.0, 8.25, -0.0]], vec![0, 3]).unwrap();
        let back: PointCloud<f64> = parse_ply(&to_ply_string(&c)).unwrap();
        assert_eq!(back, c);
        let back: PointCloud<f64> = parse_xyz(&to_xyz_string(&c)).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn ply_property_order_and_extra_columns() {
        let text = "ply\nformat ascii 1.0\ncomment hi\nelement vertex 1\nproperty uchar part\nproperty float z\nproperty float nx\nproperty float y\nproperty float x\nend_header\n2 3 0.5 2 1\n";
        let c: PointCloud<f64> = parse_ply(text).unwrap();
        assert_eq!(c.points(), &[[1.0, 2.0, 3.0]]);
        assert_eq!(c.labels(), Some(&[2u8][..]));
    }

    #[test]
    fn ply_rejects_binary() {
        assert!(parse_ply::<f64>("ply\nformat binary_little_endian 1.0\nend_header\n").is_err());
    }
}
