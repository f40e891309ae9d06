//! Point cloud blocks (little-endian binary) and ASCII PLY.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;

use super::FormatError;
use crate::geometry::PointCloud;

/// Encoded size of a block holding `count` points.
pub fn block_len(count: usize) -> usize {
    4 + count * 24
}

/// Appends `u32 count` then `count` little-endian `f64` triples.
pub fn encode_block(points: &[Point3<f64>], out: &mut Vec<u8>) {
    out.extend_from_slice(&(points.len() as u32).to_le_bytes());
    for p in points {
        for v in [p.x, p.y, p.z] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

/// Decodes one block starting at `offset`; returns the points and the offset
/// just past the block.
pub fn decode_block(bytes: &[u8], offset: usize, file: &Path) -> Result<(Vec<Point3<f64>>, usize), FormatError> {
    let head = bytes
        .get(offset..offset + 4)
        .ok_or_else(|| FormatError::at(file, offset as u64, "truncated block header"))?;
    let count = u32::from_le_bytes(head.try_into().unwrap()) as usize;
    let start = offset + 4;
    let end = start + count * 24;
    if bytes.len() < end {
        return Err(FormatError::at(
            file,
            bytes.len() as u64,
            format!("truncated block: {count} points need {} bytes, {} available", count * 24, bytes.len() - start),
        ));
    }
    let mut points = Vec::with_capacity(count);
    for (i, chunk) in bytes[start..end].chunks_exact(24).enumerate() {
        let v = |k: usize| f64::from_le_bytes(chunk[k * 8..k * 8 + 8].try_into().unwrap());
        let p = Point3::new(v(0), v(1), v(2));
        if !p.iter().all(|c| c.is_finite()) {
            return Err(FormatError::at(file, (start + i * 24) as u64, "non-finite coordinate"));
        }
        points.push(p);
    }
    Ok((points, end))
}

pub fn write_cloud_bin(cloud: &PointCloud, path: &Path) -> Result<(), FormatError> {
    let mut buf = Vec::with_capacity(block_len(cloud.len()));
    encode_block(&cloud.points, &mut buf);
    std::fs::write(path, buf).map_err(|e| FormatError::io(path, e))
}

/// Reads a single-block binary cloud; the label is the file stem.
pub fn read_cloud_bin(path: &Path) -> Result<PointCloud, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    let (points, end) = decode_block(&bytes, 0, path)?;
    if end != bytes.len() {
        return Err(FormatError::at(path, end as u64, "trailing bytes after cloud block"));
    }
    Ok(PointCloud::new(stem(path), points))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// ASCII PLY with `double` vertex coordinates. Shortest round-trip float
/// formatting keeps the file lossless.
pub fn ply_string(cloud: &PointCloud) -> String {
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    if !cloud.label.is_empty() {
        let _ = writeln!(s, "comment label {}", cloud.label);
    }
    let _ = writeln!(s, "element vertex {}", cloud.len());
    s.push_str("property double x\nproperty double y\nproperty double z\nend_header\n");
    for p in &cloud.points {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    s
}

pub fn write_ply(cloud: &PointCloud, path: &Path) -> Result<(), FormatError> {
    std::fs::write(path, ply_string(cloud)).map_err(|e| FormatError::io(path, e))
}

pub fn read_ply(path: &Path) -> Result<PointCloud, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    let mut cloud = parse_ply(&text, path)?;
    if cloud.label.is_empty() {
        cloud.label = stem(path);
    }
    Ok(cloud)
}

/// Parses an ASCII PLY. Only the `vertex` element is read; its x, y, z
/// properties may be float or double and appear in any position. Other
/// elements are skipped. Offsets in errors are byte offsets of the line.
pub fn parse_ply(text: &str, file: &Path) -> Result<PointCloud, FormatError> {
    let mut lines = Vec::new();
    let mut off = 0u64;
    for line in text.split_inclusive('\n') {
        lines.push((off, line.trim_end_matches(['\n', '\r'])));
        off += line.len() as u64;
    }
    let mut it = lines.into_iter();
    let bad = |o: u64, m: &str| FormatError::at(file, o, m.to_string());
    match it.next() {
        Some((_, "ply")) => {}
        _ => return Err(bad(0, "missing 'ply' magic")),
    }

    struct Element {
        name: String,
        count: usize,
        props: Vec<String>,
    }
    let mut label = String::new();
    let mut elements: Vec<Element> = Vec::new();
    let mut ascii = false;
    loop {
        let Some((o, line)) = it.next() else { return Err(bad(off, "missing end_header")) };
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            ["format", fmt, _] => {
                if *fmt != "ascii" {
                    return Err(bad(o, &format!("unsupported PLY format '{fmt}' (ascii only)")));
                }
                ascii = true;
            }
            ["comment", "label", rest @ ..] => label = rest.join(" "),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count.parse().map_err(|_| bad(o, "bad element count"))?;
                elements.push(Element { name: name.to_string(), count, props: Vec::new() });
            }
            ["property", "list", ..] => {
                let e = elements.last_mut().ok_or_else(|| bad(o, "property before element"))?;
                if e.name == "vertex" {
                    return Err(bad(o, "list properties on vertex are not supported"));
                }
                e.props.push(String::new());
            }
            ["property", ty, name] => {
                let e = elements.last_mut().ok_or_else(|| bad(o, "property before element"))?;
                if e.name == "vertex" && ["x", "y", "z"].contains(name) && !["float", "double", "float32", "float64"].contains(ty) {
                    return Err(bad(o, &format!("coordinate '{name}' has type '{ty}' (float or double required)")));
                }
                e.props.push(name.to_string());
            }
            _ => return Err(bad(o, &format!("unrecognised header line '{line}'"))),
        }
    }
    if !ascii {
        return Err(bad(0, "missing format line"));
    }
    let mut points = Vec::new();
    for e in &elements {
        let idx = |n: &str| e.props.iter().position(|p| p == n);
        let xyz = if e.name == "vertex" {
            match (idx("x"), idx("y"), idx("z")) {
                (Some(x), Some(y), Some(z)) => Some([x, y, z]),
                _ => return Err(bad(0, "vertex element lacks x, y or z")),
            }
        } else {
            None
        };
        for _ in 0..e.count {
            let Some((o, line)) = it.next() else { return Err(bad(off, &format!("truncated: fewer {} rows than declared", e.name))) };
            let Some(xyz) = xyz else { continue };
            let vals: Vec<&str> = line.split_whitespace().collect();
            if vals.len() < e.props.len() {
                return Err(bad(o, "too few values on vertex row"));
            }
            let mut c = [0.0; 3];
            for (k, &i) in xyz.iter().enumerate() {
                c[k] = vals[i].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(o, "bad coordinate"))?;
            }
            points.push(Point3::from(c));
        }
    }
    Ok(PointCloud::new(label, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ply_accepts_float_and_extra_properties() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float nx\nproperty float x\nproperty float y\nproperty float z\n\
                    element face 1\nproperty list uchar int vertex_indices\nend_header\n0 1 2 3\n0 4.5 5 6\n3 0 1 1\n";
        let c = parse_ply(text, Path::new("t.ply")).unwrap();
        assert_eq!(c.points, vec![Point3::new(1.0, 2.0, 3.0), Point3::new(4.5, 5.0, 6.0)]);
    }

    #[test]
    fn ply_rejects_integer_coordinates() {
        let text = "ply\nformat ascii 1.0\nelement vertex 1\nproperty int x\nproperty int y\nproperty int z\nend_header\n1 2 3\n";
        let e = parse_ply(text, Path::new("t.ply")).unwrap_err();
        assert_eq!(e.offset, Some(38));
    }

    #[test]
    fn ply_truncated_rows() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty double x\nproperty double y\nproperty double z\nend_header\n1 2 3\n";
        assert!(parse_ply(text, Path::new("t.ply")).unwrap_err().message.contains("truncated"));
    }

    #[test]
    fn block_round_trip_is_bit_exact() {
        let pts = vec![Point3::new(0.1, -1e-300, 3.0f64.sqrt()), Point3::new(f64::MAX, f64::MIN_POSITIVE, -0.0)];
        let mut buf = Vec::new();
        encode_block(&pts, &mut buf);
        assert_eq!(buf.len(), block_len(2));
        let (back, end) = decode_block(&buf, 0, Path::new("b")).unwrap();
        assert_eq!(end, buf.len());
        for (a, b) in pts.iter().zip(&back) {
            for k in 0..3 {
                assert_eq!(a[k].to_bits(), b[k].to_bits());
            }
        }
    }
}
