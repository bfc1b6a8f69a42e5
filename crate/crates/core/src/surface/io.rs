//! OBJ / PLY / XYZ readers and a PLY sample writer. Units are millimeters.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::Unit;

use super::mesh::TriangleMesh;
use super::sampling::SurfaceSample;
use crate::error::{Error, Result};
use crate::geometry::{Point3, UnitVector3, Vector3};

/// Raw point cloud as read from disk; normals only when the file has them.
#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub normals: Option<Vec<UnitVector3>>,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn fan(poly: &[usize], out: &mut Vec<[usize; 3]>) {
    for i in 1..poly.len().saturating_sub(1) {
        out.push([poly[0], poly[i], poly[i + 1]]);
    }
}

pub fn read_obj<R: BufRead>(reader: R) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err(format!("line {}: {e}", lineno + 1)))?;
                if c.len() != 3 {
                    return Err(parse_err(format!("line {}: vertex needs 3 coordinates", lineno + 1)));
                }
                vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in it {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head
                        .parse()
                        .map_err(|_| parse_err(format!("line {}: bad face index {tok:?}", lineno + 1)))?;
                    let idx = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(parse_err(format!("line {}: face index 0", lineno + 1)));
                    };
                    if idx < 0 {
                        return Err(parse_err(format!("line {}: face index out of range", lineno + 1)));
                    }
                    poly.push(idx as usize);
                }
                if poly.len() < 3 {
                    return Err(parse_err(format!("line {}: face needs 3 vertices", lineno + 1)));
                }
                fan(&poly, &mut faces);
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            other => return Err(parse_err(format!("unknown PLY type {other}"))),
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read(self, b: &[u8], big: bool) -> f64 {
        macro_rules! get {
            ($t:ty, $n:expr) => {{
                let mut a = [0u8; $n];
                a.copy_from_slice(&b[..$n]);
                if big {
                    <$t>::from_be_bytes(a) as f64
                } else {
                    <$t>::from_le_bytes(a) as f64
                }
            }};
        }
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => get!(i16, 2),
            Scalar::U16 => get!(u16, 2),
            Scalar::I32 => get!(i32, 4),
            Scalar::U32 => get!(u32, 4),
            Scalar::F32 => get!(f32, 4),
            Scalar::F64 => get!(f64, 8),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Format {
    Ascii,
    BinaryLe,
    BinaryBe,
}

/// Rows of one element: scalars in property order, lists flattened per row.
type Rows = Vec<(Vec<f64>, Vec<Vec<f64>>)>;

struct Ply {
    elements: Vec<(Element, Rows)>,
}

impl Ply {
    fn element(&self, name: &str) -> Option<&(Element, Rows)> {
        self.elements.iter().find(|(e, _)| e.name == name)
    }
}

fn scalar_pos(e: &Element, name: &str) -> Option<usize> {
    e.props
        .iter()
        .filter(|p| matches!(p, Property::Scalar { .. }))
        .position(|p| matches!(p, Property::Scalar { name: n, .. } if n == name))
}

fn read_ply_raw(bytes: &[u8]) -> Result<Ply> {
    let mut pos = 0;
    let next_line = |pos: &mut usize| -> Result<String> {
        let rest = &bytes[*pos..];
        let end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| parse_err("truncated PLY header"))?;
        *pos += end + 1;
        Ok(String::from_utf8_lossy(&rest[..end]).trim().to_string())
    };
    if next_line(&mut pos)? != "ply" {
        return Err(parse_err("missing ply magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line(&mut pos)?;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.first().copied() {
            Some("format") => {
                format = Some(match tok.get(1).copied() {
                    Some("ascii") => Format::Ascii,
                    Some("binary_little_endian") => Format::BinaryLe,
                    Some("binary_big_endian") => Format::BinaryBe,
                    _ => return Err(parse_err(format!("unsupported PLY format line {line:?}"))),
                })
            }
            Some("element") => {
                let (Some(name), Some(count)) = (tok.get(1), tok.get(2)) else {
                    return Err(parse_err(format!("bad element line {line:?}")));
                };
                let count = count.parse().map_err(|_| parse_err(format!("bad element count {line:?}")))?;
                elements.push(Element { name: name.to_string(), count, props: Vec::new() });
            }
            Some("property") => {
                let el = elements.last_mut().ok_or_else(|| parse_err("property before element"))?;
                if tok.get(1) == Some(&"list") {
                    if tok.len() != 5 {
                        return Err(parse_err(format!("bad list property {line:?}")));
                    }
                    el.props.push(Property::List {
                        name: tok[4].to_string(),
                        count: Scalar::parse(tok[2])?,
                        item: Scalar::parse(tok[3])?,
                    });
                } else {
                    if tok.len() != 3 {
                        return Err(parse_err(format!("bad property {line:?}")));
                    }
                    el.props.push(Property::Scalar { name: tok[2].to_string(), ty: Scalar::parse(tok[1])? });
                }
            }
            Some("end_header") => break,
            _ => {}
        }
    }
    let format = format.ok_or_else(|| parse_err("PLY header has no format line"))?;
    let body = &bytes[pos..];
    let mut out = Vec::new();
    match format {
        Format::Ascii => {
            let text = String::from_utf8_lossy(body);
            let mut words = text.split_whitespace();
            let mut num = || -> Result<f64> {
                words
                    .next()
                    .ok_or_else(|| parse_err("truncated PLY body"))?
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("bad PLY number: {e}")))
            };
            for e in elements {
                let mut rows = Vec::with_capacity(e.count);
                for _ in 0..e.count {
                    let mut scalars = Vec::new();
                    let mut lists = Vec::new();
                    for p in &e.props {
                        match p {
                            Property::Scalar { .. } => scalars.push(num()?),
                            Property::List { .. } => {
                                let n = num()? as usize;
                                lists.push((0..n).map(|_| num()).collect::<Result<Vec<_>>>()?);
                            }
                        }
                    }
                    rows.push((scalars, lists));
                }
                out.push((e, rows));
            }
        }
        Format::BinaryLe | Format::BinaryBe => {
            let big = format == Format::BinaryBe;
            let mut at = 0usize;
            let mut take = |ty: Scalar| -> Result<f64> {
                let sz = ty.size();
                if at + sz > body.len() {
                    return Err(parse_err("truncated binary PLY body"));
                }
                let v = ty.read(&body[at..at + sz], big);
                at += sz;
                Ok(v)
            };
            for e in elements {
                let mut rows = Vec::with_capacity(e.count);
                for _ in 0..e.count {
                    let mut scalars = Vec::new();
                    let mut lists = Vec::new();
                    for p in &e.props {
                        match p {
                            Property::Scalar { ty, .. } => scalars.push(take(*ty)?),
                            Property::List { count, item, .. } => {
                                let n = take(*count)? as usize;
                                lists.push((0..n).map(|_| take(*item)).collect::<Result<Vec<_>>>()?);
                            }
                        }
                    }
                    rows.push((scalars, lists));
                }
                out.push((e, rows));
            }
        }
    }
    Ok(Ply { elements: out })
}

fn ply_points(ply: &Ply) -> Result<(Vec<Point3>, Option<Vec<UnitVector3>>)> {
    let (e, rows) = ply.element("vertex").ok_or_else(|| parse_err("PLY has no vertex element"))?;
    let pos = |n| scalar_pos(e, n).ok_or_else(|| parse_err(format!("PLY vertex lacks {n}")));
    let (ix, iy, iz) = (pos("x")?, pos("y")?, pos("z")?);
    let points = rows.iter().map(|(s, _)| Point3::new(s[ix], s[iy], s[iz])).collect();
    let normals = match (scalar_pos(e, "nx"), scalar_pos(e, "ny"), scalar_pos(e, "nz")) {
        (Some(a), Some(b), Some(c)) => Some(
            rows.iter()
                .map(|(s, _)| {
                    let v = Vector3::new(s[a], s[b], s[c]);
                    if v.norm() == 0.0 {
                        Err(parse_err("zero-length normal in PLY"))
                    } else {
                        Ok(Unit::new_normalize(v))
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => None,
    };
    Ok((points, normals))
}

pub fn read_ply_mesh(bytes: &[u8]) -> Result<TriangleMesh> {
    let ply = read_ply_raw(bytes)?;
    let (points, _) = ply_points(&ply)?;
    let (e, rows) = ply.element("face").ok_or_else(|| parse_err("PLY has no face element"))?;
    let li = e
        .props
        .iter()
        .filter(|p| matches!(p, Property::List { .. }))
        .position(|p| matches!(p, Property::List { name, .. } if name == "vertex_indices" || name == "vertex_index"))
        .ok_or_else(|| parse_err("PLY face lacks vertex_indices"))?;
    let mut faces = Vec::new();
    for (_, lists) in rows {
        let poly: Vec<usize> = lists[li].iter().map(|v| *v as usize).collect();
        if poly.len() < 3 {
            return Err(parse_err("PLY face with fewer than 3 vertices"));
        }
        fan(&poly, &mut faces);
    }
    TriangleMesh::new(points, faces)
}

pub fn read_ply_points(bytes: &[u8]) -> Result<PointCloud> {
    let ply = read_ply_raw(bytes)?;
    let (points, normals) = ply_points(&ply)?;
    Ok(PointCloud { points, normals })
}

/// Whitespace-separated `x y z` or `x y z nx ny nz` rows; `#` starts a
/// comment.
pub fn read_xyz<R: BufRead>(reader: R) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut cols = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(format!("line {}: {e}", lineno + 1)))?;
        if v.len() != 3 && v.len() != 6 {
            return Err(parse_err(format!("line {}: expected 3 or 6 columns", lineno + 1)));
        }
        if *cols.get_or_insert(v.len()) != v.len() {
            return Err(parse_err(format!("line {}: inconsistent column count", lineno + 1)));
        }
        points.push(Point3::new(v[0], v[1], v[2]));
        if v.len() == 6 {
            normals.push(Unit::new_normalize(Vector3::new(v[3], v[4], v[5])));
        }
    }
    let normals = if cols == Some(6) { Some(normals) } else { None };
    Ok(PointCloud { points, normals })
}

pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let bytes = std::fs::read(path)?;
    match extension(path).as_str() {
        "obj" => read_obj(std::io::Cursor::new(bytes)),
        "ply" => read_ply_mesh(&bytes),
        other => Err(parse_err(format!("unsupported mesh extension {other:?}"))),
    }
}

pub fn load_point_cloud(path: &Path) -> Result<PointCloud> {
    let bytes = std::fs::read(path)?;
    match extension(path).as_str() {
        "ply" => read_ply_points(&bytes),
        "xyz" | "txt" | "pts" => read_xyz(std::io::Cursor::new(bytes)),
        other => Err(parse_err(format!("unsupported point cloud extension {other:?}"))),
    }
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

/// ASCII PLY with positions and normals.
pub fn write_ply_samples<W: Write>(mut w: W, samples: &[SurfaceSample]) -> Result<()> {
    writeln!(w, "ply\nformat ascii 1.0")?;
    writeln!(w, "element vertex {}", samples.len())?;
    for p in ["x", "y", "z", "nx", "ny", "nz"] {
        writeln!(w, "property double {p}")?;
    }
    writeln!(w, "end_header")?;
    for s in samples {
        let (p, n) = (s.position, s.normal);
        writeln!(w, "{} {} {} {} {} {}", p.x, p.y, p.z, n.x, n.y, n.z)?;
    }
    Ok(())
}

pub fn write_obj<W: Write>(mut w: W, mesh: &TriangleMesh) -> Result<()> {
    for v in mesh.vertices() {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn obj_quad_is_fanned() {
        let src = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\n";
        let m = read_obj(Cursor::new(src)).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_negative_indices() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n";
        assert_eq!(read_obj(Cursor::new(src)).unwrap().faces().len(), 1);
    }

    #[test]
    fn obj_errors() {
        assert!(read_obj(Cursor::new("v 0 0\n")).is_err());
        assert!(read_obj(Cursor::new("v 0 0 0\nf 1 2\n")).is_err());
    }

    #[test]
    fn ply_ascii_mesh() {
        let src = "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\n\
                   element face 1\nproperty list uchar int vertex_indices\nend_header\n\
                   0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let m = read_ply_mesh(src.as_bytes()).unwrap();
        assert_eq!(m.faces().len(), 2);
    }

    #[test]
    fn ply_binary_mesh() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty double x\n\
                           property double y\nproperty double z\nelement face 1\n\
                           property list uchar uint vertex_indices\nend_header\n"
            .to_vec();
        for v in [[0.0f64, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0]] {
            for c in v {
                bytes.extend_from_slice(&c.to_le_bytes());
            }
        }
        bytes.push(3);
        for i in [0u32, 1, 2] {
            bytes.extend_from_slice(&i.to_le_bytes());
        }
        let m = read_ply_mesh(&bytes).unwrap();
        assert_eq!(m.total_area(), 2.0);
    }

    #[test]
    fn ply_points_round_trip() {
        use crate::surface::sampling::SampleSource;
        let samples: Vec<SurfaceSample> = (0..5)
            .map(|i| SurfaceSample {
                position: Point3::new(i as f64 * 0.1, 1.0 / 3.0, -2.5),
                normal: Unit::new_normalize(Vector3::new(0.0, 1.0, 1.0)),
                source: SampleSource::Point(i),
            })
            .collect();
        let mut buf = Vec::new();
        write_ply_samples(&mut buf, &samples).unwrap();
        let pc = read_ply_points(&buf).unwrap();
        assert_eq!(pc.points.len(), 5);
        for (a, b) in pc.points.iter().zip(&samples) {
            assert_eq!(*a, b.position);
        }
        assert!(pc.normals.is_some());
    }

    #[test]
    fn xyz_columns() {
        let pc = read_xyz(Cursor::new("1 2 3\n# note\n4 5 6\n")).unwrap();
        assert_eq!(pc.points.len(), 2);
        assert!(pc.normals.is_none());
        let pc = read_xyz(Cursor::new("1 2 3 0 0 1\n")).unwrap();
        assert_eq!(pc.normals.unwrap()[0].into_inner(), Vector3::z());
        assert!(read_xyz(Cursor::new("1 2 3\n1 2 3 0 0 1\n")).is_err());
    }
}
