//! OBJ and PLY ingestion (ASCII, plus binary little-endian PLY) and ASCII
//! writers.

use super::{MeshError, TriangleMesh};
use crate::geometry::Vec3;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self, MeshError> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("obj") => Ok(Self::Obj),
            Some("ply") => Ok(Self::Ply),
            other => Err(MeshError::UnsupportedFormat(
                other.unwrap_or("<none>").to_string(),
            )),
        }
    }
}

/// Loads a mesh; `format` defaults to the file extension.
pub fn load_mesh(path: &Path, format: Option<MeshFormat>) -> Result<TriangleMesh, MeshError> {
    let format = match format {
        Some(f) => f,
        None => MeshFormat::from_path(path)?,
    };
    let bytes = std::fs::read(path)?;
    let name = path.display().to_string();
    match format {
        MeshFormat::Obj => parse_obj(&String::from_utf8_lossy(&bytes), &name),
        MeshFormat::Ply => parse_ply(&bytes, &name),
    }
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Parses `v` and `f` records; polygons are fan-triangulated and negative
/// (relative) indices are resolved.
pub fn parse_obj(text: &str, path: &str) -> Result<TriangleMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in c.iter_mut() {
                    let t = tok
                        .next()
                        .ok_or_else(|| parse_err(path, line_no, "vertex needs 3 coordinates"))?;
                    *slot = t
                        .parse()
                        .map_err(|_| parse_err(path, line_no, format!("bad coordinate '{t}'")))?;
                }
                vertices.push(Vec3::from(c));
            }
            Some("f") => {
                let mut idx = Vec::with_capacity(4);
                for t in tok {
                    let first = t.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|_| parse_err(path, line_no, format!("bad face index '{t}'")))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(parse_err(path, line_no, "face index 0 is invalid"));
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(parse_err(
                            path,
                            line_no,
                            format!("face index {i} out of range"),
                        ));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(parse_err(path, line_no, "face needs at least 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
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
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]),
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
enum PlyEncoding {
    Ascii,
    BinaryLe,
}

/// Parses ASCII 1.0 or binary little-endian PLY with a `vertex` element
/// (`x`, `y`, `z`, optional `nx`, `ny`, `nz`) and a `face` element carrying a
/// `vertex_indices` (or `vertex_index`) list.
pub fn parse_ply(bytes: &[u8], path: &str) -> Result<TriangleMesh, MeshError> {
    // header is ASCII and terminated by "end_header\n"
    let mut pos = 0;
    let mut line_no = 0;
    let next_line = |pos: &mut usize| -> Option<String> {
        if *pos >= bytes.len() {
            return None;
        }
        let rest = &bytes[*pos..];
        let end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
        let line = String::from_utf8_lossy(&rest[..end]).trim_end_matches('\r').to_string();
        *pos += (end + 1).min(rest.len());
        Some(line)
    };

    line_no += 1;
    if next_line(&mut pos).as_deref().map(str::trim) != Some("ply") {
        return Err(parse_err(path, 1, "missing 'ply' magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        line_no += 1;
        let line = next_line(&mut pos).ok_or_else(|| parse_err(path, line_no, "unterminated header"))?;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.first().copied() {
            Some("format") => {
                encoding = Some(match tok.get(1).copied() {
                    Some("ascii") => PlyEncoding::Ascii,
                    Some("binary_little_endian") => PlyEncoding::BinaryLe,
                    other => {
                        return Err(parse_err(
                            path,
                            line_no,
                            format!("unsupported PLY format {}", other.unwrap_or("<none>")),
                        ))
                    }
                });
            }
            Some("element") => {
                let name = tok
                    .get(1)
                    .ok_or_else(|| parse_err(path, line_no, "element without name"))?;
                let count = tok
                    .get(2)
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err(path, line_no, "element without count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, line_no, "property before element"))?;
                let prop = if tok.get(1) == Some(&"list") {
                    let count = tok.get(2).and_then(|s| Scalar::parse(s));
                    let item = tok.get(3).and_then(|s| Scalar::parse(s));
                    let name = tok.get(4);
                    match (count, item, name) {
                        (Some(count), Some(item), Some(name)) => Property::List {
                            name: name.to_string(),
                            count,
                            item,
                        },
                        _ => return Err(parse_err(path, line_no, "malformed list property")),
                    }
                } else {
                    let ty = tok.get(1).and_then(|s| Scalar::parse(s));
                    match (ty, tok.get(2)) {
                        (Some(ty), Some(name)) => Property::Scalar {
                            name: name.to_string(),
                            ty,
                        },
                        _ => return Err(parse_err(path, line_no, "malformed property")),
                    }
                };
                el.props.push(prop);
            }
            Some("end_header") => break,
            _ => {}
        }
    }
    let encoding = encoding.ok_or_else(|| parse_err(path, line_no, "missing format line"))?;

    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut triangles = Vec::new();

    let body = &bytes[pos..];
    let mut ascii_lines = if encoding == PlyEncoding::Ascii {
        Some(
            String::from_utf8_lossy(body)
                .lines()
                .map(str::to_string)
                .collect::<Vec<_>>()
                .into_iter()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty()),
        )
    } else {
        None
    };
    let mut cursor = 0usize;

    for el in &elements {
        let find = |n: &str| {
            el.props
                .iter()
                .position(|p| matches!(p, Property::Scalar { name, .. } if name == n))
        };
        let (xi, yi, zi) = (find("x"), find("y"), find("z"));
        let (nxi, nyi, nzi) = (find("nx"), find("ny"), find("nz"));
        let face_list = el.props.iter().position(
            |p| matches!(p, Property::List { name, .. } if name == "vertex_indices" || name == "vertex_index"),
        );
        for _ in 0..el.count {
            // Read one element record as a vector of per-property values.
            let (values, rec_line): (Vec<Vec<f64>>, usize) = match encoding {
                PlyEncoding::Ascii => {
                    let (ln, line) = ascii_lines
                        .as_mut()
                        .and_then(|it| it.next())
                        .ok_or_else(|| parse_err(path, line_no, "unexpected end of file"))?;
                    let rec_line = line_no + 1 + ln;
                    let mut nums = line.split_whitespace().map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| parse_err(path, rec_line, format!("bad number '{t}'")))
                    });
                    let mut vals = Vec::with_capacity(el.props.len());
                    for p in &el.props {
                        let mut take = || {
                            nums.next()
                                .unwrap_or_else(|| Err(parse_err(path, rec_line, "record too short")))
                        };
                        match p {
                            Property::Scalar { .. } => vals.push(vec![take()?]),
                            Property::List { .. } => {
                                let n = take()? as usize;
                                let mut items = Vec::with_capacity(n);
                                for _ in 0..n {
                                    items.push(take()?);
                                }
                                vals.push(items);
                            }
                        }
                    }
                    (vals, rec_line)
                }
                PlyEncoding::BinaryLe => {
                    let mut vals = Vec::with_capacity(el.props.len());
                    let need = |n: usize, cursor: &mut usize| -> Result<&[u8], MeshError> {
                        if *cursor + n > body.len() {
                            return Err(parse_err(path, line_no, "unexpected end of binary data"));
                        }
                        let s = &body[*cursor..*cursor + n];
                        *cursor += n;
                        Ok(s)
                    };
                    for p in &el.props {
                        match p {
                            Property::Scalar { ty, .. } => {
                                vals.push(vec![ty.read_le(need(ty.size(), &mut cursor)?)])
                            }
                            Property::List { count, item, .. } => {
                                let n = count.read_le(need(count.size(), &mut cursor)?) as usize;
                                let mut items = Vec::with_capacity(n);
                                for _ in 0..n {
                                    items.push(item.read_le(need(item.size(), &mut cursor)?));
                                }
                                vals.push(items);
                            }
                        }
                    }
                    (vals, line_no)
                }
            };
            match el.name.as_str() {
                "vertex" => {
                    let (Some(xi), Some(yi), Some(zi)) = (xi, yi, zi) else {
                        return Err(parse_err(path, rec_line, "vertex element lacks x/y/z"));
                    };
                    vertices.push(Vec3::new(values[xi][0], values[yi][0], values[zi][0]));
                    if let (Some(a), Some(b), Some(c)) = (nxi, nyi, nzi) {
                        normals.push(Vec3::new(values[a][0], values[b][0], values[c][0]));
                    }
                }
                "face" => {
                    let li = face_list
                        .ok_or_else(|| parse_err(path, rec_line, "face element lacks vertex_indices"))?;
                    let idx = &values[li];
                    if idx.len() < 3 {
                        return Err(parse_err(path, rec_line, "face needs at least 3 vertices"));
                    }
                    for k in 1..idx.len() - 1 {
                        let tri = [idx[0], idx[k], idx[k + 1]];
                        if tri.iter().any(|&i| i < 0.0 || i.fract() != 0.0) {
                            return Err(parse_err(path, rec_line, "invalid face index"));
                        }
                        triangles.push([tri[0] as u32, tri[1] as u32, tri[2] as u32]);
                    }
                }
                _ => {}
            }
        }
    }
    let normals = (!normals.is_empty()).then_some(normals);
    TriangleMesh::with_normals(vertices, triangles, normals)
}

pub fn write_obj<W: Write>(mesh: &TriangleMesh, mut out: W) -> std::io::Result<()> {
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

pub fn write_ply_ascii<W: Write>(mesh: &TriangleMesh, mut out: W) -> std::io::Result<()> {
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", mesh.vertices().len())?;
    writeln!(out, "property double x")?;
    writeln!(out, "property double y")?;
    writeln!(out, "property double z")?;
    writeln!(out, "element face {}", mesh.triangle_count())?;
    writeln!(out, "property list uchar int vertex_indices")?;
    writeln!(out, "end_header")?;
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
    }
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE_PLY: &str = "ply
format ascii 1.0
comment unit cube
element vertex 8
property float x
property float y
property float z
element face 12
property list uchar int vertex_indices
end_header
0 0 0
1 0 0
1 1 0
0 1 0
0 0 1
1 0 1
1 1 1
0 1 1
3 0 2 1
3 0 3 2
3 4 5 6
3 4 6 7
3 0 1 5
3 0 5 4
3 2 3 7
3 2 7 6
3 1 2 6
3 1 6 5
3 3 0 4
3 3 4 7
";

    #[test]
    fn obj_single_triangle() {
        let mesh = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", "t.obj").unwrap();
        assert_eq!(mesh.triangle_count(), 1);
    }

    #[test]
    fn obj_zero_area_face_dropped() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\nf 1 2 3\nf 1 2 4\n";
        let mesh = parse_obj(text, "t.obj").unwrap();
        assert_eq!(mesh.triangle_count(), 1);
        assert_eq!(mesh.dropped_degenerate(), 1);
    }

    #[test]
    fn obj_slashes_quads_and_negative_indices() {
        let text = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\nf -4 -3 -2\n";
        let mesh = parse_obj(text, "t.obj").unwrap();
        assert_eq!(mesh.triangle_count(), 3);
    }

    #[test]
    fn obj_errors_carry_line_numbers() {
        let err = parse_obj("v 0 0 0\nv 1 0\n", "bad.obj").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 2, .. }), "{err}");
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n", "bad.obj").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 4, .. }), "{err}");
        assert!(matches!(parse_obj("# nothing\n", "e.obj"), Err(MeshError::EmptyMesh)));
    }

    #[test]
    fn ply_ascii_cube() {
        let mesh = parse_ply(CUBE_PLY.as_bytes(), "cube.ply").unwrap();
        assert_eq!(mesh.vertices().len(), 8);
        assert_eq!(mesh.triangle_count(), 12);
    }

    #[test]
    fn ply_binary_matches_ascii() {
        let ascii = parse_ply(CUBE_PLY.as_bytes(), "cube.ply").unwrap();
        let mut bin = b"ply\nformat binary_little_endian 1.0\nelement vertex 8\nproperty float x\nproperty float y\nproperty float z\nelement face 12\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
        for v in ascii.vertices() {
            for c in v.iter() {
                bin.extend((*c as f32).to_le_bytes());
            }
        }
        for t in ascii.triangles() {
            bin.push(3);
            for i in t {
                bin.extend((*i as i32).to_le_bytes());
            }
        }
        let mesh = parse_ply(&bin, "cube_bin.ply").unwrap();
        assert_eq!(mesh, ascii);
    }

    #[test]
    fn ply_errors() {
        assert!(matches!(
            parse_ply(b"obj\n", "x.ply"),
            Err(MeshError::Parse { line: 1, .. })
        ));
        let truncated = CUBE_PLY.lines().take(15).collect::<Vec<_>>().join("\n");
        assert!(parse_ply(truncated.as_bytes(), "t.ply").is_err());
        let bad = CUBE_PLY.replace("1 1 0\n0 1 0", "1 x 0\n0 1 0");
        let err = parse_ply(bad.as_bytes(), "b.ply").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 13, .. }), "{err}");
    }

    #[test]
    fn writers_round_trip() {
        let mesh = parse_ply(CUBE_PLY.as_bytes(), "cube.ply").unwrap();
        let mut obj = Vec::new();
        write_obj(&mesh, &mut obj).unwrap();
        let back = parse_obj(std::str::from_utf8(&obj).unwrap(), "rt.obj").unwrap();
        assert_eq!(back.vertices(), mesh.vertices());
        assert_eq!(back.triangles(), mesh.triangles());
        let mut ply = Vec::new();
        write_ply_ascii(&mesh, &mut ply).unwrap();
        let back = parse_ply(&ply, "rt.ply").unwrap();
        assert_eq!(back.triangles(), mesh.triangles());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(MeshFormat::from_path(Path::new("a/b.OBJ")).unwrap(), MeshFormat::Obj);
        assert_eq!(MeshFormat::from_path(Path::new("m.ply")).unwrap(), MeshFormat::Ply);
        assert!(MeshFormat::from_path(Path::new("m.stl")).is_err());
    }
}
