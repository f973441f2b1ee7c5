//! Wavefront OBJ subset reader: `v`, `vt`, `vn` and `f` records.

use super::mesh::{TriIndices, TriMesh};
use super::vec3::vec3;
use super::GeomError;

fn parse_floats<const N: usize>(
    line_no: usize,
    rest: &mut std::str::SplitWhitespace<'_>,
    min: usize,
) -> Result<[f64; N], GeomError> {
    let mut out = [0.0; N];
    let mut count = 0;
    for tok in rest.by_ref() {
        if count == N {
            break;
        }
        out[count] = tok.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
            GeomError::Obj {
                line: line_no,
                msg: format!("non-numeric coordinate {tok:?}"),
            }
        })?;
        count += 1;
    }
    if count < min {
        return Err(GeomError::Obj {
            line: line_no,
            msg: format!("expected at least {min} coordinates, found {count}"),
        });
    }
    Ok(out)
}

fn resolve(line: usize, tok: &str, len: usize) -> Result<u32, GeomError> {
    let idx: i64 = tok.parse().map_err(|_| GeomError::Obj {
        line,
        msg: format!("malformed face index {tok:?}"),
    })?;
    if idx <= 0 || idx as usize > len {
        return Err(GeomError::IndexOutOfRange(format!(
            "line {line}: index {idx} outside 1..={len}"
        )));
    }
    Ok((idx - 1) as u32)
}

pub fn load_obj(text: &str) -> Result<TriMesh, GeomError> {
    let mut mesh = TriMesh::default();
    let mut uv_use: Option<bool> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        let Some(tag) = parts.next() else { continue };
        match tag {
            "v" => {
                let [x, y, z] = parse_floats::<3>(line_no, &mut parts, 3)?;
                mesh.positions.push(vec3(x, y, z));
            }
            "vt" => {
                let [u, v] = parse_floats::<2>(line_no, &mut parts, 1)?;
                mesh.uvs.push([u, v]);
            }
            "vn" => {
                let [x, y, z] = parse_floats::<3>(line_no, &mut parts, 3)?;
                mesh.normals.push(vec3(x, y, z).normalize());
            }
            "f" => {
                let mut corners = Vec::new();
                for tok in parts {
                    let fields: Vec<&str> = tok.split('/').collect();
                    if fields.len() > 3 || fields[0].is_empty() {
                        return Err(GeomError::Obj {
                            line: line_no,
                            msg: format!("malformed face token {tok:?}"),
                        });
                    }
                    let p = resolve(line_no, fields[0], mesh.positions.len())?;
                    let t = match fields.get(1) {
                        Some(s) if !s.is_empty() => Some(resolve(line_no, s, mesh.uvs.len())?),
                        _ => None,
                    };
                    let n = match fields.get(2) {
                        Some(s) if !s.is_empty() => {
                            Some(resolve(line_no, s, mesh.normals.len())?)
                        }
                        Some(_) => {
                            return Err(GeomError::Obj {
                                line: line_no,
                                msg: format!("malformed face token {tok:?}"),
                            })
                        }
                        None => None,
                    };
                    corners.push((p, t, n));
                }
                if corners.len() < 3 {
                    return Err(GeomError::Obj {
                        line: line_no,
                        msg: format!("face with {} vertices", corners.len()),
                    });
                }
                let has_uv = corners[0].1.is_some();
                let has_n = corners[0].2.is_some();
                if corners
                    .iter()
                    .any(|c| c.1.is_some() != has_uv || c.2.is_some() != has_n)
                {
                    return Err(GeomError::Obj {
                        line: line_no,
                        msg: "face mixes vertex formats".into(),
                    });
                }
                if *uv_use.get_or_insert(has_uv) != has_uv {
                    log::warn!("line {line_no}: some faces lack texture coordinates");
                }
                for k in 1..corners.len() - 1 {
                    let tri = [corners[0], corners[k], corners[k + 1]];
                    mesh.triangles.push(TriIndices {
                        pos: tri.map(|c| c.0),
                        uv: has_uv.then(|| tri.map(|c| c.1.unwrap())),
                        normal: has_n.then(|| tri.map(|c| c.2.unwrap())),
                    });
                }
            }
            "mtllib" | "usemtl" => log::warn!("line {line_no}: OBJ materials are ignored"),
            "o" | "g" | "s" | "l" | "p" => {}
            other => log::warn!("line {line_no}: unsupported OBJ record {other:?} skipped"),
        }
    }
    Ok(mesh)
}
