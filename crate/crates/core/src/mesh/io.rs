//! Plain-text mesh exchange and VTK legacy export.
//!
//! Mesh format, one record per line:
//!
//! ```text
//! SIEVEFLOW-MESH 1
//! PROVENANCE {json}
//! DIM 2
//! VERTICES n
//! x y z
//! CELLS m
//! REGION v0 v1 v2 [v3]
//! FACETS k
//! TAG v0 v1 [v2]
//! END
//! ```

use std::fmt::Write as _;

use super::{FacetTag, MeshProvenance, Region, SieveMesh};
use crate::error::{Error, Result};

pub const MESH_HEADER: &str = "SIEVEFLOW-MESH 1";

pub fn write_mesh(mesh: &SieveMesh) -> String {
    let mut s = String::new();
    let prov = serde_json::to_string(&mesh.provenance).expect("provenance serializes");
    writeln!(s, "{MESH_HEADER}").unwrap();
    writeln!(s, "PROVENANCE {prov}").unwrap();
    writeln!(s, "DIM {}", mesh.dim).unwrap();
    writeln!(s, "VERTICES {}", mesh.n_vertices()).unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{:?} {:?} {:?}", v[0], v[1], v[2]).unwrap();
    }
    writeln!(s, "CELLS {}", mesh.n_cells()).unwrap();
    for c in 0..mesh.n_cells() {
        write!(s, "{}", mesh.regions[c].as_str()).unwrap();
        for v in mesh.cell(c) {
            write!(s, " {v}").unwrap();
        }
        s.push('\n');
    }
    writeln!(s, "FACETS {}", mesh.n_facets()).unwrap();
    for f in 0..mesh.n_facets() {
        write!(s, "{}", mesh.facet_tags[f].as_str()).unwrap();
        for v in mesh.facet(f) {
            write!(s, " {v}").unwrap();
        }
        s.push('\n');
    }
    s.push_str("END\n");
    s
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("mesh line {}: {msg}", line + 1))
}

pub fn read_mesh(text: &str) -> Result<SieveMesh> {
    let lines: Vec<&str> = text.lines().collect();
    let mut at = 0;
    let mut next = |what: &str| -> Result<(usize, &str)> {
        let i = at;
        at += 1;
        lines.get(i).map(|l| (i, *l)).ok_or_else(|| Error::Format(format!("mesh ended before {what}")))
    };
    let (i, header) = next("header")?;
    if header.trim() != MESH_HEADER {
        return Err(bad(i, format!("expected header {MESH_HEADER:?}")));
    }
    let (i, prov) = next("provenance")?;
    let prov = prov
        .strip_prefix("PROVENANCE ")
        .ok_or_else(|| bad(i, "expected PROVENANCE"))?;
    let provenance: MeshProvenance = serde_json::from_str(prov).map_err(|e| bad(i, e))?;

    let count = |line: (usize, &str), key: &str| -> Result<usize> {
        let rest = line
            .1
            .strip_prefix(key)
            .ok_or_else(|| bad(line.0, format!("expected {key}")))?;
        rest.trim().parse().map_err(|e| bad(line.0, e))
    };
    let dim = count(next("DIM")?, "DIM")?;
    if dim != 2 && dim != 3 {
        return Err(Error::Format(format!("unsupported mesh dimension {dim}")));
    }
    let nv = count(next("VERTICES")?, "VERTICES")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (i, l) = next("vertex")?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(i, e))?;
        if xs.len() != 3 {
            return Err(bad(i, "vertex needs three coordinates"));
        }
        vertices.push([xs[0], xs[1], xs[2]]);
    }
    let ids = |i: usize, toks: &[&str], n: usize| -> Result<Vec<usize>> {
        if toks.len() != n {
            return Err(bad(i, format!("expected {n} vertex indices")));
        }
        toks.iter()
            .map(|t| {
                let v: usize = t.parse().map_err(|e| bad(i, e))?;
                if v >= nv {
                    return Err(bad(i, format!("vertex index {v} out of range")));
                }
                Ok(v)
            })
            .collect()
    };
    let nc = count(next("CELLS")?, "CELLS")?;
    let mut cells = Vec::with_capacity(nc * (dim + 1));
    let mut regions = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (i, l) = next("cell")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let r = toks.first().and_then(|t| Region::parse(t)).ok_or_else(|| bad(i, "bad region"))?;
        regions.push(r);
        cells.extend(ids(i, &toks[1..], dim + 1)?);
    }
    let nf = count(next("FACETS")?, "FACETS")?;
    let mut facets = Vec::with_capacity(nf * dim);
    let mut facet_tags = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (i, l) = next("facet")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let t = toks.first().and_then(|t| FacetTag::parse(t)).ok_or_else(|| bad(i, "bad tag"))?;
        facet_tags.push(t);
        facets.extend(ids(i, &toks[1..], dim)?);
    }
    let (i, end) = next("END")?;
    if end.trim() != "END" {
        return Err(bad(i, "expected END"));
    }
    Ok(SieveMesh {
        dim,
        vertices,
        cells,
        regions,
        facets,
        facet_tags,
        provenance,
    })
}

pub enum VtkField<'a> {
    Scalar(&'a str, &'a [f64]),
    /// Flat per-vertex vectors with `dim` components.
    Vector(&'a str, &'a [f64]),
}

/// VTK legacy ASCII unstructured grid with vertex fields and the region as cell data.
pub fn write_vtk(mesh: &SieveMesh, fields: &[VtkField]) -> String {
    let mut s = String::new();
    let nv = mesh.n_vertices();
    let nc = mesh.n_cells();
    let k = mesh.dim + 1;
    writeln!(s, "# vtk DataFile Version 3.0").unwrap();
    writeln!(s, "sieveflow").unwrap();
    writeln!(s, "ASCII").unwrap();
    writeln!(s, "DATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {nv} double").unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{:?} {:?} {:?}", v[0], v[1], v[2]).unwrap();
    }
    writeln!(s, "CELLS {nc} {}", nc * (k + 1)).unwrap();
    for c in 0..nc {
        write!(s, "{k}").unwrap();
        for v in mesh.cell(c) {
            write!(s, " {v}").unwrap();
        }
        s.push('\n');
    }
    writeln!(s, "CELL_TYPES {nc}").unwrap();
    let ty = if mesh.dim == 2 { 5 } else { 10 };
    for _ in 0..nc {
        writeln!(s, "{ty}").unwrap();
    }
    writeln!(s, "CELL_DATA {nc}").unwrap();
    writeln!(s, "SCALARS region int 1").unwrap();
    writeln!(s, "LOOKUP_TABLE default").unwrap();
    for r in &mesh.regions {
        writeln!(s, "{}", if *r == Region::Minus { -1 } else { 1 }).unwrap();
    }
    if !fields.is_empty() {
        writeln!(s, "POINT_DATA {nv}").unwrap();
    }
    for f in fields {
        match f {
            VtkField::Scalar(name, vals) => {
                writeln!(s, "SCALARS {name} double 1").unwrap();
                writeln!(s, "LOOKUP_TABLE default").unwrap();
                for v in vals.iter() {
                    writeln!(s, "{v:?}").unwrap();
                }
            }
            VtkField::Vector(name, vals) => {
                writeln!(s, "VECTORS {name} double").unwrap();
                for i in 0..nv {
                    let mut c = [0.0; 3];
                    c[..mesh.dim].copy_from_slice(&vals[i * mesh.dim..(i + 1) * mesh.dim]);
                    writeln!(s, "{:?} {:?} {:?}", c[0], c[1], c[2]).unwrap();
                }
            }
        }
    }
    s
}
