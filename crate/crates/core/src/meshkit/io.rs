use std::collections::HashMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::{Error, Result};

use super::forest::QuadMesh;
use super::Point;

/// Plain-text form of a mesh: geometry nodes, 9-node cells with region and face
/// tags, and periodic face pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshDump {
    pub nodes: Vec<Point>,
    pub cells: Vec<([usize; 9], String)>,
    pub pairs: Vec<(usize, usize)>,
}

impl MeshDump {
    pub fn from_mesh(mesh: &QuadMesh) -> Self {
        let mut ids = HashMap::new();
        let mut nodes = Vec::new();
        let mut cells = Vec::with_capacity(mesh.n_cells());
        for c in 0..mesh.n_cells() {
            let cell = mesh.cell(c);
            let geo = mesh.geometry_nodes(c);
            let mut conn = [0usize; 9];
            for b in 0..3 {
                for a in 0..3 {
                    let (u, v) = cell.node_position(a, b, 2);
                    let key = mesh.point_key(cell.tree, u, v, false);
                    conn[b * 3 + a] = *ids.entry(key).or_insert_with(|| {
                        nodes.push(geo[b * 3 + a]);
                        nodes.len() - 1
                    });
                }
            }
            let region = match mesh.region(c).pore() {
                None => "free".to_string(),
                Some(p) => format!("porous:{p}"),
            };
            let faces: Vec<&str> = (0..4)
                .map(|f| mesh.face_tag(c, f).map_or("-", |t| t.as_str()))
                .collect();
            cells.push((conn, format!("{region}|{}", faces.join(","))));
        }
        Self {
            nodes,
            cells,
            pairs: mesh.periodic_face_pairs(),
        }
    }

    pub fn write(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nodes: {}", self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {}", p[0], p[1]);
        }
        let _ = writeln!(s, "cells: {}", self.cells.len());
        for (i, (conn, tag)) in self.cells.iter().enumerate() {
            let _ = write!(s, "{i}");
            for n in conn {
                let _ = write!(s, " {n}");
            }
            let _ = writeln!(s, " {tag}");
        }
        let _ = writeln!(s, "pairs: {}", self.pairs.len());
        for (a, b) in &self.pairs {
            let _ = writeln!(s, "{a} {b}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut it = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            it.next().ok_or(Error::Parse {
                line: 0,
                message: format!("unexpected end of input in {what}"),
            })
        };
        let count = |ln: usize, l: &str, name: &str| -> Result<usize> {
            l.strip_prefix(name)
                .and_then(|r| r.strip_prefix(':'))
                .and_then(|r| r.trim().parse().ok())
                .ok_or_else(|| Error::Parse {
                    line: ln,
                    message: format!("expected `{name}: <count>`"),
                })
        };
        let bad = |ln: usize, m: &str| Error::Parse {
            line: ln,
            message: m.to_string(),
        };

        let (ln, l) = next("header")?;
        let n = count(ln, l, "nodes")?;
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let (ln, l) = next("nodes")?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 || f[0].parse::<usize>().ok() != Some(i) {
                return Err(bad(ln, "expected `id x y`"));
            }
            let x = f[1].parse().map_err(|_| bad(ln, "bad x coordinate"))?;
            let y = f[2].parse().map_err(|_| bad(ln, "bad y coordinate"))?;
            nodes.push([x, y]);
        }
        let (ln, l) = next("header")?;
        let m = count(ln, l, "cells")?;
        let mut cells = Vec::with_capacity(m);
        for i in 0..m {
            let (ln, l) = next("cells")?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 11 || f[0].parse::<usize>().ok() != Some(i) {
                return Err(bad(ln, "expected `id n0..n8 tag`"));
            }
            let mut conn = [0usize; 9];
            for (k, c) in conn.iter_mut().enumerate() {
                *c = f[k + 1].parse().map_err(|_| bad(ln, "bad node id"))?;
                if *c >= n {
                    return Err(bad(ln, "node id out of range"));
                }
            }
            cells.push((conn, f[10].to_string()));
        }
        let (ln, l) = next("header")?;
        let p = count(ln, l, "pairs")?;
        let mut pairs = Vec::with_capacity(p);
        for _ in 0..p {
            let (ln, l) = next("pairs")?;
            let f: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(ln, "bad face id")))
                .collect::<Result<_>>()?;
            if f.len() != 2 {
                return Err(bad(ln, "expected `faceA faceB`"));
            }
            pairs.push((f[0], f[1]));
        }
        Ok(Self { nodes, cells, pairs })
    }

    /// SHA-256 of the text form, hex encoded.
    pub fn hash(&self) -> String {
        hex_digest(self.write().as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

impl QuadMesh {
    pub fn dump(&self) -> MeshDump {
        MeshDump::from_mesh(self)
    }

    pub fn hash(&self) -> String {
        self.dump().hash()
    }
}
