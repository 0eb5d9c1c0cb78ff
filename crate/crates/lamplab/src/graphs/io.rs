//! Text import and export of graphs.
//!
//! A graph is stored as two files: an edge list (`<stem>.edges`) whose first
//! line is `v <count>` followed by one `u w` pair per line with `u < w`,
//! sorted; and a metadata sidecar (`<stem>.meta`) of `key = value` lines
//! recording the family spec, including any generation seed. The pair is
//! diff-friendly and sufficient to rebuild the topology exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{FamilySpec, GraphError, GraphTopology};

impl GraphTopology {
    /// Edge-list text in the export format: a `v <count>` header followed
    /// by sorted `u w` pairs with `u < w`.
    pub fn edge_text(&self) -> String {
        let mut edges = String::new();
        edges.push_str(&format!("v {}\n", self.vertex_count()));
        for u in 0..self.vertex_count() as u32 {
            for &w in self.neighbors(u) {
                if u < w {
                    edges.push_str(&format!("{u} {w}\n"));
                }
            }
        }
        edges
    }

    /// Metadata sidecar text: `key = value` lines for the family spec.
    pub fn meta_text(&self) -> String {
        let mut meta = String::new();
        for (key, value) in self.family().to_kv("") {
            meta.push_str(&format!("{key} = {value}\n"));
        }
        meta
    }

    /// Write `<stem>.edges` and `<stem>.meta` under `dir`; returns both paths.
    pub fn export(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), GraphError> {
        fs::create_dir_all(dir)?;
        let edges_path = dir.join(format!("{stem}.edges"));
        let meta_path = dir.join(format!("{stem}.meta"));
        fs::write(&edges_path, self.edge_text())?;
        fs::write(&meta_path, self.meta_text())?;
        Ok((edges_path, meta_path))
    }

    /// Read a graph written by [`export`](Self::export).
    pub fn import(edges_path: &Path, meta_path: &Path) -> Result<GraphTopology, GraphError> {
        let meta_text = fs::read_to_string(meta_path)?;
        let mut map = BTreeMap::new();
        for (lineno, line) in meta_text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                GraphError::MalformedFile(format!("{}:{}: expected `key = value`", meta_path.display(), lineno + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let family = FamilySpec::from_kv(&map, "")?;

        let edge_text = fs::read_to_string(edges_path)?;
        let mut lines = edge_text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| GraphError::MalformedFile("empty edge file".into()))?;
        let count: usize = header
            .strip_prefix("v ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| GraphError::MalformedFile(format!("bad header `{header}`")))?;
        let mut edges = Vec::new();
        for (lineno, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<u32, GraphError> {
                tok.and_then(|t| t.parse().ok()).ok_or_else(|| {
                    GraphError::MalformedFile(format!(
                        "{}:{}: expected `u w`",
                        edges_path.display(),
                        lineno + 1
                    ))
                })
            };
            let u = parse(parts.next())?;
            let w = parse(parts.next())?;
            edges.push((u, w));
        }
        GraphTopology::from_edges_with_family(count, &edges, family)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::FamilySpec;

    #[test]
    fn export_import_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = FamilySpec::Torus { dim: 2, side: 4 };
        let g = GraphTopology::generate(&spec).unwrap();
        let (edges, meta) = g.export(dir.path(), "torus").unwrap();
        let back = GraphTopology::import(&edges, &meta).unwrap();
        assert_eq!(back.family(), &spec);
        assert_eq!(back.vertex_count(), g.vertex_count());
        for v in 0..g.vertex_count() as u32 {
            assert_eq!(back.neighbors(v), g.neighbors(v));
        }
    }

    #[test]
    fn edge_file_is_sorted_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let g = GraphTopology::generate(&FamilySpec::Cycle { n: 4 }).unwrap();
        let (edges, _) = g.export(dir.path(), "cycle").unwrap();
        let text = std::fs::read_to_string(edges).unwrap();
        assert_eq!(text, "v 4\n0 1\n0 3\n1 2\n2 3\n");
    }

    #[test]
    fn import_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let edges = dir.path().join("g.edges");
        let meta = dir.path().join("g.meta");
        std::fs::write(&edges, "v 3\n0 1\n1 9\n").unwrap();
        std::fs::write(&meta, "family = cycle\nn = 3\n").unwrap();
        assert!(GraphTopology::import(&edges, &meta).is_err());
    }
}
