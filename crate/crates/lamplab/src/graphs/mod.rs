//! Finite graph families and topology queries.
//!
//! Every graph in the laboratory is a connected simple graph with dense
//! vertex identifiers `0..|V|`, stored as sorted neighbor lists. Graphs are
//! built either from a [`FamilySpec`] via [`GraphTopology::generate`], from an
//! explicit edge list via [`GraphTopology::from_edges`], or read back from the
//! text format written by [`GraphTopology::export`].
//!
//! Vertex identifiers follow a family-specific canonical ordering (row-major
//! coordinates for tori and percolation boxes, binary order for hypercubes,
//! lexicographic rank for permutations), so a spec plus a seed pins the graph
//! down exactly.

mod build;
mod io;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use build::{percolation_attempt_seed, percolation_open_bonds};

/// Generation refuses specs whose adjacency lists would exceed this many
/// entries; the laboratory targets desk-scale graphs, not bulk storage.
pub const ADJACENCY_ENTRY_CAP: usize = 1 << 25;

/// Attempts made before rejection sampling gives up.
pub const RETRY_CAP: usize = 1000;

/// The graph families the laboratory can build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FamilySpec {
    /// `dim`-dimensional discrete torus with `side` vertices per axis.
    Torus { dim: usize, side: usize },
    /// Binary hypercube `{0,1}^dim`.
    Hypercube { dim: usize },
    /// Complete graph on `n` vertices.
    Complete { n: usize },
    /// Cycle on `n` vertices.
    Cycle { n: usize },
    /// Uniform simple `degree`-regular graph on `n` vertices, drawn by the
    /// pairing model and conditioned on connectivity by rejection.
    RandomRegular { degree: usize, n: usize, seed: u64 },
    /// Largest open cluster of Bernoulli(`p`) bond percolation on the box
    /// `[-radius, radius]^dim`.
    PercolationBall { dim: usize, radius: usize, p: f64, seed: u64 },
    /// Cayley graph of the symmetric group on `n` symbols generated by all
    /// transpositions.
    SymmetricTranspositions { n: usize },
    /// Lamplighter (wreath product) graph over a base family: a position in
    /// the base graph together with one binary lamp per base vertex.
    Wreath { base: Box<FamilySpec> },
    /// A graph supplied as an explicit edge list rather than generated.
    Custom { label: String },
}

/// Errors from graph construction and file handling.
#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    /// The parameters do not describe a valid connected simple graph.
    #[error("invalid graph spec: {0}")]
    InvalidSpec(String),
    /// Rejection sampling failed `attempts` times in a row.
    #[error("gave up after {attempts} attempts: {reason}")]
    RetryExhausted { attempts: usize, reason: String },
    /// An edge-list or metadata file could not be parsed.
    #[error("malformed graph file: {0}")]
    MalformedFile(String),
    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Degree summary of a graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    /// Map from degree to the number of vertices with that degree.
    pub histogram: BTreeMap<usize, usize>,
}

/// A finite connected simple graph with dense vertex identifiers.
#[derive(Clone, Debug)]
pub struct GraphTopology {
    family: FamilySpec,
    /// Sorted neighbor lists; `adjacency[v]` never contains `v`.
    adjacency: Vec<Vec<u32>>,
    /// Prefix sums of degrees, used for stationary sampling.
    cumulative_degrees: Vec<u64>,
    is_connected: bool,
}

impl GraphTopology {
    /// Build the graph described by `spec`.
    pub fn generate(spec: &FamilySpec) -> Result<GraphTopology, GraphError> {
        build::generate(spec)
    }

    /// Build a graph from an undirected edge list on vertices `0..n`.
    ///
    /// The list must describe a connected simple graph: no loops, no repeated
    /// edges, every identifier below `n`.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<GraphTopology, GraphError> {
        build::from_edges(n, edges, FamilySpec::Custom { label: format!("edges-{n}v-{}e", edges.len()) })
    }

    /// As [`from_edges`](Self::from_edges) with an explicit family tag.
    pub(crate) fn from_edges_with_family(
        n: usize,
        edges: &[(u32, u32)],
        family: FamilySpec,
    ) -> Result<GraphTopology, GraphError> {
        build::from_edges(n, edges, family)
    }

    pub(crate) fn from_parts(family: FamilySpec, adjacency: Vec<Vec<u32>>) -> GraphTopology {
        let mut cumulative_degrees = Vec::with_capacity(adjacency.len() + 1);
        cumulative_degrees.push(0u64);
        for list in &adjacency {
            let last = *cumulative_degrees.last().unwrap();
            cumulative_degrees.push(last + list.len() as u64);
        }
        GraphTopology { family, adjacency, cumulative_degrees, is_connected: true }
    }

    /// The family spec this graph was built from.
    pub fn family(&self) -> &FamilySpec {
        &self.family
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        (self.total_degree() / 2) as usize
    }

    /// Sum of all degrees, i.e. `2|E|`.
    pub fn total_degree(&self) -> u64 {
        *self.cumulative_degrees.last().unwrap()
    }

    /// Sorted neighbors of `v`.
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    /// Degree of `v`.
    pub fn degree(&self, v: u32) -> usize {
        self.adjacency[v as usize].len()
    }

    /// Always true: generators reject or retry disconnected outcomes.
    pub fn is_connected(&self) -> bool {
        self.is_connected
    }

    /// Stationary probability of `v` under the lazy walk: `deg(v) / 2|E|`.
    pub fn stationary_probability(&self, v: u32) -> f64 {
        self.degree(v) as f64 / self.total_degree() as f64
    }

    /// Map a draw `k` from `0..total_degree()` to the vertex owning that
    /// stub; uniform `k` yields a stationary vertex.
    pub(crate) fn vertex_of_stub(&self, k: u64) -> u32 {
        debug_assert!(k < self.total_degree());
        let idx = self.cumulative_degrees.partition_point(|&c| c <= k);
        (idx - 1) as u32
    }

    /// Whether the family is vertex-transitive, in which case per-vertex walk
    /// statistics do not depend on the vertex.
    pub fn is_vertex_transitive(&self) -> bool {
        fn transitive(spec: &FamilySpec) -> bool {
            match spec {
                FamilySpec::Torus { .. }
                | FamilySpec::Hypercube { .. }
                | FamilySpec::Complete { .. }
                | FamilySpec::Cycle { .. }
                | FamilySpec::SymmetricTranspositions { .. } => true,
                FamilySpec::Wreath { base } => transitive(base),
                FamilySpec::RandomRegular { .. }
                | FamilySpec::PercolationBall { .. }
                | FamilySpec::Custom { .. } => false,
            }
        }
        transitive(&self.family)
    }

    /// Breadth-first distances from `x` to every vertex.
    pub fn distances_from(&self, x: u32) -> Vec<u32> {
        self.multi_source_distances(std::slice::from_ref(&x))
    }

    /// Breadth-first distances to the nearest of `sources`.
    pub fn multi_source_distances(&self, sources: &[u32]) -> Vec<u32> {
        assert!(!sources.is_empty(), "distance to an empty set");
        let mut dist = vec![u32::MAX; self.vertex_count()];
        let mut queue = std::collections::VecDeque::new();
        for &s in sources {
            if dist[s as usize] == u32::MAX {
                dist[s as usize] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[v as usize];
            for &w in self.neighbors(v) {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = d + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Graph distance between `x` and `y`.
    pub fn distance(&self, x: u32, y: u32) -> u32 {
        self.distances_from(x)[y as usize]
    }

    /// Sorted closed ball of radius `radius` around `x`.
    pub fn ball(&self, x: u32, radius: u32) -> Vec<u32> {
        let dist = self.distances_from(x);
        (0..self.vertex_count() as u32).filter(|&v| dist[v as usize] <= radius).collect()
    }

    /// Largest distance from `x` to any vertex.
    pub fn eccentricity(&self, x: u32) -> u32 {
        *self.distances_from(x).iter().max().unwrap()
    }

    /// Largest eccentricity over all vertices.
    pub fn diameter(&self) -> u32 {
        (0..self.vertex_count() as u32).map(|v| self.eccentricity(v)).max().unwrap()
    }

    /// Degree summary.
    pub fn degree_stats(&self) -> DegreeStats {
        let mut histogram = BTreeMap::new();
        for list in &self.adjacency {
            *histogram.entry(list.len()).or_insert(0usize) += 1;
        }
        let min = *histogram.keys().next().unwrap();
        let max = *histogram.keys().last().unwrap();
        let mean = self.total_degree() as f64 / self.vertex_count() as f64;
        DegreeStats { min, max, mean, histogram }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Torus { dim, side } => write!(f, "torus(dim={dim}, side={side})"),
            FamilySpec::Hypercube { dim } => write!(f, "hypercube(dim={dim})"),
            FamilySpec::Complete { n } => write!(f, "complete(n={n})"),
            FamilySpec::Cycle { n } => write!(f, "cycle(n={n})"),
            FamilySpec::RandomRegular { degree, n, seed } => {
                write!(f, "random_regular(degree={degree}, n={n}, seed={seed})")
            }
            FamilySpec::PercolationBall { dim, radius, p, seed } => {
                write!(f, "percolation_ball(dim={dim}, radius={radius}, p={p}, seed={seed})")
            }
            FamilySpec::SymmetricTranspositions { n } => {
                write!(f, "symmetric_transpositions(n={n})")
            }
            FamilySpec::Wreath { base } => write!(f, "wreath({base})"),
            FamilySpec::Custom { label } => write!(f, "custom({label})"),
        }
    }
}

impl FamilySpec {
    /// Flat key-value form, used by metadata sidecars and config files.
    ///
    /// Keys are emitted under `prefix` (pass `""` at top level); a wreath's
    /// base family nests exactly one level as `base_*`.
    pub fn to_kv(&self, prefix: &str) -> Vec<(String, String)> {
        let key = |k: &str| format!("{prefix}{k}");
        match self {
            FamilySpec::Torus { dim, side } => vec![
                (key("family"), "torus".into()),
                (key("dim"), dim.to_string()),
                (key("side"), side.to_string()),
            ],
            FamilySpec::Hypercube { dim } => {
                vec![(key("family"), "hypercube".into()), (key("dim"), dim.to_string())]
            }
            FamilySpec::Complete { n } => {
                vec![(key("family"), "complete".into()), (key("n"), n.to_string())]
            }
            FamilySpec::Cycle { n } => {
                vec![(key("family"), "cycle".into()), (key("n"), n.to_string())]
            }
            FamilySpec::RandomRegular { degree, n, seed } => vec![
                (key("family"), "random_regular".into()),
                (key("degree"), degree.to_string()),
                (key("n"), n.to_string()),
                (key("seed"), seed.to_string()),
            ],
            FamilySpec::PercolationBall { dim, radius, p, seed } => vec![
                (key("family"), "percolation_ball".into()),
                (key("dim"), dim.to_string()),
                (key("radius"), radius.to_string()),
                (key("p"), p.to_string()),
                (key("seed"), seed.to_string()),
            ],
            FamilySpec::SymmetricTranspositions { n } => vec![
                (key("family"), "symmetric_transpositions".into()),
                (key("n"), n.to_string()),
            ],
            FamilySpec::Wreath { base } => {
                let mut kv = vec![(key("family"), "wreath".into())];
                kv.extend(base.to_kv(&format!("{prefix}base_")));
                kv
            }
            FamilySpec::Custom { label } => {
                vec![(key("family"), "custom".into()), (key("label"), label.clone())]
            }
        }
    }

    /// Parse the key-value form written by [`to_kv`](Self::to_kv).
    pub fn from_kv(map: &BTreeMap<String, String>, prefix: &str) -> Result<FamilySpec, GraphError> {
        let get = |k: &str| -> Result<&str, GraphError> {
            let key = format!("{prefix}{k}");
            map.get(&key)
                .map(String::as_str)
                .ok_or_else(|| GraphError::MalformedFile(format!("missing key `{key}`")))
        };
        let parse_usize = |k: &str| -> Result<usize, GraphError> {
            get(k)?.parse().map_err(|_| {
                GraphError::MalformedFile(format!("key `{prefix}{k}` is not a count"))
            })
        };
        let parse_u64 = |k: &str| -> Result<u64, GraphError> {
            get(k)?.parse().map_err(|_| {
                GraphError::MalformedFile(format!("key `{prefix}{k}` is not an integer seed"))
            })
        };
        match get("family")? {
            "torus" => Ok(FamilySpec::Torus { dim: parse_usize("dim")?, side: parse_usize("side")? }),
            "hypercube" => Ok(FamilySpec::Hypercube { dim: parse_usize("dim")? }),
            "complete" => Ok(FamilySpec::Complete { n: parse_usize("n")? }),
            "cycle" => Ok(FamilySpec::Cycle { n: parse_usize("n")? }),
            "random_regular" => Ok(FamilySpec::RandomRegular {
                degree: parse_usize("degree")?,
                n: parse_usize("n")?,
                seed: parse_u64("seed")?,
            }),
            "percolation_ball" => Ok(FamilySpec::PercolationBall {
                dim: parse_usize("dim")?,
                radius: parse_usize("radius")?,
                p: get("p")?.parse().map_err(|_| {
                    GraphError::MalformedFile(format!("key `{prefix}p` is not a probability"))
                })?,
                seed: parse_u64("seed")?,
            }),
            "symmetric_transpositions" => {
                Ok(FamilySpec::SymmetricTranspositions { n: parse_usize("n")? })
            }
            "wreath" => {
                let base = FamilySpec::from_kv(map, &format!("{prefix}base_"))?;
                Ok(FamilySpec::Wreath { base: Box::new(base) })
            }
            "custom" => Ok(FamilySpec::Custom { label: get("label")?.to_string() }),
            other => Err(GraphError::MalformedFile(format!("unknown family `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_2_3_shape() {
        let g = GraphTopology::generate(&FamilySpec::Torus { dim: 2, side: 3 }).unwrap();
        assert_eq!(g.vertex_count(), 9);
        assert!((0..9).all(|v| g.degree(v) == 4));
        assert!(g.is_connected());
        // Row-major: vertex 0 is (0,0); its neighbors are (0,1), (0,2), (1,0), (2,0).
        assert_eq!(g.neighbors(0), &[1, 2, 3, 6]);
    }

    #[test]
    fn hypercube_3_shape() {
        let g = GraphTopology::generate(&FamilySpec::Hypercube { dim: 3 }).unwrap();
        assert_eq!(g.vertex_count(), 8);
        assert!((0..8).all(|v| g.degree(v) == 3));
        assert_eq!(g.diameter(), 3);
        assert_eq!(g.neighbors(0), &[1, 2, 4]);
    }

    #[test]
    fn complete_4_has_six_edges() {
        let g = GraphTopology::generate(&FamilySpec::Complete { n: 4 }).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert_eq!(g.diameter(), 1);
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        for spec in [
            FamilySpec::Torus { dim: 0, side: 3 },
            FamilySpec::Torus { dim: 2, side: 1 },
            FamilySpec::Complete { n: 1 },
            FamilySpec::Cycle { n: 2 },
            FamilySpec::Hypercube { dim: 0 },
            FamilySpec::RandomRegular { degree: 3, n: 3, seed: 1 },
            FamilySpec::RandomRegular { degree: 1, n: 6, seed: 1 },
            FamilySpec::RandomRegular { degree: 3, n: 5, seed: 1 },
            FamilySpec::SymmetricTranspositions { n: 7 },
            FamilySpec::PercolationBall { dim: 2, radius: 3, p: 1.5, seed: 1 },
        ] {
            assert!(
                matches!(
                    GraphTopology::generate(&spec),
                    Err(GraphError::InvalidSpec(_))
                ),
                "spec {spec} should be invalid"
            );
        }
    }

    #[test]
    fn distance_and_ball_on_cycle() {
        let g = GraphTopology::generate(&FamilySpec::Cycle { n: 6 }).unwrap();
        assert_eq!(g.distance(0, 3), 3);
        assert_eq!(g.distance(0, 5), 1);
        assert_eq!(g.ball(0, 1), vec![0, 1, 5]);
        assert_eq!(g.ball(0, 3).len(), 6);
        assert_eq!(g.diameter(), 3);
    }

    #[test]
    fn symmetric_transpositions_4() {
        let g =
            GraphTopology::generate(&FamilySpec::SymmetricTranspositions { n: 4 }).unwrap();
        assert_eq!(g.vertex_count(), 24);
        // Degree is the number of transpositions, C(4,2) = 6.
        assert!((0..24).all(|v| g.degree(v) == 6));
        assert!(g.is_vertex_transitive());
    }

    #[test]
    fn degree_stats_on_complete() {
        let g = GraphTopology::generate(&FamilySpec::Complete { n: 5 }).unwrap();
        let stats = g.degree_stats();
        assert_eq!((stats.min, stats.max), (4, 4));
        assert_eq!(stats.mean, 4.0);
        assert_eq!(stats.histogram.get(&4), Some(&5));
    }

    #[test]
    fn family_kv_round_trip() {
        let specs = [
            FamilySpec::Torus { dim: 3, side: 8 },
            FamilySpec::RandomRegular { degree: 3, n: 50, seed: 9 },
            FamilySpec::PercolationBall { dim: 3, radius: 8, p: 0.4, seed: 7 },
            FamilySpec::Wreath { base: Box::new(FamilySpec::Complete { n: 3 }) },
            FamilySpec::Custom { label: "spider".into() },
        ];
        for spec in specs {
            let map: BTreeMap<String, String> = spec.to_kv("").into_iter().collect();
            let back = FamilySpec::from_kv(&map, "").unwrap();
            assert_eq!(spec, back);
        }
    }

    #[test]
    fn stub_lookup_matches_degrees() {
        let g = GraphTopology::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        // Degrees 1, 2, 1; stubs 0 | 1 2 | 3.
        assert_eq!(g.vertex_of_stub(0), 0);
        assert_eq!(g.vertex_of_stub(1), 1);
        assert_eq!(g.vertex_of_stub(2), 1);
        assert_eq!(g.vertex_of_stub(3), 2);
    }
}
