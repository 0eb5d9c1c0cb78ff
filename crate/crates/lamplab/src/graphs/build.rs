//! Generators for the graph families.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::RngExt;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FamilySpec, GraphError, GraphTopology, ADJACENCY_ENTRY_CAP, RETRY_CAP};
use crate::rng::derive_seed;

pub(super) fn generate(spec: &FamilySpec) -> Result<GraphTopology, GraphError> {
    let adjacency = match spec {
        FamilySpec::Torus { dim, side } => torus(*dim, *side)?,
        FamilySpec::Hypercube { dim } => hypercube(*dim)?,
        FamilySpec::Complete { n } => complete(*n)?,
        FamilySpec::Cycle { n } => cycle(*n)?,
        FamilySpec::RandomRegular { degree, n, seed } => random_regular(*degree, *n, *seed)?,
        FamilySpec::PercolationBall { dim, radius, p, seed } => {
            percolation_ball(*dim, *radius, *p, *seed)?
        }
        FamilySpec::SymmetricTranspositions { n } => symmetric_transpositions(*n)?,
        FamilySpec::Wreath { base } => {
            let base_graph = generate(base)?;
            wreath(&base_graph)?
        }
        FamilySpec::Custom { .. } => {
            return Err(GraphError::InvalidSpec(
                "custom graphs are built from explicit edge lists, not generated".into(),
            ))
        }
    };
    finalize(spec.clone(), adjacency)
}

pub(super) fn from_edges(
    n: usize,
    edges: &[(u32, u32)],
    family: FamilySpec,
) -> Result<GraphTopology, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidSpec("a graph needs at least 2 vertices".into()));
    }
    let mut adjacency = vec![Vec::new(); n];
    let mut seen = BTreeSet::new();
    for &(u, v) in edges {
        if u as usize >= n || v as usize >= n {
            return Err(GraphError::InvalidSpec(format!(
                "edge ({u}, {v}) leaves the vertex range 0..{n}"
            )));
        }
        if u == v {
            return Err(GraphError::InvalidSpec(format!("self-loop at {u}")));
        }
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) {
            return Err(GraphError::InvalidSpec(format!("repeated edge ({u}, {v})")));
        }
        adjacency[u as usize].push(v);
        adjacency[v as usize].push(u);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    finalize(family, adjacency)
}

/// Validate the structural invariants and assemble the topology.
fn finalize(family: FamilySpec, adjacency: Vec<Vec<u32>>) -> Result<GraphTopology, GraphError> {
    let n = adjacency.len();
    if n < 2 {
        return Err(GraphError::InvalidSpec("a graph needs at least 2 vertices".into()));
    }
    let entries: usize = adjacency.iter().map(Vec::len).sum();
    if entries > ADJACENCY_ENTRY_CAP {
        return Err(GraphError::InvalidSpec(format!(
            "{family} needs {entries} adjacency entries, above the cap {ADJACENCY_ENTRY_CAP}"
        )));
    }
    for (v, list) in adjacency.iter().enumerate() {
        if list.is_empty() {
            return Err(GraphError::InvalidSpec(format!("vertex {v} is isolated")));
        }
        for pair in list.windows(2) {
            if pair[0] >= pair[1] {
                return Err(GraphError::InvalidSpec(format!(
                    "neighbor list of {v} is not sorted and duplicate-free"
                )));
            }
        }
        if list.binary_search(&(v as u32)).is_ok() {
            return Err(GraphError::InvalidSpec(format!("self-loop at {v}")));
        }
    }
    if !connected(&adjacency) {
        return Err(GraphError::InvalidSpec(format!("{family} is not connected")));
    }
    Ok(GraphTopology::from_parts(family, adjacency))
}

fn connected(adjacency: &[Vec<u32>]) -> bool {
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([0u32]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v as usize] {
            if !seen[w as usize] {
                seen[w as usize] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count == adjacency.len()
}

fn checked_power(base: usize, exp: usize, what: &str) -> Result<usize, GraphError> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc
            .checked_mul(base)
            .filter(|&v| v <= ADJACENCY_ENTRY_CAP)
            .ok_or_else(|| GraphError::InvalidSpec(format!("{what} is too large")))?;
    }
    Ok(acc)
}

fn torus(dim: usize, side: usize) -> Result<Vec<Vec<u32>>, GraphError> {
    if dim == 0 {
        return Err(GraphError::InvalidSpec("torus dimension must be positive".into()));
    }
    if side < 2 {
        return Err(GraphError::InvalidSpec(
            "torus side must be at least 2 to avoid self-loops".into(),
        ));
    }
    let n = checked_power(side, dim, "torus")?;
    // Row-major identifiers: the last coordinate varies fastest.
    let mut adjacency = Vec::with_capacity(n);
    let mut coords = vec![0usize; dim];
    for _ in 0..n {
        let mut neighbors = BTreeSet::new();
        for axis in 0..dim {
            let stride = side.pow((dim - 1 - axis) as u32);
            let c = coords[axis];
            for next in [(c + 1) % side, (c + side - 1) % side] {
                let delta = next as i64 - c as i64;
                let index = (index_of(&coords, side) as i64 + delta * stride as i64) as usize;
                neighbors.insert(index as u32);
            }
        }
        adjacency.push(neighbors.into_iter().collect());
        // Advance the coordinate odometer.
        for axis in (0..dim).rev() {
            coords[axis] += 1;
            if coords[axis] < side {
                break;
            }
            coords[axis] = 0;
        }
    }
    Ok(adjacency)
}

fn index_of(coords: &[usize], side: usize) -> usize {
    coords.iter().fold(0, |acc, &c| acc * side + c)
}

fn hypercube(dim: usize) -> Result<Vec<Vec<u32>>, GraphError> {
    if dim == 0 || dim > 24 {
        return Err(GraphError::InvalidSpec("hypercube dimension must be in 1..=24".into()));
    }
    let n = checked_power(2, dim, "hypercube")?;
    Ok((0..n as u32)
        .map(|v| {
            let mut list: Vec<u32> = (0..dim).map(|b| v ^ (1 << b)).collect();
            list.sort_unstable();
            list
        })
        .collect())
}

fn complete(n: usize) -> Result<Vec<Vec<u32>>, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidSpec("complete graph needs n >= 2".into()));
    }
    checked_power(n, 2, "complete graph")?;
    Ok((0..n as u32)
        .map(|v| (0..n as u32).filter(|&w| w != v).collect())
        .collect())
}

fn cycle(n: usize) -> Result<Vec<Vec<u32>>, GraphError> {
    if n < 3 {
        return Err(GraphError::InvalidSpec("cycle needs n >= 3".into()));
    }
    Ok((0..n as u32)
        .map(|v| {
            let mut list = vec![(v + 1) % n as u32, (v + n as u32 - 1) % n as u32];
            list.sort_unstable();
            list
        })
        .collect())
}

fn random_regular(degree: usize, n: usize, seed: u64) -> Result<Vec<Vec<u32>>, GraphError> {
    if degree == 0 || degree >= n {
        return Err(GraphError::InvalidSpec("regular degree must satisfy 1 <= d < n".into()));
    }
    if (degree * n) % 2 != 0 {
        return Err(GraphError::InvalidSpec("d * n must be even for a d-regular graph".into()));
    }
    if degree == 1 && n != 2 {
        return Err(GraphError::InvalidSpec(
            "a connected 1-regular graph is a single edge (n = 2)".into(),
        ));
    }
    checked_power(n.max(degree), 2, "random regular graph")?;

    // Pairing model: shuffle d stubs per vertex, pair them off, and reject
    // outcomes with loops, parallel edges, or disconnected pieces.
    let mut stubs: Vec<u32> = Vec::with_capacity(degree * n);
    for v in 0..n as u32 {
        stubs.extend(std::iter::repeat(v).take(degree));
    }
    for attempt in 0..RETRY_CAP {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, attempt as u64));
        stubs.shuffle(&mut rng);
        let mut edges = BTreeSet::new();
        let mut simple = true;
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || !edges.insert((u.min(v), u.max(v))) {
                simple = false;
                break;
            }
        }
        if !simple {
            continue;
        }
        let mut adjacency = vec![Vec::with_capacity(degree); n];
        for &(u, v) in &edges {
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        if connected(&adjacency) {
            return Ok(adjacency);
        }
    }
    Err(GraphError::RetryExhausted {
        attempts: RETRY_CAP,
        reason: format!("no simple connected {degree}-regular pairing on {n} vertices"),
    })
}

/// The open bonds drawn for one percolation attempt, as index pairs into the
/// row-major site grid of the box `[-radius, radius]^dim`.
///
/// Exposed so an independent connectivity check can replay exactly the same
/// draws that the generator consumed.
pub fn percolation_open_bonds(dim: usize, radius: usize, p: f64, attempt_seed: u64) -> Vec<(u32, u32)> {
    let side = 2 * radius + 1;
    let sites = side.pow(dim as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);
    let mut open = Vec::new();
    // Canonical order: sites ascending, axes ascending, bond toward +1.
    for site in 0..sites {
        for axis in 0..dim {
            let stride = side.pow((dim - 1 - axis) as u32);
            let coord = site / stride % side;
            if coord + 1 < side {
                let neighbor = site + stride;
                if rng.random_bool(p) {
                    open.push((site as u32, neighbor as u32));
                }
            }
        }
    }
    open
}

/// Seed for percolation attempt number `attempt` of a spec seeded with `seed`.
pub fn percolation_attempt_seed(seed: u64, attempt: usize) -> u64 {
    derive_seed(seed, attempt as u64)
}

fn percolation_ball(dim: usize, radius: usize, p: f64, seed: u64) -> Result<Vec<Vec<u32>>, GraphError> {
    if dim == 0 || radius == 0 {
        return Err(GraphError::InvalidSpec("percolation box needs dim >= 1, radius >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(GraphError::InvalidSpec(format!("bond probability {p} outside [0, 1]")));
    }
    let side = 2 * radius + 1;
    let sites = checked_power(side, dim, "percolation box")?;

    for attempt in 0..RETRY_CAP {
        let open = percolation_open_bonds(dim, radius, p, percolation_attempt_seed(seed, attempt));
        let mut box_adjacency = vec![Vec::new(); sites];
        for &(u, v) in &open {
            box_adjacency[u as usize].push(v);
            box_adjacency[v as usize].push(u);
        }
        // Largest open cluster by flood fill; earliest cluster wins ties.
        let mut component = vec![usize::MAX; sites];
        let mut best: (usize, usize) = (0, usize::MAX); // (size, representative)
        let mut next_component = 0;
        for start in 0..sites {
            if component[start] != usize::MAX {
                continue;
            }
            let mut queue = VecDeque::from([start]);
            component[start] = next_component;
            let mut size = 1;
            while let Some(v) = queue.pop_front() {
                for &w in &box_adjacency[v] {
                    if component[w as usize] == usize::MAX {
                        component[w as usize] = next_component;
                        size += 1;
                        queue.push_back(w as usize);
                    }
                }
            }
            if size > best.0 {
                best = (size, next_component);
            }
            next_component += 1;
        }
        if best.0 < 10 {
            continue;
        }
        // Relabel cluster sites in ascending site order.
        let mut to_new = HashMap::new();
        for site in 0..sites {
            if component[site] == best.1 {
                let id = to_new.len() as u32;
                to_new.insert(site as u32, id);
            }
        }
        let mut adjacency = vec![Vec::new(); to_new.len()];
        for (&site, &id) in &to_new {
            for &w in &box_adjacency[site as usize] {
                if let Some(&wid) = to_new.get(&w) {
                    adjacency[id as usize].push(wid);
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        return Ok(adjacency);
    }
    Err(GraphError::RetryExhausted {
        attempts: RETRY_CAP,
        reason: format!("no open cluster with 10+ vertices at p = {p}"),
    })
}

fn symmetric_transpositions(n: usize) -> Result<Vec<Vec<u32>>, GraphError> {
    if !(2..=6).contains(&n) {
        return Err(GraphError::InvalidSpec(
            "transposition Cayley graph supports 2 <= n <= 6".into(),
        ));
    }
    // All permutations of 0..n in lexicographic order.
    let mut perms: Vec<Vec<u8>> = Vec::new();
    let mut current: Vec<u8> = (0..n as u8).collect();
    loop {
        perms.push(current.clone());
        // Classic next-permutation step.
        let Some(i) = (0..n - 1).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    let rank: HashMap<Vec<u8>, u32> =
        perms.iter().cloned().zip(0..perms.len() as u32).collect();
    Ok(perms
        .iter()
        .map(|perm| {
            let mut list: Vec<u32> = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in i + 1..n {
                    let mut image = perm.clone();
                    image.swap(i, j);
                    list.push(rank[&image]);
                }
            }
            list.sort_unstable();
            list
        })
        .collect())
}

/// Wreath product of the two-point lamp group with `base`: states are
/// `(lamps, position)` with identifier `position * 2^n + lamps`, adjacent
/// when the positions are adjacent in the base and the lamps agree away from
/// the two endpoints.
pub(super) fn wreath(base: &GraphTopology) -> Result<Vec<Vec<u32>>, GraphError> {
    let n = base.vertex_count();
    if n > 16 {
        return Err(GraphError::InvalidSpec(format!(
            "wreath base has {n} vertices; the explicit product is capped at 16"
        )));
    }
    let configs: u32 = 1 << n;
    let states = n * configs as usize;
    let entries = 4usize * base.total_degree() as usize * configs as usize;
    if entries > ADJACENCY_ENTRY_CAP {
        return Err(GraphError::InvalidSpec(format!(
            "wreath over {} needs {entries} adjacency entries, above the cap",
            base.family()
        )));
    }
    let mut adjacency = vec![Vec::new(); states];
    for x in 0..n as u32 {
        for &y in base.neighbors(x) {
            for lamps in 0..configs {
                let state = x * configs + lamps;
                let cleared = lamps & !(1 << x) & !(1 << y);
                for bx in 0..2u32 {
                    for by in 0..2u32 {
                        let other = cleared | (bx << x) | (by << y);
                        adjacency[state as usize].push(y * configs + other);
                    }
                }
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    Ok(adjacency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::FamilySpec;

    #[test]
    fn torus_side_two_collapses_to_hypercube() {
        let torus = generate(&FamilySpec::Torus { dim: 3, side: 2 }).unwrap();
        let cube = generate(&FamilySpec::Hypercube { dim: 3 }).unwrap();
        assert_eq!(torus.vertex_count(), cube.vertex_count());
        for v in 0..8 {
            assert_eq!(torus.degree(v), 3, "side-2 torus deduplicates the wrap edge");
        }
        assert_eq!(torus.diameter(), cube.diameter());
    }

    #[test]
    fn random_regular_is_reproducible_and_regular() {
        let spec = FamilySpec::RandomRegular { degree: 3, n: 50, seed: 9 };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert!((0..50).all(|v| a.degree(v) == 3));
        assert!((0..50).all(|v| a.neighbors(v) == b.neighbors(v)));
        let c = generate(&FamilySpec::RandomRegular { degree: 3, n: 50, seed: 10 }).unwrap();
        assert!((0..50).any(|v| a.neighbors(v) != c.neighbors(v)));
    }

    #[test]
    fn percolation_cluster_is_connected_and_reproducible() {
        let spec = FamilySpec::PercolationBall { dim: 2, radius: 6, p: 0.6, seed: 3 };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert!(a.vertex_count() >= 10);
        assert!(a.is_connected());
        assert!((0..a.vertex_count() as u32).all(|v| a.neighbors(v) == b.neighbors(v)));
        // Degrees on the square lattice box stay within 1..=4.
        let stats = a.degree_stats();
        assert!(stats.min >= 1 && stats.max <= 4);
    }

    #[test]
    fn percolation_subcritical_exhausts_retries() {
        let spec = FamilySpec::PercolationBall { dim: 2, radius: 2, p: 0.01, seed: 3 };
        assert!(matches!(generate(&spec), Err(GraphError::RetryExhausted { .. })));
    }

    #[test]
    fn wreath_over_edge_matches_hand_count() {
        // Base K_2: 2 positions, 4 lamp configs, 8 states; each state has
        // 4 neighbors (lamp choices at both endpoints of the single edge).
        let g = generate(&FamilySpec::Wreath { base: Box::new(FamilySpec::Complete { n: 2 }) })
            .unwrap();
        assert_eq!(g.vertex_count(), 8);
        assert!((0..8).all(|v| g.degree(v) == 4));
        assert_eq!(g.edge_count(), 16);
    }

    #[test]
    fn wreath_degrees_scale_with_base_degree() {
        let g = generate(&FamilySpec::Wreath { base: Box::new(FamilySpec::Cycle { n: 4 }) })
            .unwrap();
        assert_eq!(g.vertex_count(), 4 * 16);
        assert!((0..g.vertex_count() as u32).all(|v| g.degree(v) == 8));
    }
}
