//! Multi-hop forwarding over a given routing tree.
//!
//! Two relay schemes. Combine-and-Forward: one codebook is shared by the
//! whole tree and every relay just ORs its children's vectors upward, so
//! the root vector equals the flat single-hop superposition of all leaf
//! transmissions. Encode-Decode-Combine-and-Forward: every node owns a
//! codebook covering the sensors of its subtree; a relay decodes the
//! combined vector its children produced in the relay's codebook, re-maps
//! each decoded (sensor, message) onto its parent's codebook, ORs and
//! forwards.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::bits::BitVec;
use crate::channel::{or_superpose, OutcomeVector};
use crate::codebook::{CodeParams, Codebook, RowId};
use crate::decoders::{decode_coma, DecodeResult, DecodeStatus};
use crate::{Error, Result};

/// Leaf clusters hold sensors; interior nodes relay toward the root sink.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Relay,
    /// A cluster of sensors, identified globally.
    Cluster { sensors: Vec<u32> },
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub id: u32,
    pub parent: Option<u32>,
    pub kind: NodeKind,
    /// The codebook this node decodes with (its children encode into it).
    /// Unused by Combine-and-Forward except at the root.
    pub codebook: Codebook,
    /// Global sensor ids covered by this node's subtree, sorted; row
    /// `sensor` index in `codebook` is the position in this list.
    pub covered: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct RoutingTree {
    nodes: Vec<TreeNode>,
    root: usize,
    children: Vec<Vec<usize>>,
    index_of: BTreeMap<u32, usize>,
}

impl RoutingTree {
    /// Validates shape: one root, acyclic, every node reaches the root,
    /// clusters are leaves, and each node's codebook covers its subtree.
    pub fn new(nodes: Vec<TreeNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("tree has no nodes".into()));
        }
        let mut index_of = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index_of.insert(n.id, i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate node id {}", n.id)));
            }
        }
        let mut roots = Vec::new();
        let mut children = vec![Vec::new(); nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            match n.parent {
                None => roots.push(i),
                Some(p) => {
                    let pi = *index_of
                        .get(&p)
                        .ok_or_else(|| Error::InvalidParameter(format!("unknown parent {p}")))?;
                    children[pi].push(i);
                }
            }
        }
        if roots.len() != 1 {
            return Err(Error::InvalidParameter(format!("{} roots, need exactly 1", roots.len())));
        }
        let root = roots[0];

        // Reachability (also rejects cycles) and leaf/cluster agreement.
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            if seen[i] {
                return Err(Error::InvalidParameter("cycle in routing tree".into()));
            }
            seen[i] = true;
            stack.extend(children[i].iter().copied());
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter("node unreachable from the root".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            match &n.kind {
                NodeKind::Cluster { sensors } => {
                    if !children[i].is_empty() {
                        return Err(Error::InvalidParameter(format!(
                            "cluster {} has children",
                            n.id
                        )));
                    }
                    if sensors.is_empty() {
                        return Err(Error::InvalidParameter(format!(
                            "cluster {} has no sensors",
                            n.id
                        )));
                    }
                }
                NodeKind::Relay => {
                    if children[i].is_empty() {
                        return Err(Error::InvalidParameter(format!(
                            "relay {} has no children",
                            n.id
                        )));
                    }
                }
            }
            if n.codebook.params().n_sensors != n.covered.len() {
                return Err(Error::InvalidParameter(format!(
                    "node {}: codebook sized for {} sensors but covers {}",
                    n.id,
                    n.codebook.params().n_sensors,
                    n.covered.len()
                )));
            }
        }
        Ok(RoutingTree { nodes, root, children, index_of })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[self.root]
    }

    pub fn node(&self, id: u32) -> Option<&TreeNode> {
        self.index_of.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Cluster { .. }))
    }

    fn children_of(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Serialized text form: a header line with the shared message count,
    /// then one line per node.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "boolmac-tree v1 c={}", self.root().codebook.params().n_messages)?;
        for n in &self.nodes {
            let parent = n.parent.map(|p| p.to_string()).unwrap_or_else(|| "-".into());
            let p = n.codebook.params();
            match &n.kind {
                NodeKind::Relay => writeln!(
                    w,
                    "node {} parent={parent} k={} f={} t={} seed={}",
                    n.id, p.k_active, p.n_subcodewords, p.code_length, p.seed
                )?,
                NodeKind::Cluster { sensors } => writeln!(
                    w,
                    "leaf {} parent={parent} k={} f={} t={} seed={} sensors={}",
                    n.id,
                    p.k_active,
                    p.n_subcodewords,
                    p.code_length,
                    p.seed,
                    sensors.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
                )?,
            }
        }
        Ok(())
    }

    /// Parses the text form and regenerates every node codebook.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header =
            lines.next().ok_or_else(|| Error::Parse("empty tree file".into()))??;
        let c: usize = header
            .strip_prefix("boolmac-tree v1 c=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad tree header: {header:?}")))?;

        struct RawNode {
            id: u32,
            parent: Option<u32>,
            sensors: Option<Vec<u32>>,
            k: usize,
            f: usize,
            t: usize,
            seed: u64,
        }
        let mut raw: Vec<RawNode> = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 2 {
                return Err(Error::Parse(format!("bad tree line: {line:?}")));
            }
            let is_leaf = match fields[0] {
                "node" => false,
                "leaf" => true,
                other => return Err(Error::Parse(format!("bad node kind {other:?}"))),
            };
            let id: u32 = fields[1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad node id in {line:?}")))?;
            let mut parent = None;
            let (mut k, mut f, mut t, mut seed, mut sensors) = (0usize, 1usize, 0usize, 0u64, None);
            for kv in &fields[2..] {
                let (key, value) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("bad field {kv:?}")))?;
                match key {
                    "parent" => {
                        parent = if value == "-" {
                            None
                        } else {
                            Some(value.parse().map_err(|_| {
                                Error::Parse(format!("bad parent {value:?}"))
                            })?)
                        }
                    }
                    "k" => k = parse_field(value, "k")?,
                    "f" => f = parse_field(value, "f")?,
                    "t" => t = parse_field(value, "t")?,
                    "seed" => {
                        seed = value
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad seed {value:?}")))?
                    }
                    "sensors" => {
                        sensors = Some(
                            value
                                .split(',')
                                .map(|s| {
                                    s.parse().map_err(|_| {
                                        Error::Parse(format!("bad sensor id {s:?}"))
                                    })
                                })
                                .collect::<Result<Vec<u32>>>()?,
                        )
                    }
                    other => return Err(Error::Parse(format!("unknown field {other:?}"))),
                }
            }
            if is_leaf && sensors.is_none() {
                return Err(Error::Parse(format!("leaf {id} lists no sensors")));
            }
            raw.push(RawNode { id, parent, sensors: if is_leaf { sensors } else { None }, k, f, t, seed });
        }

        // Covered sets bubble up from the leaves.
        let mut covered: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        fn collect(id: u32, raw: &[RawNode], covered: &mut BTreeMap<u32, Vec<u32>>) -> Vec<u32> {
            if let Some(v) = covered.get(&id) {
                return v.clone();
            }
            let me = raw.iter().find(|n| n.id == id).expect("validated");
            let mut out = match &me.sensors {
                Some(s) => s.clone(),
                None => raw
                    .iter()
                    .filter(|n| n.parent == Some(id))
                    .flat_map(|n| collect(n.id, raw, covered))
                    .collect(),
            };
            out.sort_unstable();
            out.dedup();
            covered.insert(id, out.clone());
            out
        }
        let ids: Vec<u32> = raw.iter().map(|n| n.id).collect();
        for id in ids {
            collect(id, &raw, &mut covered);
        }

        let nodes = raw
            .into_iter()
            .map(|n| {
                let cov = covered.remove(&n.id).unwrap_or_default();
                let params = CodeParams::new(cov.len().max(1), n.k.max(1), c, n.f, n.t, n.seed)?;
                Ok(TreeNode {
                    id: n.id,
                    parent: n.parent,
                    kind: match n.sensors {
                        Some(sensors) => NodeKind::Cluster { sensors },
                        None => NodeKind::Relay,
                    },
                    codebook: Codebook::generate(params)?,
                    covered: cov,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RoutingTree::new(nodes)
    }
}

fn parse_field(value: &str, name: &str) -> Result<usize> {
    value.parse().map_err(|_| Error::Parse(format!("bad {name} value {value:?}")))
}

/// Combine-and-Forward: every relay ORs its children's vectors upward and
/// the root's combined vector is returned. All vectors share the root
/// codebook's length.
pub fn multihop_combine_forward(
    tree: &RoutingTree,
    leaf_vectors: &BTreeMap<u32, OutcomeVector>,
) -> Result<OutcomeVector> {
    let t = tree.root().codebook.code_length();
    fn up(
        tree: &RoutingTree,
        i: usize,
        t: usize,
        leaf_vectors: &BTreeMap<u32, OutcomeVector>,
    ) -> Result<OutcomeVector> {
        let node = &tree.nodes[i];
        match &node.kind {
            NodeKind::Cluster { .. } => {
                let v = leaf_vectors.get(&node.id).ok_or_else(|| {
                    Error::InvalidParameter(format!("no vector for leaf {}", node.id))
                })?;
                if v.len() != t {
                    return Err(Error::ShapeMismatch { expected: t, got: v.len() });
                }
                Ok(v.clone())
            }
            NodeKind::Relay => {
                let mut acc = BitVec::zeros(t);
                for &child in tree.children_of(i) {
                    acc.or_assign(&up(tree, child, t, leaf_vectors)?);
                }
                Ok(acc)
            }
        }
    }
    up(tree, tree.root, t, leaf_vectors)
}

/// Encode-Decode-Combine-and-Forward: each node decodes its received
/// vector with its own codebook, re-encodes the decoded pairs into the
/// parent codebook, and forwards. Relays decode with CoMa. A non-unique
/// decode anywhere is carried upward as the final status.
///
/// `leaf_vectors` holds what each cluster head received from its own
/// sensors, in the leaf's codebook. The returned estimate is in global
/// sensor ids, represented in the root codebook's message space.
pub fn multihop_encode_decode_forward(
    tree: &RoutingTree,
    leaf_vectors: &BTreeMap<u32, OutcomeVector>,
) -> Result<DecodeResult> {
    // Decoded (global sensor, message) pairs per node, bottom-up.
    fn decode_up(
        tree: &RoutingTree,
        i: usize,
        leaf_vectors: &BTreeMap<u32, OutcomeVector>,
    ) -> Result<std::result::Result<Vec<(u32, usize)>, DecodeStatus>> {
        let node = &tree.nodes[i];
        let received: OutcomeVector = match &node.kind {
            NodeKind::Cluster { .. } => {
                let v = leaf_vectors.get(&node.id).ok_or_else(|| {
                    Error::InvalidParameter(format!("no vector for leaf {}", node.id))
                })?;
                if v.len() != node.codebook.code_length() {
                    return Err(Error::ShapeMismatch {
                        expected: node.codebook.code_length(),
                        got: v.len(),
                    });
                }
                v.clone()
            }
            NodeKind::Relay => {
                // Children re-encode their decoded pairs into this node's
                // codebook; the channel ORs the simultaneous uplinks.
                let mut pairs: Vec<(u32, usize)> = Vec::new();
                for &child in tree.children_of(i) {
                    match decode_up(tree, child, leaf_vectors)? {
                        Ok(child_pairs) => pairs.extend(child_pairs),
                        Err(status) => return Ok(Err(status)),
                    }
                }
                let rows = pairs
                    .iter()
                    .map(|&(sensor, message)| {
                        let local = node
                            .covered
                            .binary_search(&sensor)
                            .map_err(|_| {
                                Error::InvalidParameter(format!(
                                    "node {} codebook does not cover sensor {sensor}",
                                    node.id
                                ))
                            })?;
                        Ok(node
                            .codebook
                            .row(RowId { sensor: local, message, subcodeword: 0 }))
                    })
                    .collect::<Result<Vec<_>>>()?;
                or_superpose(node.codebook.code_length(), rows)?
            }
        };
        let decoded = decode_coma(&node.codebook, &received)?;
        if decoded.status != DecodeStatus::Unique {
            return Ok(Err(decoded.status));
        }
        let pairs = decoded
            .estimate
            .pairs()
            .into_iter()
            .map(|(local, message)| (node.covered[local], message))
            .collect();
        Ok(Ok(pairs))
    }

    // The root's own decode is rebuilt as a DecodeResult over its codebook.
    let root = tree.root;
    match decode_up(tree, root, leaf_vectors)? {
        Err(status) => Ok(DecodeResult {
            status,
            estimate: crate::decoders::ActiveSet::empty(),
            candidates_surviving: Vec::new(),
            survivor_rows: 0,
        }),
        Ok(pairs) => {
            let node = &tree.nodes[root];
            let mut entries: Vec<RowId> = pairs
                .iter()
                .map(|&(sensor, message)| RowId {
                    sensor: node.covered.binary_search(&sensor).expect("covered"),
                    message,
                    subcodeword: 0,
                })
                .collect();
            entries.sort();
            Ok(DecodeResult {
                status: DecodeStatus::Unique,
                estimate: crate::decoders::ActiveSet::from_sorted_unchecked(entries),
                candidates_surviving: Vec::new(),
                survivor_rows: pairs.len(),
            })
        }
    }
}

/// Convenience constructor used by experiments and the CLI: `n_clusters`
/// leaves of `cluster_size` sensors under `n_relays` relays (round-robin),
/// all relays under the root. Node codebooks are sized for their subtree
/// with length `t_factor` times the analytic bound, which keeps every
/// per-hop decode clean.
pub fn build_uniform_tree(
    n_clusters: usize,
    cluster_size: usize,
    n_relays: usize,
    n_messages: usize,
    k_total: usize,
    t_factor: f64,
    seed: u64,
) -> Result<RoutingTree> {
    use crate::bounds::{bound_t_lemma1, BoundParams};

    if n_clusters == 0 || cluster_size == 0 {
        return Err(Error::InvalidParameter("need at least one non-empty cluster".into()));
    }
    let sized_t = |n_sensors: usize, k: usize| -> Result<usize> {
        let k = k.min(n_sensors).max(1);
        let b = bound_t_lemma1(&BoundParams::new(n_sensors, k, n_messages))?;
        Ok(((b.ceil as f64 * t_factor).ceil() as usize).max(8))
    };

    let mut nodes = Vec::new();
    let root_id = 0u32;
    let relay_ids: Vec<u32> = (0..n_relays).map(|r| 1 + r as u32).collect();
    let mut cluster_sensors: Vec<Vec<u32>> = vec![Vec::new(); n_clusters];
    for cl in 0..n_clusters {
        cluster_sensors[cl] =
            (0..cluster_size).map(|s| (cl * cluster_size + s) as u32).collect();
    }

    // Leaves, round-robin over relays (or directly under the root).
    let mut relay_cover: Vec<Vec<u32>> = vec![Vec::new(); n_relays];
    for (cl, sensors) in cluster_sensors.iter().enumerate() {
        let parent = if n_relays == 0 {
            root_id
        } else {
            relay_ids[cl % n_relays]
        };
        if n_relays > 0 {
            relay_cover[cl % n_relays].extend(sensors.iter().copied());
        }
        let k = k_total.min(cluster_size);
        let t = sized_t(cluster_size, k)?;
        let params = CodeParams::new(cluster_size, k, n_messages, 1, t, crate::rng::derive_seed(seed, &[2, cl as u64]))?;
        nodes.push(TreeNode {
            id: 100 + cl as u32,
            parent: Some(parent),
            kind: NodeKind::Cluster { sensors: sensors.clone() },
            codebook: Codebook::generate(params)?,
            covered: sensors.clone(),
        });
    }

    for (r, cover) in relay_cover.iter_mut().enumerate() {
        cover.sort_unstable();
        if cover.is_empty() {
            continue;
        }
        let k = k_total.min(cover.len());
        let t = sized_t(cover.len(), k)?;
        let params = CodeParams::new(cover.len(), k, n_messages, 1, t, crate::rng::derive_seed(seed, &[1, r as u64]))?;
        nodes.push(TreeNode {
            id: relay_ids[r],
            parent: Some(root_id),
            kind: NodeKind::Relay,
            codebook: Codebook::generate(params)?,
            covered: cover.clone(),
        });
    }

    let all: Vec<u32> = (0..n_clusters * cluster_size).map(|s| s as u32).collect();
    let k = k_total.min(all.len());
    let t = sized_t(all.len(), k)?;
    let params = CodeParams::new(all.len(), k, n_messages, 1, t, crate::rng::derive_seed(seed, &[0]))?;
    nodes.push(TreeNode {
        id: root_id,
        parent: None,
        kind: NodeKind::Relay,
        codebook: Codebook::generate(params)?,
        covered: all,
    });

    // Drop relays that ended up with no clusters.
    let nodes = nodes
        .into_iter()
        .filter(|n| match n.kind {
            NodeKind::Relay => !n.covered.is_empty(),
            _ => true,
        })
        .collect();
    RoutingTree::new(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::rng::derive_seed;

    /// Truth for a tree: up to k_total active sensors spread over clusters.
    fn draw_tree_truth(tree: &RoutingTree, k_total: usize, seed: u64) -> Vec<(u32, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sensors: Vec<u32> = tree
            .leaves()
            .flat_map(|l| match &l.kind {
                NodeKind::Cluster { sensors } => sensors.clone(),
                _ => unreachable!(),
            })
            .collect();
        use rand::seq::SliceRandom;
        sensors.shuffle(&mut rng);
        sensors.truncate(k_total);
        let c = tree.root().codebook.params().n_messages;
        sensors.into_iter().map(|s| (s, rng.gen_range(0..c))).collect()
    }

    /// Leaf vectors in the shared (root) codebook for Combine-and-Forward.
    fn shared_leaf_vectors(
        tree: &RoutingTree,
        truth: &[(u32, usize)],
    ) -> BTreeMap<u32, OutcomeVector> {
        let root = tree.root();
        let t = root.codebook.code_length();
        let mut out = BTreeMap::new();
        for leaf in tree.leaves() {
            let NodeKind::Cluster { sensors } = &leaf.kind else { unreachable!() };
            let rows = truth
                .iter()
                .filter(|(s, _)| sensors.contains(s))
                .map(|&(s, m)| {
                    let local = root.covered.binary_search(&s).unwrap();
                    root.codebook.row(RowId { sensor: local, message: m, subcodeword: 0 })
                });
            out.insert(leaf.id, or_superpose(t, rows).unwrap());
        }
        out
    }

    #[test]
    fn single_leaf_chain_is_transparent() {
        // Root <- relay <- relay <- leaf: the root vector equals the leaf's.
        let c = 3;
        let sensors: Vec<u32> = (0..8).collect();
        let params = CodeParams::new(8, 2, c, 1, 40, 7).unwrap();
        let cb = Codebook::generate(params).unwrap();
        let mk = |id: u32, parent: Option<u32>, kind: NodeKind| TreeNode {
            id,
            parent,
            kind,
            codebook: cb.clone(),
            covered: sensors.clone(),
        };
        let tree = RoutingTree::new(vec![
            mk(0, None, NodeKind::Relay),
            mk(1, Some(0), NodeKind::Relay),
            mk(2, Some(1), NodeKind::Cluster { sensors: sensors.clone() }),
        ])
        .unwrap();
        let v = cb.row_at(5).to_bitvec();
        let mut leaf_vectors = BTreeMap::new();
        leaf_vectors.insert(2, v.clone());
        assert_eq!(multihop_combine_forward(&tree, &leaf_vectors).unwrap(), v);
    }

    #[test]
    fn combine_forward_equals_flat_superposition() {
        for trial in 0..25u64 {
            let seed = derive_seed(31337, &[trial]);
            let tree = build_uniform_tree(4, 6, 2, 3, 3, 4.0, seed).unwrap();
            let truth = draw_tree_truth(&tree, 3, derive_seed(seed, &[50]));
            let leaf_vectors = shared_leaf_vectors(&tree, &truth);
            let root_vec = multihop_combine_forward(&tree, &leaf_vectors).unwrap();

            let root = tree.root();
            let flat = or_superpose(
                root.codebook.code_length(),
                truth.iter().map(|&(s, m)| {
                    let local = root.covered.binary_search(&s).unwrap();
                    root.codebook.row(RowId { sensor: local, message: m, subcodeword: 0 })
                }),
            )
            .unwrap();
            assert_eq!(root_vec, flat, "trial {trial}");
        }
    }

    #[test]
    fn encode_decode_depth_one_equals_single_hop() {
        // One cluster directly under the sink behaves like a single hop.
        let tree = build_uniform_tree(1, 10, 0, 4, 2, 6.0, 99).unwrap();
        let truth = draw_tree_truth(&tree, 2, 5);
        let leaf = tree.leaves().next().unwrap();
        let t = leaf.codebook.code_length();
        let rows = truth.iter().map(|&(s, m)| {
            let local = leaf.covered.binary_search(&s).unwrap();
            leaf.codebook.row(RowId { sensor: local, message: m, subcodeword: 0 })
        });
        let mut leaf_vectors = BTreeMap::new();
        leaf_vectors.insert(leaf.id, or_superpose(t, rows).unwrap());

        let res = multihop_encode_decode_forward(&tree, &leaf_vectors).unwrap();
        assert_eq!(res.status, DecodeStatus::Unique);
        let root = tree.root();
        let mut want: Vec<(usize, usize)> = truth
            .iter()
            .map(|&(s, m)| (root.covered.binary_search(&s).unwrap(), m))
            .collect();
        want.sort_unstable();
        assert_eq!(res.estimate.pairs(), want);
    }

    #[test]
    fn encode_decode_two_clusters_recovers_truth() {
        let mut ok = 0;
        let trials = 60;
        for trial in 0..trials {
            let seed = derive_seed(2718, &[trial]);
            let tree = build_uniform_tree(2, 10, 2, 4, 2, 4.0, seed).unwrap();
            // One active sensor per cluster.
            let mut truth = Vec::new();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[51]));
            for leaf in tree.leaves() {
                let NodeKind::Cluster { sensors } = &leaf.kind else { unreachable!() };
                truth.push((sensors[rng.gen_range(0..sensors.len())], rng.gen_range(0..4)));
            }
            let mut leaf_vectors = BTreeMap::new();
            for leaf in tree.leaves() {
                let NodeKind::Cluster { sensors } = &leaf.kind else { unreachable!() };
                let rows = truth
                    .iter()
                    .filter(|(s, _)| sensors.contains(s))
                    .map(|&(s, m)| {
                        let local = leaf.covered.binary_search(&s).unwrap();
                        leaf.codebook.row(RowId { sensor: local, message: m, subcodeword: 0 })
                    });
                leaf_vectors.insert(leaf.id, or_superpose(leaf.codebook.code_length(), rows).unwrap());
            }
            let res = multihop_encode_decode_forward(&tree, &leaf_vectors).unwrap();
            let root = tree.root();
            let mut want: Vec<(usize, usize)> = truth
                .iter()
                .map(|&(s, m)| (root.covered.binary_search(&s).unwrap(), m))
                .collect();
            want.sort_unstable();
            if res.status == DecodeStatus::Unique && res.estimate.pairs() == want {
                ok += 1;
            }
        }
        assert!(ok as f64 / trials as f64 >= 0.95, "{ok}/{trials}");
    }

    #[test]
    fn undersized_relay_codebooks_fail_more() {
        let trials = 40;
        let mut ok_sized = 0;
        let mut ok_tiny = 0;
        for trial in 0..trials {
            let seed = derive_seed(555, &[trial]);
            for (factor, counter) in [(4.0, &mut ok_sized), (0.6, &mut ok_tiny)] {
                let tree = build_uniform_tree(3, 8, 2, 4, 3, factor, seed).unwrap();
                let truth = draw_tree_truth(&tree, 3, derive_seed(seed, &[52]));
                let mut leaf_vectors = BTreeMap::new();
                for leaf in tree.leaves() {
                    let NodeKind::Cluster { sensors } = &leaf.kind else { unreachable!() };
                    let rows = truth
                        .iter()
                        .filter(|(s, _)| sensors.contains(s))
                        .map(|&(s, m)| {
                            let local = leaf.covered.binary_search(&s).unwrap();
                            leaf.codebook.row(RowId { sensor: local, message: m, subcodeword: 0 })
                        });
                    leaf_vectors
                        .insert(leaf.id, or_superpose(leaf.codebook.code_length(), rows).unwrap());
                }
                let res = multihop_encode_decode_forward(&tree, &leaf_vectors).unwrap();
                let root = tree.root();
                let mut want: Vec<(usize, usize)> = truth
                    .iter()
                    .map(|&(s, m)| (root.covered.binary_search(&s).unwrap(), m))
                    .collect();
                want.sort_unstable();
                if res.status == DecodeStatus::Unique && res.estimate.pairs() == want {
                    *counter += 1;
                }
            }
        }
        assert!(ok_sized > ok_tiny, "sized {ok_sized} vs tiny {ok_tiny} of {trials}");
    }

    #[test]
    fn tree_text_roundtrip() {
        let tree = build_uniform_tree(3, 5, 2, 4, 2, 3.0, 42).unwrap();
        let mut buf = Vec::new();
        tree.write_text(&mut buf).unwrap();
        let back = RoutingTree::read_text(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(tree.nodes().len(), back.nodes().len());
        for n in tree.nodes() {
            let b = back.node(n.id).unwrap();
            assert_eq!(n.parent, b.parent);
            assert_eq!(n.covered, b.covered);
            assert_eq!(n.codebook, b.codebook);
        }
    }

    #[test]
    fn tree_validation_rejects_malformed_shapes() {
        let params = CodeParams::new(2, 1, 2, 1, 16, 0).unwrap();
        let cb = Codebook::generate(params).unwrap();
        let mk = |id: u32, parent: Option<u32>, kind: NodeKind| TreeNode {
            id,
            parent,
            kind,
            codebook: cb.clone(),
            covered: vec![0, 1],
        };
        // Two roots.
        assert!(RoutingTree::new(vec![
            mk(0, None, NodeKind::Cluster { sensors: vec![0, 1] }),
            mk(1, None, NodeKind::Cluster { sensors: vec![0, 1] }),
        ])
        .is_err());
        // Cycle.
        assert!(RoutingTree::new(vec![
            mk(0, Some(1), NodeKind::Relay),
            mk(1, Some(0), NodeKind::Relay),
        ])
        .is_err());
        // Relay without children.
        assert!(RoutingTree::new(vec![mk(0, None, NodeKind::Relay)]).is_err());
    }
}
