//! N-valid trees over the alphabet `GF(p)^s`.
//!
//! A tree is N-valid when its root and the first `N` levels are a single
//! zero-labelled spine, and every word of `N` labels occurs exactly once as a
//! downward path. Windows that start above the root are padded with zero
//! labels, which lets the all-zero `(N+1)`-window exist.
//!
//! Nodes live in an arena. Trees produced here are numbered in BFS order with
//! children sorted by label, so ids are reproducible.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::algebra::{GfBlock, GfParams};
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub label: GfBlock,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

/// A labelled rooted tree. Structural consistency is guaranteed; N-validity
/// is checked by [`Tree::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    params: GfParams,
    n: u32,
    nodes: Vec<Node>,
    root: NodeId,
}

/// Outcome of checking the N-validity conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeReport {
    pub root_zero: bool,
    pub zero_spine: bool,
    pub windows_complete: bool,
    pub windows_unique: bool,
    pub height: u32,
    pub node_count: usize,
    pub expected_node_count: usize,
    /// `N`-words with the node each one ends at (nodes of depth `>= N-1`).
    pub windows: Vec<(Vec<GfBlock>, NodeId)>,
    pub duplicate_words: Vec<Vec<GfBlock>>,
}

impl TreeReport {
    pub fn is_valid(&self) -> bool {
        self.root_zero
            && self.zero_spine
            && self.windows_complete
            && self.windows_unique
            && self.node_count == self.expected_node_count
    }
}

impl Tree {
    /// Assembles a tree from an arena, checking ids, parent links and acyclicity.
    pub fn from_nodes(params: GfParams, n: u32, nodes: Vec<Node>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("N must be >= 1".into()));
        }
        if nodes.is_empty() {
            return Err(Error::MalformedTree("no nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            if node.id != i {
                return Err(Error::MalformedTree(format!(
                    "node at position {i} has id {}",
                    node.id
                )));
            }
            params
                .check(&node.label.params())
                .map_err(|e| Error::MalformedTree(format!("node {i}: {e}")))?;
        }
        let roots: Vec<_> = nodes.iter().filter(|v| v.parent.is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::MalformedTree(format!(
                "expected exactly one root, found {}",
                roots.len()
            )));
        }
        let root = roots[0].id;
        let mut claimed = vec![false; nodes.len()];
        for node in &nodes {
            for &c in &node.children {
                let child = nodes
                    .get(c)
                    .ok_or_else(|| Error::MalformedTree(format!("unknown child id {c}")))?;
                if child.parent != Some(node.id) {
                    return Err(Error::MalformedTree(format!(
                        "child {c} does not point back to parent {}",
                        node.id
                    )));
                }
                if std::mem::replace(&mut claimed[c], true) {
                    return Err(Error::MalformedTree(format!("node {c} listed twice")));
                }
            }
            if let Some(par) = node.parent {
                let parent = nodes
                    .get(par)
                    .ok_or_else(|| Error::MalformedTree(format!("unknown parent id {par}")))?;
                if !parent.children.contains(&node.id) {
                    return Err(Error::MalformedTree(format!(
                        "parent {par} does not list child {}",
                        node.id
                    )));
                }
            }
        }
        // reachability from the root rules out cycles
        let mut seen = vec![false; nodes.len()];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &c in &nodes[v].children {
                if !seen[c] {
                    seen[c] = true;
                    count += 1;
                    queue.push_back(c);
                }
            }
        }
        if count != nodes.len() {
            return Err(Error::MalformedTree("nodes unreachable from root".into()));
        }
        Ok(Self {
            params,
            n,
            nodes,
            root,
        })
    }

    pub fn params(&self) -> GfParams {
        self.params
    }

    /// The window length `N`.
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].children.is_empty()
    }

    pub fn depth(&self, mut id: NodeId) -> u32 {
        let mut d = 0;
        while let Some(par) = self.nodes[id].parent {
            d += 1;
            id = par;
        }
        d
    }

    pub fn depths(&self) -> Vec<u32> {
        let mut depth = vec![0; self.nodes.len()];
        let mut queue = VecDeque::from([self.root]);
        while let Some(v) = queue.pop_front() {
            for &c in &self.nodes[v].children {
                depth[c] = depth[v] + 1;
                queue.push_back(c);
            }
        }
        depth
    }

    /// Edge count of the longest root-to-leaf path.
    pub fn height(&self) -> u32 {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Labels of the `k` nodes ending at `id`, top first, zero-padded above the root.
    pub fn window(&self, id: NodeId, k: usize) -> Vec<GfBlock> {
        let mut word = Vec::with_capacity(k);
        let mut cur = Some(id);
        for _ in 0..k {
            match cur {
                Some(v) => {
                    word.push(self.nodes[v].label.clone());
                    cur = self.nodes[v].parent;
                }
                None => word.push(GfBlock::zero(self.params)),
            }
        }
        word.reverse();
        word
    }

    pub fn in_subtree(&self, root: NodeId, mut id: NodeId) -> bool {
        loop {
            if id == root {
                return true;
            }
            match self.nodes[id].parent {
                Some(par) => id = par,
                None => return false,
            }
        }
    }

    /// Renumbers nodes in BFS order with children sorted by label.
    pub fn canonicalize(&self) -> Tree {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut queue = VecDeque::from([self.root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut kids = self.nodes[v].children.clone();
            kids.sort_by(|a, b| {
                self.nodes[*a]
                    .label
                    .cmp(&self.nodes[*b].label)
                    .then(a.cmp(b))
            });
            queue.extend(kids);
        }
        let mut new_id = vec![0; self.nodes.len()];
        for (i, &old) in order.iter().enumerate() {
            new_id[old] = i;
        }
        let nodes = order
            .iter()
            .enumerate()
            .map(|(i, &old)| {
                let node = &self.nodes[old];
                let mut children: Vec<_> = node.children.iter().map(|&c| new_id[c]).collect();
                children.sort_unstable();
                Node {
                    id: i,
                    label: node.label.clone(),
                    parent: node.parent.map(|par| new_id[par]),
                    children,
                }
            })
            .collect();
        Tree {
            params: self.params,
            n: self.n,
            nodes,
            root: 0,
        }
    }

    /// Checks the N-validity conditions.
    pub fn validate(&self) -> TreeReport {
        let n = self.n as usize;
        let depth = self.depths();
        let height = depth.iter().copied().max().unwrap_or(0);
        let root_zero = self.nodes[self.root].label.is_zero();

        let mut per_level: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
        for (id, &d) in depth.iter().enumerate() {
            per_level.entry(d).or_default().push(id);
        }
        let zero_spine = (0..n as u32).all(|j| match per_level.get(&j) {
            Some(ids) => ids.len() == 1 && self.nodes[ids[0]].label.is_zero(),
            None => false,
        });

        let mut windows = Vec::new();
        let mut seen: HashMap<Vec<GfBlock>, usize> = HashMap::new();
        for (id, &d) in depth.iter().enumerate() {
            if d + 1 >= n as u32 {
                let w = self.window(id, n);
                *seen.entry(w.clone()).or_default() += 1;
                windows.push((w, id));
            }
        }
        let mut duplicate_words: Vec<_> = seen
            .iter()
            .filter(|(_, &c)| c > 1)
            .map(|(w, _)| w.clone())
            .collect();
        duplicate_words.sort();
        let total_words = (self.params.q() as u128).checked_pow(self.n);
        let windows_complete = total_words == Some(seen.len() as u128);
        let expected_node_count = total_words
            .map(|t| t as usize + n - 1)
            .unwrap_or(usize::MAX);

        TreeReport {
            root_zero,
            zero_spine,
            windows_complete,
            windows_unique: duplicate_words.is_empty(),
            height,
            node_count: self.nodes.len(),
            expected_node_count,
            windows,
            duplicate_words,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_valid()
    }

    pub(crate) fn ensure_valid(&self) -> Result<TreeReport> {
        let report = self.validate();
        if report.is_valid() {
            return Ok(report);
        }
        let reason = if !report.root_zero {
            "root label is nonzero".to_string()
        } else if !report.zero_spine {
            "levels 0..N-1 are not a zero spine".to_string()
        } else if !report.windows_unique {
            format!("duplicate words {:?}", report.duplicate_words)
        } else {
            "not every N-word occurs".to_string()
        };
        Err(Error::InvalidTree { n: self.n, reason })
    }

    /// Every `(node, target)` pair accepted by [`basic_step`].
    pub fn admissible_moves(&self) -> Vec<(NodeId, NodeId)> {
        let depth = self.depths();
        let ctx = self.n as usize - 1;
        let mut out = Vec::new();
        for v in 0..self.nodes.len() {
            if depth[v] < self.n {
                continue;
            }
            for t in self.admissible_targets(v, ctx) {
                out.push((v, t));
            }
        }
        out
    }

    fn admissible_targets(&self, node: NodeId, ctx: usize) -> Vec<NodeId> {
        let parent = match self.nodes[node].parent {
            Some(p) => p,
            None => return Vec::new(),
        };
        let wanted = self.window(parent, ctx);
        (0..self.nodes.len())
            .filter(|&t| {
                self.is_leaf(t) && !self.in_subtree(node, t) && self.window(t, ctx) == wanted
            })
            .collect()
    }
}

/// The basic N-valid tree of minimal height `2N - 1`.
///
/// A spine of `N` zeros, all nonzero labels under the last spine node, then
/// `N - 1` full levels carrying every label under every node.
pub fn build_basic_tree(p: u32, s: u32, n: u32) -> Result<Tree> {
    let params = GfParams::new(p, s)?;
    if n == 0 {
        return Err(Error::InvalidParams("N must be >= 1".into()));
    }
    let q = params.q();
    let size = (q as u128)
        .checked_pow(n)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| Error::InvalidParams(format!("q^N too large for q = {q}, N = {n}")))?;
    let mut nodes: Vec<Node> = Vec::with_capacity(size as usize + n as usize);
    let push = |nodes: &mut Vec<Node>, label: GfBlock, parent: Option<NodeId>| {
        let id = nodes.len();
        nodes.push(Node {
            id,
            label,
            parent,
            children: Vec::new(),
        });
        if let Some(par) = parent {
            nodes[par].children.push(id);
        }
        id
    };
    let mut last = push(&mut nodes, GfBlock::zero(params), None);
    for _ in 1..n {
        last = push(&mut nodes, GfBlock::zero(params), Some(last));
    }
    let mut frontier: Vec<NodeId> = params
        .blocks()
        .skip(1)
        .map(|b| push(&mut nodes, b, Some(last)))
        .collect();
    for _ in 1..n {
        let mut next = Vec::with_capacity(frontier.len() * q);
        for &v in &frontier {
            for b in params.blocks() {
                next.push(push(&mut nodes, b, Some(v)));
            }
        }
        frontier = next;
    }
    Ok(Tree::from_nodes(params, n, nodes)?.canonicalize())
}

pub fn validate_tree(t: &Tree) -> TreeReport {
    t.validate()
}

/// Detaches the subtree rooted at `moved` and re-attaches it under the leaf `target`.
///
/// The `N - 1` labels ending at `target` must equal the `N - 1` labels above
/// `moved`, so every window inside the moved subtree is unchanged.
pub fn basic_step(t: &Tree, moved: NodeId, target: NodeId) -> Result<Tree> {
    t.ensure_valid()?;
    if moved >= t.len() || target >= t.len() {
        return Err(Error::MalformedTree(format!(
            "node id out of range ({moved}, {target})"
        )));
    }
    if t.depth(moved) < t.n() {
        return Err(Error::NotApplicable(moved));
    }
    if !t.is_leaf(target) {
        return Err(Error::TargetNotLeaf(target));
    }
    if t.in_subtree(moved, target) {
        return Err(Error::TargetInsideSubtree(moved));
    }
    let ctx = t.n() as usize - 1;
    let parent = t.node(moved).parent.expect("depth >= 1");
    if t.window(parent, ctx) != t.window(target, ctx) {
        if t.admissible_targets(moved, ctx).is_empty() {
            return Err(Error::NotApplicable(moved));
        }
        return Err(Error::WindowContextMismatch {
            node: moved,
            target,
        });
    }
    let mut nodes = t.nodes().to_vec();
    nodes[parent].children.retain(|&c| c != moved);
    nodes[moved].parent = Some(target);
    nodes[target].children.push(moved);
    let out = Tree::from_nodes(t.params(), t.n(), nodes)?.canonicalize();
    debug_assert!(out.is_valid());
    Ok(out)
}

/// `k`-node windows ending at every node, in id order.
pub fn enumerate_windows(t: &Tree, k: usize) -> Result<Vec<(Vec<GfBlock>, NodeId)>> {
    if k == 0 {
        return Err(Error::EmptyWindow);
    }
    Ok((0..t.len()).map(|id| (t.window(id, k), id)).collect())
}

/// A chain `labels[0] → labels[1] → …`; handy for fixtures.
pub fn chain_tree(params: GfParams, n: u32, labels: &[usize]) -> Result<Tree> {
    let nodes = labels
        .iter()
        .enumerate()
        .map(|(i, &c)| Node {
            id: i,
            label: GfBlock::from_code(params, c),
            parent: i.checked_sub(1),
            children: if i + 1 < labels.len() { vec![i + 1] } else { vec![] },
        })
        .collect();
    Tree::from_nodes(params, n, nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codes(w: &[GfBlock]) -> Vec<usize> {
        w.iter().map(GfBlock::code).collect()
    }

    fn p21() -> GfParams {
        GfParams::new(2, 1).unwrap()
    }

    #[test]
    fn basic_tree_small() {
        let t = build_basic_tree(2, 1, 2).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t.height(), 3);
        let labels: Vec<_> = t.nodes().iter().map(|v| v.label.code()).collect();
        assert_eq!(labels, vec![0, 0, 1, 0, 1]);
        assert_eq!(t.node(2).children, vec![3, 4]);
        assert!(t.is_valid());

        let t = build_basic_tree(2, 1, 1).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.height(), 1);
        assert!(t.is_valid());
    }

    #[test]
    fn basic_tree_shapes() {
        for (p, s, n) in [(2, 1, 1), (2, 1, 2), (2, 1, 3), (3, 1, 2), (2, 2, 2), (5, 1, 1), (3, 1, 3)] {
            let t = build_basic_tree(p, s, n).unwrap();
            let q = (p as usize).pow(s);
            let r = t.validate();
            assert!(r.is_valid(), "({p},{s},{n})");
            assert_eq!(t.len(), q.pow(n) + n as usize - 1);
            assert_eq!(r.height, if n == 1 { 1 } else { 2 * n - 1 });
        }
    }

    #[test]
    fn chain_is_valid() {
        let t = chain_tree(p21(), 2, &[0, 0, 1, 1, 0]).unwrap();
        let r = t.validate();
        assert!(r.is_valid());
        assert_eq!(r.height, 4);
        let words: Vec<_> = r.windows.iter().map(|(w, _)| codes(w)).collect();
        assert_eq!(words, vec![vec![0, 0], vec![0, 1], vec![1, 1], vec![1, 0]]);
    }

    #[test]
    fn duplicated_leaf_breaks_bijection() {
        let t = build_basic_tree(2, 1, 2).unwrap();
        let mut nodes = t.nodes().to_vec();
        nodes.push(Node {
            id: 5,
            label: GfBlock::from_code(p21(), 1),
            parent: Some(2),
            children: vec![],
        });
        nodes[2].children.push(5);
        let bad = Tree::from_nodes(p21(), 2, nodes).unwrap();
        let r = bad.validate();
        assert!(!r.windows_unique);
        assert!(r.windows_complete);
        assert!(!r.is_valid());
        assert_eq!(r.duplicate_words.len(), 1);
    }

    #[test]
    fn malformed_arena() {
        let t = build_basic_tree(2, 1, 2).unwrap();
        let mut nodes = t.nodes().to_vec();
        nodes[3].parent = Some(1);
        assert!(matches!(
            Tree::from_nodes(p21(), 2, nodes),
            Err(Error::MalformedTree(_))
        ));
        let mut nodes = t.nodes().to_vec();
        nodes[0].parent = Some(4);
        nodes[4].children.push(0);
        assert!(Tree::from_nodes(p21(), 2, nodes).is_err());
    }

    #[test]
    fn step_to_chain() {
        let t = build_basic_tree(2, 1, 2).unwrap();
        // leaf labelled 0 under node 2 onto its sibling labelled 1
        let chain = basic_step(&t, 3, 4).unwrap();
        assert_eq!(chain, chain_tree(p21(), 2, &[0, 0, 1, 1, 0]).unwrap());
        assert_eq!(chain.height(), 4);
    }

    #[test]
    fn step_errors() {
        let t = build_basic_tree(2, 1, 2).unwrap();
        assert!(matches!(basic_step(&t, 4, 3), Err(Error::NotApplicable(4))));
        assert!(matches!(basic_step(&t, 1, 4), Err(Error::NotApplicable(1))));
        assert!(matches!(basic_step(&t, 3, 2), Err(Error::TargetNotLeaf(2))));

        let t = build_basic_tree(2, 1, 3).unwrap();
        let moves = t.admissible_moves();
        assert!(!moves.is_empty());
        // a subtree cannot be moved under its own leaf
        let (v, _) = moves[0];
        let inner_leaf = (0..t.len())
            .find(|&x| x != v && t.is_leaf(x) && t.in_subtree(v, x));
        if let Some(leaf) = inner_leaf {
            assert!(matches!(
                basic_step(&t, v, leaf),
                Err(Error::TargetInsideSubtree(_))
            ));
        }
    }

    #[test]
    fn context_mismatch_is_reported() {
        let t = build_basic_tree(2, 1, 3).unwrap();
        let depth = t.depths();
        let mut found = false;
        for v in 0..t.len() {
            if depth[v] < 3 {
                continue;
            }
            let ok: Vec<_> = t.admissible_moves().iter().filter(|m| m.0 == v).map(|m| m.1).collect();
            if ok.is_empty() {
                continue;
            }
            for leaf in (0..t.len()).filter(|&x| t.is_leaf(x) && !t.in_subtree(v, x)) {
                if !ok.contains(&leaf) {
                    assert!(matches!(
                        basic_step(&t, v, leaf),
                        Err(Error::WindowContextMismatch { .. })
                    ));
                    found = true;
                }
            }
        }
        assert!(found);
    }

    #[test]
    fn figure_five_move() {
        let p = GfParams::new(2, 2).unwrap();
        let t = build_basic_tree(2, 2, 2).unwrap();
        assert_eq!(t.len(), 17);
        // the depth-2 node labelled α_1 = (0,1) moves under a leaf labelled 0
        let moved = (0..t.len())
            .find(|&v| t.depth(v) == 2 && t.node(v).label.code() == 1)
            .unwrap();
        let target = (0..t.len())
            .find(|&v| {
                t.depth(v) == 3
                    && t.node(v).label.is_zero()
                    && t.node(t.node(v).parent.unwrap()).label.code() == 2
            })
            .unwrap();
        let moved_tree = basic_step(&t, moved, target).unwrap();
        assert!(moved_tree.is_valid());
        assert_eq!(moved_tree.height(), 5);
        // spine end keeps only α_2 and α_3
        let spine_end = moved_tree.node(1);
        let labels: Vec<_> = spine_end
            .children
            .iter()
            .map(|&c| moved_tree.node(c).label.clone())
            .collect();
        assert_eq!(labels, vec![GfBlock::from_code(p, 2), GfBlock::from_code(p, 3)]);
    }

    #[test]
    fn step_neighbours_are_valid() {
        for (p, s, n) in [(2, 1, 2), (2, 1, 3), (3, 1, 2), (2, 2, 2)] {
            let b = build_basic_tree(p, s, n).unwrap();
            let moves = b.admissible_moves();
            assert!(!moves.is_empty());
            for (v, target) in moves {
                let t = basic_step(&b, v, target).unwrap();
                assert!(t.is_valid());
                assert_eq!(t.len(), b.len());
                assert!(t.height() > b.height());
            }
        }
    }

    #[test]
    fn windows_of_chain() {
        let t = chain_tree(p21(), 2, &[0, 0, 1, 1, 0]).unwrap();
        let w = enumerate_windows(&t, 3).unwrap();
        let got: Vec<_> = w.iter().skip(1).map(|(w, _)| codes(w)).collect();
        assert_eq!(
            got,
            vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 1], vec![1, 1, 0]]
        );
        let singles: Vec<_> = enumerate_windows(&t, 1)
            .unwrap()
            .into_iter()
            .map(|(w, _)| w[0].code())
            .collect();
        assert_eq!(singles, vec![0, 0, 1, 1, 0]);
        assert!(matches!(enumerate_windows(&t, 0), Err(Error::EmptyWindow)));
    }

    #[test]
    fn basic_tree_two_windows() {
        let t = build_basic_tree(2, 1, 2).unwrap();
        let depth = t.depths();
        let mut words: Vec<_> = enumerate_windows(&t, 2)
            .unwrap()
            .into_iter()
            .filter(|(_, id)| depth[*id] >= 1)
            .map(|(w, _)| codes(&w))
            .collect();
        words.sort();
        assert_eq!(words, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn unique_upward_extension() {
        let t = build_basic_tree(3, 1, 2).unwrap();
        let depth = t.depths();
        let mut ext: HashMap<Vec<GfBlock>, GfBlock> = HashMap::new();
        for id in (0..t.len()).filter(|&id| depth[id] >= 1) {
            let w = t.window(id, 3);
            assert!(ext.insert(w[1..].to_vec(), w[0].clone()).is_none());
        }
        assert_eq!(ext.len(), 9);
    }
}
