//! Arena-backed rooted trees.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense index of a vertex, assigned in birth order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub depth: u32,
    pub birth_step: u64,
}

/// A finite rooted tree. Nodes are never removed, depths are cached at creation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    nodes: Vec<Node>,
    root: NodeId,
}

impl RootedTree {
    /// The one-vertex tree `{o}`.
    pub fn singleton() -> Self {
        RootedTree {
            nodes: vec![Node {
                parent: None,
                children: Vec::new(),
                depth: 0,
                birth_step: 0,
            }],
            root: NodeId(0),
        }
    }

    /// The canonical edge `{o, x}`: root `0` with a single child `1`.
    pub fn edge() -> Self {
        let mut tree = Self::singleton();
        tree.add_leaf(NodeId(0), 0);
        tree
    }

    /// Build a tree from a parent array; exactly one entry must be `None`.
    /// Children are ordered by index.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Self> {
        if parents.is_empty() {
            return Err(Error::EmptyTree);
        }
        let n = parents.len();
        let mut root = None;
        for (i, p) in parents.iter().enumerate() {
            match p {
                None if root.is_some() => {
                    return Err(Error::MalformedTree(format!("second root at {i}")));
                }
                None => root = Some(i),
                Some(p) if *p >= n => {
                    return Err(Error::MalformedTree(format!(
                        "parent {p} of {i} out of range"
                    )));
                }
                Some(p) if *p == i => {
                    return Err(Error::MalformedTree(format!("{i} is its own parent")));
                }
                Some(_) => {}
            }
        }
        let root = root.ok_or_else(|| Error::MalformedTree("no root".into()))?;

        let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(NodeId(i as u32));
            }
        }
        // Breadth-first from the root; anything unreached sits on a cycle.
        let mut depth = vec![u32::MAX; n];
        depth[root] = 0;
        let mut queue = vec![root];
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            for c in &children[v] {
                depth[c.index()] = depth[v] + 1;
                queue.push(c.index());
            }
        }
        if queue.len() != n {
            return Err(Error::MalformedTree("parent links contain a cycle".into()));
        }
        let nodes = parents
            .iter()
            .zip(children)
            .zip(depth)
            .map(|((p, children), depth)| Node {
                parent: p.map(|p| NodeId(p as u32)),
                children,
                depth,
                birth_step: 0,
            })
            .collect();
        Ok(RootedTree {
            nodes,
            root: NodeId(root as u32),
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn root(&self) -> NodeId {
        self.root
    }

    #[inline]
    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    #[inline]
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    #[inline]
    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.index()].parent
    }

    #[inline]
    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.index()].children
    }

    #[inline]
    pub fn depth(&self, id: NodeId) -> u32 {
        self.nodes[id.index()].depth
    }

    #[inline]
    pub fn degree(&self, id: NodeId) -> usize {
        let node = &self.nodes[id.index()];
        node.children.len() + usize::from(node.parent.is_some())
    }

    /// The `k`-th neighbor of `id`: the father first (if any), then children in birth order.
    #[inline]
    pub fn neighbor(&self, id: NodeId, k: usize) -> NodeId {
        let node = &self.nodes[id.index()];
        match node.parent {
            Some(parent) if k == 0 => parent,
            Some(_) => node.children[k - 1],
            None => node.children[k],
        }
    }

    pub fn add_leaf(&mut self, parent: NodeId, birth_step: u64) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        let depth = self.nodes[parent.index()].depth + 1;
        self.nodes[parent.index()].children.push(id);
        self.nodes.push(Node {
            parent: Some(parent),
            children: Vec::new(),
            depth,
            birth_step,
        });
        id
    }

    /// Check root uniqueness, parent/child consistency and the cached depths.
    pub fn check_invariants(&self) -> Result<()> {
        let roots = self.nodes.iter().filter(|n| n.parent.is_none()).count();
        if roots != 1 || self.nodes[self.root.index()].parent.is_some() {
            return Err(Error::MalformedTree(format!("{roots} roots")));
        }
        if self.nodes[self.root.index()].depth != 0 {
            return Err(Error::MalformedTree("root depth is not 0".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let id = NodeId(i as u32);
            if let Some(p) = node.parent {
                if !self.nodes[p.index()].children.contains(&id) {
                    return Err(Error::MalformedTree(format!(
                        "{i} missing from children of {}",
                        p.0
                    )));
                }
            }
            for c in &node.children {
                if self.nodes[c.index()].parent != Some(id) {
                    return Err(Error::MalformedTree(format!(
                        "child {} does not point back to {i}",
                        c.0
                    )));
                }
            }
            // Walk to the root; the hop count must equal the cached depth.
            let mut hops = 0u32;
            let mut v = id;
            while let Some(p) = self.nodes[v.index()].parent {
                hops += 1;
                v = p;
                if hops as usize > self.nodes.len() {
                    return Err(Error::MalformedTree("cycle".into()));
                }
            }
            if hops != node.depth {
                return Err(Error::MalformedTree(format!(
                    "node {i}: depth {} but {hops} hops",
                    node.depth
                )));
            }
        }
        Ok(())
    }
}
