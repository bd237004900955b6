//! Registry compiled into an index-based arena, shared by the sampler and the
//! exact evaluator.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::machine::{MachineExpr, MachineRegistry, Output, QuerySet};
use crate::rational::Rational;

pub(crate) type NodeId = usize;

#[derive(Debug)]
pub(crate) enum Node {
    Leaf(Output),
    Flip {
        p: Rational,
        heads: NodeId,
        tails: NodeId,
    },
    /// `query` indexes the query set the program was compiled against;
    /// `None` means the query is outside it and is answered 0.
    Oracle {
        query: Option<usize>,
        on_zero: NodeId,
        on_one: NodeId,
    },
    /// `target` is a machine index; see [`Program::root_of`].
    Call {
        target: usize,
        on_zero: NodeId,
        on_one: NodeId,
        on_other: NodeId,
    },
}

#[derive(Debug)]
pub(crate) struct Program {
    pub nodes: Vec<Node>,
    roots: Vec<NodeId>,
    names: HashMap<String, usize>,
}

impl Program {
    pub fn compile(registry: &MachineRegistry, queries: &QuerySet) -> Result<Self> {
        let names: HashMap<String, usize> = registry
            .names()
            .enumerate()
            .map(|(i, n)| (n.to_string(), i))
            .collect();
        let mut prog = Program {
            nodes: Vec::new(),
            roots: Vec::with_capacity(names.len()),
            names,
        };
        for (_, body) in registry.iter() {
            let root = prog.lower(body, queries)?;
            prog.roots.push(root);
        }
        Ok(prog)
    }

    fn lower(&mut self, expr: &MachineExpr, queries: &QuerySet) -> Result<NodeId> {
        let node = match expr {
            MachineExpr::Ret(o) => Node::Leaf(o.clone()),
            MachineExpr::Flip { p, heads, tails } => {
                let heads = self.lower(heads, queries)?;
                let tails = self.lower(tails, queries)?;
                Node::Flip {
                    p: p.clone(),
                    heads,
                    tails,
                }
            }
            MachineExpr::Oracle {
                target,
                p,
                on_zero,
                on_one,
            } => {
                if !self.names.contains_key(target) {
                    return Err(Error::UnknownMachine(target.clone()));
                }
                let on_zero = self.lower(on_zero, queries)?;
                let on_one = self.lower(on_one, queries)?;
                Node::Oracle {
                    query: queries.index_of(target, p),
                    on_zero,
                    on_one,
                }
            }
            MachineExpr::Call {
                target,
                on_zero,
                on_one,
                on_other,
            } => {
                let target = *self
                    .names
                    .get(target)
                    .ok_or_else(|| Error::UnknownMachine(target.clone()))?;
                let on_zero = self.lower(on_zero, queries)?;
                let on_one = self.lower(on_one, queries)?;
                let on_other = self.lower(on_other, queries)?;
                Node::Call {
                    target,
                    on_zero,
                    on_one,
                    on_other,
                }
            }
        };
        self.nodes.push(node);
        Ok(self.nodes.len() - 1)
    }

    pub fn root(&self, name: &str) -> Result<NodeId> {
        self.names
            .get(name)
            .map(|&i| self.roots[i])
            .ok_or_else(|| Error::UnknownMachine(name.to_string()))
    }

    pub fn root_of(&self, machine: usize) -> NodeId {
        self.roots[machine]
    }

    /// Nodes reachable from `root` through branches and call targets.
    pub fn reachable(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![root];
        let mut out = Vec::new();
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                continue;
            }
            out.push(id);
            match &self.nodes[id] {
                Node::Leaf(_) => {}
                Node::Flip { heads, tails, .. } => stack.extend([*heads, *tails]),
                Node::Oracle {
                    on_zero, on_one, ..
                } => stack.extend([*on_zero, *on_one]),
                Node::Call {
                    target,
                    on_zero,
                    on_one,
                    on_other,
                } => stack.extend([self.roots[*target], *on_zero, *on_one, *on_other]),
            }
        }
        out.sort_unstable();
        out
    }
}
