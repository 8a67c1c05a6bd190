use serde::{Deserialize, Serialize};

use super::{CfgError, FuncId, Node, NodeId, NodeKind, Program, WalkConfig};

/// A call site: the calling function and its call node.
pub type CallSite = (FuncId, NodeId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub func: FuncId,
    pub node: NodeId,
    /// Length of the call string when the step was taken.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopVisit {
    pub func: FuncId,
    pub loop_id: usize,
    pub iterations: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub func: FuncId,
    pub call_site: Option<CallSite>,
    pub loop_iters: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramPath {
    pub root: FuncId,
    pub steps: Vec<PathStep>,
    pub decisions: Vec<bool>,
    pub entry_context: Vec<CallSite>,
    pub loops: Vec<LoopVisit>,
}

/// Position of one partial path. Cloned at branch points.
#[derive(Debug, Clone)]
pub struct Cursor {
    pub frames: Vec<Frame>,
    pub node: NodeId,
    pub decisions: Vec<bool>,
    pub entry_context: Vec<CallSite>,
    record: bool,
    steps: Vec<PathStep>,
    loops: Vec<LoopVisit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchChoice {
    Both,
    /// A loop header whose unroll budget is spent: only the exit edge.
    Exhausted,
}

impl Cursor {
    pub fn func(&self) -> FuncId {
        self.frames.last().expect("cursor has a frame").func
    }

    /// Full call string: entry context followed by the inlined call sites.
    pub fn call_string(&self) -> Vec<CallSite> {
        let mut cs = self.entry_context.clone();
        cs.extend(self.frames.iter().filter_map(|f| f.call_site));
        cs
    }

    pub fn depth(&self) -> usize {
        self.entry_context.len() + self.frames.len() - 1
    }

    pub fn into_path(self, root: FuncId) -> ProgramPath {
        ProgramPath {
            root,
            steps: self.steps,
            decisions: self.decisions,
            entry_context: self.entry_context,
            loops: self.loops,
        }
    }
}

impl Program {
    pub fn start(&self, root: FuncId, entry_context: &[CallSite], record: bool) -> Cursor {
        let cfg = self.cfg(root);
        let mut cur = Cursor {
            frames: vec![Frame {
                func: root,
                call_site: None,
                loop_iters: vec![0; cfg.loops.len()],
            }],
            node: cfg.entry,
            decisions: Vec::new(),
            entry_context: entry_context.to_vec(),
            record,
            steps: Vec::new(),
            loops: Vec::new(),
        };
        cur.log_step();
        cur
    }

    pub fn current<'a>(&'a self, cur: &Cursor) -> &'a Node {
        self.cfg(cur.func()).node(cur.node)
    }

    pub fn choices(&self, cur: &Cursor, config: &WalkConfig) -> BranchChoice {
        match &self.current(cur).kind {
            NodeKind::Branch {
                loop_id: Some(l), ..
            } if cur.frames.last().unwrap().loop_iters[*l] >= config.unroll_bound => {
                BranchChoice::Exhausted
            }
            _ => BranchChoice::Both,
        }
    }

    /// Move past the current node. `taken` selects the edge of a branch.
    pub fn advance(
        &self,
        cur: &mut Cursor,
        taken: Option<bool>,
        config: &WalkConfig,
    ) -> Result<Status, CfgError> {
        let func = cur.func();
        let node = self.cfg(func).node(cur.node);
        match &node.kind {
            NodeKind::Entry | NodeKind::Stmt(_) => cur.node = node.succ[0],
            NodeKind::Branch { loop_id, .. } => {
                let t = taken.expect("branch needs a direction");
                if let Some(l) = loop_id {
                    let frame = cur.frames.last_mut().unwrap();
                    if t {
                        frame.loop_iters[*l] += 1;
                    } else {
                        if cur.record {
                            cur.loops.push(LoopVisit {
                                func,
                                loop_id: *l,
                                iterations: frame.loop_iters[*l],
                            });
                        }
                        frame.loop_iters[*l] = 0;
                    }
                }
                cur.decisions.push(t);
                cur.node = node.succ[if t { 0 } else { 1 }];
            }
            NodeKind::Call(call) => {
                let callee = self
                    .func_id(&call.callee)
                    .ok_or_else(|| CfgError::UnknownFunction(call.callee.clone()))?;
                if cur.depth() + 1 > config.max_call_depth {
                    return Err(CfgError::CallDepthExceeded {
                        callee: call.callee.clone(),
                        line: node.span.line,
                    });
                }
                let cfg = self.cfg(callee);
                cur.frames.push(Frame {
                    func: callee,
                    call_site: Some((func, cur.node)),
                    loop_iters: vec![0; cfg.loops.len()],
                });
                cur.node = cfg.entry;
            }
            NodeKind::Exit => {
                if cur.frames.len() == 1 {
                    return Ok(Status::Finished);
                }
                let frame = cur.frames.pop().unwrap();
                let (caller, site) = frame.call_site.expect("inlined frame has a call site");
                cur.node = self.cfg(caller).node(site).succ[0];
            }
        }
        cur.log_step();
        Ok(Status::Running)
    }
}

impl Cursor {
    fn log_step(&mut self) {
        if self.record {
            let step = PathStep {
                func: self.func(),
                node: self.node,
                depth: self.depth(),
            };
            self.steps.push(step);
        }
    }
}

/// Depth-first enumeration of bounded paths from `root`'s entry to its exit,
/// true edges before false edges.
pub fn enumerate_paths<'a>(
    program: &'a Program,
    root: FuncId,
    config: WalkConfig,
    entry_context: &[CallSite],
) -> impl Iterator<Item = Result<ProgramPath, CfgError>> + 'a {
    PathIter {
        program,
        root,
        config,
        stack: vec![program.start(root, entry_context, true)],
    }
}

struct PathIter<'a> {
    program: &'a Program,
    root: FuncId,
    config: WalkConfig,
    stack: Vec<Cursor>,
}

impl Iterator for PathIter<'_> {
    type Item = Result<ProgramPath, CfgError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut cur = self.stack.pop()?;
        loop {
            let taken = match &self.program.current(&cur).kind {
                NodeKind::Branch { .. } => match self.program.choices(&cur, &self.config) {
                    BranchChoice::Both => {
                        let mut other = cur.clone();
                        match self.program.advance(&mut other, Some(false), &self.config) {
                            Ok(_) => self.stack.push(other),
                            Err(e) => return Some(Err(e)),
                        }
                        Some(true)
                    }
                    BranchChoice::Exhausted => Some(false),
                },
                _ => None,
            };
            match self.program.advance(&mut cur, taken, &self.config) {
                Ok(Status::Running) => {}
                Ok(Status::Finished) => return Some(Ok(cur.into_path(self.root))),
                Err(e) => return Some(Err(e)),
            }
        }
    }
}
