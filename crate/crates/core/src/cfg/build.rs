use crate::frontend::{Expr, ExprKind, FunctionDef, Span, Stmt, StmtKind, TypedAst, ValueType};

use super::{CallNode, Cfg, LoopInfo, Node, NodeId, NodeKind, TempVar};

const OPEN: NodeId = usize::MAX;

/// Edges waiting for a target: (node, successor slot).
type Pending = Vec<(NodeId, usize)>;

struct Builder<'a> {
    ast: &'a TypedAst,
    nodes: Vec<Node>,
    loops: Vec<LoopInfo>,
    returns: Pending,
    temps: usize,
}

pub fn build_cfg(ast: &TypedAst, f: &FunctionDef) -> Cfg {
    let mut b = Builder {
        ast,
        nodes: Vec::new(),
        loops: Vec::new(),
        returns: Vec::new(),
        temps: 0,
    };
    let entry = b.add(NodeKind::Entry, f.sig.span, 1, Vec::new());
    let mut pending = vec![(entry, 0)];
    for s in &f.body.stmts {
        pending = b.stmt(s, pending);
    }
    pending.extend(std::mem::take(&mut b.returns));
    let end = Span {
        start: f.span.end,
        line: f.span.end_line,
        col: f.span.end_col,
        ..f.span
    };
    let exit = b.add(NodeKind::Exit, end, 0, pending);
    prune_unreachable(Cfg {
        function: f.sig.name.clone(),
        nodes: b.nodes,
        entry,
        exit,
        loops: b.loops,
    })
}

impl Builder<'_> {
    fn add(&mut self, kind: NodeKind, span: Span, nsucc: usize, pending: Pending) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            id,
            kind,
            span,
            succ: vec![OPEN; nsucc],
        });
        self.connect(pending, id);
        id
    }

    fn connect(&mut self, pending: Pending, target: NodeId) {
        for (n, slot) in pending {
            self.nodes[n].succ[slot] = target;
        }
    }

    fn is_user_function(&self, name: &str) -> bool {
        self.ast.function(name).is_some()
    }

    /// Replace calls to user functions by temporaries, innermost first.
    fn hoist(&mut self, e: &Expr, calls: &mut Vec<(CallNode, Span)>) -> Expr {
        let kind = match &e.kind {
            ExprKind::Call { callee, args } => {
                let args: Vec<Expr> = args.iter().map(|a| self.hoist(a, calls)).collect();
                if self.is_user_function(callee) {
                    self.temps += 1;
                    let name = format!("$t{}", self.temps);
                    let result = e.int_kind().map(|kind| TempVar {
                        name: name.clone(),
                        kind,
                    });
                    calls.push((
                        CallNode {
                            callee: callee.clone(),
                            args,
                            result,
                        },
                        e.span,
                    ));
                    ExprKind::Temp(name)
                } else {
                    ExprKind::Call {
                        callee: callee.clone(),
                        args,
                    }
                }
            }
            ExprKind::Unary(op, a) => ExprKind::Unary(*op, Box::new(self.hoist(a, calls))),
            ExprKind::Binary(op, a, b) => {
                let a = self.hoist(a, calls);
                let b = self.hoist(b, calls);
                ExprKind::Binary(*op, Box::new(a), Box::new(b))
            }
            ExprKind::Member { base, field, arrow } => ExprKind::Member {
                base: Box::new(self.hoist(base, calls)),
                field: field.clone(),
                arrow: *arrow,
            },
            ExprKind::Deref(a) => ExprKind::Deref(Box::new(self.hoist(a, calls))),
            ExprKind::AddrOf(a) => ExprKind::AddrOf(Box::new(self.hoist(a, calls))),
            other => other.clone(),
        };
        Expr {
            kind,
            ty: e.ty.clone(),
            span: e.span,
        }
    }

    fn emit_calls(&mut self, calls: Vec<(CallNode, Span)>, mut pending: Pending) -> Pending {
        for (call, span) in calls {
            let id = self.add(NodeKind::Call(call), span, 1, pending);
            pending = vec![(id, 0)];
        }
        pending
    }

    /// Hoist calls out of `cond` and emit a branch node; returns its id.
    fn branch(&mut self, cond: &Expr, loop_id: Option<usize>, pending: Pending) -> NodeId {
        let mut calls = Vec::new();
        let cond = self.hoist(cond, &mut calls);
        let pending = self.emit_calls(calls, pending);
        let span = cond.span;
        self.add(NodeKind::Branch { cond, loop_id }, span, 2, pending)
    }

    fn simple(&mut self, s: &Stmt, pending: Pending) -> Pending {
        let mut calls = Vec::new();
        let kind = match &s.kind {
            StmtKind::Decl(d) => {
                let mut d = d.clone();
                d.init = d.init.as_ref().map(|e| self.hoist(e, &mut calls));
                StmtKind::Decl(d)
            }
            StmtKind::Assign { target, op, value } => StmtKind::Assign {
                target: self.hoist(target, &mut calls),
                op: *op,
                value: self.hoist(value, &mut calls),
            },
            StmtKind::Expr(e) => StmtKind::Expr(self.hoist(e, &mut calls)),
            StmtKind::Return(e) => StmtKind::Return(e.as_ref().map(|e| self.hoist(e, &mut calls))),
            _ => unreachable!("not a simple statement"),
        };
        // A bare call statement needs no node besides the call itself.
        if let StmtKind::Expr(Expr {
            kind: ExprKind::Temp(_),
            ..
        }) = &kind
        {
            if let Some((last, _)) = calls.last_mut() {
                last.result = None;
            }
            return self.emit_calls(calls, pending);
        }
        let pending = self.emit_calls(calls, pending);
        let is_return = matches!(kind, StmtKind::Return(_));
        let stmt = Stmt { kind, span: s.span };
        let id = self.add(NodeKind::Stmt(stmt), s.span, 1, pending);
        if is_return {
            self.returns.push((id, 0));
            Vec::new()
        } else {
            vec![(id, 0)]
        }
    }

    fn stmt(&mut self, s: &Stmt, pending: Pending) -> Pending {
        match &s.kind {
            StmtKind::Decl(_) | StmtKind::Assign { .. } | StmtKind::Expr(_) | StmtKind::Return(_) => {
                self.simple(s, pending)
            }
            StmtKind::Empty => pending,
            StmtKind::Block(b) => b.stmts.iter().fold(pending, |p, s| self.stmt(s, p)),
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let b = self.branch(cond, None, pending);
                let mut out = self.stmt(then_branch, vec![(b, 0)]);
                match else_branch {
                    Some(e) => out.extend(self.stmt(e, vec![(b, 1)])),
                    None => out.push((b, 1)),
                }
                out
            }
            StmtKind::While { cond, body } => self.while_loop(cond, body, None, s.span, pending),
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                let pending = match init {
                    Some(i) => self.stmt(i, pending),
                    None => pending,
                };
                let always = Expr {
                    kind: ExprKind::IntLit(1.into()),
                    ty: ValueType::Int(crate::frontend::IntKind::Int),
                    span: s.span,
                };
                let cond = cond.as_ref().unwrap_or(&always);
                self.while_loop(cond, body, step.as_deref(), s.span, pending)
            }
        }
    }

    fn while_loop(
        &mut self,
        cond: &Expr,
        body: &Stmt,
        step: Option<&Stmt>,
        span: Span,
        pending: Pending,
    ) -> Pending {
        let head = self.nodes.len();
        let loop_id = self.loops.len();
        self.loops.push(LoopInfo { header: OPEN, span });
        let b = self.branch(cond, Some(loop_id), pending);
        self.loops[loop_id].header = b;
        let mut back = self.stmt(body, vec![(b, 0)]);
        if let Some(step) = step {
            back = self.stmt(step, back);
        }
        self.connect(back, head);
        vec![(b, 1)]
    }
}

fn prune_unreachable(cfg: Cfg) -> Cfg {
    let n = cfg.nodes.len();
    let mut seen = vec![false; n];
    let mut stack = vec![cfg.entry];
    while let Some(id) = stack.pop() {
        if !seen[id] {
            seen[id] = true;
            stack.extend(cfg.nodes[id].succ.iter().copied());
        }
    }
    // The exit stays even when every path loops forever.
    seen[cfg.exit] = true;
    let mut remap = vec![OPEN; n];
    let mut next = 0;
    for id in 0..n {
        if seen[id] {
            remap[id] = next;
            next += 1;
        }
    }
    let mut loop_remap = vec![None; cfg.loops.len()];
    let mut loops = Vec::new();
    for (l, info) in cfg.loops.iter().enumerate() {
        if seen[info.header] {
            loop_remap[l] = Some(loops.len());
            loops.push(LoopInfo {
                header: remap[info.header],
                span: info.span,
            });
        }
    }
    let nodes = cfg
        .nodes
        .into_iter()
        .filter(|node| seen[node.id])
        .map(|mut node| {
            node.id = remap[node.id];
            node.succ = node.succ.iter().map(|s| remap[*s]).collect();
            if let NodeKind::Branch { loop_id, .. } = &mut node.kind {
                *loop_id = loop_id.and_then(|l| loop_remap[l]);
            }
            node
        })
        .collect();
    Cfg {
        function: cfg.function,
        nodes,
        entry: remap[cfg.entry],
        exit: remap[cfg.exit],
        loops,
    }
}
