use std::collections::{BTreeMap, BTreeSet};

use super::{AnnotatedBlock, AnnotatedProcedure, AnnotatedProgram, Contract, Statement};
use crate::diag::{DiagCode, Diagnostic};
use crate::expr::{type_of, Expr, TypeError};
use crate::value::{Domain, Type};

/// Where an expression sits, which decides what it may mention.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    /// Guards, assignments, `requires`, the init predicate.
    Plain,
    /// `ensures` clauses may use `old(x)`.
    Ensures,
}

struct Checker<'a> {
    prog: &'a AnnotatedProgram,
    diags: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn push(&mut self, code: DiagCode, path: impl Into<String>, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(code, path, msg));
    }

    fn expr(
        &mut self,
        e: &Expr,
        scope: &BTreeMap<String, Domain>,
        ctx: Ctx,
        want: Type,
        path: &str,
    ) {
        if e.has_primes() {
            self.push(
                DiagCode::PrimedInProgram,
                path,
                format!("primed variables are not allowed in `{e}`"),
            );
            return;
        }
        if ctx == Ctx::Plain && e.contains_old() {
            self.push(
                DiagCode::MisplacedOld,
                path,
                format!("`old(..)` is only allowed in ensures clauses: `{e}`"),
            );
            return;
        }
        if e.contains_any() {
            self.push(
                DiagCode::MisplacedAny,
                path,
                format!("`any(..)` cannot be written in a program: `{e}`"),
            );
            return;
        }
        match type_of(e, &|n| scope.get(n).map(|d| d.ty())) {
            Ok(t) if t == want => {}
            Ok(t) => self.push(
                DiagCode::TypeError,
                path,
                format!("`{e}` has type {t}, expected {want}"),
            ),
            Err(TypeError::UnknownVariable(v)) => self.push(
                DiagCode::UnknownVariable,
                path,
                format!("`{v}` is not in scope"),
            ),
            Err(err) => self.push(DiagCode::TypeError, path, err.to_string()),
        }
    }

    fn run(&mut self) {
        let prog = self.prog;
        if !prog.procedures.contains_key(&prog.main) {
            self.push(
                DiagCode::MissingMain,
                prog.main.clone(),
                format!("main procedure `{}` is not declared", prog.main),
            );
        }
        let globals: BTreeSet<&str> = prog.globals.iter().map(|g| g.name.as_str()).collect();
        for g in &prog.globals {
            if let Domain::Range(lo, hi) = g.domain {
                if lo > hi {
                    self.push(
                        DiagCode::EmptyDomain,
                        g.name.clone(),
                        format!("empty range {lo}..{hi}"),
                    );
                }
            }
        }
        let gscope: BTreeMap<String, Domain> = prog
            .globals
            .iter()
            .map(|g| (g.name.clone(), g.domain))
            .collect();
        self.expr(&prog.init_globals, &gscope, Ctx::Plain, Type::Bool, "init");

        for p in prog.procedures.values() {
            self.procedure(p, &globals);
        }
    }

    fn procedure(&mut self, p: &AnnotatedProcedure, globals: &BTreeSet<&str>) {
        let prog = self.prog;
        for l in &p.locals {
            let path = format!("{}/{}", p.name, l.name);
            if globals.contains(l.name.as_str()) {
                self.push(
                    DiagCode::DuplicateName,
                    path.clone(),
                    format!("local `{}` shadows a global", l.name),
                );
            }
            if let Domain::Range(lo, hi) = l.domain {
                if lo > hi {
                    self.push(DiagCode::EmptyDomain, path.clone(), format!("empty range {lo}..{hi}"));
                }
            }
            match p.init_locals.get(&l.name) {
                Some(v) if !l.domain.contains(*v) => self.push(
                    DiagCode::ValueOutOfDomain,
                    path,
                    format!("initial value {v} is outside {}", l.domain),
                ),
                None => self.push(
                    DiagCode::ValueOutOfDomain,
                    path,
                    "local has no initial value",
                ),
                _ => {}
            }
        }
        if !p.blocks.contains_key(&p.entry_block) {
            self.push(
                DiagCode::DanglingReference,
                p.name.clone(),
                format!("entry block `{}` is not declared", p.entry_block),
            );
        }
        let scope = prog.scope_of(&p.name);
        for b in p.blocks.values() {
            self.block(p, b, &scope);
        }
    }

    fn block(&mut self, p: &AnnotatedProcedure, b: &AnnotatedBlock, scope: &BTreeMap<String, Domain>) {
        let prog = self.prog;
        let bpath = format!("{}/{}", p.name, b.id);
        for (which, id) in [("entry", &b.entry), ("exit", &b.exit)] {
            if !b.points.contains_key(id) {
                self.push(
                    DiagCode::DanglingReference,
                    bpath.clone(),
                    format!("{which} point `{id}` is not declared"),
                );
            }
        }
        for e in &b.edges {
            for end in [&e.from, &e.to] {
                if !b.points.contains_key(end) {
                    self.push(
                        DiagCode::DanglingReference,
                        bpath.clone(),
                        format!("edge `{} -> {}` refers to undeclared point `{end}`", e.from, e.to),
                    );
                }
            }
            if let Some(g) = &e.guard {
                let path = format!("{bpath}/{}->{}", e.from, e.to);
                self.expr(g, scope, Ctx::Plain, Type::Bool, &path);
            }
        }
        if b.successors(&b.exit).next().is_some() {
            self.push(
                DiagCode::ExitHasSuccessor,
                format!("{bpath}/{}", b.exit),
                "exit point has an outgoing edge",
            );
        }
        for (id, stmt) in &b.points {
            let path = format!("{bpath}/{id}");
            if *id != b.exit && b.successors(id).next().is_none() {
                self.push(
                    DiagCode::DeadEndPoint,
                    path.clone(),
                    "non-exit point has no outgoing edge",
                );
            }
            match stmt {
                Statement::Return if *id != b.exit => self.push(
                    DiagCode::ReturnNotAtExit,
                    path,
                    "`return` may only label the exit point",
                ),
                Statement::Jump(target) if !p.blocks.contains_key(target) => self.push(
                    DiagCode::DanglingReference,
                    path,
                    format!("jump to undeclared block `{target}`"),
                ),
                Statement::Call(q) if !prog.procedures.contains_key(q) => self.push(
                    DiagCode::DanglingReference,
                    path,
                    format!("call to undeclared procedure `{q}`"),
                ),
                Statement::Assign { target, expr } => match scope.get(target) {
                    None => self.push(
                        DiagCode::UnknownVariable,
                        path,
                        format!("assignment to `{target}` which is not in scope"),
                    ),
                    Some(d) => self.expr(expr, scope, Ctx::Plain, d.ty(), &path),
                },
                _ => {}
            }
        }
        if let Contract::Spec {
            requires,
            ensures,
            assigns,
        } = &b.contract
        {
            for proc in self.contract_scopes(p, b) {
                let cscope = prog.scope_of(&proc);
                let cpath = if proc == p.name {
                    format!("{bpath}/contract")
                } else {
                    format!("{bpath}/contract@{proc}")
                };
                self.expr(requires, &cscope, Ctx::Plain, Type::Bool, &cpath);
                self.expr(ensures, &cscope, Ctx::Ensures, Type::Bool, &cpath);
                for v in assigns {
                    if !cscope.contains_key(v) {
                        self.push(
                            DiagCode::UnknownVariable,
                            cpath.clone(),
                            format!("assigns `{v}` which is not in scope"),
                        );
                    }
                }
            }
        }
    }

    /// Procedures whose scope a block contract is interpreted in. The entry
    /// contract of `q` stands in for calls to `q`, so it is read in each
    /// caller's scope; everything else is read in the owning procedure.
    fn contract_scopes(&self, p: &AnnotatedProcedure, b: &AnnotatedBlock) -> Vec<String> {
        if b.id != p.entry_block {
            return vec![p.name.clone()];
        }
        let jumped_to = p
            .blocks
            .values()
            .any(|blk| blk.points.values().any(|s| matches!(s, Statement::Jump(t) if *t == b.id)));
        let mut out: Vec<String> = self
            .prog
            .callers_of(&p.name)
            .into_iter()
            .map(str::to_string)
            .collect();
        if (out.is_empty() || jumped_to) && !out.contains(&p.name) {
            out.push(p.name.clone());
        }
        out
    }
}

/// Checks every structural invariant of an annotated program. Returns an
/// empty list exactly when the program is well formed.
pub fn validate_program(prog: &AnnotatedProgram) -> Vec<Diagnostic> {
    let mut c = Checker {
        prog,
        diags: Vec::new(),
    };
    c.run();
    c.diags
}
