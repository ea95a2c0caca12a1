use std::collections::BTreeMap;

use indexmap::IndexMap;

use super::{AnnotatedBlock, AnnotatedProcedure, AnnotatedProgram, BlockEdge, Contract, Statement};
use crate::diag::{DiagCode, Diagnostic};
use crate::expr::Expr;
use crate::syntax::{lex_line, Cursor, SyntaxError, Tok};
use crate::value::VarDecl;

struct ProcBuilder {
    name: String,
    line: usize,
    entry_block: Option<String>,
    locals: Vec<VarDecl>,
    init_locals: BTreeMap<String, crate::value::Value>,
    blocks: IndexMap<String, AnnotatedBlock>,
}

struct BlockBuilder {
    id: String,
    line: usize,
    points: IndexMap<String, Statement>,
    edges: Vec<BlockEdge>,
    entry: Option<String>,
    exit: Option<String>,
    contract: Contract,
}

#[derive(Default)]
struct Parser {
    diags: Vec<Diagnostic>,
    name: Option<String>,
    main: Option<String>,
    globals: Vec<VarDecl>,
    init: Option<Expr>,
    procedures: IndexMap<String, AnnotatedProcedure>,
    proc: Option<ProcBuilder>,
    block: Option<BlockBuilder>,
}

impl Parser {
    fn error(&mut self, code: DiagCode, line: usize, col: usize, path: String, msg: String) {
        self.diags.push(Diagnostic::new(code, path, msg).at(line, col));
    }

    fn syntax(&mut self, line: usize, e: SyntaxError) {
        self.error(DiagCode::SyntaxError, line, e.col, String::new(), e.message);
    }

    fn proc_path(&self) -> String {
        self.proc.as_ref().map(|p| p.name.clone()).unwrap_or_default()
    }

    fn block_path(&self) -> String {
        match (&self.proc, &self.block) {
            (Some(p), Some(b)) => format!("{}/{}", p.name, b.id),
            _ => self.proc_path(),
        }
    }

    fn close_block(&mut self) {
        let Some(b) = self.block.take() else { return };
        let path = format!("{}/{}", self.proc_path(), b.id);
        let (Some(entry), Some(exit)) = (b.entry.clone(), b.exit.clone()) else {
            let which = if b.entry.is_none() { "entry" } else { "exit" };
            self.error(
                DiagCode::SyntaxError,
                b.line,
                1,
                path,
                format!("block `{}` declares no {which} point", b.id),
            );
            return;
        };
        if let Some(p) = self.proc.as_mut() {
            p.blocks.insert(
                b.id.clone(),
                AnnotatedBlock {
                    id: b.id,
                    points: b.points,
                    edges: b.edges,
                    entry,
                    exit,
                    contract: b.contract,
                },
            );
        }
    }

    fn close_proc(&mut self) {
        self.close_block();
        let Some(p) = self.proc.take() else { return };
        let entry_block = match p.entry_block.clone().or_else(|| p.blocks.keys().next().cloned()) {
            Some(e) => e,
            None => {
                self.error(
                    DiagCode::SyntaxError,
                    p.line,
                    1,
                    p.name.clone(),
                    format!("procedure `{}` has no blocks", p.name),
                );
                return;
            }
        };
        self.procedures.insert(
            p.name.clone(),
            AnnotatedProcedure {
                name: p.name,
                locals: p.locals,
                init_locals: p.init_locals,
                blocks: p.blocks,
                entry_block,
            },
        );
    }

    fn line(&mut self, lineno: usize, text: &str) {
        let toks = match lex_line(text) {
            Ok(t) => t,
            Err(e) => return self.syntax(lineno, e),
        };
        if toks.is_empty() {
            return;
        }
        let mut cur = Cursor::new(&toks, text.chars().count());
        let kw_col = cur.col();
        let kw = match cur.bump() {
            Some(Tok::Ident(s)) => s.clone(),
            Some(t) => {
                let msg = format!("expected a section keyword but found {}", t.describe());
                return self.error(DiagCode::SyntaxError, lineno, kw_col, String::new(), msg);
            }
            None => return,
        };
        if self.name.is_none() && kw != "program" {
            return self.error(
                DiagCode::SyntaxError,
                lineno,
                kw_col,
                String::new(),
                "document must start with `program <name>`".into(),
            );
        }
        let result = match kw.as_str() {
            "program" => self.program_line(lineno, kw_col, &mut cur),
            "global" => self.global_line(lineno, &mut cur),
            "init" => self.init_line(lineno, kw_col, &mut cur),
            "procedure" => self.procedure_line(lineno, &mut cur),
            "local" => self.local_line(lineno, kw_col, &mut cur),
            "block" => self.block_line(lineno, kw_col, &mut cur),
            "point" => self.point_line(lineno, kw_col, &mut cur),
            "edge" => self.edge_line(lineno, kw_col, &mut cur),
            "entry" | "exit" => self.entry_exit_line(lineno, kw_col, &kw, &mut cur),
            other => Err(SyntaxError {
                col: kw_col,
                message: format!("unknown section keyword `{other}`"),
            }),
        };
        if let Err(e) = result {
            self.syntax(lineno, e);
        }
    }

    fn program_line(&mut self, lineno: usize, col: usize, cur: &mut Cursor) -> Result<(), SyntaxError> {
        if self.name.is_some() {
            self.error(
                DiagCode::DuplicateName,
                lineno,
                col,
                String::new(),
                "second `program` header".into(),
            );
            return Ok(());
        }
        let name = cur.ident("program name")?;
        let main = if cur.eat_keyword("main") {
            cur.ident("procedure name")?
        } else {
            "main".to_string()
        };
        cur.finish()?;
        self.name = Some(name);
        self.main = Some(main);
        Ok(())
    }

    fn global_line(&mut self, lineno: usize, cur: &mut Cursor) -> Result<(), SyntaxError> {
        let col = cur.col();
        let name = cur.ident("variable name")?;
        cur.expect(&Tok::Colon)?;
        let domain = cur.domain()?;
        cur.finish()?;
        if self.globals.iter().any(|g| g.name == name) {
            self.error(
                DiagCode::DuplicateName,
                lineno,
                col,
                name.clone(),
                format!("global `{name}` declared twice"),
            );
        } else {
            self.globals.push(VarDecl::new(name, domain));
        }
        Ok(())
    }

    fn init_line(&mut self, lineno: usize, col: usize, cur: &mut Cursor) -> Result<(), SyntaxError> {
        let e = cur.expr()?;
        cur.finish()?;
        if self.init.is_some() {
            self.error(
                DiagCode::DuplicateName,
                lineno,
                col,
                String::new(),
                "second `init` predicate".into(),
            );
        } else {
            self.init = Some(e);
        }
        Ok(())
    }

    fn procedure_line(&mut self, lineno: usize, cur: &mut Cursor) -> Result<(), SyntaxError> {
        self.close_proc();
        let col = cur.col();
        let name = cur.ident("procedure name")?;
        let entry_block = if cur.eat_keyword("entry") {
            Some(cur.ident("block id")?)
        } else {
            None
        };
        cur.finish()?;
        if self.procedures.contains_key(&name) {
            self.error(
                DiagCode::DuplicateName,
                lineno,
                col,
                name.clone(),
                format!("procedure `{name}` declared twice"),
            );
        }
        self.proc = Some(ProcBuilder {
            name,
            line: lineno,
            entry_block,
            locals: Vec::new(),
            init_locals: BTreeMap::new(),
            blocks: IndexMap::new(),
        });
        Ok(())
    }

    fn local_line(&mut self, lineno: usize, col: usize, cur: &mut Cursor) -> Result<(), SyntaxError> {
        if self.proc.is_none() {
            return Err(SyntaxError {
                col,
                message: "`local` outside of a procedure".into(),
            });
        }
        let ncol = cur.col();
        let name = cur.ident("variable name")?;
        cur.expect(&Tok::Colon)?;
        let domain = cur.domain()?;
        cur.expect(&Tok::Equals)?;
        let value = cur.value()?;
        cur.finish()?;
        let path = self.proc_path();
        let p = self.proc.as_mut().expect("checked above");
        if p.locals.iter().any(|l| l.name == name) {
            let msg = format!("local `{name}` declared twice");
            self.error(DiagCode::DuplicateName, lineno, ncol, format!("{path}/{name}"), msg);
        } else {
            p.init_locals.insert(name.clone(), value);
            p.locals.push(VarDecl::new(name, domain));
        }
        Ok(())
    }

    fn block_line(&mut self, lineno: usize, col: usize, cur: &mut Cursor) -> Result<(), SyntaxError> {
        if self.proc.is_none() {
            return Err(SyntaxError {
                col,
                message: "`block` outside of a procedure".into(),
            });
        }
        self.close_block();
        let icol = cur.col();
        let id = cur.ident("block id")?;
        let contract = if cur.eat_keyword("contract") {
            let requires = if cur.eat_keyword("requires") {
                cur.expr()?
            } else {
                Expr::Bool(true)
            };
            let ensures = if cur.eat_keyword("ensures") {
                cur.expr()?
            } else {
                Expr::Bool(true)
            };
            let mut assigns = Vec::new();
            if cur.eat_keyword("assigns") && !cur.at_end() {
                assigns.push(cur.ident("variable name")?);
                while matches!(cur.peek(), Some(Tok::Comma)) {
                    cur.bump();
                    assigns.push(cur.ident("variable name")?);
                }
            }
            Contract::Spec {
                requires,
                ensures,
                assigns,
            }
        } else {
            Contract::Empty
        };
        cur.finish()?;
        let path = self.proc_path();
        if self.proc.as_ref().is_some_and(|p| p.blocks.contains_key(&id)) {
            let msg = format!("block `{id}` declared twice");
            self.error(DiagCode::DuplicateName, lineno, icol, format!("{path}/{id}"), msg);
        }
        self.block = Some(BlockBuilder {
            id,
            line: lineno,
            points: IndexMap::new(),
            edges: Vec::new(),
            entry: None,
            exit: None,
            contract,
        });
        Ok(())
    }

    fn need_block(&self, col: usize, kw: &str) -> Result<(), SyntaxError> {
        if self.block.is_none() {
            Err(SyntaxError {
                col,
                message: format!("`{kw}` outside of a block"),
            })
        } else {
            Ok(())
        }
    }

    fn point_line(&mut self, lineno: usize, col: usize, cur: &mut Cursor) -> Result<(), SyntaxError> {
        self.need_block(col, "point")?;
        let icol = cur.col();
        let id = cur.ident("point id")?;
        cur.expect(&Tok::Colon)?;
        let stmt = if cur.eat_keyword("skip") {
            Statement::Skip
        } else if cur.eat_keyword("return") {
            Statement::Return
        } else if cur.eat_keyword("jump") {
            Statement::Jump(cur.ident("block id")?)
        } else if cur.eat_keyword("call") {
            Statement::Call(cur.ident("procedure name")?)
        } else {
            let target = cur.ident("statement")?;
            cur.expect(&Tok::Assign)?;
            Statement::Assign {
                target,
                expr: cur.expr()?,
            }
        };
        cur.finish()?;
        let path = self.block_path();
        let b = self.block.as_mut().expect("checked above");
        if b.points.contains_key(&id) {
            let msg = format!("point `{id}` declared twice");
            self.error(DiagCode::DuplicateName, lineno, icol, format!("{path}/{id}"), msg);
        } else {
            b.points.insert(id, stmt);
        }
        Ok(())
    }

    fn edge_line(&mut self, lineno: usize, col: usize, cur: &mut Cursor) -> Result<(), SyntaxError> {
        self.need_block(col, "edge")?;
        let from = cur.ident("point id")?;
        cur.expect(&Tok::Arrow)?;
        let to = cur.ident("point id")?;
        let guard = if cur.eat_keyword("when") {
            Some(cur.expr()?)
        } else {
            None
        };
        cur.finish()?;
        let path = self.block_path();
        let b = self.block.as_mut().expect("checked above");
        if b.edges.iter().any(|e| e.from == from && e.to == to) {
            let msg = format!("edge `{from} -> {to}` declared twice");
            self.error(DiagCode::DuplicateName, lineno, col, path, msg);
        } else {
            b.edges.push(BlockEdge { from, to, guard });
        }
        Ok(())
    }

    fn entry_exit_line(
        &mut self,
        lineno: usize,
        col: usize,
        kw: &str,
        cur: &mut Cursor,
    ) -> Result<(), SyntaxError> {
        self.need_block(col, kw)?;
        let id = cur.ident("point id")?;
        cur.finish()?;
        let path = self.block_path();
        let b = self.block.as_mut().expect("checked above");
        let slot = if kw == "entry" { &mut b.entry } else { &mut b.exit };
        if slot.is_some() {
            let msg = format!("block declares `{kw}` twice");
            self.error(DiagCode::DuplicateName, lineno, col, path, msg);
        } else {
            *slot = Some(id);
        }
        Ok(())
    }
}

/// Parses a `.apg` document.
///
/// Never panics on malformed input: every problem becomes a diagnostic
/// carrying its line and column, and parsing continues with the next line.
/// Cross-references (jump targets, callees, edge endpoints) are checked by
/// [`validate_program`](super::validate_program), not here.
pub fn parse_program(text: &str) -> Result<AnnotatedProgram, Vec<Diagnostic>> {
    let mut p = Parser::default();
    for (i, line) in text.lines().enumerate() {
        p.line(i + 1, line);
    }
    p.close_proc();
    let Some(name) = p.name.take() else {
        p.diags.push(
            Diagnostic::new(
                DiagCode::SyntaxError,
                "",
                "document must start with `program <name>`",
            )
            .at(1, 1),
        );
        return Err(p.diags);
    };
    if !p.diags.is_empty() {
        return Err(p.diags);
    }
    Ok(AnnotatedProgram {
        name,
        main: p.main.unwrap_or_else(|| "main".into()),
        globals: p.globals,
        init_globals: p.init.unwrap_or(Expr::Bool(true)),
        procedures: p.procedures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::{Domain, Value};

    const MINIMAL: &str = "program tiny\nprocedure main\n  block b\n    point r : return\n    entry r\n    exit r\n";

    #[test]
    fn minimal_program() {
        let p = parse_program(MINIMAL).unwrap();
        assert_eq!(p.main, "main");
        assert_eq!(p.procedures.len(), 1);
        let main = &p.procedures["main"];
        assert_eq!(main.blocks.len(), 1);
        assert_eq!(main.blocks["b"].points.len(), 1);
        assert_eq!(main.blocks["b"].points["r"], Statement::Return);
    }

    #[test]
    fn contract_and_locals() {
        let text = "program p\nglobal g : int 0..3\ninit g == 0\nprocedure main\nlocal t : bool = true\nblock b contract requires g > 0 ensures g == old(g) - 1 assigns g\npoint a : t := !t\npoint r : return\nedge a -> r when t\nentry a\nexit r\n";
        let p = parse_program(text).unwrap();
        assert_eq!(p.globals, vec![VarDecl::new("g", Domain::Range(0, 3))]);
        let main = &p.procedures["main"];
        assert_eq!(main.init_locals["t"], Value::Bool(true));
        match &main.blocks["b"].contract {
            Contract::Spec { assigns, ensures, .. } => {
                assert_eq!(assigns, &vec!["g".to_string()]);
                assert_eq!(ensures.to_string(), "g == old(g) - 1");
            }
            Contract::Empty => panic!("expected contract"),
        }
        assert!(main.blocks["b"].edges[0].guard.is_some());
    }

    #[test]
    fn reports_positions_and_keeps_going() {
        let text = "program p\nprocedure main\nblock b\npoint a : x := \npoint r : retrun\nentry a\nexit r\n";
        let diags = parse_program(text).unwrap_err();
        assert_eq!(diags.len(), 2);
        assert_eq!(diags[0].pos.unwrap().line, 4);
        assert_eq!(diags[1].pos.unwrap().line, 5);
        assert!(diags.iter().all(|d| d.code == DiagCode::SyntaxError));
    }

    #[test]
    fn duplicate_names() {
        let text = "program p\nglobal x : bool\nglobal x : bool\nprocedure main\nblock b\npoint r : return\npoint r : skip\nentry r\nexit r\n";
        let diags = parse_program(text).unwrap_err();
        assert_eq!(diags.len(), 2);
        assert!(diags.iter().all(|d| d.code == DiagCode::DuplicateName));
    }

    #[test]
    fn missing_header_and_garbage() {
        assert!(parse_program("").is_err());
        assert!(parse_program("procedure main").is_err());
        assert!(parse_program("program p\n\u{1F600}\n").is_err());
        let diags = parse_program("program p\nprocedure main\nblock b\npoint r : return\n").unwrap_err();
        assert!(diags[0].message.contains("entry"));
    }
}
