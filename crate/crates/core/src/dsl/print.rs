use std::fmt::Write;

use crate::cdt::{MultiAgentSpec, OutcomeModel, UtilityTable, WorldModel};
use crate::game::{MixedProfile, NormalFormGame};
use crate::machine::{MachineExpr, MachineRegistry, OracleAssignment, Output, Prob, QuerySet};
use crate::rational::{format_rational, Rational};

use super::Document;

/// Canonical `.rom` text: one definition per line, single spaces and
/// lowest-terms rationals. Parsing the text gives back the value.
pub trait ToSource {
    fn to_source(&self) -> String;
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn label(l: &str) -> String {
    quote(l)
}

impl ToSource for Rational {
    fn to_source(&self) -> String {
        format_rational(self)
    }
}

impl ToSource for Prob {
    fn to_source(&self) -> String {
        match self {
            Prob::Exact(r) => format_rational(r),
            Prob::Float(x) => format!("{x:?}"),
        }
    }
}

fn write_expr(out: &mut String, e: &MachineExpr) {
    match e {
        MachineExpr::Ret(Output::Zero) => out.push_str("ret 0"),
        MachineExpr::Ret(Output::One) => out.push_str("ret 1"),
        MachineExpr::Ret(Output::Other(l)) => {
            out.push_str("ret ");
            out.push_str(&quote(l));
        }
        MachineExpr::Flip { p, heads, tails } => {
            let _ = write!(out, "flip({}, ", format_rational(p));
            write_expr(out, heads);
            out.push_str(", ");
            write_expr(out, tails);
            out.push(')');
        }
        MachineExpr::Oracle {
            target,
            p,
            on_zero,
            on_one,
        } => {
            let _ = write!(out, "oracle({target}, {}, ", format_rational(p));
            write_expr(out, on_zero);
            out.push_str(", ");
            write_expr(out, on_one);
            out.push(')');
        }
        MachineExpr::Call {
            target,
            on_zero,
            on_one,
            on_other,
        } => {
            let _ = write!(out, "call({target}, ");
            write_expr(out, on_zero);
            out.push_str(", ");
            write_expr(out, on_one);
            out.push_str(", ");
            write_expr(out, on_other);
            out.push(')');
        }
    }
}

impl ToSource for MachineExpr {
    fn to_source(&self) -> String {
        let mut s = String::new();
        write_expr(&mut s, self);
        s
    }
}

impl ToSource for MachineRegistry {
    fn to_source(&self) -> String {
        let mut s = String::new();
        for (name, body) in self.iter() {
            let _ = write!(s, "machine {name} = ");
            write_expr(&mut s, body);
            s.push_str(";\n");
        }
        s
    }
}

impl ToSource for QuerySet {
    fn to_source(&self) -> String {
        self.iter()
            .map(|q| format!("query {} at {};\n", q.machine, format_rational(&q.threshold)))
            .collect()
    }
}

impl ToSource for OracleAssignment {
    fn to_source(&self) -> String {
        self.queries()
            .iter()
            .zip(self.probs())
            .map(|(q, x)| {
                format!(
                    "assign {} at {} = {};\n",
                    q.machine,
                    format_rational(&q.threshold),
                    x.to_source()
                )
            })
            .collect()
    }
}

impl ToSource for WorldModel {
    fn to_source(&self) -> String {
        format!("world {};\n", self.actions().join(", "))
    }
}

impl ToSource for UtilityTable {
    fn to_source(&self) -> String {
        self.iter()
            .map(|(l, u)| format!("utility {} = {};\n", label(l), format_rational(u)))
            .collect()
    }
}

impl ToSource for MultiAgentSpec {
    fn to_source(&self) -> String {
        let mut s = format!("agentgame {} {{\n", self.name);
        let _ = writeln!(s, "agents {};", self.agents);
        s.push_str("actions 2;\n");
        if let OutcomeModel::Machines(f) = &self.outcome {
            let _ = writeln!(s, "outcome {f};");
        }
        for (i, table) in self.utilities.iter().enumerate() {
            for (l, u) in table.iter() {
                let _ = writeln!(s, "utility {} {} = {};", i + 1, label(l), format_rational(u));
            }
        }
        s.push_str("}\n");
        s
    }
}

impl ToSource for NormalFormGame {
    fn to_source(&self) -> String {
        let mut s = format!("game m={};\n", self.num_players());
        for (k, p) in self.players().iter().enumerate() {
            let _ = write!(s, "payoff {}:", k + 1);
            for v in &p.table {
                let _ = write!(s, " {}", format_rational(v));
            }
            s.push_str(" deps:");
            for d in &p.deps {
                let _ = write!(s, " {}", d + 1);
            }
            s.push_str(";\n");
        }
        s
    }
}

impl ToSource for MixedProfile {
    fn to_source(&self) -> String {
        self.0
            .iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl ToSource for Document {
    fn to_source(&self) -> String {
        let mut s = self.registry.to_source();
        s.push_str(&self.queries.to_source());
        s.push_str(&self.assignment.to_source());
        if let Some(w) = &self.world {
            s.push_str(&w.to_source());
        }
        s.push_str(&self.utilities.to_source());
        for g in &self.agent_games {
            s.push_str(&g.to_source());
        }
        for g in &self.games {
            s.push_str(&g.to_source());
        }
        s
    }
}
