//! Graphviz rendering: one cluster per level, an edge from each bond to each
//! of its members.

use std::fmt::Write;

use crate::collection::Id;
use crate::kernel::Hyperstructure;

fn quoted(id: &Id) -> String {
    let mut out = String::with_capacity(id.as_str().len() + 2);
    out.push('"');
    for c in id.as_str().chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn export_dot(h: &Hyperstructure) -> String {
    let mut out = String::from("digraph hyperstructure {\n  rankdir=BT;\n");
    let _ = writeln!(out, "  subgraph cluster_x0 {{\n    label=\"X0\";");
    for object in h.objects() {
        let _ = writeln!(out, "    {} [shape=circle];", quoted(object));
    }
    out.push_str("  }\n");
    for level in 0..h.order() {
        let _ = writeln!(out, "  subgraph cluster_x{} {{\n    label=\"X{}\";", level + 1, level + 1);
        for bond in h.bonds_at(level) {
            let style = if bond.is_identity { ", style=dashed" } else { "" };
            let _ = writeln!(out, "    {} [shape=box{style}];", quoted(&bond.id));
        }
        out.push_str("  }\n");
    }
    for level in 0..h.order() {
        for bond in h.bonds_at(level) {
            let style = if bond.is_identity { " [style=dashed]" } else { "" };
            for member in bond.members() {
                let _ = writeln!(out, "  {} -> {}{style};", quoted(&bond.id), quoted(&member));
            }
        }
    }
    out.push_str("}\n");
    out
}
