use std::fmt;
use std::path::{Path, PathBuf};

use reflax::dsl::{parse_document_bytes, Document, ParseError};
use reflax::machine::OracleAssignment;

#[derive(Debug)]
pub enum CliError {
    Io(PathBuf, std::io::Error),
    Parse(PathBuf, ParseError),
    /// Input that parses but cannot be processed.
    Precondition(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(p, e) => write!(f, "error: {}: {e}", p.display()),
            CliError::Parse(p, e) => {
                for (i, d) in e.diagnostics.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{}:{d}", p.display())?;
                }
                Ok(())
            }
            CliError::Precondition(m) => write!(f, "error: {m}"),
        }
    }
}

fn merge(into: &mut Document, doc: Document, path: &Path) -> Result<(), CliError> {
    let clash = |e: reflax::Error| CliError::Precondition(format!("{}: {e}", path.display()));
    into.registry.extend(doc.registry).map_err(clash)?;
    for q in doc.queries.iter() {
        into.queries.push(q.clone()).map_err(clash)?;
    }
    if !doc.assignment.is_empty() {
        let mut queries = into.assignment.queries().clone();
        let mut probs = into.assignment.probs().to_vec();
        for (q, x) in doc.assignment.queries().iter().zip(doc.assignment.probs()) {
            queries.push(q.clone()).map_err(clash)?;
            probs.push(x.clone());
        }
        into.assignment = OracleAssignment::new(queries, probs).map_err(clash)?;
    }
    if let Some(w) = doc.world {
        if into.world.replace(w).is_some() {
            return Err(CliError::Precondition(format!(
                "{}: world declared twice",
                path.display()
            )));
        }
    }
    for (l, u) in doc.utilities.iter() {
        into.utilities.insert(l, u.clone()).map_err(clash)?;
    }
    into.agent_games.extend(doc.agent_games);
    into.games.extend(doc.games);
    Ok(())
}

/// Parses every distinct path and merges the documents in order.
pub fn load(paths: &[PathBuf]) -> Result<Document, CliError> {
    let mut doc = Document::default();
    let mut seen: Vec<&PathBuf> = Vec::new();
    for p in paths {
        if seen.contains(&p) {
            continue;
        }
        seen.push(p);
        let bytes = std::fs::read(p).map_err(|e| CliError::Io(p.clone(), e))?;
        let d = parse_document_bytes(&bytes).map_err(|e| CliError::Parse(p.clone(), e))?;
        merge(&mut doc, d, p)?;
    }
    Ok(doc)
}
