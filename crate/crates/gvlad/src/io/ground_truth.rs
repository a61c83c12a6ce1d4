//! Ground-truth file: one line per query,
//! `<query-id> relevant: <id> ... [ignore: <id> ...]`.
//! Blank lines and lines starting with `#` are skipped.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::retrieval::{GroundTruth, QueryTruth};

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(path)?;
    parse_ground_truth(&text)
}

pub fn parse_ground_truth(text: &str) -> Result<GroundTruth> {
    let mut queries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let query_id = tokens
            .next()
            .ok_or_else(|| Error::Validation(format!("line {}: missing query id", lineno + 1)))?
            .to_string();
        if tokens.next() != Some("relevant:") {
            return Err(Error::Validation(format!(
                "line {}: expected 'relevant:' after query id",
                lineno + 1
            )));
        }
        let mut relevant = HashSet::new();
        let mut ignore = HashSet::new();
        let mut in_ignore = false;
        for token in tokens {
            if token == "ignore:" {
                if in_ignore {
                    return Err(Error::Validation(format!(
                        "line {}: repeated 'ignore:'",
                        lineno + 1
                    )));
                }
                in_ignore = true;
                continue;
            }
            if in_ignore {
                ignore.insert(token.to_string());
            } else {
                relevant.insert(token.to_string());
            }
        }
        if relevant.is_empty() {
            return Err(Error::Validation(format!(
                "line {}: query {query_id} has no relevant images",
                lineno + 1
            )));
        }
        queries.push(QueryTruth {
            query_id,
            relevant,
            ignore,
        });
    }
    GroundTruth::new(queries)
}

pub fn write_ground_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut out = String::new();
    for q in truth.iter() {
        out.push_str(&q.query_id);
        out.push_str(" relevant:");
        let mut relevant: Vec<&String> = q.relevant.iter().collect();
        relevant.sort();
        for id in relevant {
            out.push(' ');
            out.push_str(id);
        }
        if !q.ignore.is_empty() {
            out.push_str(" ignore:");
            let mut ignore: Vec<&String> = q.ignore.iter().collect();
            ignore.sort();
            for id in ignore {
                out.push(' ');
                out.push_str(id);
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
