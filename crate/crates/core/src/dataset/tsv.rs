// SPDX-License-Identifier: MIT OR Apache-2.0

//! Tab-separated corpus files.
//!
//! Each row is `nominative<TAB>genitive[<TAB>annotation]` where the
//! annotation is `grad=n` or `grad=y;kind=…;cons=…;dir=…`. Lines starting
//! with `#` are header comments. Annotated rows are re-analysed with the
//! rule engine and must agree with it.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rules::{classify_pair, Annotation, Consonant, Direction, Kind};

use super::InflectionExample;

struct Label {
    gradating: bool,
    kind: Option<Kind>,
    consonant: Option<Consonant>,
    direction: Option<Direction>,
}

fn parse_label(field: &str) -> std::result::Result<Label, String> {
    let mut label = Label { gradating: false, kind: None, consonant: None, direction: None };
    let mut seen_grad = false;
    for pair in field.split(';') {
        let (key, value) = pair.split_once('=').ok_or_else(|| format!("annotation field {pair:?} is not key=value"))?;
        match key {
            "grad" => {
                seen_grad = true;
                label.gradating = match value {
                    "y" => true,
                    "n" => false,
                    other => return Err(format!("grad must be y or n, found {other:?}")),
                }
            }
            "kind" => label.kind = Some(value.parse()?),
            "cons" => label.consonant = Some(value.parse()?),
            "dir" => label.direction = Some(value.parse()?),
            other => return Err(format!("unknown annotation key {other:?}")),
        }
    }
    if !seen_grad {
        return Err("annotation lacks grad=".into());
    }
    if label.gradating && (label.kind.is_none() || label.consonant.is_none() || label.direction.is_none()) {
        return Err("gradating annotation needs kind, cons and dir".into());
    }
    if !label.gradating && (label.kind.is_some() || label.consonant.is_some() || label.direction.is_some()) {
        return Err("non-gradating annotation carries gradation fields".into());
    }
    Ok(label)
}

fn resolve(nom: &str, gen: &str, label: &Label) -> std::result::Result<Annotation, String> {
    let analysis = classify_pair(nom, gen).map_err(|e| e.to_string())?;
    match (label.gradating, analysis.event) {
        (false, None) => Ok(analysis),
        (true, Some(ev)) => {
            let rule = ev.rule();
            if Some(rule.kind) == label.kind && Some(rule.consonant) == label.consonant && Some(ev.direction) == label.direction {
                Ok(analysis)
            } else {
                Err(format!("annotation disagrees with rule analysis ({})", ev.pattern))
            }
        }
        (true, None) => Err("annotated as gradating but the rules find no alternation".into()),
        (false, Some(ev)) => Err(format!("annotated as non-gradating but the rules find {}", ev.pattern)),
    }
}

fn annotation_field(annotation: &Annotation) -> String {
    match &annotation.event {
        None => "grad=n".to_string(),
        Some(ev) => format!("grad=y;kind={};cons={};dir={}", ev.kind(), ev.consonant(), ev.direction),
    }
}

/// Parse TSV text. Line numbers in errors are 1-based.
pub fn parse_tsv(text: &str) -> Result<Vec<InflectionExample>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let bad = |reason: String| Error::MalformedRow { line: line_no, reason };
        let fields: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(bad(format!("expected 2 or 3 tab-separated fields, found {}", fields.len())));
        }
        let (nom, gen) = (fields[0], fields[1]);
        if nom.is_empty() || gen.is_empty() {
            return Err(bad("empty word form".into()));
        }
        let annotation = match fields.get(2) {
            None => None,
            Some(field) => {
                let label = parse_label(field).map_err(bad)?;
                Some(resolve(nom, gen, &label).map_err(bad)?)
            }
        };
        out.push(InflectionExample { nominative: nom.to_string(), genitive: gen.to_string(), annotation });
    }
    if out.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(out)
}

/// Normalized TSV text (no header, `\n` line endings).
pub fn to_tsv(examples: &[InflectionExample]) -> String {
    let mut out = String::new();
    for e in examples {
        out.push_str(&e.nominative);
        out.push('\t');
        out.push_str(&e.genitive);
        if let Some(a) = &e.annotation {
            out.push('\t');
            out.push_str(&annotation_field(a));
        }
        out.push('\n');
    }
    out
}

pub fn load_tsv(path: impl AsRef<Path>) -> Result<Vec<InflectionExample>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tsv(&text)
}

pub fn save_tsv(examples: &[InflectionExample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_tsv(examples)).map_err(|e| Error::io(path, e))
}

/// Write with `# key=value` header lines (e.g. the generating seed).
pub fn save_tsv_with_header(examples: &[InflectionExample], header: &[(String, String)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for (k, v) in header {
        text.push_str(&format!("# {k}={v}\n"));
    }
    text.push_str(&to_tsv(examples));
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
