//! Line-oriented N-Quads subset used for exports, archives and the store log.
//!
//! Every statement is `<s> <p> <o> <c> .` where the object is either an
//! angle-bracketed IRI or a double-quoted literal carrying a `^^<datatype>`
//! suffix. Output is UTF-8 with LF line endings.

use std::fmt::Write as _;

use super::{Datatype, Iri, Literal, Quad, StoreError, Term};

pub fn write_quad(out: &mut String, quad: &Quad) {
    let _ = write!(out, "<{}> <{}> ", quad.subject, quad.predicate);
    write_term(out, &quad.object);
    let _ = writeln!(out, " <{}> .", quad.context);
}

pub fn quad_to_line(quad: &Quad) -> String {
    let mut line = String::new();
    write_quad(&mut line, quad);
    line.pop();
    line
}

fn write_term(out: &mut String, term: &Term) {
    match term {
        Term::Iri(iri) => {
            let _ = write!(out, "<{iri}>");
        }
        Term::Literal(lit) => {
            out.push('"');
            for c in lit.lexical().chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\r' => out.push_str("\\r"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            let _ = write!(out, "\"^^<{}>", lit.datatype().iri());
        }
    }
}

pub fn serialize<'a>(quads: impl IntoIterator<Item = &'a Quad>) -> String {
    let mut out = String::new();
    for quad in quads {
        write_quad(&mut out, quad);
    }
    out
}

/// Parses a document, skipping blank lines and `#` comments.
pub fn parse_document(text: &str) -> Result<Vec<Quad>, StoreError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| {
            let t = line.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(idx, line)| {
            parse_line(line).map_err(|reason| StoreError::Parse {
                line: idx + 1,
                reason,
            })
        })
        .collect()
}

pub fn parse_line(line: &str) -> Result<Quad, String> {
    let mut cursor = Cursor { rest: line.trim() };
    let subject = cursor.iri()?;
    let predicate = cursor.iri()?;
    let object = cursor.term()?;
    let context = cursor.iri()?;
    cursor.skip_ws();
    if cursor.rest != "." {
        return Err(format!("expected terminating '.', found {:?}", cursor.rest));
    }
    Ok(Quad::new(subject, predicate, object, context))
}

struct Cursor<'a> {
    rest: &'a str,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn iri(&mut self) -> Result<Iri, String> {
        self.skip_ws();
        let body = self
            .rest
            .strip_prefix('<')
            .ok_or_else(|| format!("expected '<' at {:?}", self.rest))?;
        let end = body.find('>').ok_or("unterminated IRI")?;
        let iri = Iri::new(&body[..end]).map_err(|e| e.to_string())?;
        self.rest = &body[end + 1..];
        Ok(iri)
    }

    fn term(&mut self) -> Result<Term, String> {
        self.skip_ws();
        if self.rest.starts_with('<') {
            return self.iri().map(Term::Iri);
        }
        let body = self
            .rest
            .strip_prefix('"')
            .ok_or_else(|| format!("expected IRI or literal at {:?}", self.rest))?;
        let mut lexical = String::new();
        let mut chars = body.char_indices();
        let end = loop {
            match chars.next() {
                None => return Err("unterminated literal".into()),
                Some((i, '"')) => break i,
                Some((_, '\\')) => match chars.next() {
                    Some((_, 'n')) => lexical.push('\n'),
                    Some((_, 'r')) => lexical.push('\r'),
                    Some((_, 't')) => lexical.push('\t'),
                    Some((_, '"')) => lexical.push('"'),
                    Some((_, '\\')) => lexical.push('\\'),
                    other => return Err(format!("bad escape {other:?}")),
                },
                Some((_, c)) => lexical.push(c),
            }
        };
        self.rest = &body[end + 1..];
        let datatype = match self.rest.strip_prefix("^^") {
            Some(after) => {
                self.rest = after;
                let dt = self.iri()?;
                Datatype::from_iri(dt.as_str())
                    .ok_or_else(|| format!("unsupported datatype {dt}"))?
            }
            None => Datatype::String,
        };
        Literal::new(lexical, datatype)
            .map(Term::Literal)
            .map_err(|e| e.to_string())
    }
}
