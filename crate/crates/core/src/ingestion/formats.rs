//! Source file readers. Each yields rows of verbatim cell strings keyed by
//! column name.

use std::collections::BTreeMap;

use quick_xml::events::Event;
use quick_xml::Reader;

use super::{IngestError, OriginalFormat};

pub type Row = BTreeMap<String, String>;

fn parse_error(row: usize, column: Option<&str>, reason: impl Into<String>) -> IngestError {
    IngestError::Parse {
        row,
        column: column.map(str::to_string),
        reason: reason.into(),
    }
}

pub fn read_rows(format: OriginalFormat, text: &str) -> Result<Vec<Row>, IngestError> {
    match format {
        OriginalFormat::Csv => read_csv(text),
        OriginalFormat::Xml => read_xml(text),
        OriginalFormat::Kmz => read_polylines(text),
        OriginalFormat::Feed => read_feed(text),
    }
}

/// Header-first CSV. The delimiter is `;` when the header has more
/// semicolons than commas. Rows are numbered from 1 after the header.
pub fn read_csv(text: &str) -> Result<Vec<Row>, IngestError> {
    let header = text.lines().next().unwrap_or("");
    let delimiter = if header.matches(';').count() > header.matches(',').count() {
        b';'
    } else {
        b','
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(text.as_bytes());
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| parse_error(0, None, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if let Some(dup) = columns.iter().enumerate().find(|(i, c)| columns[..*i].contains(c)) {
        return Err(parse_error(0, Some(dup.1), "duplicate column"));
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row_no = idx + 1;
        let record = record.map_err(|e| parse_error(row_no, None, e.to_string()))?;
        if record.len() != columns.len() {
            return Err(parse_error(
                row_no,
                None,
                format!("expected {} columns, found {}", columns.len(), record.len()),
            ));
        }
        rows.push(columns.iter().cloned().zip(record.iter().map(str::to_string)).collect());
    }
    Ok(rows)
}

/// Every child element of the document root is a record; its attributes
/// and the text of its child elements are the cells.
pub fn read_xml(text: &str) -> Result<Vec<Row>, IngestError> {
    let mut reader = Reader::from_str(text);
    let mut rows = Vec::new();
    let mut depth = 0usize;
    let mut current: Option<Row> = None;
    let mut field: Option<(String, String)> = None;
    let err = |rows: &Vec<Row>, reason: String| parse_error(rows.len() + 1, None, reason);
    loop {
        let event = reader.read_event().map_err(|e| err(&rows, e.to_string()))?;
        match event {
            Event::Start(e) => {
                depth += 1;
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                match depth {
                    2 => {
                        let mut row = Row::new();
                        for a in e.attributes() {
                            let a = a.map_err(|e| err(&rows, e.to_string()))?;
                            let key = String::from_utf8_lossy(a.key.local_name().as_ref()).into_owned();
                            let value = a.unescape_value().map_err(|e| err(&rows, e.to_string()))?;
                            row.insert(key, value.into_owned());
                        }
                        current = Some(row);
                    }
                    3 => field = Some((name, String::new())),
                    _ if depth > 3 => return Err(err(&rows, format!("nested element <{name}> inside a field"))),
                    _ => {}
                }
            }
            Event::Empty(e) if depth == 2 => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                if let Some(row) = current.as_mut() {
                    row.insert(name, String::new());
                }
            }
            Event::Empty(e) if depth == 1 => {
                let mut row = Row::new();
                for a in e.attributes() {
                    let a = a.map_err(|e| err(&rows, e.to_string()))?;
                    let key = String::from_utf8_lossy(a.key.local_name().as_ref()).into_owned();
                    row.insert(key, a.unescape_value().map_err(|e| err(&rows, e.to_string()))?.into_owned());
                }
                rows.push(row);
            }
            Event::Text(t) if depth == 3 => {
                if let Some((_, value)) = field.as_mut() {
                    value.push_str(&t.unescape().map_err(|e| err(&rows, e.to_string()))?);
                }
            }
            Event::CData(t) if depth == 3 => {
                if let Some((_, value)) = field.as_mut() {
                    value.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::End(_) => {
                match depth {
                    3 => {
                        if let (Some((name, value)), Some(row)) = (field.take(), current.as_mut()) {
                            if row.insert(name.clone(), value).is_some() {
                                return Err(parse_error(rows.len() + 1, Some(&name), "repeated field"));
                            }
                        }
                    }
                    2 => rows.extend(current.take()),
                    _ => {}
                }
                depth = depth.saturating_sub(1);
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if depth != 0 {
        return Err(err(&rows, "unexpected end of document".into()));
    }
    Ok(rows)
}

/// Polyline text: a `# <element id>` line opens an element, then one
/// `lon,lat` pair per line. Each pair of consecutive points yields a
/// segment row with columns `element`, `seq`, `fromLon`, `fromLat`,
/// `toLon`, `toLat`.
pub fn read_polylines(text: &str) -> Result<Vec<Row>, IngestError> {
    let mut rows = Vec::new();
    let mut element: Option<String> = None;
    let mut previous: Option<(String, String)> = None;
    let mut seq = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(id) = trimmed.strip_prefix('#') {
            let id = id.trim();
            if id.is_empty() {
                return Err(parse_error(line_no, Some("element"), "empty element id"));
            }
            element = Some(id.to_string());
            previous = None;
            seq = 0;
            continue;
        }
        let Some(id) = element.as_ref() else {
            return Err(parse_error(line_no, None, "coordinates before any element header"));
        };
        let (lon, lat) = trimmed
            .split_once(',')
            .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
            .ok_or_else(|| parse_error(line_no, None, format!("expected lon,lat, found {trimmed:?}")))?;
        for (name, v, limit) in [("lon", &lon, 180.0), ("lat", &lat, 90.0)] {
            match v.parse::<f64>() {
                Ok(x) if x.is_finite() && x.abs() <= limit => {}
                _ => return Err(parse_error(line_no, Some(name), format!("bad coordinate {v:?}"))),
            }
        }
        if let Some((from_lon, from_lat)) = previous.take() {
            seq += 1;
            rows.push(
                [
                    ("element", id.clone()),
                    ("seq", seq.to_string()),
                    ("fromLon", from_lon),
                    ("fromLat", from_lat),
                    ("toLon", lon.clone()),
                    ("toLat", lat.clone()),
                ]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            );
        }
        previous = Some((lon, lat));
    }
    Ok(rows)
}

/// A JSON array of flat objects. Scalars become their JSON text (strings
/// unquoted); nulls are omitted.
pub fn read_feed(text: &str) -> Result<Vec<Row>, IngestError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_error(e.line(), None, e.to_string()))?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        other @ serde_json::Value::Object(_) => vec![other],
        _ => return Err(parse_error(0, None, "expected an array of objects")),
    };
    items
        .into_iter()
        .enumerate()
        .map(|(idx, item)| {
            let serde_json::Value::Object(obj) = item else {
                return Err(parse_error(idx + 1, None, "record is not an object"));
            };
            let mut row = Row::new();
            for (k, v) in obj {
                let cell = match v {
                    serde_json::Value::Null => continue,
                    serde_json::Value::String(s) => s,
                    serde_json::Value::Number(n) => n.to_string(),
                    serde_json::Value::Bool(b) => b.to_string(),
                    _ => return Err(parse_error(idx + 1, Some(&k), "nested value")),
                };
                row.insert(k, cell);
            }
            Ok(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_keeps_cells_verbatim_and_names_bad_rows() {
        let rows = read_csv("ID;NOME;CAP\n1; Bar Roma ;50122\n2;\"A;B\";5014\n").unwrap();
        assert_eq!(rows[0]["NOME"], " Bar Roma ");
        assert_eq!(rows[1]["NOME"], "A;B");
        let err = read_csv("A,B\n1,2\n3\n").unwrap_err();
        assert!(matches!(err, IngestError::Parse { row: 2, .. }), "{err}");
    }

    #[test]
    fn xml_records_are_root_children() {
        let rows = read_xml("<rows><row id=\"1\"><name>Caff&amp;e</name><cap/></row><row id=\"2\"><name>B</name></row></rows>")
            .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0]["name"], "Caff&e");
        assert_eq!(rows[0]["id"], "1");
        assert_eq!(rows[0]["cap"], "");
        assert!(read_xml("<rows><row><a>1</a>").is_err());
    }

    #[test]
    fn polylines_become_segments() {
        let rows = read_polylines("# e1\n11.25,43.77\n11.26,43.78\n11.27,43.79\n# e2\n11.0,43.0\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1]["seq"], "2");
        assert_eq!(rows[1]["fromLon"], "11.26");
        assert!(read_polylines("11,43\n").is_err());
        assert!(read_polylines("# e\n200,43\n").is_err());
    }

    #[test]
    fn feed_objects_flatten() {
        let rows = read_feed(r#"[{"id":"a","free":120,"ok":true,"x":null}]"#).unwrap();
        assert_eq!(rows[0]["free"], "120");
        assert!(!rows[0].contains_key("x"));
        assert!(read_feed(r#"[{"a":{"b":1}}]"#).is_err());
    }
}
