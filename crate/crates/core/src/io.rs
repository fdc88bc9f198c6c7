//! File formats: graph JSON, trajectory CSV, and mass vector input.
//!
//! Graph files look like
//!
//! ```json
//! {"n": 3, "influence": [[0,1],[1,2]], "interaction": "global", "names": ["a","b","c"]}
//! ```
//!
//! where `interaction` is `"global"`, `"local"` or an explicit edge list.
//! Trajectory files are CSV with header `t,x0,…,x{n-1}` (or the type names),
//! one row per recorded step, values printed with 15 significant digits.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Interaction, MassVector, TypeGraph, Variant, MASS_SUM_TOL};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum InteractionSpec {
    Named(String),
    Edges(Vec<[usize; 2]>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    n: usize,
    influence: Vec<[usize; 2]>,
    interaction: InteractionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    names: Option<Vec<String>>,
}

/// A parsed graph file.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDoc {
    pub graph: TypeGraph,
    pub names: Option<Vec<String>>,
}

pub fn graph_from_json(text: &str) -> Result<GraphDoc> {
    let file: GraphFile = serde_json::from_str(text)?;
    let influence: Vec<(usize, usize)> = file.influence.iter().map(|[u, v]| (*u, *v)).collect();
    let interaction = match file.interaction {
        InteractionSpec::Named(s) if s == "global" => Interaction::Global,
        InteractionSpec::Named(s) if s == "local" => Interaction::Local,
        InteractionSpec::Named(s) => {
            return Err(Error::Parse(format!(
                "interaction must be \"global\", \"local\" or an edge list, got \"{s}\""
            )))
        }
        InteractionSpec::Edges(e) => Interaction::Explicit(e.iter().map(|[u, v]| (*u, *v)).collect()),
    };
    let graph = TypeGraph::new(file.n, &influence, interaction)?;
    if let Some(names) = &file.names {
        if names.len() != file.n {
            return Err(Error::Parse(format!(
                "names has {} entries, expected {}",
                names.len(),
                file.n
            )));
        }
    }
    Ok(GraphDoc {
        graph,
        names: file.names,
    })
}

/// Reads and validates a graph file.
pub fn read_graph_file(path: &Path) -> Result<GraphDoc> {
    graph_from_json(&std::fs::read_to_string(path)?)
}

pub fn parse_graph(path: &Path) -> Result<TypeGraph> {
    read_graph_file(path).map(|d| d.graph)
}

pub fn graph_to_json(g: &TypeGraph, names: Option<&[String]>) -> String {
    let pairs = |it: &mut dyn Iterator<Item = (usize, usize)>| it.map(|(u, v)| [u, v]).collect::<Vec<_>>();
    let interaction = match g.variant() {
        Variant::Global => InteractionSpec::Named("global".into()),
        Variant::Local => InteractionSpec::Named("local".into()),
        Variant::General => InteractionSpec::Edges(pairs(&mut g.interaction_edges())),
    };
    let file = GraphFile {
        n: g.n(),
        influence: pairs(&mut g.influence_edges()),
        interaction,
        names: names.map(<[String]>::to_vec),
    };
    serde_json::to_string(&file).expect("graph file serializes")
}

/// Formats `v` like C's `%.15g`.
pub fn fmt_sig15(v: f64) -> String {
    const DIGITS: i32 = 15;
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..DIGITS).contains(&exp) {
        trim(&format!("{:.*}", (DIGITS - 1 - exp) as usize, v))
    } else {
        format!("{}e{}", trim(mantissa), exp)
    }
}

/// Parsed trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    /// Column names after `t`.
    pub columns: Vec<String>,
    pub times: Vec<u64>,
    pub rows: Vec<Vec<f64>>,
}

impl TrajectoryTable {
    /// Every `stride`-th state plus the final one.
    pub fn from_states(states: &[MassVector], names: Option<&[String]>, stride: usize) -> Self {
        let n = states.first().map_or(0, MassVector::len);
        let columns = match names {
            Some(ns) => ns.to_vec(),
            None => (0..n).map(|i| format!("x{i}")).collect(),
        };
        let stride = stride.max(1);
        let last = states.len().saturating_sub(1);
        let (times, rows) = states
            .iter()
            .enumerate()
            .filter(|(t, _)| t % stride == 0 || *t == last)
            .map(|(t, x)| (t as u64, x.as_slice().to_vec()))
            .unzip();
        Self { columns, times, rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain(self.columns.iter().map(|c| csv_field(c)))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.rows) {
            out.push_str(&t.to_string());
            for v in row {
                out.push(',');
                out.push_str(&fmt_sig15(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        if header.get(0) != Some("t") || header.len() < 2 {
            return Err(Error::Parse("header must be t followed by one column per type".into()));
        }
        let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut times: Vec<u64> = Vec::new();
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let row_no = i + 1;
            if rec.len() != header.len() {
                return Err(Error::ColumnMismatch {
                    row: row_no,
                    expected: header.len(),
                    found: rec.len(),
                });
            }
            let t: u64 = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {row_no}: bad time '{}'", &rec[0])))?;
            match times.last() {
                None if t != 0 => return Err(Error::Parse(format!("row {row_no}: first time must be 0, got {t}"))),
                Some(&prev) if t <= prev => {
                    return Err(Error::Parse(format!("row {row_no}: time {t} does not increase")))
                }
                _ => {}
            }
            let vals = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("row {row_no}: bad value '{s}'")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let sum: f64 = vals.iter().sum();
            if (sum - 1.0).abs() > MASS_SUM_TOL {
                return Err(Error::Parse(format!("row {row_no}: masses sum to {sum}")));
            }
            times.push(t);
            rows.push(vals);
        }
        Ok(Self { columns, times, rows })
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Flow log as CSV: one row per step, one column per edge `u-v` holding `f_{u→v}`.
pub fn flows_to_csv(g: &TypeGraph, flows: &[crate::model::FlowField]) -> String {
    let mut out = String::from("t");
    for (u, v) in g.influence_edges() {
        out.push_str(&format!(",{u}-{v}"));
    }
    out.push('\n');
    for (t, ff) in flows.iter().enumerate() {
        out.push_str(&t.to_string());
        for (_, f) in ff.iter() {
            out.push(',');
            out.push_str(&fmt_sig15(f));
        }
        out.push('\n');
    }
    out
}

fn parse_real(token: &str) -> Result<f64> {
    let token = token.trim();
    let bad = || Error::Parse(format!("cannot parse mass '{token}'"));
    if let Some((num, den)) = token.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| bad())?;
        let den: i64 = den.trim().parse().map_err(|_| bad())?;
        if den <= 0 {
            return Err(bad());
        }
        // Both parts are exact integers, so the quotient is rounded once.
        if num.unsigned_abs() > (1 << 53) || den > (1 << 53) {
            return Err(Error::Parse(format!("fraction '{token}' exceeds exact integer range")));
        }
        Ok(num as f64 / den as f64)
    } else {
        token.parse::<f64>().map_err(|_| bad())
    }
}

/// Mass input: comma-separated reals or fractions (`2/5,1/5,2/5`), or the
/// path of a JSON array file whose entries are numbers or fraction strings.
pub fn parse_masses(spec: &str) -> Result<Vec<f64>> {
    let path = Path::new(spec);
    if path.is_file() {
        let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let items = value
            .as_array()
            .ok_or_else(|| Error::Parse("mass file must hold a JSON array".into()))?;
        return items
            .iter()
            .map(|v| match v {
                serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse(format!("bad number {n}"))),
                serde_json::Value::String(s) => parse_real(s),
                other => Err(Error::Parse(format!("unexpected mass entry {other}"))),
            })
            .collect();
    }
    spec.split(',').map(parse_real).collect()
}

pub fn read_masses(spec: &str, g: &TypeGraph) -> Result<MassVector> {
    MassVector::for_graph(parse_masses(spec)?, g)
}

/// Writes via a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_path_topologies() {
        let g = graph_from_json(r#"{"n":3,"influence":[[0,1],[1,2]],"interaction":"global"}"#)
            .unwrap()
            .graph;
        assert_eq!((g.n(), g.variant(), g.influence_edge_count()), (3, Variant::Global, 2));
        let g = graph_from_json(r#"{"n":3,"influence":[[0,1],[1,2]],"interaction":"local"}"#)
            .unwrap()
            .graph;
        assert_eq!(g.variant(), Variant::Local);
        let doc = graph_from_json(r#"{"n":2,"influence":[[0,1]],"interaction":[[0,1]],"names":["en","fr"]}"#).unwrap();
        assert_eq!(doc.graph.variant(), Variant::General);
        assert_eq!(doc.names.unwrap(), vec!["en", "fr"]);
    }

    #[test]
    fn graph_errors_name_the_offender() {
        let e = graph_from_json(r#"{"n":3,"influence":[[0,1],[1,2]],"interaction":[[0,1]]}"#).unwrap_err();
        assert!(e.to_string().contains("influence not subset of interaction"), "{e}");
        assert!(e.to_string().contains("(1,2)"));
        let e = graph_from_json(r#"{"n":3,"influence":[[1,1]],"interaction":"local"}"#).unwrap_err();
        assert!(e.to_string().contains("self-loop at node 1"), "{e}");
        let e = graph_from_json(r#"{"n":3,"influence":[[0,3]],"interaction":"local"}"#).unwrap_err();
        assert!(e.to_string().contains("(0,3)"), "{e}");
        let e = graph_from_json(r#"{"n":3,"influence":[[0,1]"#).unwrap_err();
        assert!(e.to_string().starts_with("malformed JSON"), "{e}");
        let e = graph_from_json(r#"{"n":3,"influence":[],"interaction":"sideways"}"#).unwrap_err();
        assert!(e.to_string().contains("sideways"), "{e}");
        let e = graph_from_json(r#"{"n":2,"influence":[],"interaction":"local","names":["a"]}"#).unwrap_err();
        assert!(e.to_string().contains("names"), "{e}");
    }

    #[test]
    fn sig15_formatting() {
        assert_eq!(fmt_sig15(0.0), "0");
        assert_eq!(fmt_sig15(0.5), "0.5");
        assert_eq!(fmt_sig15(1.0), "1");
        assert_eq!(fmt_sig15(43.0 / 105.0), "0.40952380952381");
        assert_eq!(fmt_sig15(1.0 / 3.0), "0.333333333333333");
        assert_eq!(fmt_sig15(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig15(2.0 / 3.0 * 1e-20), "6.66666666666667e-21");
        assert_eq!(fmt_sig15(0.9999999999999999), "1");
    }

    #[test]
    fn fractions_and_reals() {
        assert_eq!(parse_masses("2/5, 1/5,2/5").unwrap(), vec![0.4, 0.2, 0.4]);
        assert_eq!(parse_masses("0.5,0,0,0.5").unwrap(), vec![0.5, 0.0, 0.0, 0.5]);
        assert!(parse_masses("1/0").is_err());
        assert!(parse_masses("a,b").is_err());
    }

    #[test]
    fn trajectory_validation() {
        assert!(TrajectoryTable::from_csv("t,x0,x1\n0,0.5,0.5\n1,0.25,0.75\n").is_ok());
        assert!(matches!(
            TrajectoryTable::from_csv("t,x0,x1\n0,0.5,0.5\n1,0.5\n"),
            Err(Error::ColumnMismatch {
                row: 2,
                expected: 3,
                found: 2
            })
        ));
        assert!(TrajectoryTable::from_csv("t,x0,x1\n0,0.5,0.5\n0,0.5,0.5\n").is_err());
        assert!(TrajectoryTable::from_csv("t,x0,x1\n1,0.5,0.5\n").is_err());
        assert!(TrajectoryTable::from_csv("t,x0,x1\n0,0.5,0.6\n").is_err());
    }

    #[test]
    fn named_columns_are_quoted() {
        let states = vec![MassVector::uniform(2)];
        let names = vec!["a,b".to_string(), "c".to_string()];
        let table = TrajectoryTable::from_states(&states, Some(&names), 1);
        let csv = table.to_csv();
        assert!(csv.starts_with("t,\"a,b\",c\n"));
        assert_eq!(TrajectoryTable::from_csv(&csv).unwrap().columns, names);
    }

    #[test]
    fn stride_keeps_last_state() {
        let states: Vec<_> = (0..6).map(|_| MassVector::uniform(2)).collect();
        let table = TrajectoryTable::from_states(&states, None, 2);
        assert_eq!(table.times, vec![0, 2, 4, 5]);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"first").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "second");
    }
}
