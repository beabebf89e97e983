//! File formats: CSV instance directories, circuit JSON and run reports.
//!
//! An instance directory holds one `NAME.csv` per relation; the relation is
//! named after the file stem, upper-cased. Header cells are column names
//! with an optional `:int` or `:str` suffix (`:str`, the default, stores
//! the cell as an uninterpreted symbol). An optional `manifest.toml` sets
//! key columns and types of unsuffixed columns:
//!
//! ```toml
//! [COURSE]
//! key = "id"          # column name or 0-based index
//! types = { num_students = "int" }
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relation::{Attr, Constant, Database, Relation, Schema, Tuple};
use crate::translate::{Circuit, Gate, GateKind, TranslateError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}:{line}: expected {expected} fields, found {found}")]
    Ragged {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{path}: bad type suffix in header cell `{cell}`")]
    BadSuffix { path: PathBuf, cell: String },
    #[error("{path}:{line}: `{value}` is not an integer")]
    NotAnInteger {
        path: PathBuf,
        line: u64,
        value: String,
    },
    #[error("relation `{0}` is defined by more than one file")]
    DuplicateRelation(String),
    #[error("{path}: duplicate column `{column}`")]
    DuplicateColumn { path: PathBuf, column: String },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("column {column} of `{relation}` mixes integers and symbols")]
    MixedColumn { relation: String, column: usize },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("circuit: {0}")]
    Circuit(#[from] TranslateError),
}

type Result<T> = std::result::Result<T, IoError>;

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Int,
    Str,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum KeyRef {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableManifest {
    pub key: Option<KeyRef>,
    #[serde(default)]
    pub types: BTreeMap<String, ColumnType>,
}

/// Per-relation settings keyed by relation name (case-insensitive).
#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(transparent)]
pub struct Manifest(pub BTreeMap<String, TableManifest>);

impl Manifest {
    pub fn parse(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| IoError::Manifest(e.to_string()))
    }

    fn table(&self, relation: &str) -> Option<&TableManifest> {
        self.0
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(relation))
            .map(|(_, t)| t)
    }
}

fn split_header(path: &Path, cell: &str) -> Result<(String, Option<ColumnType>)> {
    let cell = cell.trim();
    let (name, ty) = match cell.rsplit_once(':') {
        Some((n, "int")) => (n, Some(ColumnType::Int)),
        Some((n, "str")) => (n, Some(ColumnType::Str)),
        Some(_) => {
            return Err(IoError::BadSuffix {
                path: path.to_path_buf(),
                cell: cell.to_string(),
            })
        }
        None => (cell, None),
    };
    if name.is_empty() {
        return Err(IoError::BadSuffix {
            path: path.to_path_buf(),
            cell: cell.to_string(),
        });
    }
    Ok((name.to_string(), ty))
}

/// Reads one relation; `name` qualifies its columns.
pub fn read_relation(path: &Path, name: &str, manifest: Option<&TableManifest>) -> Result<Relation> {
    let csv_err = |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    let mut names = Vec::new();
    let mut types = Vec::new();
    for cell in &header {
        let (col, ty) = split_header(path, cell)?;
        if names.contains(&col) {
            return Err(IoError::DuplicateColumn {
                path: path.to_path_buf(),
                column: col,
            });
        }
        let declared = manifest.and_then(|m| m.types.get(&col)).copied();
        let ty = match (ty, declared) {
            (Some(a), Some(b)) if a != b => {
                return Err(IoError::Manifest(format!(
                    "column `{col}` of `{name}` is declared both {a:?} and {b:?}"
                )))
            }
            (a, b) => a.or(b).unwrap_or(ColumnType::Str),
        };
        names.push(col);
        types.push(ty);
    }
    let mut tuples: Vec<Tuple> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() {
            return Err(IoError::Ragged {
                path: path.to_path_buf(),
                line,
                expected: names.len(),
                found: record.len(),
            });
        }
        let tuple = record
            .iter()
            .zip(&types)
            .map(|(cell, ty)| match ty {
                ColumnType::Str => Ok(Constant::sym(cell)),
                ColumnType::Int => cell.trim().parse::<i64>().map(Constant::Int).map_err(|_| {
                    IoError::NotAnInteger {
                        path: path.to_path_buf(),
                        line,
                        value: cell.to_string(),
                    }
                }),
            })
            .collect::<Result<Tuple>>()?;
        tuples.push(tuple);
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(Relation::from_tuples(Schema::named(Some(name), &refs), tuples).expect("rows have the header's width"))
}

/// Loads every `*.csv` file of `dir` plus the optional `manifest.toml`.
pub fn load_db(dir: &Path) -> Result<Database> {
    let file_err = |source| IoError::File {
        path: dir.to_path_buf(),
        source,
    };
    let manifest_path = dir.join("manifest.toml");
    let manifest = if manifest_path.is_file() {
        Manifest::parse(&read_file(&manifest_path)?)?
    } else {
        Manifest::default()
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(file_err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .map_err(file_err)?;
    files.retain(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")));
    files.sort();
    let mut relations = BTreeMap::new();
    for path in files {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let name = stem.to_uppercase();
        if relations.contains_key(&name) {
            return Err(IoError::DuplicateRelation(name));
        }
        let rel = read_relation(&path, &name, manifest.table(&name))?;
        relations.insert(name, rel);
    }
    for key in manifest.0.keys() {
        if !relations.keys().any(|r| r.eq_ignore_ascii_case(key)) {
            return Err(IoError::Manifest(format!("no relation `{key}`")));
        }
    }
    let mut keys = Vec::new();
    for (name, rel) in &relations {
        let Some(key) = manifest.table(name).and_then(|t| t.key.as_ref()) else {
            continue;
        };
        let col = match key {
            KeyRef::Index(i) if *i < rel.arity() => *i,
            KeyRef::Name(n) => rel
                .schema()
                .attrs()
                .iter()
                .position(|a| a.name.as_deref() == Some(n))
                .ok_or_else(|| IoError::Manifest(format!("`{name}` has no key column `{n}`")))?,
            KeyRef::Index(i) => {
                return Err(IoError::Manifest(format!("`{name}` has no column {i}")));
            }
        };
        keys.push((name.clone(), col));
    }
    let mut db = Database::from_relations(relations);
    for (name, col) in keys {
        db = db.with_key(&name, col);
    }
    Ok(db)
}

fn column_name(a: &Attr, i: usize) -> String {
    a.name.as_deref().map(str::to_string).unwrap_or_else(|| format!("c{}", i + 1))
}

/// Writes `rel` as CSV with typed headers, rows sorted.
pub fn write_relation(path: &Path, relation: &str, rel: &Relation) -> Result<()> {
    let rows = rel.sorted_owned();
    let mut header = Vec::new();
    for (i, a) in rel.schema().attrs().iter().enumerate() {
        let ints = rows.iter().filter(|t| matches!(t[i], Constant::Int(_))).count();
        let ty = match ints {
            0 => "str",
            n if n == rows.len() => "int",
            _ => {
                return Err(IoError::MixedColumn {
                    relation: relation.to_string(),
                    column: i,
                })
            }
        };
        header.push(format!("{}:{ty}", column_name(a, i)));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(&header).map_err(csv_err)?;
    for t in &rows {
        let cells: Vec<String> = t
            .iter()
            .map(|c| match c {
                Constant::Int(v) => v.to_string(),
                Constant::Text(s) | Constant::Sym(s) => s.to_string(),
            })
            .collect();
        w.write_record(&cells).map_err(csv_err)?;
    }
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    write_file(path, &String::from_utf8(bytes).expect("cells are UTF-8"))
}

/// Writes one CSV per relation plus a `manifest.toml` for declared keys.
pub fn save_db(db: &Database, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| IoError::File {
        path: dir.to_path_buf(),
        source,
    })?;
    for (name, rel) in db.relations() {
        write_relation(&dir.join(format!("{name}.csv")), name, rel)?;
    }
    if !db.declared_keys().is_empty() {
        let mut out = String::new();
        for (name, col) in db.declared_keys() {
            out.push_str(&format!("[{name}]\nkey = {col}\n\n"));
        }
        write_file(&dir.join("manifest.toml"), &out)?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitFile {
    n: usize,
    gates: Vec<(String, usize, usize)>,
}

/// Parses `{"n": 1, "gates": [["IN",0,0], ["AND",1,2]]}`.
pub fn parse_circuit(src: &str) -> Result<Circuit> {
    let file: CircuitFile = serde_json::from_str(src).map_err(|e| IoError::Json {
        path: PathBuf::from("<circuit>"),
        message: e.to_string(),
    })?;
    let gates = file
        .gates
        .iter()
        .map(|(k, b, c)| {
            Ok(Gate {
                kind: GateKind::parse(k)?,
                b: *b,
                c: *c,
            })
        })
        .collect::<std::result::Result<Vec<_>, TranslateError>>()?;
    Ok(Circuit::new(file.n, gates)?)
}

pub fn print_circuit(c: &Circuit) -> String {
    let file = CircuitFile {
        n: c.n(),
        gates: c
            .gates()
            .iter()
            .map(|g| (g.kind.name().to_string(), g.b, g.c))
            .collect(),
    };
    serde_json::to_string(&file).expect("circuits serialize")
}

pub fn load_circuit(path: &Path) -> Result<Circuit> {
    parse_circuit(&read_file(path)?).map_err(|e| match e {
        IoError::Json { message, .. } => IoError::Json {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportStats {
    pub solver: String,
    pub seed: u64,
    pub iterations: u64,
    pub restarts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

/// Outcome of one `solve` or `check` run. When `answer` is false both
/// `objective` and `returns` are empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub answer: bool,
    pub objective: Option<i64>,
    pub returns: BTreeMap<String, Vec<Vec<serde_json::Value>>>,
    pub stats: ReportStats,
}

impl RunReport {
    pub fn new(answer: bool, stats: ReportStats) -> Self {
        RunReport {
            schema: REPORT_SCHEMA,
            answer,
            objective: None,
            returns: BTreeMap::new(),
            stats,
        }
    }

    pub fn with_table(mut self, name: &str, rows: impl IntoIterator<Item = Tuple>) -> Self {
        let rows = rows
            .into_iter()
            .map(|t| t.iter().map(json_value).collect())
            .collect();
        self.returns.insert(name.to_string(), rows);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn json_value(c: &Constant) -> serde_json::Value {
    match c {
        Constant::Int(v) => serde_json::Value::from(*v),
        Constant::Text(s) | Constant::Sym(s) => serde_json::Value::from(&**s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn loads_typed_csv() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "nodes.csv", "n:int\n1\n2\n3\n4\n");
        write(dir.path(), "edges.csv", "f:int,t:int\n1,2\n1,4\n2,3\n");
        write(dir.path(), "colors.csv", "id,name\n1,red\n");
        let db = load_db(dir.path()).unwrap();
        assert_eq!(db.get("NODES").unwrap().len(), 4);
        assert_eq!(db.get("EDGES").unwrap().len(), 3);
        assert!(db.get("COLORS").unwrap().contains(&[Constant::sym("1"), Constant::sym("red")]));
        assert_eq!(db.dom().len(), 6);
    }

    #[test]
    fn empty_directory_is_empty_database() {
        let dir = tempfile::tempdir().unwrap();
        let db = load_db(dir.path()).unwrap();
        assert_eq!(db.relations().count(), 0);
        assert!(db.dom().is_empty());
    }

    #[test]
    fn reports_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "r.csv", "a:int,b:int\n1,2\n3\n");
        match load_db(dir.path()) {
            Err(e @ IoError::Ragged { line: 3, .. }) => assert!(e.to_string().contains("r.csv:3")),
            other => panic!("{other:?}"),
        }
        write(dir.path(), "r.csv", "a:float\n1\n");
        assert!(matches!(load_db(dir.path()), Err(IoError::BadSuffix { .. })));
        write(dir.path(), "r.csv", "a:int\nx\n");
        assert!(matches!(load_db(dir.path()), Err(IoError::NotAnInteger { .. })));
        write(dir.path(), "r.csv", "a\n1\n");
        write(dir.path(), "R.CSV", "a\n1\n");
        if fs::read_dir(dir.path()).unwrap().count() == 2 {
            assert!(matches!(load_db(dir.path()), Err(IoError::DuplicateRelation(_))));
        }
    }

    #[test]
    fn manifest_sets_keys_and_types() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "colors.csv", "name,id\nred,1\ngreen,2\n");
        write(dir.path(), "manifest.toml", "[colors]\nkey = \"id\"\ntypes = { id = \"int\" }\n");
        let db = load_db(dir.path()).unwrap();
        assert_eq!(db.key_column("COLORS"), 1);
        assert!(db.get("COLORS").unwrap().contains(&[Constant::sym("red"), Constant::Int(1)]));
        write(dir.path(), "manifest.toml", "[colors]\nkey = \"nope\"\n");
        assert!(matches!(load_db(dir.path()), Err(IoError::Manifest(_))));
        write(dir.path(), "manifest.toml", "[colors]\ntypes = { id = \"str\" }\n");
        write(dir.path(), "colors.csv", "name,id:int\nred,1\n");
        assert!(matches!(load_db(dir.path()), Err(IoError::Manifest(_))));
    }

    #[test]
    fn save_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", "x:int,y\n1,\"p, q\"\n-2,r\n");
        write(dir.path(), "b.csv", "z:int\n");
        write(dir.path(), "manifest.toml", "[A]\nkey = 1\n");
        let db = load_db(dir.path()).unwrap();
        let out = tempfile::tempdir().unwrap();
        save_db(&db, out.path()).unwrap();
        assert_eq!(load_db(out.path()).unwrap(), db);
    }

    #[test]
    fn circuit_json() {
        let c = parse_circuit(r#"{"n":1,"gates":[["IN",0,0],["IN",0,0],["AND",1,2]]}"#).unwrap();
        assert_eq!(c.gates().len(), 3);
        assert_eq!(parse_circuit(&print_circuit(&c)).unwrap(), c);
        assert!(parse_circuit(r#"{"n":1,"gates":[["IN",0,0],["AND",1,3],["IN",0,0]]}"#).is_err());
        assert!(parse_circuit(r#"{"n":1,"gates":[["XOR",0,0]]}"#).is_err());
    }

    #[test]
    fn report_shape() {
        let r = RunReport::new(true, ReportStats::default())
            .with_table("SOLUTION", vec![vec![Constant::Int(1), Constant::sym("red")]]);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["returns"]["SOLUTION"][0][1], "red");
        assert!(v["objective"].is_null());
        assert!(v["stats"].get("wall_time_ms").is_none());
    }
}
