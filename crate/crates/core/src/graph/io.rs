//! JSON network document: topology, anchors, ranges and seed metadata.
//!
//! Floats are written in scientific notation with 17 significant digits, so
//! loading a saved file reproduces every position and range bit for bit and
//! re-saving it yields identical bytes.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use super::{GraphError, Measurements, Network};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field `{field}`: {source}")]
    Invalid {
        field: &'static str,
        #[source]
        source: GraphError,
    },
}

/// On-disk layout. `d` follows `edges`; `r[i]` follows `anchor_links[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub p: usize,
    pub positions: Option<Vec<Vec<f64>>>,
    pub edges: Vec<[usize; 2]>,
    pub anchors: Vec<Vec<f64>>,
    pub anchor_links: Vec<Vec<usize>>,
    pub d: Vec<f64>,
    pub r: Vec<Vec<f64>>,
    pub sigma: f64,
    pub seed: Option<u64>,
}

impl NetworkFile {
    pub fn from_parts(net: &Network, meas: &Measurements, seed: Option<u64>) -> Self {
        let p = net.p();
        let mut r = Vec::with_capacity(net.n());
        for i in 0..net.n() {
            r.push(net.links_of(i).map(|(l, _)| meas.r[l]).collect());
        }
        Self {
            p,
            positions: net
                .true_positions()
                .map(|x| x.chunks(p).map(<[f64]>::to_vec).collect()),
            edges: net.edges().iter().map(|&(i, j)| [i, j]).collect(),
            anchors: net.anchors(),
            anchor_links: net.anchor_links().to_vec(),
            d: meas.d.clone(),
            r,
            sigma: meas.sigma,
            seed,
        }
    }

    pub fn into_parts(self) -> Result<(Network, Measurements, Option<u64>), FileError> {
        let n = self.anchor_links.len();
        let invalid = |field| move |source| FileError::Invalid { field, source };
        let positions = match self.positions {
            Some(rows) => {
                if rows.len() != n {
                    return Err(FileError::Invalid {
                        field: "positions",
                        source: GraphError::Shape {
                            what: "sensor positions",
                            expected: n,
                            got: rows.len(),
                        },
                    });
                }
                if let Some(bad) = rows.iter().find(|row| row.len() != self.p) {
                    return Err(FileError::Invalid {
                        field: "positions",
                        source: GraphError::Shape {
                            what: "position coordinates",
                            expected: self.p,
                            got: bad.len(),
                        },
                    });
                }
                Some(rows.concat())
            }
            None => None,
        };
        let edges = self.edges.iter().map(|&[i, j]| (i, j)).collect();
        let net = Network::new(
            n,
            self.p,
            edges,
            &self.anchors,
            self.anchor_links,
            positions,
        )
        .map_err(invalid("edges/anchor_links"))?;
        for i in 0..n {
            let expected = net.anchor_links()[i].len();
            let got = self.r.get(i).map_or(0, Vec::len);
            if self.r.len() != n || got != expected {
                return Err(FileError::Invalid {
                    field: "r",
                    source: GraphError::Shape {
                        what: "anchor ranges for a sensor",
                        expected,
                        got,
                    },
                });
            }
        }
        let r = self.r.concat();
        let meas = Measurements::new(&net, self.d, r, self.sigma).map_err(|source| {
            let field = match &source {
                GraphError::BadValue { what: "r", .. } => "r",
                GraphError::BadValue { what: "sigma", .. } => "sigma",
                _ => "d",
            };
            FileError::Invalid { field, source }
        })?;
        Ok((net, meas, self.seed))
    }
}

/// Pretty JSON, but floats always carry 17 significant digits.
struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any document with the exact-float convention.
pub fn to_json_string<T: Serialize>(doc: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        ExactFloats(PrettyFormatter::with_indent(b"  ")),
    );
    doc.serialize(&mut ser).expect("in-memory serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn parse_network(text: &str) -> Result<(Network, Measurements, Option<u64>), FileError> {
    let doc: NetworkFile = serde_json::from_str(text).map_err(|e| FileError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.into_parts()
}

pub fn save_network(
    path: impl AsRef<Path>,
    net: &Network,
    meas: &Measurements,
    seed: Option<u64>,
) -> Result<(), FileError> {
    let path = path.as_ref();
    let text = to_json_string(&NetworkFile::from_parts(net, meas, seed));
    fs::write(path, text).map_err(|source| FileError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn load_network(
    path: impl AsRef<Path>,
) -> Result<(Network, Measurements, Option<u64>), FileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_network(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{corner_anchors, generate_measurements, generate_with_target_degree};

    #[test]
    fn single_sensor_round_trips() {
        let net = Network::new(1, 2, vec![], &[], vec![vec![]], Some(vec![0.25, 0.75])).unwrap();
        let meas = Measurements::new(&net, vec![], vec![], 0.0).unwrap();
        let text = to_json_string(&NetworkFile::from_parts(&net, &meas, None));
        let (net2, meas2, seed) = parse_network(&text).unwrap();
        assert_eq!(net, net2);
        assert_eq!(meas, meas2);
        assert_eq!(seed, None);
    }

    #[test]
    fn fifty_sensor_network_round_trips_byte_identically() {
        let (net, _) = generate_with_target_degree(50, 2, 6.0, &corner_anchors(2), 0.4, 7).unwrap();
        let meas = generate_measurements(&net, 0.01, 8).unwrap();
        let text = to_json_string(&NetworkFile::from_parts(&net, &meas, Some(7)));
        let (net2, meas2, seed) = parse_network(&text).unwrap();
        assert_eq!(net, net2);
        assert_eq!(meas, meas2);
        assert!(meas
            .d
            .iter()
            .zip(&meas2.d)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(seed, Some(7));
        assert_eq!(
            text,
            to_json_string(&NetworkFile::from_parts(&net2, &meas2, seed))
        );
    }

    #[test]
    fn negative_range_is_rejected() {
        let net = Network::new(2, 2, vec![(0, 1)], &[], vec![vec![]; 2], None).unwrap();
        let meas = Measurements::new(&net, vec![0.5], vec![], 0.0).unwrap();
        let text = to_json_string(&NetworkFile::from_parts(&net, &meas, None))
            .replace("5.0000000000000000e-1", "-5.0000000000000000e-1");
        let err = parse_network(&text).unwrap_err();
        assert!(
            matches!(err, FileError::Invalid { field: "d", .. }),
            "{err}"
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_network("{\n  \"p\": 2,\n  \"edges\": [oops]\n}").unwrap_err();
        match err {
            FileError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }
}
