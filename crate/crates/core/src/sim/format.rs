//! File formats.
//!
//! Snapshot and sampled-CIR files are line-delimited JSON. The first line is
//! a header naming the format and version; each following line is one
//! record. Numbers are written with 17 significant digits so values survive
//! a write/read cycle bit for bit.
//!
//! Snapshot record:
//!
//! ```text
//! {"index":0,"position":0,"track_m":…,"tx":[x,y,z],"rx":[x,y,z],"distance_m":…,
//!  "shadow_db":…,"rays":[[delay_ns,amplitude,phase,"central"],…]}
//! ```
//!
//! Sampled-CIR record:
//!
//! ```text
//! {"index":0,"position":0,"track_m":…,"tx":[…],"rx":[…],"distance_m":…,
//!  "t0_ns":…,"samples":[[re,im],…]}
//! ```
//!
//! Tables (path loss, CDFs) are CSV with a header row carrying units.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{CirSnapshot, Point3, Ray, RayKind};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const SNAPSHOT_FORMAT: &str = "uavchan-snapshots";
pub const CIR_FORMAT: &str = "uavchan-cir";
pub const REPORT_FORMAT: &str = "uavchan-report";

/// Decimal with 17 significant digits; round-trips every finite f64.
pub fn num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        // integral values are exact in plain notation; -0.0 keeps its sign
        return format!("{x:.1}");
    }
    format!("{x:.16e}")
}

fn point(p: &Point3) -> String {
    format!("[{},{},{}]", num(p.x), num(p.y), num(p.z))
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "null".into(), num)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub version: u32,
    pub scenario: String,
    pub seed: Option<u64>,
    pub offset_ns: f64,
    pub snapshots_per_position: Option<usize>,
}

impl SnapshotHeader {
    pub fn new(
        scenario: &str,
        seed: Option<u64>,
        offset_ns: f64,
        per_position: Option<usize>,
    ) -> Self {
        SnapshotHeader {
            format: SNAPSHOT_FORMAT.into(),
            version: FORMAT_VERSION,
            scenario: scenario.into(),
            seed,
            offset_ns,
            snapshots_per_position: per_position,
        }
    }

    pub fn to_line(&self) -> String {
        let mut s = format!(
            "{{\"format\":\"{}\",\"version\":{},\"scenario\":{},\"seed\":{},\"offset_ns\":{}",
            self.format,
            self.version,
            serde_json::to_string(&self.scenario).expect("string serializes"),
            self.seed.map_or_else(|| "null".into(), |s| s.to_string()),
            num(self.offset_ns),
        );
        let per = self
            .snapshots_per_position
            .map_or_else(|| "null".into(), |n| n.to_string());
        write!(s, ",\"snapshots_per_position\":{per}}}").unwrap();
        s
    }
}

/// One line of a snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub index: u64,
    pub position: usize,
    pub track_m: f64,
    pub tx: [f64; 3],
    pub rx: [f64; 3],
    pub distance_m: f64,
    pub shadow_db: Option<f64>,
    pub rays: Vec<(f64, f64, f64, RayKind)>,
}

impl SnapshotRecord {
    pub fn from_snapshot(index: u64, position: usize, track_m: f64, snap: &CirSnapshot) -> Self {
        SnapshotRecord {
            index,
            position,
            track_m,
            tx: snap.tx().into(),
            rx: snap.rx().into(),
            distance_m: snap.link_distance_m(),
            shadow_db: snap.shadow_db(),
            rays: snap
                .rays()
                .iter()
                .map(|r| (r.delay_ns, r.amplitude, r.phase, r.kind))
                .collect(),
        }
    }

    pub fn to_snapshot(&self) -> Result<CirSnapshot> {
        let rays = self
            .rays
            .iter()
            .map(|&(delay_ns, amplitude, phase, kind)| Ray {
                delay_ns,
                amplitude,
                phase,
                kind,
            })
            .collect();
        let snap = CirSnapshot::new(self.tx.into(), self.rx.into(), rays)?;
        let tol = 1e-9 * self.distance_m.abs().max(1.0);
        if (snap.link_distance_m() - self.distance_m).abs() > tol {
            return Err(Error::InvalidSnapshot(format!(
                "distance_m {} disagrees with positions ({})",
                self.distance_m,
                snap.link_distance_m()
            )));
        }
        Ok(match self.shadow_db {
            Some(s) => snap.with_shadow_db(s),
            None => snap,
        })
    }

    pub fn to_line(&self) -> String {
        let mut s = format!(
            "{{\"index\":{},\"position\":{},\"track_m\":{},\"tx\":{},\"rx\":{},\"distance_m\":{},\"shadow_db\":{},\"rays\":[",
            self.index,
            self.position,
            num(self.track_m),
            point(&self.tx.into()),
            point(&self.rx.into()),
            num(self.distance_m),
            opt_num(self.shadow_db),
        );
        for (i, (d, a, p, k)) in self.rays.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "[{},{},{},\"{}\"]", num(*d), num(*a), num(*p), k).unwrap();
        }
        s.push_str("]}");
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirHeader {
    pub format: String,
    pub version: u32,
    pub sample_period_ns: f64,
    pub offset_ns: Option<f64>,
}

impl CirHeader {
    pub fn new(sample_period_ns: f64, offset_ns: Option<f64>) -> Self {
        CirHeader {
            format: CIR_FORMAT.into(),
            version: FORMAT_VERSION,
            sample_period_ns,
            offset_ns,
        }
    }

    fn to_line(&self) -> String {
        format!(
            "{{\"format\":\"{}\",\"version\":{},\"sample_period_ns\":{},\"offset_ns\":{}}}",
            self.format,
            self.version,
            num(self.sample_period_ns),
            opt_num(self.offset_ns)
        )
    }
}

/// One line of a sampled-CIR file. Geometry fields are optional so that
/// externally recorded CIRs can be analyzed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirRecord {
    pub index: u64,
    #[serde(default)]
    pub position: Option<usize>,
    #[serde(default)]
    pub track_m: Option<f64>,
    #[serde(default)]
    pub tx: Option<[f64; 3]>,
    #[serde(default)]
    pub rx: Option<[f64; 3]>,
    #[serde(default)]
    pub distance_m: Option<f64>,
    pub t0_ns: f64,
    pub samples: Vec<(f64, f64)>,
}

impl CirRecord {
    pub fn samples(&self) -> Vec<Complex64> {
        self.samples
            .iter()
            .map(|&(re, im)| Complex64::new(re, im))
            .collect()
    }

    pub fn to_line(&self) -> String {
        let opt_point =
            |p: &Option<[f64; 3]>| p.map_or_else(|| "null".into(), |p| point(&p.into()));
        let mut s = format!(
            "{{\"index\":{},\"position\":{},\"track_m\":{},\"tx\":{},\"rx\":{},\"distance_m\":{},\"t0_ns\":{},\"samples\":[",
            self.index,
            self.position.map_or_else(|| "null".into(), |p| p.to_string()),
            opt_num(self.track_m),
            opt_point(&self.tx),
            opt_point(&self.rx),
            opt_num(self.distance_m),
            num(self.t0_ns),
        );
        for (i, (re, im)) in self.samples.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "[{},{}]", num(*re), num(*im)).unwrap();
        }
        s.push_str("]}");
        s
    }
}

/// Parsed contents of a snapshot or sampled-CIR file.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelFile {
    Snapshots {
        header: SnapshotHeader,
        records: Vec<SnapshotRecord>,
    },
    Sampled {
        header: CirHeader,
        records: Vec<CirRecord>,
    },
}

pub fn write_snapshot_file<W: Write>(
    mut w: W,
    header: &SnapshotHeader,
    records: &[SnapshotRecord],
) -> std::io::Result<()> {
    writeln!(w, "{}", header.to_line())?;
    for r in records {
        writeln!(w, "{}", r.to_line())?;
    }
    w.flush()
}

pub fn write_cir_file<W: Write>(
    mut w: W,
    header: &CirHeader,
    records: &[CirRecord],
) -> std::io::Result<()> {
    writeln!(w, "{}", header.to_line())?;
    for r in records {
        writeln!(w, "{}", r.to_line())?;
    }
    w.flush()
}

#[derive(Deserialize)]
struct FormatProbe {
    format: String,
    version: u32,
}

/// Reads either file kind, detected from the header line. `name` labels
/// parse errors.
pub fn read_channel_file<R: BufRead>(reader: R, name: &str) -> Result<ChannelFile> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: name.to_string(),
        line,
        message,
    };
    let mut lines = reader.lines().enumerate();
    let (header_no, header_line) = loop {
        match lines.next() {
            None => return Err(parse_err(1, "empty file: missing header line".into())),
            Some((i, line)) => {
                let line = line.map_err(|e| Error::io(name, e))?;
                if !line.trim().is_empty() {
                    break (i + 1, line);
                }
            }
        }
    };
    let probe: FormatProbe = serde_json::from_str(&header_line)
        .map_err(|e| parse_err(header_no, format!("bad header: {e}")))?;
    if probe.version != FORMAT_VERSION {
        return Err(parse_err(
            header_no,
            format!(
                "unsupported version {} (expected {FORMAT_VERSION})",
                probe.version
            ),
        ));
    }

    fn records<T: for<'de> Deserialize<'de>>(
        lines: impl Iterator<Item = (usize, std::io::Result<String>)>,
        name: &str,
    ) -> Result<Vec<T>> {
        let mut out = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: name.to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            out.push(rec);
        }
        Ok(out)
    }

    match probe.format.as_str() {
        SNAPSHOT_FORMAT => {
            let header: SnapshotHeader = serde_json::from_str(&header_line)
                .map_err(|e| parse_err(header_no, format!("bad header: {e}")))?;
            Ok(ChannelFile::Snapshots {
                header,
                records: records(lines, name)?,
            })
        }
        CIR_FORMAT => {
            let header: CirHeader = serde_json::from_str(&header_line)
                .map_err(|e| parse_err(header_no, format!("bad header: {e}")))?;
            if !(header.sample_period_ns > 0.0) {
                return Err(parse_err(
                    header_no,
                    "sample_period_ns must be positive".into(),
                ));
            }
            Ok(ChannelFile::Sampled {
                header,
                records: records(lines, name)?,
            })
        }
        other => Err(parse_err(header_no, format!("unknown format `{other}`"))),
    }
}

pub fn read_channel_path(path: &Path) -> Result<ChannelFile> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_channel_file(std::io::BufReader::new(file), &path.display().to_string())
}

/// Writes a CSV table. `header` names the columns including units.
pub fn write_csv<W: Write>(mut w: W, header: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()
}

/// Reads a CSV table written by [`write_csv`].
pub fn read_csv<R: BufRead>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(Ok(h)) => h.split(',').map(str::to_string).collect::<Vec<_>>(),
        _ => {
            return Err(Error::Parse {
                path: "csv".into(),
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io("csv", e))?;
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse {
                path: "csv".into(),
                line: i + 2,
                message: e.to_string(),
            })?;
        if row.len() != header.len() {
            return Err(Error::Parse {
                path: "csv".into(),
                line: i + 2,
                message: format!("{} cells for {} columns", row.len(), header.len()),
            });
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record() -> SnapshotRecord {
        let snap = CirSnapshot::new(
            Point3::new(10.0, 0.0, 35.0),
            Point3::new(0.0, 0.0, 1.0),
            vec![
                Ray::central(1.234e-3, 0.1),
                Ray::new(-77.125, 3.3e-4, 6.2),
                Ray::new(140.5, 2e-4, 0.0),
            ],
        )
        .unwrap()
        .with_shadow_db(-1.75);
        SnapshotRecord::from_snapshot(3, 1, 12.5, &snap)
    }

    #[test]
    fn num_has_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.0), "0.0");
        assert_eq!(num(-2.5), "-2.5000000000000000e0");
        assert_eq!(num(80.0), "80.0");
        assert_eq!(num(-0.0), "-0.0");
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn snapshot_file_round_trip() {
        let header = SnapshotHeader::new("office-buildings", Some(9), 50.0, Some(2));
        let recs = vec![record()];
        let mut buf = Vec::new();
        write_snapshot_file(&mut buf, &header, &recs).unwrap();
        match read_channel_file(&buf[..], "mem").unwrap() {
            ChannelFile::Snapshots { header: h, records } => {
                assert_eq!(h, header);
                assert_eq!(records, recs);
                let snap = records[0].to_snapshot().unwrap();
                assert_eq!(snap.rays().len(), 3);
                assert_eq!(snap.shadow_db(), Some(-1.75));
            }
            other => panic!("wrong kind {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = read_channel_file(&b""[..], "empty.jsonl").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let header = SnapshotHeader::new("x", None, 50.0, None);
        let doc = format!(
            "{}\n{}\n{{\"index\": oops}}\n",
            header.to_line(),
            record().to_line()
        );
        let err = read_channel_file(doc.as_bytes(), "bad.jsonl").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(err.to_string().starts_with("bad.jsonl:3:"));
        let err =
            read_channel_file(&b"{\"format\":\"nope\",\"version\":1}\n"[..], "f").unwrap_err();
        assert!(err.to_string().contains("unknown format"));
    }

    #[test]
    fn cir_file_round_trip() {
        let header = CirHeader::new(50.0, Some(50.0));
        let recs = vec![CirRecord {
            index: 0,
            position: None,
            track_m: None,
            tx: None,
            rx: Some([0.0, 0.0, 1.0]),
            distance_m: Some(42.0),
            t0_ns: -1600.0,
            samples: vec![(1.0, 0.0), (-0.25, 1e-17)],
        }];
        let mut buf = Vec::new();
        write_cir_file(&mut buf, &header, &recs).unwrap();
        match read_channel_file(&buf[..], "mem").unwrap() {
            ChannelFile::Sampled { header: h, records } => {
                assert_eq!(h, header);
                assert_eq!(records, recs);
            }
            other => panic!("wrong kind {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![vec![1.0, -2.5e-9], vec![3.25, 4.0]];
        let mut buf = Vec::new();
        write_csv(&mut buf, &["a_ns", "b_db"], &rows).unwrap();
        let (h, back) = read_csv(&buf[..]).unwrap();
        assert_eq!(h, vec!["a_ns", "b_db"]);
        assert_eq!(back, rows);
    }

    proptest! {
        #[test]
        fn records_round_trip_exactly(
            track in 0.0f64..1e4,
            shadow in proptest::option::of(-20.0f64..20.0),
            a0 in 1e-9f64..1.0,
            cursors in proptest::collection::vec((50.0f64..5000.0, 0.01f64..0.99, 0.0f64..std::f64::consts::TAU, any::<bool>()), 0..12),
        ) {
            let mut rays = vec![Ray::central(a0, 1.0)];
            for (i, (d, rel, ph, pre)) in cursors.iter().enumerate() {
                // distinct delays per ray
                let d = d + i as f64 * 1e-3;
                rays.push(Ray::new(if *pre { -d } else { d }, rel * a0, *ph));
            }
            let mut snap = CirSnapshot::new(Point3::new(3.0, 4.0, 20.0), Point3::new(0.0, 0.0, 1.0), rays);
            prop_assume!(snap.is_ok());
            if let Some(s) = shadow {
                snap = Ok(snap.unwrap().with_shadow_db(s));
            }
            let rec = SnapshotRecord::from_snapshot(7, 2, track, &snap.unwrap());
            let parsed: SnapshotRecord = serde_json::from_str(&rec.to_line()).unwrap();
            prop_assert_eq!(&parsed, &rec);
            prop_assert_eq!(parsed.to_line(), rec.to_line());
        }
    }
}
