use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::bandit::{Action, Modulation, PowerLevel, SnrClass};
use crate::netsim::{FrameCounters, IntervalRecord};

use super::oracle::OracleReport;
use super::summary::{learning_curve, SummaryRow};
use super::{ExperimentError, ExperimentResult};

/// Column order of `intervals.csv`.
pub const INTERVAL_COLUMNS: [&str; 26] = [
    "replication",
    "link_src",
    "link_dst",
    "k",
    "t_start_s",
    "q_k_min",
    "r_k_bits",
    "r_k_norm",
    "energy_data_j",
    "energy_fb_j",
    "aoi_mean_slots",
    "aoi_peak_slots",
    "frames_sent",
    "frames_delivered",
    "lost_ber",
    "lost_collision",
    "lost_halfduplex",
    "a0",
    "a1",
    "a2",
    "a3",
    "a4",
    "a5",
    "a6",
    "a7",
    "a8",
];

/// Rounds per point of the learning curves.
pub const LEARNING_WINDOW: usize = 10;

/// Contents of the `#` line at the top of every output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Metadata {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub scenario: String,
}

impl Metadata {
    pub fn line(&self) -> String {
        format!(
            "# config_hash={} seed={} version={} scenario={}",
            self.config_hash, self.seed, self.version, self.scenario
        )
    }

    pub fn parse(line: &str) -> Option<Self> {
        let rest = line.strip_prefix('#')?.trim();
        let mut hash = None;
        let mut seed = None;
        let mut version = None;
        let mut scenario = None;
        for field in rest.split_whitespace() {
            let (k, v) = field.split_once('=')?;
            match k {
                "config_hash" => hash = Some(v.to_owned()),
                "seed" => seed = v.parse().ok(),
                "version" => version = Some(v.to_owned()),
                "scenario" => scenario = Some(v.to_owned()),
                _ => {}
            }
        }
        Some(Self {
            config_hash: hash?,
            seed: seed?,
            version: version?,
            scenario: scenario?,
        })
    }

    /// Reads the metadata line of an output file.
    pub fn read(path: &Path) -> Result<Self, ExperimentError> {
        let file = File::open(path).map_err(|source| io_err(path, source))?;
        let mut line = String::new();
        BufReader::new(file)
            .read_line(&mut line)
            .map_err(|source| io_err(path, source))?;
        Self::parse(line.trim_end()).ok_or_else(|| ExperimentError::Format {
            path: path.to_owned(),
            message: "missing or malformed '#' metadata line".into(),
        })
    }
}

fn io_err(path: &Path, source: std::io::Error) -> ExperimentError {
    ExperimentError::Io {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> ExperimentError {
    ExperimentError::Csv {
        path: path.to_owned(),
        source,
    }
}

/// Opens `path` for writing with the metadata line already emitted.
fn csv_writer(
    path: &Path,
    meta: &Metadata,
) -> Result<csv::Writer<BufWriter<File>>, ExperimentError> {
    let file = File::create(path).map_err(|source| io_err(path, source))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", meta.line()).map_err(|source| io_err(path, source))?;
    Ok(csv::Writer::from_writer(w))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>, ExperimentError> {
    let file = File::open(path).map_err(|source| io_err(path, source))?;
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<(), ExperimentError> {
    w.flush().map_err(|source| io_err(path, source))
}

/// One row of `intervals.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalRow {
    pub replication: u32,
    pub record: IntervalRecord,
}

impl IntervalRow {
    fn fields(&self) -> Vec<String> {
        let r = &self.record;
        let mut v = vec![
            self.replication.to_string(),
            r.link_src.to_string(),
            r.link_dst.to_string(),
            r.k.to_string(),
            r.t_start_s.to_string(),
            r.q_k_min.to_string(),
            r.r_k_bits.to_string(),
            r.r_k_norm.to_string(),
            r.energy_data_j.to_string(),
            r.energy_fb_j.to_string(),
            r.aoi_mean_slots.to_string(),
            r.aoi_peak_slots.to_string(),
            r.frames.sent.to_string(),
            r.frames.delivered.to_string(),
            r.frames.lost_ber.to_string(),
            r.frames.lost_collision.to_string(),
            r.frames.lost_halfduplex.to_string(),
        ];
        v.extend(r.action_counts.iter().map(u64::to_string));
        v
    }

    fn from_record(rec: &csv::StringRecord) -> Result<Self, String> {
        if rec.len() != INTERVAL_COLUMNS.len() {
            return Err(format!(
                "expected {} columns, found {}",
                INTERVAL_COLUMNS.len(),
                rec.len()
            ));
        }
        fn num<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T, String> {
            rec[i]
                .parse()
                .map_err(|_| format!("bad {} value {:?}", INTERVAL_COLUMNS[i], &rec[i]))
        }
        let mut action_counts = [0u64; Action::COUNT];
        for (j, c) in action_counts.iter_mut().enumerate() {
            *c = num(rec, 17 + j)?;
        }
        Ok(Self {
            replication: num(rec, 0)?,
            record: IntervalRecord {
                link: 0,
                link_src: num(rec, 1)?,
                link_dst: num(rec, 2)?,
                k: num(rec, 3)?,
                t_start_s: num(rec, 4)?,
                q_k_min: num(rec, 5)?,
                r_k_bits: num(rec, 6)?,
                r_k_norm: num(rec, 7)?,
                energy_data_j: num(rec, 8)?,
                energy_fb_j: num(rec, 9)?,
                aoi_mean_slots: num(rec, 10)?,
                aoi_peak_slots: num(rec, 11)?,
                frames: FrameCounters {
                    sent: num(rec, 12)?,
                    delivered: num(rec, 13)?,
                    lost_ber: num(rec, 14)?,
                    lost_collision: num(rec, 15)?,
                    lost_halfduplex: num(rec, 16)?,
                },
                action_counts,
                closed: true,
            },
        })
    }
}

/// Writes the interval records of every replication to `path`.
pub fn write_intervals(
    path: &Path,
    meta: &Metadata,
    per_rep: &[Vec<IntervalRecord>],
) -> Result<(), ExperimentError> {
    let mut w = csv_writer(path, meta)?;
    w.write_record(INTERVAL_COLUMNS)
        .map_err(|e| csv_err(path, e))?;
    for (rep, recs) in per_rep.iter().enumerate() {
        for r in recs {
            let row = IntervalRow {
                replication: rep as u32,
                record: r.clone(),
            };
            w.write_record(row.fields()).map_err(|e| csv_err(path, e))?;
        }
    }
    finish(w, path)
}

/// Reads `intervals.csv` back. Link indices and the open-interval flag are
/// not stored and come back as 0 and `true`.
pub fn read_interval_rows(path: &Path) -> Result<Vec<IntervalRow>, ExperimentError> {
    let mut r = csv_reader(path)?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(INTERVAL_COLUMNS.iter().copied()) {
        return Err(ExperimentError::Format {
            path: path.to_owned(),
            message: "unexpected intervals.csv header".into(),
        });
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            IntervalRow::from_record(&rec).map_err(|message| ExperimentError::Format {
                path: path.to_owned(),
                message,
            })
        })
        .collect()
}

pub fn write_summary(
    path: &Path,
    meta: &Metadata,
    rows: &[SummaryRow],
) -> Result<(), ExperimentError> {
    let mut w = csv_writer(path, meta)?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    finish(w, path)
}

pub fn read_summary_rows(path: &Path) -> Result<Vec<SummaryRow>, ExperimentError> {
    let mut r = csv_reader(path)?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}

/// Writes the genie table: one row per (class, action).
pub fn write_oracle(
    path: &Path,
    meta: &Metadata,
    oracle: &OracleReport,
) -> Result<(), ExperimentError> {
    let mut w = csv_writer(path, meta)?;
    w.write_record([
        "snr_class",
        "class_weight",
        "filled",
        "action",
        "expected_norm",
        "best",
    ])
    .map_err(|e| csv_err(path, e))?;
    for class in SnrClass::ALL {
        let c = class.index();
        for (j, a) in oracle.actions.iter().enumerate() {
            w.write_record([
                format!("{class:?}").to_lowercase(),
                oracle.class_weight[c].to_string(),
                oracle.filled[c].to_string(),
                a.to_string(),
                oracle.expected[c][j].to_string(),
                (*a == oracle.best[c]).to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    finish(w, path)
}

fn write_rows<I, R>(
    path: &Path,
    meta: &Metadata,
    header: &[&str],
    rows: I,
) -> Result<(), ExperimentError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path, meta)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    finish(w, path)
}

fn histogram(
    path: &Path,
    meta: &Metadata,
    header: &str,
    counts: &[(String, u64)],
) -> Result<(), ExperimentError> {
    let total: u64 = counts.iter().map(|(_, c)| c).sum();
    write_rows(
        path,
        meta,
        &[header, "count", "fraction"],
        counts.iter().map(|(k, c)| {
            let f = if total > 0 {
                *c as f64 / total as f64
            } else {
                0.0
            };
            [k.clone(), c.to_string(), f.to_string()]
        }),
    )
}

fn write_plotdata(
    dir: &Path,
    meta: &Metadata,
    label: &str,
    per_rep: &[Vec<IntervalRecord>],
) -> Result<(), ExperimentError> {
    let curve = learning_curve(per_rep, LEARNING_WINDOW);
    write_rows(
        &dir.join(format!("{label}_learning.csv")),
        meta,
        &["episode", "throughput_norm", "energy_j", "streams"],
        curve.iter().map(|p| {
            [
                p.k.to_string(),
                p.throughput_norm.to_string(),
                p.energy_j.to_string(),
                p.streams.to_string(),
            ]
        }),
    )?;
    let all = per_rep.iter().flatten();
    let mut q: Vec<(u32, u64)> = Vec::new();
    let mut actions = [0u64; Action::COUNT];
    for r in all {
        match q.iter_mut().find(|(k, _)| *k == r.q_k_min) {
            Some((_, c)) => *c += 1,
            None => q.push((r.q_k_min, 1)),
        }
        for (a, c) in actions.iter_mut().zip(&r.action_counts) {
            *a += c;
        }
    }
    q.sort_unstable();
    let q: Vec<(String, u64)> = q.into_iter().map(|(k, c)| (k.to_string(), c)).collect();
    histogram(
        &dir.join(format!("{label}_interval_hist.csv")),
        meta,
        "interval_min",
        &q,
    )?;
    let by = |f: &dyn Fn(Action) -> bool| -> u64 {
        Action::all()
            .into_iter()
            .filter(|a| f(*a))
            .map(|a| actions[a.index()])
            .sum()
    };
    let mods: Vec<(String, u64)> = Modulation::ALL
        .iter()
        .map(|m| (m.name().to_owned(), by(&|a| a.modulation == *m)))
        .collect();
    histogram(
        &dir.join(format!("{label}_modulation_hist.csv")),
        meta,
        "modulation",
        &mods,
    )?;
    let powers: Vec<(String, u64)> = PowerLevel::ALL
        .iter()
        .map(|p| (p.name().to_owned(), by(&|a| a.power == *p)))
        .collect();
    histogram(
        &dir.join(format!("{label}_power_hist.csv")),
        meta,
        "power",
        &powers,
    )
}

fn metadata(result: &ExperimentResult) -> Metadata {
    Metadata {
        config_hash: result.config_hash.clone(),
        seed: result.scenario.seed,
        version: env!("CARGO_PKG_VERSION").to_owned(),
        scenario: result.scenario.name.replace(char::is_whitespace, "_"),
    }
}

/// Refuses to mix results of two configurations in one directory.
fn check_directory(out: &Path, hash: &str) -> Result<(), ExperimentError> {
    let summary = out.join("summary.csv");
    if summary.exists() {
        let found = Metadata::read(&summary)?.config_hash;
        if found != hash {
            return Err(ExperimentError::HashMismatch {
                expected: hash.to_owned(),
                found,
            });
        }
    }
    Ok(())
}

/// Writes every output file under `out`. If anything fails, a directory
/// created by this call is removed again.
pub fn write_outputs(result: &ExperimentResult, out: &Path) -> Result<(), ExperimentError> {
    check_directory(out, &result.config_hash)?;
    let created = !out.exists();
    let written = write_all(result, out);
    if written.is_err() && created {
        let _ = fs::remove_dir_all(out);
    }
    written
}

fn write_all(result: &ExperimentResult, out: &Path) -> Result<(), ExperimentError> {
    let meta = metadata(result);
    let mkdir = |p: &PathBuf| fs::create_dir_all(p).map_err(|source| io_err(p, source));
    let plot = out.join("plotdata");
    mkdir(&plot)?;
    write_oracle(&out.join("oracle.csv"), &meta, &result.oracle)?;
    for p in &result.policies {
        let dir = out.join(&p.label);
        mkdir(&dir)?;
        let per_rep: Vec<Vec<IntervalRecord>> =
            p.episodes.iter().map(|e| e.intervals.clone()).collect();
        write_intervals(&dir.join("intervals.csv"), &meta, &per_rep)?;
        let r = &p.regret;
        write_rows(
            &dir.join("regret.csv"),
            &meta,
            &[
                "slot",
                "cumulative_regret_mean",
                "cumulative_regret_stddev",
                "n",
            ],
            r.mean
                .iter()
                .zip(&r.stddev)
                .enumerate()
                .map(|(s, (m, sd))| {
                    [
                        s.to_string(),
                        m.to_string(),
                        sd.to_string(),
                        r.per_replication.len().to_string(),
                    ]
                }),
        )?;
        write_plotdata(&plot, &meta, &p.label, &per_rep)?;
    }
    write_summary(&out.join("summary.csv"), &meta, &result.summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metadata_round_trip() {
        let m = Metadata {
            config_hash: "ab12".into(),
            seed: 7,
            version: "0.1.0".into(),
            scenario: "four_nodes".into(),
        };
        assert_eq!(Metadata::parse(&m.line()), Some(m));
        assert_eq!(Metadata::parse("no hash"), None);
    }
}
