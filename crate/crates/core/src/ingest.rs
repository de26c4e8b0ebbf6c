//! Flow-start records to per-window counts.
//!
//! Bins are `[a + k·w, a + (k+1)·w)` with the anchor `a = ⌊t_first / w⌋·w`, and
//! run up to the bin holding the last record. Bins not wholly inside an uptime
//! interval are removed when uptime is known; remaining empty bins are removed
//! when `drop_zeros` is set.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TailmixError};
use crate::mixture::BinnedSeries;

/// Window sizes in seconds: 4 to 512, doubling.
pub const STANDARD_WINDOWS: [u32; 8] = [4, 8, 16, 32, 64, 128, 256, 512];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub start_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proto: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sport: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dport: Option<u16>,
}

impl FlowRecord {
    pub fn at(start_time: f64) -> Self {
        Self { start_time, proto: None, sport: None, dport: None }
    }
}

/// Sorted, disjoint `[begin, end)` intervals during which the host was up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UptimeIntervals {
    intervals: Vec<(f64, f64)>,
}

impl UptimeIntervals {
    /// Sorts by start; rejects empty, non-finite or overlapping intervals.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(b, e) in &intervals {
            if !b.is_finite() || !e.is_finite() || b >= e {
                return Err(TailmixError::Data(format!("invalid uptime interval [{b}, {e})")));
            }
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = intervals.windows(2).find(|w| w[1].0 < w[0].1) {
            return Err(TailmixError::Data(format!(
                "uptime intervals overlap: [{}, {}) and [{}, {})",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
        Ok(Self { intervals })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Whether `[lo, hi)` lies inside a single interval.
    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        let idx = self.intervals.partition_point(|&(b, _)| b <= lo);
        idx > 0 && self.intervals[idx - 1].1 >= hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BinStats {
    /// Bins between the first and last record.
    pub total_bins: usize,
    pub dropped_uptime: usize,
    pub dropped_zero: usize,
}

fn validate_records(records: &[FlowRecord], bin_seconds: f64) -> Result<f64> {
    if !(bin_seconds > 0.0) || !bin_seconds.is_finite() {
        return Err(TailmixError::Contract(format!("window size must be positive, got {bin_seconds}")));
    }
    if records.is_empty() {
        return Err(TailmixError::Data("no flow records".into()));
    }
    let mut first = f64::INFINITY;
    for (i, r) in records.iter().enumerate() {
        if !r.start_time.is_finite() || r.start_time < 0.0 {
            return Err(TailmixError::Data(format!("record {i} has invalid start time {}", r.start_time)));
        }
        first = first.min(r.start_time);
    }
    Ok(first)
}

/// Counts per window plus what was filtered out.
pub fn bin_series_with_stats(
    records: &[FlowRecord],
    bin_seconds: f64,
    uptime: Option<&UptimeIntervals>,
    drop_zeros: bool,
) -> Result<(BinnedSeries, BinStats)> {
    let first = validate_records(records, bin_seconds)?;
    let anchor_index = (first / bin_seconds).floor();
    let mut counts: Vec<u64> = Vec::new();
    for r in records {
        let k = ((r.start_time / bin_seconds).floor() - anchor_index) as usize;
        if k >= counts.len() {
            counts.resize(k + 1, 0);
        }
        counts[k] += 1;
    }

    let mut stats = BinStats { total_bins: counts.len(), ..BinStats::default() };
    let mut kept = Vec::with_capacity(counts.len());
    for (k, c) in counts.into_iter().enumerate() {
        if let Some(up) = uptime {
            let lo = (anchor_index + k as f64) * bin_seconds;
            if !up.covers(lo, lo + bin_seconds) {
                stats.dropped_uptime += 1;
                continue;
            }
        }
        if drop_zeros && c == 0 {
            stats.dropped_zero += 1;
            continue;
        }
        kept.push(c);
    }
    Ok((BinnedSeries::new(kept, bin_seconds, ""), stats))
}

/// Flow starts binned into windows of `bin_seconds`.
pub fn bin_series(
    records: &[FlowRecord],
    bin_seconds: f64,
    uptime: Option<&UptimeIntervals>,
    drop_zeros: bool,
) -> Result<BinnedSeries> {
    bin_series_with_stats(records, bin_seconds, uptime, drop_zeros).map(|(s, _)| s)
}

/// One series per window in [`STANDARD_WINDOWS`], zero bins dropped.
pub fn standard_window_sweep(
    records: &[FlowRecord],
    uptime: Option<&UptimeIntervals>,
) -> Result<BTreeMap<u32, BinnedSeries>> {
    window_sweep(records, &STANDARD_WINDOWS, uptime, true)
}

pub fn window_sweep(
    records: &[FlowRecord],
    windows: &[u32],
    uptime: Option<&UptimeIntervals>,
    drop_zeros: bool,
) -> Result<BTreeMap<u32, BinnedSeries>> {
    windows
        .iter()
        .map(|&w| Ok((w, bin_series(records, w as f64, uptime, drop_zeros)?)))
        .collect()
}

fn sniff_delimiter(header: &str) -> u8 {
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn read_all(mut input: impl Read) -> Result<String> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| TailmixError::Io(e.to_string()))?;
    Ok(text)
}

/// Parses a delimited flow file: header row, comma or tab separated, required
/// `start_time` column, optional `proto`, `sport`, `dport`.
pub fn parse_flows(input: impl Read) -> Result<Vec<FlowRecord>> {
    let text = read_all(input)?;
    let header = text.lines().next().filter(|l| !l.trim().is_empty()).ok_or_else(|| {
        TailmixError::Data("flow file is empty".into())
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(header))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| TailmixError::Parse { line: 1, message: e.to_string() })?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let t_col = col("start_time")
        .ok_or_else(|| TailmixError::Parse { line: 1, message: "missing required column start_time".into() })?;
    let (proto_col, sport_col, dport_col) = (col("proto"), col("sport"), col("dport"));

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| TailmixError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| row.get(i).unwrap_or("");
        let start_time: f64 = field(t_col).parse().map_err(|_| TailmixError::Parse {
            line,
            message: format!("start_time {:?} is not a number", field(t_col)),
        })?;
        if !start_time.is_finite() || start_time < 0.0 {
            return Err(TailmixError::Parse { line, message: format!("start_time {start_time} out of range") });
        }
        let port = |c: Option<usize>, name: &str| -> Result<Option<u16>> {
            match c.map(field).filter(|s| !s.is_empty()) {
                None => Ok(None),
                Some(s) => s.parse().map(Some).map_err(|_| TailmixError::Parse {
                    line,
                    message: format!("{name} {s:?} is not a port number"),
                }),
            }
        };
        out.push(FlowRecord {
            start_time,
            proto: proto_col.map(field).filter(|s| !s.is_empty()).map(str::to_owned),
            sport: port(sport_col, "sport")?,
            dport: port(dport_col, "dport")?,
        });
    }
    Ok(out)
}

/// Parses an uptime sidecar: `begin,end` rows in seconds, optional header.
pub fn parse_uptime(input: impl Read) -> Result<UptimeIntervals> {
    let text = read_all(input)?;
    let delimiter = text.lines().next().map_or(b',', sniff_delimiter);
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut intervals = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| TailmixError::Parse { line: i + 1, message: e.to_string() })?;
        let line = row.position().map_or(i + 1, |p| p.line() as usize);
        // Optional header row, e.g. `begin,end` or `start,end`.
        if i == 0 && row.get(0).is_some_and(|s| s.parse::<f64>().is_err()) {
            continue;
        }
        let num = |j: usize| -> Result<f64> {
            row.get(j).and_then(|s| s.parse().ok()).ok_or_else(|| TailmixError::Parse {
                line,
                message: "expected two numeric columns begin,end".into(),
            })
        };
        intervals.push((num(0)?, num(1)?));
    }
    UptimeIntervals::new(intervals)
}

#[derive(Serialize, Deserialize)]
struct SeriesHeader {
    bin_seconds: f64,
    source_id: String,
    n: usize,
}

/// Writes the series file format: `#` + JSON header, then one count per line.
pub fn write_series(mut out: impl Write, series: &BinnedSeries) -> Result<()> {
    let header = SeriesHeader { bin_seconds: series.bin_seconds, source_id: series.source_id.clone(), n: series.n() };
    let json = serde_json::to_string(&header).map_err(|e| TailmixError::Io(e.to_string()))?;
    writeln!(out, "#{json}")?;
    for c in &series.counts {
        writeln!(out, "{c}")?;
    }
    Ok(())
}

pub fn read_series(input: impl BufRead) -> Result<BinnedSeries> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| TailmixError::Data("series file is empty".into()))?
        .map_err(|e| TailmixError::Io(e.to_string()))?;
    let json = first.trim().strip_prefix('#').ok_or_else(|| TailmixError::Parse {
        line: 1,
        message: "expected a '#'-prefixed JSON header".into(),
    })?;
    let header: SeriesHeader =
        serde_json::from_str(json.trim()).map_err(|e| TailmixError::Parse { line: 1, message: e.to_string() })?;
    let mut counts = Vec::with_capacity(header.n);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| TailmixError::Io(e.to_string()))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        counts.push(t.parse::<u64>().map_err(|_| TailmixError::Parse {
            line: i + 2,
            message: format!("{t:?} is not a nonnegative integer count"),
        })?);
    }
    if counts.len() != header.n {
        return Err(TailmixError::Data(format!("header says n = {} but {} counts follow", header.n, counts.len())));
    }
    Ok(BinnedSeries::new(counts, header.bin_seconds, header.source_id))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(ts: &[f64]) -> Vec<FlowRecord> {
        ts.iter().map(|&t| FlowRecord::at(t)).collect()
    }

    #[test]
    fn hand_counted_bins() {
        let s = bin_series(&recs(&[0.5, 3.9, 4.1, 10.0]), 4.0, None, true).unwrap();
        assert_eq!(s.counts, vec![2, 1, 1]);
        assert_eq!(bin_series(&recs(&[0.5, 9.0]), 4.0, None, true).unwrap().counts, vec![1, 1]);
        assert_eq!(bin_series(&recs(&[0.5, 9.0]), 4.0, None, false).unwrap().counts, vec![1, 0, 1]);
    }

    #[test]
    fn anchor_is_floor_multiple() {
        // First record at 13 → anchor 12: bins [12,16), [16,20).
        let s = bin_series(&recs(&[19.0, 13.0, 15.9, 16.0]), 4.0, None, false).unwrap();
        assert_eq!(s.counts, vec![2, 2]);
    }

    #[test]
    fn uptime_filter_drops_partial_bins() {
        let up = UptimeIntervals::new(vec![(0.0, 6.0), (8.0, 20.0)]).unwrap();
        let (s, stats) =
            bin_series_with_stats(&recs(&[0.5, 5.0, 9.0, 13.0, 13.5]), 4.0, Some(&up), true).unwrap();
        // [0,4) in, [4,8) straddles the gap, [8,12) in, [12,16) in.
        assert_eq!(s.counts, vec![1, 1, 2]);
        assert_eq!(stats, BinStats { total_bins: 4, dropped_uptime: 1, dropped_zero: 0 });
    }

    #[test]
    fn uptime_keeps_zero_bins_when_asked() {
        let up = UptimeIntervals::new(vec![(0.0, 100.0)]).unwrap();
        let s = bin_series(&recs(&[1.0, 13.0]), 4.0, Some(&up), false).unwrap();
        assert_eq!(s.counts, vec![1, 0, 0, 1]);
    }

    #[test]
    fn errors() {
        assert!(matches!(bin_series(&[], 4.0, None, true), Err(TailmixError::Data(_))));
        assert!(bin_series(&recs(&[1.0]), 0.0, None, true).is_err());
        assert!(bin_series(&recs(&[f64::NAN]), 4.0, None, true).is_err());
        assert!(UptimeIntervals::new(vec![(0.0, 5.0), (4.0, 8.0)]).is_err());
        assert!(UptimeIntervals::new(vec![(3.0, 3.0)]).is_err());
    }

    #[test]
    fn sweep_has_eight_windows_and_conserves_mass() {
        let ts: Vec<f64> = (0..500).map(|i| (i * i % 997) as f64 * 3.7).collect();
        let records = recs(&ts);
        let sweep = standard_window_sweep(&records, None).unwrap();
        assert_eq!(sweep.keys().copied().collect::<Vec<_>>(), STANDARD_WINDOWS.to_vec());
        let all = window_sweep(&records, &STANDARD_WINDOWS, None, false).unwrap();
        for s in all.values() {
            assert_eq!(s.counts.iter().sum::<u64>(), 500);
        }
        let span = ts.iter().cloned().fold(0.0, f64::max) - ts.iter().cloned().fold(f64::INFINITY, f64::min);
        let n512 = all[&512].n();
        assert!((n512 as f64 - (span / 512.0).ceil()).abs() <= 1.0);
    }

    #[test]
    fn parses_comma_and_tab() {
        let csv = "start_time,proto,sport,dport\n0.5,tcp,5000,80\n3.25,udp,,53\n";
        let r = parse_flows(csv.as_bytes()).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].proto.as_deref(), Some("tcp"));
        assert_eq!(r[1].sport, None);
        assert_eq!(r[1].dport, Some(53));

        let tsv = "dport\tstart_time\n80\t1.0\n443\t2.0\n";
        let r = parse_flows(tsv.as_bytes()).unwrap();
        assert_eq!(r.iter().map(|f| f.start_time).collect::<Vec<_>>(), vec![1.0, 2.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "start_time\n1.0\n2.0\nabc\n";
        match parse_flows(bad.as_bytes()) {
            Err(TailmixError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_flows("".as_bytes()), Err(TailmixError::Data(_))));
        assert!(matches!(parse_flows("time\n1\n".as_bytes()), Err(TailmixError::Parse { line: 1, .. })));
        match parse_flows("start_time,dport\n1.0,99999\n".as_bytes()) {
            Err(TailmixError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn uptime_file() {
        let up = parse_uptime("begin,end\n10,20\n0,5\n".as_bytes()).unwrap();
        assert_eq!(parse_uptime("start,end\n0,5\n".as_bytes()).unwrap().intervals(), &[(0.0, 5.0)]);
        assert_eq!(up.intervals(), &[(0.0, 5.0), (10.0, 20.0)]);
        let up = parse_uptime("0\t5\n".as_bytes()).unwrap();
        assert!(up.covers(1.0, 5.0));
        assert!(!up.covers(1.0, 5.5));
        assert!(matches!(parse_uptime("begin,end\n1,x\n".as_bytes()), Err(TailmixError::Parse { line: 2, .. })));
    }

    #[test]
    fn series_file_roundtrip() {
        let s = BinnedSeries::new(vec![3, 1, 4, 1, 5], 16.0, "user-7");
        let mut buf = Vec::new();
        write_series(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#{\"bin_seconds\":16.0,\"source_id\":\"user-7\",\"n\":5}\n"));
        assert_eq!(read_series(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn series_file_errors() {
        assert!(read_series("3\n4\n".as_bytes()).is_err());
        assert!(read_series("#{\"bin_seconds\":4,\"source_id\":\"a\",\"n\":3}\n1\n2\n".as_bytes()).is_err());
        match read_series("#{\"bin_seconds\":4,\"source_id\":\"a\",\"n\":2}\n1\n-2\n".as_bytes()) {
            Err(TailmixError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
