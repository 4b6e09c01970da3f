//! Plain-text CSV surfaces.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::observables::TimeSeriesRecord;

/// Header of the dynamics CSV.
pub const RECORD_HEADER: [&str; 9] = [
    "t",
    "re_alpha_minus",
    "im_alpha_minus",
    "p_beat_W",
    "p_probe_out_W",
    "bunching",
    "x_cm_m",
    "v_cm_mps",
    "beat_freq_hz",
];

/// Formats a float in the shortest form that parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Columns appended by the analysis pass.
pub const ESTIMATE_HEADER: [&str; 2] = ["beat_freq_phase_slope_hz", "beat_freq_zero_crossing_hz"];

fn record_fields(r: &TimeSeriesRecord) -> [String; 9] {
    [
        fmt_f64(r.t),
        fmt_f64(r.alpha_minus.re),
        fmt_f64(r.alpha_minus.im),
        fmt_f64(r.p_beat),
        fmt_f64(r.p_probe_out),
        fmt_f64(r.bunching),
        fmt_f64(r.x_cm),
        fmt_f64(r.v_cm),
        fmt_opt(r.beat_freq),
    ]
}

pub fn write_records<W: Write>(out: W, records: &[TimeSeriesRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record(record_fields(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the dynamics CSV with the two estimator columns appended.
pub fn write_records_with_estimates<W: Write>(
    out: W,
    records: &[TimeSeriesRecord],
    phase_slope: &[Option<f64>],
    zero_crossing: &[Option<f64>],
) -> Result<()> {
    if phase_slope.len() != records.len() || zero_crossing.len() != records.len() {
        return Err(Error::invalid("estimate columns differ in length from the series"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER.iter().chain(&ESTIMATE_HEADER))?;
    for ((r, a), b) in records.iter().zip(phase_slope).zip(zero_crossing) {
        w.write_record(record_fields(r).into_iter().chain([fmt_opt(*a), fmt_opt(*b)]))?;
    }
    w.flush()?;
    Ok(())
}

fn field(row: &csv::StringRecord, i: usize, line: u64) -> Result<f64> {
    let s = row.get(i).unwrap_or_default();
    s.trim().parse().map_err(|_| {
        Error::invalid(format!("row {line}: column `{}` holds `{s}`", RECORD_HEADER[i]))
    })
}

/// Reads a dynamics CSV. Extra trailing columns are ignored.
pub fn read_records<R: Read>(input: R) -> Result<Vec<TimeSeriesRecord>> {
    let mut rd = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = rd.headers()?.clone();
    if header.len() < RECORD_HEADER.len()
        || header.iter().zip(RECORD_HEADER).any(|(a, b)| a.trim() != b)
    {
        return Err(Error::invalid(format!(
            "unexpected header `{}`; expected `{}`",
            header.iter().collect::<Vec<_>>().join(","),
            RECORD_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (idx, row) in rd.records().enumerate() {
        let row = row?;
        let line = idx as u64 + 2;
        let beat = row.get(8).map(str::trim).unwrap_or_default();
        out.push(TimeSeriesRecord {
            t: field(&row, 0, line)?,
            alpha_minus: Complex64::new(field(&row, 1, line)?, field(&row, 2, line)?),
            p_beat: field(&row, 3, line)?,
            p_probe_out: field(&row, 4, line)?,
            bunching: field(&row, 5, line)?,
            x_cm: field(&row, 6, line)?,
            v_cm: field(&row, 7, line)?,
            beat_freq: if beat.is_empty() { None } else { Some(field(&row, 8, line)?) },
        });
    }
    Ok(out)
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    let wrap = |source| Error::File {
        path: path.to_path_buf(),
        source,
    };
    std::fs::write(&tmp, bytes).map_err(wrap)?;
    std::fs::rename(&tmp, path).map_err(wrap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(t: f64, a: (f64, f64), rest: [f64; 5], f: Option<f64>) -> TimeSeriesRecord {
        TimeSeriesRecord {
            t,
            alpha_minus: Complex64::new(a.0, a.1),
            p_beat: rest[0],
            p_probe_out: rest[1],
            bunching: rest[2],
            x_cm: rest[3],
            v_cm: rest[4],
            beat_freq: f,
        }
    }

    #[test]
    fn header_is_fixed() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,re_alpha_minus,im_alpha_minus,p_beat_W,p_probe_out_W,bunching,x_cm_m,v_cm_mps,beat_freq_hz\n"
        );
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(read_records("a,b,c\n1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn analysis_columns_are_appended_and_still_readable() {
        let r = rec(1e-6, (1.0, -2.0), [0.5; 5], None);
        let mut buf = Vec::new();
        write_records_with_estimates(&mut buf, &[r], &[Some(1.5e5)], &[None]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().next().unwrap().ends_with(",beat_freq_phase_slope_hz,beat_freq_zero_crossing_hz"));
        assert!(text.lines().nth(1).unwrap().ends_with(",,1.5e5,"));
        assert_eq!(read_records(buf.as_slice()).unwrap(), vec![r]);
        assert!(write_records_with_estimates(Vec::new(), &[r], &[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(
            t in 0.0f64..1.0,
            re in -1e6f64..1e6,
            im in -1e6f64..1e6,
            rest in proptest::array::uniform5(-1e3f64..1e3),
            f in proptest::option::of(-1e7f64..1e7),
        ) {
            let r = rec(t, (re, im), rest, f);
            let mut buf = Vec::new();
            write_records(&mut buf, &[r, r]).unwrap();
            let back = read_records(buf.as_slice()).unwrap();
            prop_assert_eq!(back, vec![r, r]);
        }
    }
}
