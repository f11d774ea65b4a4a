use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{clock, Passenger, TestInput, TraceError, CLOCK_COLUMN, CSV_HEADER};

/// A trace read from disk, plus whether its rows needed re-sorting.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrace {
    pub input: TestInput,
    pub resorted: bool,
}

pub fn load_test_input(path: impl AsRef<Path>) -> Result<LoadedTrace, TraceError> {
    let file = File::open(path)?;
    read_test_input(BufReader::new(file))
}

/// Parses passenger CSV. Accepts the eight-column header, optionally
/// followed by the derived `clock` column.
pub fn read_test_input(reader: impl Read) -> Result<LoadedTrace, TraceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut records = rdr.records();
    let header = match records.next() {
        None => {
            return Err(TraceError::Header {
                found: Vec::new(),
                expected: CSV_HEADER.join(","),
            })
        }
        Some(rec) => rec.map_err(|e| csv_err(1, e))?,
    };
    let found: Vec<String> = header.iter().map(str::to_string).collect();
    let header_ok = found.len() >= CSV_HEADER.len()
        && found.iter().zip(CSV_HEADER).all(|(a, b)| a == b)
        && (found.len() == CSV_HEADER.len()
            || (found.len() == CSV_HEADER.len() + 1 && found[CSV_HEADER.len()] == CLOCK_COLUMN));
    if !header_ok {
        return Err(TraceError::Header {
            found,
            expected: CSV_HEADER.join(","),
        });
    }
    let width = found.len();

    let mut passengers = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| csv_err(line, e))?;
        if rec.len() != width {
            return Err(TraceError::Parse {
                line,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        let field = |k: usize| rec.get(k).unwrap_or("").trim();
        let int = |k: usize| -> Result<i64, TraceError> {
            field(k).parse::<i64>().map_err(|e| TraceError::Parse {
                line,
                message: format!("column {}: {e}", CSV_HEADER[k]),
            })
        };
        let real = |k: usize| -> Result<f64, TraceError> {
            field(k).parse::<f64>().map_err(|e| TraceError::Parse {
                line,
                message: format!("column {}: {e}", CSV_HEADER[k]),
            })
        };
        let small = |k: usize| -> Result<u32, TraceError> {
            u32::try_from(int(k)?).map_err(|_| TraceError::Parse {
                line,
                message: format!("column {}: out of range", CSV_HEADER[k]),
            })
        };
        passengers.push(Passenger::new(
            small(0)?,
            int(1)?,
            small(2)?,
            small(3)?,
            real(4)?,
            real(5)?,
            real(6)?,
            real(7)?,
        )?);
    }

    let (input, resorted) = TestInput::new_reporting_sort(passengers)?;
    Ok(LoadedTrace { input, resorted })
}

pub fn save_test_input(ti: &TestInput, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_test_input(ti, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_test_input(ti: &TestInput, out: impl Write) -> Result<(), TraceError> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    header.push(CLOCK_COLUMN);
    wtr.write_record(&header).map_err(csv_io_err)?;
    for p in ti.passengers() {
        wtr.write_record([
            p.id().to_string(),
            p.at().to_string(),
            p.af().to_string(),
            p.df().to_string(),
            p.m().to_string(),
            p.cf().to_string(),
            p.ent().to_string(),
            p.ext().to_string(),
            clock(p.at()),
        ])
        .map_err(csv_io_err)?;
    }
    wtr.flush()?;
    Ok(())
}

fn csv_err(line: u64, e: csv::Error) -> TraceError {
    TraceError::Parse {
        line,
        message: e.to_string(),
    }
}

fn csv_io_err(e: csv::Error) -> TraceError {
    TraceError::Io(std::io::Error::other(e))
}
