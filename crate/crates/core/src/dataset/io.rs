use std::path::Path;

use super::DatasetRecord;
use crate::error::{DcpfError, Result};

/// Column order of the dataset CSV.
pub const CSV_HEADER: [&str; 13] = [
    "rx",
    "ry",
    "rphi",
    "l1",
    "l2",
    "s_x",
    "s_y",
    "s_phi",
    "s_l1",
    "s_l2",
    "p_bar",
    "ci_half_width",
    "n_samples",
];

pub fn write_csv(path: &Path, records: &[DatasetRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| DcpfError::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(std::io::BufWriter::new(file));
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| DcpfError::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<DatasetRecord>> {
    let file = std::fs::File::open(path).map_err(|e| DcpfError::io(path, e))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(DcpfError::invalid(format!(
            "{}: unexpected dataset header {:?}",
            path.display(),
            header
        )));
    }
    r.deserialize().map(|row| row.map_err(DcpfError::from)).collect()
}
