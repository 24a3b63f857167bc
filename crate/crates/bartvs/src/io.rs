//! Dataset, prior and report files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use bartvs_core::split_prior::PriorSpec;
use bartvs_core::Dataset;

use crate::error::{CliError, CliResult};

fn read_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Read { path: path.to_path_buf(), source: e }
}

fn csv_reader(path: &Path, has_headers: bool) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| read_error(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(has_headers).trim(csv::Trim::All).from_reader(file))
}

fn csv_problem(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => read_error(path, io),
        other => CliError::Validation(format!("{}: {:?}", path.display(), other)),
    }
}

/// Reads a comma-separated dataset with a header row. `response_col` names
/// the response; every other column is a predictor. Missing or non-numeric
/// cells are rejected.
pub fn read_dataset(path: &Path, response_col: &str) -> CliResult<Dataset> {
    let mut rdr = csv_reader(path, true)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_problem(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let y_at = header.iter().position(|h| h == response_col).ok_or_else(|| {
        CliError::Validation(format!("{}: no column named {response_col:?}", path.display()))
    })?;
    let names: Vec<String> = header.iter().enumerate().filter(|(j, _)| *j != y_at).map(|(_, h)| h.clone()).collect();
    let mut columns = vec![Vec::new(); names.len()];
    let mut y = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_problem(path, e))?;
        let line = row + 2;
        if record.len() != header.len() {
            return Err(CliError::Validation(format!(
                "{}: line {line} has {} fields, expected {}",
                path.display(),
                record.len(),
                header.len()
            )));
        }
        let mut slot = 0;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                CliError::Validation(format!(
                    "{}: line {line}, column {:?}: {cell:?} is not a number",
                    path.display(),
                    header[j]
                ))
            })?;
            if j == y_at {
                y.push(v);
            } else {
                columns[slot].push(v);
                slot += 1;
            }
        }
    }
    Ok(Dataset::new(columns, y, names)?)
}

/// Writes `data` with the response as the last column. Values use the
/// shortest representation that reads back to the same `f64`.
pub fn write_dataset(path: &Path, data: &Dataset, response_col: &str) -> CliResult<()> {
    atomic_write(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = data.names().iter().map(String::as_str).collect();
        header.push(response_col);
        out.write_record(&header)?;
        for i in 0..data.n() {
            let mut row: Vec<String> = data.row(i).iter().map(|v| v.to_string()).collect();
            row.push(data.response()[i].to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    })
}

/// Reads `name,probability` lines. A first line whose probability field is
/// not a number is taken as a header. Predictors absent from the file get
/// probability 0, which leaves their weight at 1.
pub fn read_prior_file(path: &Path, names: &[String], clamp: bool) -> CliResult<Vec<f64>> {
    let mut rdr = csv_reader(path, false)?;
    let mut probs = vec![0.0; names.len()];
    let mut seen = vec![false; names.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_problem(path, e))?;
        let line = row + 1;
        if record.len() != 2 {
            return Err(CliError::Validation(format!(
                "{}: line {line} must have two fields (name, probability)",
                path.display()
            )));
        }
        let p: f64 = match record[1].parse() {
            Ok(p) => p,
            Err(_) if row == 0 => continue,
            Err(_) => {
                return Err(CliError::Validation(format!(
                    "{}: line {line}: {:?} is not a probability",
                    path.display(),
                    &record[1]
                )))
            }
        };
        let j = names.iter().position(|n| n == &record[0]).ok_or_else(|| {
            CliError::Validation(format!("{}: unknown variable {:?}", path.display(), &record[0]))
        })?;
        if seen[j] {
            return Err(CliError::Validation(format!("{}: {:?} listed twice", path.display(), &record[0])));
        }
        seen[j] = true;
        probs[j] = p;
    }
    let spec = PriorSpec::new(probs, 0.0).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(if clamp { spec.clamped() } else { spec }.probabilities)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run leaves no partial output.
pub fn atomic_write<F>(path: &Path, body: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<&mut tempfile::NamedTempFile>) -> Result<(), Box<dyn std::error::Error>>,
{
    let write_err = |e: std::io::Error| CliError::Write { path: path.to_path_buf(), source: e };
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(write_err)?;
    {
        let mut w = BufWriter::new(&mut tmp);
        body(&mut w).map_err(|e| write_err(std::io::Error::other(e.to_string())))?;
        w.flush().map_err(write_err)?;
    }
    tmp.persist(path).map_err(|e| write_err(e.error))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    atomic_write(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn reads_response_from_any_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "a,y,b\n1,10,2\n3,20,4\n5.5,30,-6e-3\n").unwrap();
        let d = read_dataset(&p, "y").unwrap();
        assert_eq!(d.names(), &names(&["a", "b"]));
        assert_eq!(d.response(), &[10.0, 20.0, 30.0]);
        assert_eq!(d.column(1), &[2.0, 4.0, -0.006]);
    }

    #[test]
    fn bad_cells_are_validation_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        for body in ["a,y\n1,2\nx,3\n", "a,y\n1,2\n,3\n", "a,y\n1,2\n3\n", "a,y\n1,2\n2,NaN\n"] {
            fs::write(&p, body).unwrap();
            assert_eq!(read_dataset(&p, "y").unwrap_err().exit_code(), 2, "{body:?}");
        }
        fs::write(&p, "a,y\n1,2\n3,4\n").unwrap();
        assert!(read_dataset(&p, "z").is_err());
        assert_eq!(read_dataset(&dir.path().join("none.csv"), "y").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn written_datasets_read_back_exactly() {
        let (d, _) = bartvs_core::datagen::gen_friedman(40, 6, 5.0, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write_dataset(&p, &d, "y").unwrap();
        assert_eq!(read_dataset(&p, "y").unwrap(), d);
    }

    #[test]
    fn prior_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("prior.csv");
        let vars = names(&["x1", "x2", "x3"]);
        fs::write(&p, "name,prob\nx3,0.99\nx1,0.01\n").unwrap();
        assert_eq!(read_prior_file(&p, &vars, false).unwrap(), vec![0.01, 0.0, 0.99]);
        assert_eq!(read_prior_file(&p, &vars, true).unwrap(), vec![0.05, 0.05, 0.95]);
        fs::write(&p, "x4,0.5\n").unwrap();
        assert_eq!(read_prior_file(&p, &vars, false).unwrap_err().exit_code(), 2);
        fs::write(&p, "x1,1.5\n").unwrap();
        assert!(read_prior_file(&p, &vars, false).is_err());
        fs::write(&p, "x1,0.5\nx1,0.2\n").unwrap();
        assert!(read_prior_file(&p, &vars, false).is_err());
    }

    #[test]
    fn failed_write_leaves_nothing_behind() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        let err = atomic_write(&p, |w| {
            w.write_all(b"partial")?;
            Err("boom".into())
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(!p.exists());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    proptest::proptest! {
        #[test]
        fn any_finite_values_round_trip(
            values in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 6..30),
        ) {
            let n = values.len() / 2;
            let cols = vec![values[..n].to_vec()];
            let y = values[n..2 * n].to_vec();
            let d = Dataset::new(cols, y, vec!["a".into()]).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("r.csv");
            write_dataset(&p, &d, "y").unwrap();
            proptest::prop_assert_eq!(read_dataset(&p, "y").unwrap(), d);
        }
    }
}
