//! Trajectory CSV files.
//!
//! Columns are `t`, then `x0..x{n-1}` for the state, then `u0..u{m-1}` for
//! the input applied at that step. The last row has no input, so its input
//! cells are empty. Floats are written in their shortest round-trip form,
//! which makes a write followed by a read bit-exact.

use std::path::Path;

use hyperstl::semantics::Trace;
use hyperstl::system::InputSequence;

use crate::CliError;

pub fn header(n: usize, m: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain((0..n).map(|i| format!("x{i}")))
        .chain((0..m).map(|i| format!("u{i}")))
        .collect()
}

pub fn write_trace(
    path: &Path,
    trace: &Trace,
    inputs: Option<&InputSequence>,
) -> Result<(), CliError> {
    let m = inputs.map_or(0, InputSequence::m);
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(header(trace.dim(), m))
        .map_err(|e| CliError::io(path, e))?;
    for (t, x) in trace.states().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(x.iter().map(f64::to_string));
        match inputs {
            Some(u) if t < u.len() => row.extend(u.step(t).iter().map(f64::to_string)),
            _ => row.extend(std::iter::repeat_n(String::new(), m)),
        }
        w.write_record(&row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads the state columns of a trajectory CSV.
pub fn read_trace(path: &Path) -> Result<Trace, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let head = r.headers().map_err(|e| CliError::io(path, e))?.clone();
    let cols: Vec<usize> = head
        .iter()
        .enumerate()
        .filter(|(_, h)| {
            h.strip_prefix('x')
                .is_some_and(|d| d.parse::<usize>().is_ok())
        })
        .map(|(i, _)| i)
        .collect();
    if cols.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no state columns `x0`, `x1`, ...",
            path.display()
        )));
    }
    let mut states = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let x = cols
            .iter()
            .map(|&c| {
                let cell = rec.get(c).unwrap_or("");
                cell.trim().parse::<f64>().map_err(|_| {
                    // Header is line 1.
                    CliError::Usage(format!(
                        "{}:{}: `{cell}` is not a number",
                        path.display(),
                        row + 2
                    ))
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        states.push(x);
    }
    Trace::new(states).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let tr = Trace::new(vec![
            vec![0.1, 1.0 / 3.0],
            vec![-2.5e-17, 7.0],
            vec![f64::MAX, -0.0],
        ])
        .unwrap();
        let u = InputSequence::from_steps(vec![vec![0.2], vec![std::f64::consts::PI]]).unwrap();
        write_trace(&p, &tr, Some(&u)).unwrap();
        let back = read_trace(&p).unwrap();
        let bits = |t: &Trace| t.as_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&tr));
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t,x0,x1,u0\n"), "{text}");
        assert!(
            text.trim_end().ends_with(','),
            "last row leaves the input empty: {text}"
        );
    }

    #[test]
    fn bad_cell_names_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "t,x0\n0,1\n1,abc\n").unwrap();
        let e = read_trace(&p).unwrap_err().to_string();
        assert!(e.contains("t.csv:3"), "{e}");
    }
}
