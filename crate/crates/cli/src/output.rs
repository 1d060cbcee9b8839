use std::io::Write;
use std::path::Path;

use ccsc_core::optimizer::sig6;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<ccsc_core::Error> for CliError {
    fn from(e: ccsc_core::Error) -> Self {
        Self {
            code: if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE },
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn emit(text: &str, target: Option<&Path>) -> CliResult<()> {
    match target {
        Some(path) => write_file(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}")))
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

pub fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Parses `start:step:stop` (inclusive, within half a step) or `a,b,c`.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(CliError::usage("power grid is empty"));
    }
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::usage(format!("`{s}` is not a finite number")))
    };
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::usage("range grid must be start:step:stop"));
        }
        let (start, step, stop) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
        if step <= 0.0 {
            return Err(CliError::usage("grid step must be positive"));
        }
        let count = ((stop - start) / step + 0.5).floor();
        if count < 0.0 {
            return Err(CliError::usage("power grid is empty"));
        }
        (0..=count as usize).map(|n| start + n as f64 * step).collect()
    } else {
        spec.split(',').map(number).collect::<CliResult<Vec<f64>>>()?
    };
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::usage("power grid must be strictly increasing"));
    }
    Ok(grid)
}

/// CSV text with a versioned comment line and six significant digits.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(kind: &str, columns: &[String]) -> Self {
        Self {
            text: format!("# ccsc {kind} v1\n{}\n", columns.join(",")),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        self.row_prefixed(&[], values);
    }

    /// A row whose leading cells are written verbatim (indices, counts).
    pub fn row_prefixed(&mut self, prefix: &[String], values: &[f64]) {
        let cells: Vec<String> = prefix.iter().cloned().chain(values.iter().map(|&v| sig6(v))).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("-10:5:10").unwrap(), vec![-10.0, -5.0, 0.0, 5.0, 10.0]);
        assert_eq!(parse_grid("0, 2.5,7").unwrap(), vec![0.0, 2.5, 7.0]);
        assert_eq!(parse_grid("3").unwrap(), vec![3.0]);
        for bad in ["", "1,1", "5:1:0", "0:0:5", "0:1", "a,b", "2,1"] {
            assert_eq!(parse_grid(bad).unwrap_err().code, EXIT_USAGE, "{bad}");
        }
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new("test", &["a".into(), "b".into()]);
        c.row(&[1.0, 0.5]);
        assert_eq!(c.finish(), "# ccsc test v1\na,b\n1.00000,0.500000\n");
    }
}
