//! Rendering and argument-parsing helpers shared by the subcommands:
//! deterministic number formatting, flat CSV/JSON tables, and the
//! list/range grammars used by sweep and region grids.

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Shortest round-trip decimal, capped at 12 significant digits.
/// Infinities print as `inf`/`-inf`, NaN as `undefined`.
pub fn fmt_f64(value: f64) -> String {
    if value.is_nan() {
        return "undefined".to_string();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if value == 0.0 {
        return "0".to_string();
    }
    let shortest = format!("{value}");
    if significant_digits(&shortest) <= 12 {
        return shortest;
    }
    let rounded: f64 = format!("{value:.11e}").parse().expect("rounded float");
    format!("{rounded}")
}

fn significant_digits(s: &str) -> usize {
    s.chars()
        .filter(char::is_ascii_digit)
        .collect::<String>()
        .trim_start_matches('0')
        .len()
}

/// A flat table of stringly cells with fixed column order.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Array of flat records mirroring the CSV columns, cell for cell.
    fn render_json(&self) -> String {
        let mut out = String::from("[");
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(if i == 0 { "\n" } else { ",\n" });
            out.push('{');
            for (j, (column, cell)) in self.columns.iter().zip(row).enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(column).expect("column name"));
                out.push(':');
                out.push_str(&serde_json::to_string(cell).expect("cell"));
            }
            out.push('}');
        }
        out.push_str("\n]\n");
        out
    }
}

fn parse_num(text: &str) -> Result<f64, String> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| format!("`{text}` is not a number"))
}

/// Value list grammar: empty, a single number, `a,b,c`, or
/// `start:end:step` with both endpoints included (the end within
/// 1e-12 of the lattice).
pub fn parse_values(spec: &str) -> Result<Vec<f64>, String> {
    let s = spec.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range `{s}` must look like start:end:step"));
        }
        let start = parse_num(parts[0])?;
        let end = parse_num(parts[1])?;
        let step = parse_num(parts[2])?;
        if step.is_nan() || step <= 0.0 {
            return Err(format!("step must be positive in `{s}`"));
        }
        if start > end {
            return Err(format!("range `{s}` must have start <= end"));
        }
        let mut values = Vec::new();
        for k in 0.. {
            let value = start + step * k as f64;
            if value > end + 1e-12 {
                break;
            }
            values.push(value);
        }
        Ok(values)
    } else {
        s.split(',').map(parse_num).collect()
    }
}

/// Interval grammar for grid axes: `a:b`, or a single value for a
/// degenerate interval.
pub fn parse_interval(spec: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    match parts.len() {
        1 => {
            let v = parse_num(parts[0])?;
            Ok((v, v))
        }
        2 => {
            let a = parse_num(parts[0])?;
            let b = parse_num(parts[1])?;
            if a > b {
                Err(format!("interval `{spec}` must have start <= end"))
            } else {
                Ok((a, b))
            }
        }
        _ => Err(format!("interval `{spec}` must look like start:end")),
    }
}

/// Grid-shape grammar: `COLSxROWS`, e.g. `400x200`.
pub fn parse_grid(spec: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = spec.trim().split('x').collect();
    if parts.len() != 2 {
        return Err(format!("grid `{spec}` must look like NxM"));
    }
    let n: usize = parts[0]
        .parse()
        .map_err(|_| format!("`{}` is not a count", parts[0]))?;
    let m: usize = parts[1]
        .parse()
        .map_err(|_| format!("`{}` is not a count", parts[1]))?;
    if n == 0 || m == 0 {
        return Err(format!("grid `{spec}` must have positive counts"));
    }
    Ok((n, m))
}
