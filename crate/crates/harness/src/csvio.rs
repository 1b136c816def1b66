//! CSV assembly with a pinned column contract. Every file opens with a
//! `# config <hash>` comment so consumers can refuse mixed-config
//! aggregation; numbers print through `f64::Display`, which round-trips.

use crate::HarnessError;

/// The per-snapshot series schema. Column order is a compatibility contract.
pub const SERIES_HEADER: &str =
    "t,norm_s0,norm_s2,norm_s4,weighted_s0,weighted_s2,f_norm_s0,damping_accum,gamma,min_p,min_S,div_H";

/// Per-ε summary schema of the sweep report.
pub const REPORT_HEADER: &str = "epsilon,sup_norm_s0,sup_norm_s2,sup_norm_s4,sup_weighted_f_s0,sup_f_s0,damping_integral,sup_gamma,dt,steps,retries";

/// Incremental CSV text builder.
pub struct CsvBuilder {
    buf: String,
}

impl CsvBuilder {
    pub fn new(config_hash: &str, header: &str) -> CsvBuilder {
        let mut buf = String::new();
        buf.push_str("# config ");
        buf.push_str(config_hash);
        buf.push('\n');
        buf.push_str(header);
        buf.push('\n');
        CsvBuilder { buf }
    }

    pub fn row(&mut self, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            // Display for f64 is the shortest representation that parses
            // back to the same bits, which keeps files diffable and exact.
            self.buf.push_str(&format!("{v}"));
        }
        self.buf.push('\n');
    }

    pub fn comment(&mut self, text: &str) {
        self.buf.push_str("# ");
        self.buf.push_str(text);
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Extract the config hash echoed in a CSV produced by this module.
pub fn read_config_hash(text: &str) -> Result<&str, HarnessError> {
    let first = text.lines().next().unwrap_or("");
    first
        .strip_prefix("# config ")
        .ok_or_else(|| HarnessError::Format("missing `# config <hash>` first line".into()))
}

/// Parse data rows (ignores `#` comments and the header line).
pub fn read_rows(text: &str) -> Result<Vec<Vec<f64>>, HarnessError> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if line.chars().next().is_some_and(|c| c.is_alphabetic()) {
            continue; // header
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| {
            HarnessError::Format(format!("line {}: unparsable number: {e}", ln + 1))
        })?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_produces_hash_header_and_rows() {
        let mut b = CsvBuilder::new("abc123", SERIES_HEADER);
        b.row(&[0.0, 1.5, 0.25]);
        b.row(&[1e-3, 2.0, f64::MIN_POSITIVE]);
        b.comment("slope norm_s0 1.0 0.99 1.01 6");
        let text = b.finish();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# config abc123"));
        assert_eq!(lines.next(), Some(SERIES_HEADER));
        assert_eq!(lines.next(), Some("0,1.5,0.25"));
        assert_eq!(read_config_hash(&text).unwrap(), "abc123");
    }

    #[test]
    fn rows_round_trip_exactly() {
        let vals = [
            0.1,
            1.0 / 3.0,
            6.02e23,
            -0.0,
            f64::MIN_POSITIVE,
            9.869604401089358,
        ];
        let mut b = CsvBuilder::new("h", "a,b,c,d,e,f");
        b.row(&vals);
        let text = b.finish();
        let rows = read_rows(&text).unwrap();
        assert_eq!(rows.len(), 1);
        for (got, want) in rows[0].iter().zip(vals.iter()) {
            assert_eq!(got.to_bits(), want.to_bits());
        }
    }

    #[test]
    fn missing_hash_is_detected() {
        assert!(read_config_hash("t,x\n0,1\n").is_err());
    }

    #[test]
    fn pinned_headers_are_stable() {
        assert_eq!(
            SERIES_HEADER,
            "t,norm_s0,norm_s2,norm_s4,weighted_s0,weighted_s2,f_norm_s0,damping_accum,gamma,min_p,min_S,div_H"
        );
        assert!(REPORT_HEADER.starts_with("epsilon,"));
    }
}
