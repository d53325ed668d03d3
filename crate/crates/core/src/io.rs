//! Deterministic number formatting and CSV helpers.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats `x` with 12 significant digits, `%g` style: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let p = SIGNIFICANT_DIGITS as i32;
    let sci = format!("{:.*e}", (p - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= p {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes rows of numbers under `header` with fixed formatting.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| format_sig(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric two-column table whose header must equal `header` exactly.
pub fn read_pairs<R: Read>(input: R, header: [&str; 2]) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let found: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(Error::Config(format!(
            "CSV header must be exactly '{}', got '{}'",
            header.join(","),
            found.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Config(format!("CSV row {} has {} fields, expected 2", i + 2, rec.len())));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("CSV row {}: '{s}' is not a number", i + 2)))
        };
        rows.push((parse(&rec[0])?, parse(&rec[1])?));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(1.63), "1.63");
        assert_eq!(format_sig(9.354004377711), "9.35400437771");
        assert_eq!(format_sig(-0.25), "-0.25");
        assert_eq!(format_sig(1e-7), "1e-07");
        assert_eq!(format_sig(123456789012345.0), "1.23456789012e+14");
        assert_eq!(format_sig(100.0), "100");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(2.0 / 3.0), "0.666666666667");
    }

    #[test]
    fn table_round_trip() {
        let mut buf = Vec::new();
        write_table(&mut buf, &["E_keV", "sigma_fm2"], vec![vec![1.0, 2.5], vec![1.5, 1e-9]]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "E_keV,sigma_fm2\n1,2.5\n1.5,1e-09\n");
        let rows = read_pairs(buf.as_slice(), ["E_keV", "sigma_fm2"]).unwrap();
        assert_eq!(rows, vec![(1.0, 2.5), (1.5, 1e-9)]);
        assert!(read_pairs("E,sigma\n1,2\n".as_bytes(), ["E_keV", "sigma_fm2"]).is_err());
        assert!(read_pairs("E_keV,sigma_fm2\n1,x\n".as_bytes(), ["E_keV", "sigma_fm2"]).is_err());
    }
}
