//! CSV emission (RFC-4180-style: CRLF separators, numeric cells).

use crate::error::Result;
use std::io::Write;

pub fn write_csv(
    w: &mut impl Write,
    header: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<()> {
    write!(w, "{}\r\n", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        write!(w, "{}\r\n", cells.join(","))?;
    }
    Ok(())
}

/// Band-structure rows: `k_1..k_d, omega_1..omega_n`.
pub fn band_header(d: usize, n_max: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=d).map(|i| format!("k_{i}")).collect();
    h.extend((1..=n_max).map(|i| format!("omega_{i}")));
    h
}

/// Dispersion-surface rows: `K_1..K_d, Omega_1..Omega_N`.
pub fn dispersion_header(d: usize, n: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=d).map(|i| format!("K_{i}")).collect();
    h.extend((1..=n).map(|i| format!("Omega_{i}")));
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_crlf_numeric() {
        let mut buf = Vec::new();
        write_csv(
            &mut buf,
            &["a", "b"],
            vec![vec![1.0, 2.5], vec![-0.125, 3.0]].into_iter(),
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "a,b\r\n1.0,2.5\r\n-0.125,3.0\r\n");
    }
}
