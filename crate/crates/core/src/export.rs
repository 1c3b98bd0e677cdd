//! CSV serialisation with a fixed 17-significant-digit number format.

use crate::analytic::AnalyticCurves;
use crate::sde::EnsembleSummary;

pub const CURVES_HEADER: &str = "t,y,z,z1,var_x,w,vol,q";
pub const SUMMARY_HEADER: &str = "t,mean_X,var_X,volhat,se_volhat";
pub const DENSITY_HEADER: &str = "x,density";

/// `{:.16e}` for finite values, `NaN`, `inf` or `-inf` otherwise.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Header line followed by one line per row, LF terminated.
pub fn numeric_csv<'a>(header: &str, rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut out = String::with_capacity(1024);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn curves_csv(c: &AnalyticCurves) -> String {
    let rows: Vec<[f64; 8]> = c
        .grid
        .times()
        .enumerate()
        .map(|(k, t)| {
            [
                t, c.y[k], c.z[k], c.z1[k], c.var_x[k], c.w[k], c.vol[k], c.q[k],
            ]
        })
        .collect();
    numeric_csv(CURVES_HEADER, rows.iter().map(|r| r.as_slice()))
}

pub fn summary_csv(s: &EnsembleSummary) -> String {
    let (vol, se) = (s.volhat(), s.volhat_se());
    let rows: Vec<[f64; 5]> = s
        .grid
        .times()
        .enumerate()
        .map(|(k, t)| [t, s.level[k].mean, s.level[k].variance, vol[k], se[k]])
        .collect();
    numeric_csv(SUMMARY_HEADER, rows.iter().map(|r| r.as_slice()))
}

/// Two-column `(x, density)` table of `f` on `n + 1` evenly spaced points.
pub fn density_csv(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> String {
    let h = (hi - lo) / n as f64;
    let rows: Vec<[f64; 2]> = (0..=n)
        .map(|i| {
            let x = if i == n { hi } else { lo + h * i as f64 };
            [x, f(x)]
        })
        .collect();
    numeric_csv(DENSITY_HEADER, rows.iter().map(|r| r.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_num(f64::NAN), "NaN");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn density_table_shape() {
        let text = density_csv(|x| x * x, 0.0, 1.0, 4);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], DENSITY_HEADER);
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[5], "1.0000000000000000e0,1.0000000000000000e0");
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }
}
