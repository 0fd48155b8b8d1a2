//! CSV serialization of experiment results.
//!
//! All floating-point fields are written in scientific notation with 17
//! significant digits, which round-trips every finite `f64` exactly; headers
//! and row order are part of the output contract and are relied on by
//! downstream plotting.

use crate::harness::ErrorTable;
use crate::scheme::PathRecord;

/// Formats a float with 17 significant digits (`{:.16e}`), enough to
/// reproduce the exact bit pattern on re-parse.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Error table with header `scheme,N,mc_runs,rmse,stderr_rmse`; rows keep
/// the table's (scheme, N) order.
pub fn error_table_csv(table: &ErrorTable) -> String {
    let mut out = String::from("scheme,N,mc_runs,rmse,stderr_rmse\n");
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.scheme.name(),
            row.n_steps,
            row.mc_runs,
            fmt_float(row.rmse),
            fmt_float(row.stderr_rmse),
        ));
    }
    out
}

/// Spectral snapshots of one path with header `t,k,coeff`: for every
/// recorded time, one row per mode (k is 1-based).
pub fn snapshot_csv(path: &PathRecord) -> String {
    let mut out = String::from("t,k,coeff\n");
    for (t, state) in path.times().iter().zip(path.states()) {
        for (k, c) in state.coeffs().iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", fmt_float(*t), k + 1, fmt_float(*c)));
        }
    }
    out
}

/// Reference order lines 0.4·N^{-1/8}, 0.4·N^{-1/4}, 0.4·N^{-1/2} for
/// plotting next to the measured errors. The exponents are inverse powers of
/// two, so repeated square roots evaluate them correctly rounded, which a
/// general `powf` does not guarantee.
pub fn order_lines_csv(n_list: &[u64]) -> String {
    let mut out = String::from("N,order_eighth,order_quarter,order_half\n");
    for &n in n_list {
        let half = (n as f64).sqrt();
        let quarter = half.sqrt();
        let eighth = quarter.sqrt();
        out.push_str(&format!(
            "{},{},{},{}\n",
            n,
            fmt_float(0.4 / eighth),
            fmt_float(0.4 / quarter),
            fmt_float(0.4 / half),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ErrorRow;
    use crate::scheme::SchemeKind;

    #[test]
    fn float_format_round_trips_bitwise() {
        let samples = [
            0.0,
            -0.0,
            1.0,
            -1.0,
            1.0 / 3.0,
            std::f64::consts::PI,
            1e-300,
            -2.2250738585072014e-308,
            6.02214076e23,
            0.1 + 0.2,
        ];
        for &x in &samples {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s} -> {back}");
        }
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn error_table_header_and_rows() {
        let table = ErrorTable {
            rows: vec![ErrorRow {
                scheme: SchemeKind::TruncExpEuler,
                n_steps: 64,
                mc_runs: 10,
                rmse: 0.125,
                stderr_rmse: 0.0078125,
            }],
        };
        let csv = error_table_csv(&table);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("scheme,N,mc_runs,rmse,stderr_rmse"));
        assert_eq!(
            lines.next(),
            Some("exp_euler,64,10,1.2500000000000000e-1,7.8125000000000000e-3")
        );
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn snapshot_rows_cover_each_recorded_time() {
        use crate::drift::{IndicatorVariant, PolynomialDrift};
        use crate::noise::NoiseSource;
        use crate::scheme::{run_path, RecordSpec, SchemeContext};
        use crate::spectral::{ModeBasis, SpectralField};

        let basis = ModeBasis::new(2, 1.0).unwrap();
        let ctx = SchemeContext::new(
            basis,
            PolynomialDrift::ginzburg_landau(),
            1.0 / 6.0,
            IndicatorVariant::StateNorm,
            1.0,
        )
        .unwrap();
        let src = NoiseSource::new(3, 0, 2, 4, 1.0, 1.0).unwrap();
        let path = run_path(
            &ctx,
            SchemeKind::TruncExpEuler,
            4,
            &src,
            1,
            &SpectralField::zero(2),
            RecordSpec::Every(4),
        )
        .unwrap();
        let csv = snapshot_csv(&path);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,k,coeff");
        // Two recorded times (t = 0 and t = T) at two modes each.
        assert_eq!(lines.len(), 1 + 2 * 2);
        assert!(lines[1].starts_with("0.0000000000000000e0,1,"));
        assert!(lines[3].starts_with("1.0000000000000000e0,1,"));
        assert_eq!(lines[1].split(',').nth(2), Some("0.0000000000000000e0"));
    }

    #[test]
    fn order_lines_match_closed_forms() {
        let csv = order_lines_csv(&[64, 256]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("N,order_eighth,order_quarter,order_half"));
        let first = lines.next().unwrap();
        let cols: Vec<&str> = first.split(',').collect();
        assert_eq!(cols[0], "64");
        // Correctly rounded doubles of 0.4·64^{-1/8}, 0.4·64^{-1/4}, 0.4·64^{-1/2}.
        assert_eq!(cols[1], "2.3784142300054420e-1");
        assert_eq!(cols[2], "1.4142135623730950e-1");
        assert_eq!(cols[3], "5.0000000000000003e-2");
        assert_eq!(csv.lines().count(), 3);
    }
}
