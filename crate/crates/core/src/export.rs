//! CSV tables of computed traces. Numbers are written with Rust's
//! locale-independent formatting; missing values are empty fields.

use std::io::Write;

use crate::error::{Error, Result};
use crate::eta::EtaSolution;
use crate::front::FrontTrace;
use crate::means::MeanEstimate;
use crate::scalar::Real;
use crate::speed::{EigenCurve, SpeedCurve};

fn io_error(e: impl std::fmt::Display) -> Error {
    Error::Domain(format!("write failed: {e}"))
}

fn cell<T: Real>(v: Option<T>) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{v}"),
        _ => String::new(),
    }
}

fn table<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(io_error)?;
    for r in rows {
        w.write_record(&r).map_err(io_error)?;
    }
    w.flush().map_err(io_error)
}

/// `n, S_lambda, c_lambda, harnack_ratio`; `c_lambda` is the speed on
/// `(n, n + 1)` and is empty on the last row.
pub fn write_eta<T: Real, W: Write>(out: W, es: &EtaSolution<T>) -> Result<()> {
    let rows = (0..es.log_s.len()).map(|n| {
        vec![
            n.to_string(),
            cell(Some(es.log_s[n])),
            cell(es.c_samples.get(n).copied()),
            cell(Some(es.harnack_ratios[n])),
        ]
    });
    table(out, &["n", "S_lambda", "c_lambda", "harnack_ratio"], rows)
}

/// `lambda, lm_c, um_c, D_k0, D_k0/2, D_k0/4, k_lambda, kappa_lambda`. The
/// eigenvalue columns are filled where `ec` has the same rate.
pub fn write_speed_curve<T: Real, W: Write>(out: W, sc: &SpeedCurve<T>, ec: Option<&EigenCurve<T>>) -> Result<()> {
    let lookup = |l: T, vals: fn(&EigenCurve<T>) -> &Vec<T>| {
        ec.and_then(|ec| {
            ec.lambda_grid
                .iter()
                .position(|m| (*m - l).abs() <= T::lit(1e-12) * (T::one() + l.abs()))
                .map(|i| vals(ec)[i])
        })
    };
    let rows = sc.lambda_grid.iter().enumerate().map(|(i, &l)| {
        vec![
            cell(Some(l)),
            cell(Some(sc.lm_c[i])),
            cell(Some(sc.um_c[i])),
            cell(Some(sc.d[i][0])),
            cell(Some(sc.d[i][1])),
            cell(Some(sc.d[i][2])),
            cell(lookup(l, |e| &e.k_vals)),
            cell(lookup(l, |e| &e.kappa_vals)),
        ]
    });
    table(
        out,
        &["lambda", "lm_c", "um_c", "D_k0", "D_k0/2", "D_k0/4", "k_lambda", "kappa_lambda"],
        rows,
    )
}

/// `lambda, k_lambda, kappa_lambda, kappa_plus_lambda`.
pub fn write_eigen_curve<T: Real, W: Write>(out: W, ec: &EigenCurve<T>) -> Result<()> {
    let rows = ec.lambda_grid.iter().enumerate().map(|(i, &l)| {
        vec![
            cell(Some(l)),
            cell(Some(ec.k_vals[i])),
            cell(Some(ec.kappa_vals[i])),
            cell(Some(ec.kappa_plus_vals[i])),
        ]
    });
    table(out, &["lambda", "k_lambda", "kappa_lambda", "kappa_plus_lambda"], rows)
}

/// `t, X_theta, inst_speed`; the speed on `(t, t + Delta)`.
pub fn write_front<T: Real, W: Write>(out: W, trace: &FrontTrace<T>) -> Result<()> {
    let rows = trace.times.iter().enumerate().map(|(i, &t)| {
        vec![
            cell(Some(t)),
            cell(trace.x_theta[i]),
            cell(trace.inst_speed.get(i).copied()),
        ]
    });
    table(out, &["t", "X_theta", "inst_speed"], rows)
}

/// `T, value`: the windowed extremum at each window length.
pub fn write_mean_trace<T: Real, W: Write>(out: W, est: &MeanEstimate<T>) -> Result<()> {
    let rows = est.trace.iter().map(|(t, v)| vec![cell(Some(*t)), cell(Some(*v))]);
    table(out, &["T", "value"], rows)
}

/// Long format `t, x, u` of the stored profile snapshots.
pub fn write_snapshots<T: Real, W: Write>(out: W, trace: &FrontTrace<T>) -> Result<()> {
    let g = trace.grid;
    let rows = trace.snapshots.iter().flat_map(move |(t, u)| {
        u.iter()
            .enumerate()
            .map(move |(j, v)| vec![cell(Some(*t)), cell(Some(g.x(j))), cell(Some(*v))])
    });
    table(out, &["t", "x", "u"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{make_builtin, Family, Params};
    use crate::eta::{compute_eta, EtaOptions};
    use crate::means::{least_mean, SampledFunction};
    use crate::parabolic::CellGrid;

    #[test]
    fn eta_table_shape() {
        let (cf, _) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
        let g = CellGrid::auto(32, &cf, 1.0, 1.0, 1.0).unwrap();
        let es = compute_eta(&cf, 1.0, &g, &EtaOptions::with_horizon(50)).unwrap();
        let mut buf = Vec::new();
        write_eta(&mut buf, &es).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,S_lambda,c_lambda,harnack_ratio");
        assert_eq!(lines.len(), 52);
        assert!(lines[51].contains(",,"));
        let c: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert!((c - 2.0).abs() < 1e-4);
    }

    #[test]
    fn mean_trace_round_trips() {
        let g = SampledFunction::<f64>::from_fn(0.5, 40.0, |t| t.sin()).unwrap();
        let est = least_mean(&g, 20.0).unwrap();
        let mut buf = Vec::new();
        write_mean_trace(&mut buf, &est).unwrap();
        let mut r = csv::Reader::from_reader(buf.as_slice());
        let vals: Vec<(f64, f64)> = r
            .records()
            .map(|rec| {
                let rec = rec.unwrap();
                (rec[0].parse().unwrap(), rec[1].parse().unwrap())
            })
            .collect();
        assert_eq!(vals, est.trace);
    }
}
