use std::fmt::Write as _;

use nalgebra::dmatrix;

use crate::error::Result;
use crate::matcore::{singular_values, DenseMatrix};

use super::fmt_f64;

/// Norm values of the two 2×2 families at one `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyRow {
    pub x: f64,
    /// `[1 1; 3 x]`
    pub nuclear_a: f64,
    pub pssv_a: f64,
    /// `[1 1; 1 x]`
    pub nuclear_b: f64,
    pub pssv_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyArgmin {
    pub family: &'static str,
    pub norm: &'static str,
    pub x: f64,
    pub value: f64,
    pub sigma: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyFig2 {
    pub rows: Vec<ToyRow>,
    pub argmins: Vec<ToyArgmin>,
}

impl ToyFig2 {
    pub fn argmin(&self, family: &str, norm: &str) -> Option<&ToyArgmin> {
        self.argmins
            .iter()
            .find(|a| a.family == family && a.norm == norm)
    }

    /// Long format, `family,x,nuclear,pssv`; family `a` is `[1 1; 3 x]` and
    /// family `b` is `[1 1; 1 x]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("family,x,nuclear,pssv\n");
        for (family, pick) in [("a", false), ("b", true)] {
            for r in &self.rows {
                let (nuc, pssv) = if pick {
                    (r.nuclear_b, r.pssv_b)
                } else {
                    (r.nuclear_a, r.pssv_a)
                };
                let _ = writeln!(
                    out,
                    "{family},{},{},{}",
                    fmt_f64(r.x),
                    fmt_f64(nuc),
                    fmt_f64(pssv)
                );
            }
        }
        out
    }

    /// `family,norm,x,value,sigma1,sigma2`, one row per minimized curve.
    pub fn argmin_csv(&self) -> String {
        let mut out = String::from("family,norm,x,value,sigma1,sigma2\n");
        for a in &self.argmins {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                a.family,
                a.norm,
                fmt_f64(a.x),
                fmt_f64(a.value),
                fmt_f64(a.sigma[0]),
                fmt_f64(a.sigma[1])
            );
        }
        out
    }
}

fn family(corner: f64, x: f64) -> DenseMatrix {
    dmatrix![1.0, 1.0; corner, x]
}

fn spectrum(m: &DenseMatrix) -> Result<[f64; 2]> {
    let s = singular_values(m)?;
    Ok([s[0], s[1]])
}

/// Nuclear norm vs. partial sum (`p = 1`) of `[1 1; 3 x]` and `[1 1; 1 x]`
/// for `x = 0, 0.01, …, 4`, with the minimizer of each curve.
///
/// On the first family the nuclear norm bottoms out at the full-rank point
/// `x = 1` while the partial sum reaches zero at the rank-one point `x = 3`;
/// on the second both are minimized by the rank-one point `x = 1`.
pub fn run_toy_fig2() -> Result<ToyFig2> {
    let mut rows = Vec::with_capacity(401);
    for i in 0..=400 {
        let x = i as f64 / 100.0;
        let a = spectrum(&family(3.0, x))?;
        let b = spectrum(&family(1.0, x))?;
        rows.push(ToyRow {
            x,
            nuclear_a: a[0] + a[1],
            pssv_a: a[1],
            nuclear_b: b[0] + b[1],
            pssv_b: b[1],
        });
    }

    let curves: [(&'static str, &'static str, f64, fn(&ToyRow) -> f64); 4] = [
        ("a", "nuclear", 3.0, |r| r.nuclear_a),
        ("a", "pssv", 3.0, |r| r.pssv_a),
        ("b", "nuclear", 1.0, |r| r.nuclear_b),
        ("b", "pssv", 1.0, |r| r.pssv_b),
    ];
    let mut argmins = Vec::with_capacity(curves.len());
    for (fam, norm, corner, value) in curves {
        // first minimum wins ties
        let best = rows.iter().fold(
            &rows[0],
            |best, r| if value(r) < value(best) { r } else { best },
        );
        argmins.push(ToyArgmin {
            family: fam,
            norm,
            x: best.x,
            value: value(best),
            sigma: spectrum(&family(corner, best.x))?,
        });
    }
    Ok(ToyFig2 { rows, argmins })
}
