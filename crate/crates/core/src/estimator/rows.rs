use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::sur::{Equation, SystemData};
use crate::error::{Error, Result};
use crate::panel::MarketPanel;

/// Regressands and regressors of the differential demand system, one row per
/// week after the first. Indexing is `[row][type]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotterdamRows {
    pub types: Vec<String>,
    /// Week label of each row (the later week of the difference).
    pub weeks: Vec<u32>,
    /// `w̄_i · d log q_i`.
    pub lhs: Vec<Vec<f64>>,
    pub dlogp: Vec<Vec<f64>>,
    /// Real expenditure change `d log X − Σ_j w̄_j d log p_j`.
    pub divisia: Vec<f64>,
    /// `(w_t + w_{t−1}) / 2`.
    pub wbar: Vec<Vec<f64>>,
}

impl RotterdamRows {
    pub fn n_rows(&self) -> usize {
        self.divisia.len()
    }

    pub fn n_types(&self) -> usize {
        self.types.len()
    }
}

/// Differences the panel into Rotterdam regression rows.
pub fn build_rows(panel: &MarketPanel) -> Result<RotterdamRows> {
    let t_len = panel.n_weeks();
    let n = panel.n_types();
    if t_len < 3 {
        return Err(Error::invalid(format!("need at least 3 weeks, got {t_len}")));
    }
    for t in 0..t_len {
        for i in 0..n {
            if !(panel.price[t][i] > 0.0) || !(panel.quantity[t][i] > 0.0) {
                return Err(Error::invalid(format!(
                    "non-positive price or quantity at week {} for `{}`",
                    panel.weeks[t], panel.types[i]
                )));
            }
        }
    }
    let mut rows = RotterdamRows {
        types: panel.types.clone(),
        weeks: panel.weeks[1..].to_vec(),
        lhs: Vec::with_capacity(t_len - 1),
        dlogp: Vec::with_capacity(t_len - 1),
        divisia: Vec::with_capacity(t_len - 1),
        wbar: Vec::with_capacity(t_len - 1),
    };
    for t in 1..t_len {
        let wbar: Vec<f64> = (0..n)
            .map(|i| 0.5 * (panel.share[t][i] + panel.share[t - 1][i]))
            .collect();
        let dlogp: Vec<f64> = (0..n)
            .map(|i| panel.price[t][i].ln() - panel.price[t - 1][i].ln())
            .collect();
        let lhs: Vec<f64> = (0..n)
            .map(|i| wbar[i] * (panel.quantity[t][i].ln() - panel.quantity[t - 1][i].ln()))
            .collect();
        let dlogx = panel.expenditure[t].ln() - panel.expenditure[t - 1].ln();
        let index: f64 = wbar.iter().zip(&dlogp).map(|(w, d)| w * d).sum();
        rows.divisia.push(dlogx - index);
        rows.wbar.push(wbar);
        rows.dlogp.push(dlogp);
        rows.lhs.push(lhs);
    }
    Ok(rows)
}

/// Per-equation coefficient labels: `a[i]`, `b[i]`, then `c[i,j]` for every j.
pub fn rotterdam_names(types: &[String]) -> Vec<String> {
    let mut names = Vec::with_capacity(types.len() * (types.len() + 2));
    for ti in types {
        names.push(format!("a[{ti}]"));
        names.push(format!("b[{ti}]"));
        for tj in types {
            names.push(format!("c[{ti},{tj}]"));
        }
    }
    names
}

/// Width of each equation's coefficient block: intercept, `b`, and `n` prices.
pub fn block_width(n: usize) -> usize {
    n + 2
}

/// Every equation shares the regressors `[1, divisia, d log p_1..n]`.
pub fn rotterdam_system(rows: &RotterdamRows) -> SystemData {
    let n = rows.n_types();
    let t = rows.n_rows();
    let x = DMatrix::from_fn(t, n + 2, |r, c| match c {
        0 => 1.0,
        1 => rows.divisia[r],
        _ => rows.dlogp[r][c - 2],
    });
    let equations = (0..n)
        .map(|i| Equation {
            name: rows.types[i].clone(),
            y: DVector::from_fn(t, |r, _| rows.lhs[r][i]),
            x: x.clone(),
        })
        .collect();
    SystemData { equations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn panel(price: Vec<Vec<f64>>, quantity: Vec<Vec<f64>>) -> MarketPanel {
        let n = price[0].len();
        let weeks = (0..price.len() as u32).collect();
        MarketPanel::from_prices_quantities((0..n).map(|i| format!("g{i}")).collect(), weeks, price, quantity).unwrap()
    }

    #[test]
    fn constant_panel_gives_zero_rows() {
        let p = panel(vec![vec![2.0, 3.0]; 4], vec![vec![5.0, 7.0]; 4]);
        let rows = build_rows(&p).unwrap();
        assert_eq!(rows.n_rows(), 3);
        for r in 0..3 {
            assert_eq!(rows.divisia[r], 0.0);
            assert_eq!(rows.lhs[r], vec![0.0, 0.0]);
            assert_eq!(rows.dlogp[r], vec![0.0, 0.0]);
        }
    }

    #[test]
    fn doubled_price_gives_ln2() {
        let p = panel(
            vec![vec![2.0, 3.0], vec![4.0, 3.0], vec![4.0, 3.0]],
            vec![vec![5.0, 7.0]; 3],
        );
        let rows = build_rows(&p).unwrap();
        assert_relative_eq!(rows.dlogp[0][0], std::f64::consts::LN_2, epsilon = 1e-15);
        assert_eq!(rows.dlogp[0][1], 0.0);
    }

    #[test]
    fn two_good_hand_computation() {
        // week 0: p = (1, 2), q = (10, 5) → X = 20, w = (0.5, 0.5)
        // week 1: p = (1, 4), q = (20, 5) → X = 40, w = (0.5, 0.5)
        let p = panel(
            vec![vec![1.0, 2.0], vec![1.0, 4.0], vec![1.0, 4.0]],
            vec![vec![10.0, 5.0], vec![20.0, 5.0], vec![20.0, 5.0]],
        );
        let rows = build_rows(&p).unwrap();
        let ln2 = 2f64.ln();
        // d log X = ln 2; price index = 0.5·0 + 0.5·ln 2
        assert_relative_eq!(rows.divisia[0], ln2 - 0.5 * ln2, epsilon = 1e-15);
        assert_relative_eq!(rows.lhs[0][0], 0.5 * ln2, epsilon = 1e-15);
        assert_eq!(rows.lhs[0][1], 0.0);
        assert_eq!(rows.wbar[0], vec![0.5, 0.5]);
        assert_eq!(rows.weeks, vec![1, 2]);
    }

    #[test]
    fn rejects_short_or_nonpositive_panels() {
        let p = panel(vec![vec![2.0, 3.0]; 2], vec![vec![5.0, 7.0]; 2]);
        assert!(build_rows(&p).is_err());
        let mut p = panel(vec![vec![2.0, 3.0]; 3], vec![vec![5.0, 7.0]; 3]);
        p.quantity[1][1] = 0.0;
        assert!(build_rows(&p).unwrap_err().to_string().contains("week 1"));
    }

    #[test]
    fn wbar_rows_sum_to_one() {
        let p = panel(
            vec![vec![2.0, 3.0, 1.0], vec![2.1, 2.9, 1.2], vec![1.9, 3.3, 1.1]],
            vec![vec![5.0, 7.0, 1.0], vec![4.0, 8.0, 2.0], vec![6.0, 6.5, 1.5]],
        );
        let rows = build_rows(&p).unwrap();
        for w in &rows.wbar {
            assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        }
        let sys = rotterdam_system(&rows);
        assert_eq!(sys.equations.len(), 3);
        assert_eq!(sys.equations[0].x.ncols(), block_width(3));
        assert_eq!(rotterdam_names(&rows.types)[2], "c[g0,g0]");
    }
}
