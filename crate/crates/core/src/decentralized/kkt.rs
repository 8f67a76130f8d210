//! Optimality certificate for the followers' responses.
//!
//! For each lot the relaxed follower problem is
//!
//! ```text
//! max  sum_p m_p X_p
//! s.t. sum_p X_p <= S                 (u)
//!      -X_p + k_lo_p Z_p <= 0          (v_p)
//!       X_p - k_hi_p Z_p <= 0          (w_p)
//!      sum_p Z_p = 1                   (gamma, free)
//!       Z_p <= 1                       (k_p)
//!       X_p >= 0, Z_p >= 0             (l_p, m_p)
//! ```
//!
//! Stationarity reads `m_p - u + v_p - w_p + l_p = 0` for `X_p` and
//! `k_lo_p v_p - k_hi_p w_p + gamma + k_p - mz_p = 0` for `Z_p`. Multipliers
//! are built from the optimal value and every condition is checked row by
//! row; a response that satisfies all of them is optimal.

use serde::{Deserialize, Serialize};

use super::follower::{margin, FollowerResponse, PriceVector};
use crate::error::{BlendError, Result};
use crate::model::ProblemInstance;

pub const KKT_TOL: f64 = 1e-8;

/// Multipliers of one lot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotMultipliers {
    pub u: f64,
    pub gamma: f64,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub l: Vec<f64>,
    pub m: Vec<f64>,
    pub k: Vec<f64>,
}

/// Largest residual of each condition family over all lots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub rows: Vec<(String, f64)>,
    pub multipliers: Vec<LotMultipliers>,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

const ROWS: [&str; 11] = [
    "primal", "dual_feasibility", "dual_1", "dual_2", "dual_3", "dual_4", "dual_5", "dual_6", "dual_7", "dual_8",
    "dual_9",
];

/// Checks every response against the KKT system of its relaxed follower
/// problem. Fails naming the first violated row.
pub fn verify_follower_optimality(
    instance: &ProblemInstance,
    prices: &PriceVector,
    response: &FollowerResponse,
) -> Result<KktReport> {
    if response.offers.len() != instance.lots().len() {
        return Err(BlendError::Argument("response does not cover every lot".into()));
    }
    let mut worst = [0.0f64; ROWS.len()];
    let mut all = Vec::with_capacity(instance.lots().len());
    for (lot_idx, (lot, offer)) in instance.lots().iter().zip(&response.offers).enumerate() {
        let brackets = lot.curve.brackets();
        let n = brackets.len();
        let margins: Vec<f64> = (0..n).map(|p| margin(instance, prices, lot_idx, p)).collect();
        let scale = margins
            .iter()
            .zip(brackets)
            .map(|(m, b)| (m * b.upper).abs())
            .fold(1.0, f64::max);
        let tol = KKT_TOL * scale;

        // Primal point. An empty offer sits in bracket 0 at zero.
        let chosen = offer.bracket.unwrap_or(0);
        if chosen >= n {
            return Err(BlendError::Verification(format!("lot {lot_idx}: row primal, bracket out of range")));
        }
        let mut x = vec![0.0; n];
        let mut z = vec![0.0; n];
        x[chosen] = offer.quantity;
        z[chosen] = 1.0;

        // Multipliers from the optimal value V*.
        let v_star = margins
            .iter()
            .zip(brackets)
            .map(|(m, b)| m * b.upper)
            .fold(0.0, f64::max);
        let mut mult = LotMultipliers {
            u: 0.0,
            gamma: v_star,
            v: vec![0.0; n],
            w: vec![0.0; n],
            l: vec![0.0; n],
            m: vec![0.0; n],
            k: vec![0.0; n],
        };
        for p in 0..n {
            if margins[p] >= 0.0 {
                mult.w[p] = margins[p];
                mult.m[p] = v_star - brackets[p].upper * margins[p];
            } else {
                mult.l[p] = -margins[p];
                mult.m[p] = v_star;
            }
        }

        let mut res = [0.0f64; ROWS.len()];
        // primal feasibility
        let total: f64 = x.iter().sum();
        let mut primal = (total - lot.curve.availability()).max(0.0);
        for p in 0..n {
            primal = primal
                .max(-x[p])
                .max(brackets[p].lower * z[p] - x[p])
                .max(x[p] - brackets[p].upper * z[p])
                .max(z[p] - 1.0)
                .max(-z[p]);
        }
        primal = primal.max((z.iter().sum::<f64>() - 1.0).abs());
        res[0] = primal;
        // dual feasibility
        let mut dual = (-mult.u).max(0.0);
        for p in 0..n {
            for val in [mult.v[p], mult.w[p], mult.l[p], mult.m[p], mult.k[p]] {
                dual = dual.max(-val);
            }
        }
        res[1] = dual;
        for p in 0..n {
            let (lo, hi) = (brackets[p].lower, brackets[p].upper);
            res[2] = res[2].max((margins[p] - mult.u + mult.v[p] - mult.w[p] + mult.l[p]).abs());
            res[3] = res[3].max((lo * mult.v[p] - hi * mult.w[p] + mult.gamma + mult.k[p] - mult.m[p]).abs());
            res[5] = res[5].max(((-x[p] + lo * z[p]) * mult.v[p]).abs());
            res[6] = res[6].max(((x[p] - hi * z[p]) * mult.w[p]).abs());
            res[8] = res[8].max((x[p] * mult.l[p]).abs());
            res[9] = res[9].max((z[p] * mult.m[p]).abs());
            res[10] = res[10].max(((z[p] - 1.0) * mult.k[p]).abs());
        }
        res[4] = ((total - lot.curve.availability()) * mult.u).abs();
        res[7] = ((z.iter().sum::<f64>() - 1.0) * mult.gamma).abs();

        for (r, value) in res.iter().enumerate() {
            if *value > tol {
                return Err(BlendError::Verification(format!(
                    "lot {lot_idx}: row {} violated by {value:e}",
                    ROWS[r]
                )));
            }
            worst[r] = worst[r].max(*value / scale);
        }
        all.push(mult);
    }
    Ok(KktReport {
        rows: ROWS.iter().zip(worst).map(|(n, v)| (n.to_string(), v)).collect(),
        multipliers: all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decentralized::follower::follower_best_response;
    use crate::decentralized::follower::tests::one_lot;

    #[test]
    fn best_responses_verify() {
        let inst = one_lot();
        for c in [0.0, 5.0, 10.0, 11.0, 12.0, 15.0, 30.0] {
            let prices = PriceVector::new(vec![c]).unwrap();
            let r = follower_best_response(&inst, &prices).unwrap();
            let report = verify_follower_optimality(&inst, &prices, &r).unwrap();
            assert!(report.max_residual() <= 1e-12, "price {c}");
        }
    }

    #[test]
    fn short_offer_breaks_upper_bound_slackness() {
        let inst = one_lot();
        let prices = PriceVector::new(vec![15.0]).unwrap();
        let mut r = follower_best_response(&inst, &prices).unwrap();
        r.offers[0].quantity -= 1.0;
        let err = verify_follower_optimality(&inst, &prices, &r).unwrap_err().to_string();
        assert!(err.contains("dual_5"), "{err}");
    }

    #[test]
    fn wrong_bracket_is_rejected() {
        let inst = one_lot();
        let prices = PriceVector::new(vec![15.0]).unwrap();
        let mut r = follower_best_response(&inst, &prices).unwrap();
        r.offers[0].bracket = Some(0);
        r.offers[0].quantity = 100.0;
        assert!(verify_follower_optimality(&inst, &prices, &r).is_err());
    }
}
