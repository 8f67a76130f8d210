use serde::{Deserialize, Serialize};

use crate::error::{BlendError, Result};
use crate::lp::{solve_lp, Direction, LinearProgram, LpStatus, Sense};
use crate::model::ProblemInstance;

/// Door prices 𝒞_b, one per biomass type, in $/DT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceVector {
    prices: Vec<f64>,
}

impl PriceVector {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(BlendError::Argument(format!("door price {p} must be finite and nonnegative")));
        }
        Ok(Self { prices })
    }

    pub fn get(&self, biomass: usize) -> f64 {
        self.prices[biomass]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    fn check(&self, instance: &ProblemInstance) -> Result<()> {
        if self.prices.len() != instance.biomass().len() {
            return Err(BlendError::Argument(format!(
                "{} door prices for {} biomass types",
                self.prices.len(),
                instance.biomass().len()
            )));
        }
        Ok(())
    }
}

/// A supplier's offer for one lot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LotOffer {
    /// Bracket the supplier sells in, `None` when nothing is offered.
    pub bracket: Option<usize>,
    pub quantity: f64,
    /// 𝒞_b - c̄_bp - t_ib at the chosen bracket (at the best bracket when
    /// nothing is offered).
    pub margin: f64,
    pub profit: f64,
}

/// Offers of every lot, in lot order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerResponse {
    pub offers: Vec<LotOffer>,
}

impl FollowerResponse {
    pub fn quantities(&self) -> Vec<f64> {
        self.offers.iter().map(|o| o.quantity).collect()
    }

    /// Offered profit summed per supplier.
    pub fn supplier_profits(&self, instance: &ProblemInstance) -> Vec<f64> {
        let mut out = vec![0.0; instance.suppliers().len()];
        for (lot, o) in instance.lots().iter().zip(&self.offers) {
            out[lot.supplier] += o.profit;
        }
        out
    }
}

/// Per-ton margin of lot `k` in bracket `p`.
pub fn margin(instance: &ProblemInstance, prices: &PriceVector, lot: usize, p: usize) -> f64 {
    let l = &instance.lots()[lot];
    prices.get(l.biomass) - instance.harvest_cost(lot, p) - l.transport
}

/// Each supplier's profit-maximizing offer per lot: the bracket maximizing
/// margin × upper bound (ties to the lowest bracket), sold at its upper
/// bound unless that profit is negative. Zero profit still offers.
pub fn follower_best_response(instance: &ProblemInstance, prices: &PriceVector) -> Result<FollowerResponse> {
    prices.check(instance)?;
    let offers = instance
        .lots()
        .iter()
        .enumerate()
        .map(|(k, lot)| {
            let mut best = (0, f64::NEG_INFINITY, 0.0);
            for (p, b) in lot.curve.brackets().iter().enumerate() {
                let m = margin(instance, prices, k, p);
                let profit = m * b.upper;
                if profit > best.1 {
                    best = (p, profit, m);
                }
            }
            let (p, profit, m) = best;
            if profit < 0.0 {
                LotOffer { bracket: None, quantity: 0.0, margin: m, profit: 0.0 }
            } else {
                LotOffer { bracket: Some(p), quantity: lot.curve.brackets()[p].upper, margin: m, profit }
            }
        })
        .collect();
    Ok(FollowerResponse { offers })
}

/// Best profit of one lot by enumerating every bracket and both of its
/// quantity endpoints.
pub fn brute_force_profit(instance: &ProblemInstance, prices: &PriceVector, lot: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (p, b) in instance.lots()[lot].curve.brackets().iter().enumerate() {
        let m = margin(instance, prices, lot, p);
        for x in [b.lower, b.upper] {
            best = best.max(m * x);
        }
    }
    best
}

/// Linear relaxation of one lot's follower problem: columns `X_p` then
/// `Z_p`, maximizing profit.
pub fn follower_lp(instance: &ProblemInstance, prices: &PriceVector, lot: usize) -> Result<LinearProgram> {
    prices.check(instance)?;
    let curve = &instance.lots()[lot].curve;
    let mut lp = LinearProgram::new(Direction::Maximize);
    let n = curve.len();
    let xs: Vec<usize> = (0..n)
        .map(|p| lp.add_var(format!("X[{p}]"), margin(instance, prices, lot, p), 0.0, f64::INFINITY))
        .collect();
    let zs: Vec<usize> = (0..n).map(|p| lp.add_var(format!("Z[{p}]"), 0.0, 0.0, 1.0)).collect();
    lp.add_row("avail", xs.iter().map(|&x| (x, 1.0)).collect(), Sense::Le, curve.availability());
    for (p, b) in curve.brackets().iter().enumerate() {
        lp.add_row(format!("lo[{p}]"), vec![(xs[p], -1.0), (zs[p], b.lower)], Sense::Le, 0.0);
        lp.add_row(format!("hi[{p}]"), vec![(xs[p], 1.0), (zs[p], -b.upper)], Sense::Le, 0.0);
    }
    lp.add_row("one", zs.iter().map(|&z| (z, 1.0)).collect(), Sense::Eq, 1.0);
    Ok(lp)
}

/// Optimal value of the relaxed follower problem of one lot.
pub fn follower_lp_profit(instance: &ProblemInstance, prices: &PriceVector, lot: usize) -> Result<f64> {
    let sol = solve_lp(&follower_lp(instance, prices, lot)?)?;
    if sol.status != LpStatus::Optimal {
        return Err(BlendError::Solver(format!("follower relaxation for lot {lot} is {:?}", sol.status)));
    }
    Ok(sol.objective)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{Bracket, BiomassType, RefinerySpec, Supplier, SupplyCurve, TriangularParams, UniformParams};
    use std::collections::BTreeMap;

    /// One lot with brackets [0,100] and [100,250], harvest costs 10 and 12,
    /// and no transport cost.
    pub(crate) fn one_lot() -> ProblemInstance {
        let bt = BiomassType {
            id: "b".into(),
            ash: TriangularParams::degenerate(1.0).unwrap(),
            heat: UniformParams::new(10.0, 10.0).unwrap(),
            efficiency: 1.0,
            harvest_collection: 0.0,
            processing: 0.0,
            storage: 0.0,
            transport_fixed: 0.0,
            transport_variable: 0.0,
            harvest_cost: Some(vec![10.0, 12.0]),
        };
        let curve = SupplyCurve::new(vec![
            Bracket { lower: 0.0, upper: 100.0, price: 10.0 },
            Bracket { lower: 100.0, upper: 250.0, price: 12.0 },
        ])
        .unwrap();
        let s = Supplier { id: "s".into(), coords: None, distance: 0.0, curves: BTreeMap::from([("b".into(), curve)]) };
        let r = RefinerySpec {
            ash_limit: 5.0,
            thermal_requirement: 100.0,
            risk_ash: 0.1,
            risk_thermal: 0.1,
            inner_risk_ash: 0.0,
            inner_risk_thermal: 0.0,
        };
        ProblemInstance::new(vec![s], vec![bt], r).unwrap()
    }

    #[test]
    fn negative_margins_offer_nothing() {
        let inst = one_lot();
        let r = follower_best_response(&inst, &PriceVector::new(vec![5.0]).unwrap()).unwrap();
        assert_eq!(r.offers[0].bracket, None);
        assert_eq!(r.offers[0].quantity, 0.0);
        assert_eq!(r.offers[0].profit, 0.0);
    }

    #[test]
    fn larger_bracket_wins_on_total_profit() {
        // margins 5 and 3: profits 500 and 750
        let inst = one_lot();
        let r = follower_best_response(&inst, &PriceVector::new(vec![15.0]).unwrap()).unwrap();
        assert_eq!(r.offers[0].bracket, Some(1));
        assert_eq!(r.offers[0].quantity, 250.0);
        assert_eq!(r.offers[0].profit, 750.0);
        assert_eq!(brute_force_profit(&inst, &PriceVector::new(vec![15.0]).unwrap(), 0), 750.0);
    }

    #[test]
    fn zero_margin_still_offers() {
        let inst = one_lot();
        let r = follower_best_response(&inst, &PriceVector::new(vec![12.0]).unwrap()).unwrap();
        // bracket 1 margin 2 gives 200 > 0 from bracket 2
        assert_eq!(r.offers[0].bracket, Some(0));
        let r = follower_best_response(&inst, &PriceVector::new(vec![10.0]).unwrap()).unwrap();
        assert_eq!(r.offers[0].bracket, Some(0));
        assert_eq!(r.offers[0].quantity, 100.0);
        assert_eq!(r.offers[0].profit, 0.0);
    }

    #[test]
    fn relaxation_matches_best_response() {
        let inst = one_lot();
        for c in [0.0, 9.0, 10.0, 11.0, 12.5, 15.0, 40.0] {
            let prices = PriceVector::new(vec![c]).unwrap();
            let r = follower_best_response(&inst, &prices).unwrap();
            let lp = follower_lp_profit(&inst, &prices, 0).unwrap();
            assert!((lp - r.offers[0].profit).abs() < 1e-8, "price {c}");
        }
    }

    #[test]
    fn prices_are_validated() {
        assert!(PriceVector::new(vec![-1.0]).is_err());
        assert!(PriceVector::new(vec![f64::NAN]).is_err());
    }
}
