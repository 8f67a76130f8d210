//! Domain types and the deterministic cost functions shared by every solver.
//!
//! Units are fixed throughout the crate: mass in dry tons (DT), energy in
//! 10^6 BTU, money in dollars and distance in miles. The only conversion
//! happens at ingestion, where the thermal requirement is read in 10^9 BTU.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{BlendError, Result};

/// 10^9 BTU expressed in the internal 10^6 BTU energy unit.
pub const GIGA_BTU_IN_MMBTU: f64 = 1_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularParams {
    pub min: f64,
    pub mode: f64,
    pub max: f64,
}

impl TriangularParams {
    pub fn new(min: f64, mode: f64, max: f64) -> Result<Self> {
        let all_finite = min.is_finite() && mode.is_finite() && max.is_finite();
        if !all_finite || min < 0.0 || !(min <= mode && mode <= max) {
            return Err(BlendError::Validation(format!(
                "triangular parameters must satisfy 0 <= min <= mode <= max, got ({min}, {mode}, {max})"
            )));
        }
        Ok(Self { min, mode, max })
    }

    pub fn degenerate(value: f64) -> Result<Self> {
        Self::new(value, value, value)
    }

    pub fn mean(&self) -> f64 {
        (self.min + self.mode + self.max) / 3.0
    }

    /// Inverse CDF. The branch is chosen by comparing `u` against the CDF
    /// value at the mode.
    pub fn quantile(&self, u: f64) -> f64 {
        let range = self.max - self.min;
        if range <= 0.0 {
            return self.min;
        }
        let split = (self.mode - self.min) / range;
        let x = if u < split {
            self.min + (u * range * (self.mode - self.min)).sqrt()
        } else {
            self.max - ((1.0 - u) * range * (self.max - self.mode)).sqrt()
        };
        x.clamp(self.min, self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformParams {
    pub low: f64,
    pub high: f64,
}

impl UniformParams {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite()) || low <= 0.0 || low > high {
            return Err(BlendError::Validation(format!(
                "heating value bounds must satisfy 0 < LHV <= HHV, got ({low}, {high})"
            )));
        }
        Ok(Self { low, high })
    }

    pub fn quantile(&self, u: f64) -> f64 {
        (self.low + u * (self.high - self.low)).clamp(self.low, self.high)
    }
}

/// One feedstock type with its quality distributions and handling costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiomassType {
    pub id: String,
    /// Ash content in wt.%; the mode is the average ash content.
    pub ash: TriangularParams,
    /// Heating value in 10^6 BTU/DT, uniform between LHV and HHV.
    pub heat: UniformParams,
    /// Conversion efficiency in (0, 1].
    pub efficiency: f64,
    /// Harvest and collection cost, $/DT (informational; feeds the synthetic generator).
    pub harvest_collection: f64,
    pub processing: f64,
    pub storage: f64,
    /// Fixed transportation cost g_b, $/DT.
    pub transport_fixed: f64,
    /// Variable transportation cost v_b, $/DT/mile.
    pub transport_variable: f64,
    /// Supplier-side cost per bracket for the leader-follower model. When
    /// absent the farmgate price of the same bracket is used.
    pub harvest_cost: Option<Vec<f64>>,
}

impl BiomassType {
    pub fn validate(&self) -> Result<()> {
        TriangularParams::new(self.ash.min, self.ash.mode, self.ash.max)?;
        UniformParams::new(self.heat.low, self.heat.high)?;
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(BlendError::Validation(format!(
                "biomass `{}`: efficiency must lie in (0, 1], got {}",
                self.id, self.efficiency
            )));
        }
        let costs = [
            ("harvest_collection", self.harvest_collection),
            ("processing", self.processing),
            ("storage", self.storage),
            ("transport_fixed", self.transport_fixed),
            ("transport_variable", self.transport_variable),
        ];
        for (name, value) in costs {
            if !(value.is_finite() && value >= 0.0) {
                return Err(BlendError::Validation(format!(
                    "biomass `{}`: {name} must be a nonnegative number, got {value}",
                    self.id
                )));
            }
        }
        if let Some(costs) = &self.harvest_cost {
            if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(BlendError::Validation(format!(
                    "biomass `{}`: harvest costs must be nonnegative",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// f_b: processing plus storage, $/DT.
    pub fn handling_cost(&self) -> f64 {
        self.processing + self.storage
    }

    /// t_ib = v_b * Dist_i + g_b.
    pub fn transport_cost(&self, distance: f64) -> f64 {
        self.transport_variable * distance + self.transport_fixed
    }
}

/// A quantity interval of a supply curve sold at one farmgate price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
    pub price: f64,
}

/// Step supply curve with all-units pricing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplyCurve {
    brackets: Vec<Bracket>,
}

impl SupplyCurve {
    pub fn new(brackets: Vec<Bracket>) -> Result<Self> {
        if brackets.is_empty() {
            return Err(BlendError::Validation("supply curve has no brackets".into()));
        }
        if brackets[0].lower != 0.0 {
            return Err(BlendError::Validation(format!(
                "first bracket must start at 0, got {}",
                brackets[0].lower
            )));
        }
        for (p, b) in brackets.iter().enumerate() {
            if !(b.lower.is_finite() && b.upper.is_finite() && b.price.is_finite()) {
                return Err(BlendError::Validation(format!("bracket {} is not finite", p + 1)));
            }
            if b.lower >= b.upper {
                return Err(BlendError::Validation(format!(
                    "bracket {} has lower {} >= upper {}",
                    p + 1,
                    b.lower,
                    b.upper
                )));
            }
            if b.price < 0.0 {
                return Err(BlendError::Validation(format!("bracket {} has a negative price", p + 1)));
            }
            if p > 0 {
                let prev = &brackets[p - 1];
                if prev.upper != b.lower {
                    return Err(BlendError::Validation(format!(
                        "brackets {} and {} are not contiguous ({} vs {})",
                        p,
                        p + 1,
                        prev.upper,
                        b.lower
                    )));
                }
                if b.price <= prev.price {
                    return Err(BlendError::Validation(format!(
                        "bracket prices must be strictly increasing (bracket {} price {} <= {})",
                        p + 1,
                        b.price,
                        prev.price
                    )));
                }
            }
        }
        Ok(Self { brackets })
    }

    pub fn brackets(&self) -> &[Bracket] {
        &self.brackets
    }

    pub fn len(&self) -> usize {
        self.brackets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.brackets.is_empty()
    }

    /// S_ib, the upper end of the last bracket.
    pub fn availability(&self) -> f64 {
        self.brackets[self.brackets.len() - 1].upper
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if !(x >= 0.0 && x <= self.availability()) {
            return Err(BlendError::Domain(format!(
                "quantity {x} outside [0, {}]",
                self.availability()
            )));
        }
        Ok(())
    }

    /// Bracket containing `x`. A shared boundary belongs to the lower (cheaper)
    /// bracket. Quantities beyond availability map to the last bracket.
    pub fn bracket_of(&self, x: f64) -> usize {
        self.brackets
            .iter()
            .position(|b| x <= b.upper)
            .unwrap_or(self.brackets.len() - 1)
    }

    /// Offsets of the incremental-pricing pieces:
    /// `offset[p] = sum_{j < p} c_j (upper_j - lower_j)`.
    pub fn outer_offsets(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.brackets
            .iter()
            .map(|b| {
                let here = acc;
                acc += b.price * (b.upper - b.lower);
                here
            })
            .collect()
    }

    /// Gap between all-units and incremental cost anywhere in bracket `p`:
    /// `c_p * lower_p - offset_p`.
    pub fn bracket_gap(&self, p: usize) -> f64 {
        let offsets = self.outer_offsets();
        self.brackets[p].price * self.brackets[p].lower - offsets[p]
    }

    /// Largest bracket gap on the curve.
    pub fn max_gap(&self) -> f64 {
        (0..self.len()).map(|p| self.bracket_gap(p)).fold(0.0, f64::max)
    }

    /// All-units purchase cost `c_p * x` for the bracket containing `x`.
    pub fn purchase_cost(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.brackets[self.bracket_of(x)].price * x)
    }

    /// Convex incremental-pricing cost, a lower envelope of `purchase_cost`.
    pub fn outer_cost(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        let p = self.bracket_of(x);
        let b = &self.brackets[p];
        Ok(self.outer_offsets()[p] + b.price * (x - b.lower))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Supplier {
    pub id: String,
    /// Planar coordinates in miles, when known.
    pub coords: Option<(f64, f64)>,
    /// Distance to the refinery, miles.
    pub distance: f64,
    /// Supply curve per biomass id.
    pub curves: BTreeMap<String, SupplyCurve>,
}

impl Supplier {
    pub fn total_availability(&self) -> f64 {
        self.curves.values().map(SupplyCurve::availability).sum()
    }
}

/// Quality limits and risk levels of the refinery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinerySpec {
    /// Allowable ash content alpha, wt.%.
    pub ash_limit: f64,
    /// Thermal requirement tau, 10^6 BTU per year.
    pub thermal_requirement: f64,
    pub risk_ash: f64,
    pub risk_thermal: f64,
    pub inner_risk_ash: f64,
    pub inner_risk_thermal: f64,
}

impl RefinerySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.ash_limit > 0.0) {
            return Err(BlendError::Validation("ash limit must be positive".into()));
        }
        if !(self.thermal_requirement >= 0.0 && self.thermal_requirement.is_finite()) {
            return Err(BlendError::Validation("thermal requirement must be nonnegative".into()));
        }
        let pairs = [
            ("ash", self.inner_risk_ash, self.risk_ash),
            ("thermal", self.inner_risk_thermal, self.risk_thermal),
        ];
        for (name, inner, outer) in pairs {
            if !(0.0 <= inner && inner <= outer && outer < 1.0) {
                return Err(BlendError::Validation(format!(
                    "{name} risk levels must satisfy 0 <= inner <= risk < 1, got ({inner}, {outer})"
                )));
            }
        }
        Ok(())
    }
}

/// A (supplier, biomass) pair that has a supply curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Lot {
    pub supplier: usize,
    pub biomass: usize,
    pub curve: SupplyCurve,
    /// t_ib, $/DT.
    pub transport: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    suppliers: Vec<Supplier>,
    biomass: Vec<BiomassType>,
    refinery: RefinerySpec,
    lots: Vec<Lot>,
}

impl ProblemInstance {
    pub fn new(suppliers: Vec<Supplier>, biomass: Vec<BiomassType>, refinery: RefinerySpec) -> Result<Self> {
        if suppliers.is_empty() {
            return Err(BlendError::Validation("instance has no suppliers".into()));
        }
        if biomass.is_empty() {
            return Err(BlendError::Validation("instance has no biomass types".into()));
        }
        refinery.validate()?;
        for b in &biomass {
            b.validate()?;
        }
        let mut bracket_counts: Vec<Option<usize>> = vec![None; biomass.len()];
        let mut lots = Vec::new();
        for (i, s) in suppliers.iter().enumerate() {
            if !(s.distance.is_finite() && s.distance >= 0.0) {
                return Err(BlendError::Validation(format!(
                    "supplier `{}` has invalid distance {}",
                    s.id, s.distance
                )));
            }
            for key in s.curves.keys() {
                if !biomass.iter().any(|b| &b.id == key) {
                    return Err(BlendError::Lookup { kind: "biomass", id: key.clone() });
                }
            }
            for (b, bt) in biomass.iter().enumerate() {
                let Some(curve) = s.curves.get(&bt.id) else { continue };
                match bracket_counts[b] {
                    None => bracket_counts[b] = Some(curve.len()),
                    Some(n) if n != curve.len() => {
                        return Err(BlendError::Validation(format!(
                            "supplier `{}` has {} brackets for `{}`, expected {n}",
                            s.id,
                            curve.len(),
                            bt.id
                        )))
                    }
                    Some(_) => {}
                }
                if let Some(h) = &bt.harvest_cost {
                    if h.len() != curve.len() {
                        return Err(BlendError::Validation(format!(
                            "biomass `{}` lists {} harvest costs for {} brackets",
                            bt.id,
                            h.len(),
                            curve.len()
                        )));
                    }
                }
                lots.push(Lot {
                    supplier: i,
                    biomass: b,
                    curve: curve.clone(),
                    transport: bt.transport_cost(s.distance),
                });
            }
        }
        if lots.is_empty() {
            return Err(BlendError::Validation("no supplier offers any biomass".into()));
        }
        Ok(Self { suppliers, biomass, refinery, lots })
    }

    pub fn suppliers(&self) -> &[Supplier] {
        &self.suppliers
    }

    pub fn biomass(&self) -> &[BiomassType] {
        &self.biomass
    }

    pub fn refinery(&self) -> &RefinerySpec {
        &self.refinery
    }

    pub fn lots(&self) -> &[Lot] {
        &self.lots
    }

    /// Same suppliers and biomass with a different refinery specification.
    pub fn with_refinery(&self, refinery: RefinerySpec) -> Result<Self> {
        refinery.validate()?;
        let mut out = self.clone();
        out.refinery = refinery;
        Ok(out)
    }

    pub fn supplier_index(&self, id: &str) -> Result<usize> {
        self.suppliers
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| BlendError::Lookup { kind: "supplier", id: id.to_string() })
    }

    pub fn biomass_index(&self, id: &str) -> Result<usize> {
        self.biomass
            .iter()
            .position(|b| b.id == id)
            .ok_or_else(|| BlendError::Lookup { kind: "biomass", id: id.to_string() })
    }

    pub fn lot_index(&self, supplier: usize, biomass: usize) -> Option<usize> {
        self.lots.iter().position(|l| l.supplier == supplier && l.biomass == biomass)
    }

    /// f_b + t_ib for a lot, the per-ton cost on top of the purchase price.
    pub fn delivery_cost(&self, lot: usize) -> f64 {
        let l = &self.lots[lot];
        l.transport + self.biomass[l.biomass].handling_cost()
    }

    /// c̄_ibp, the supplier-side cost of bracket `p`.
    pub fn harvest_cost(&self, lot: usize, p: usize) -> f64 {
        let l = &self.lots[lot];
        match &self.biomass[l.biomass].harvest_cost {
            Some(costs) => costs[p],
            None => l.curve.brackets()[p].price,
        }
    }

    /// e_b * h: usable energy per ton for a lot at heating value `h`.
    pub fn efficiency(&self, lot: usize) -> f64 {
        self.biomass[self.lots[lot].biomass].efficiency
    }

    /// Largest per-ton delivered cost over every lot and bracket.
    pub fn max_unit_delivered_cost(&self) -> f64 {
        (0..self.lots.len())
            .flat_map(|k| {
                let extra = self.delivery_cost(k);
                self.lots[k].curve.brackets().iter().map(move |b| b.price + extra)
            })
            .fold(0.0, f64::max)
    }

    /// Sum over lots of the largest bracket gap.
    pub fn max_outer_gap(&self) -> f64 {
        self.lots.iter().map(|l| l.curve.max_gap()).sum()
    }
}

/// t_ib for a supplier and biomass given by id.
pub fn unit_transport_cost(instance: &ProblemInstance, supplier: &str, biomass: &str) -> Result<f64> {
    let i = instance.supplier_index(supplier)?;
    let b = instance.biomass_index(biomass)?;
    Ok(instance.biomass()[b].transport_cost(instance.suppliers()[i].distance))
}

pub fn purchase_cost(curve: &SupplyCurve, x: f64) -> Result<f64> {
    curve.purchase_cost(x)
}

pub fn outer_cost(curve: &SupplyCurve, x: f64) -> Result<f64> {
    curve.outer_cost(x)
}

/// Purchase of one lot: total quantity and the bracket it is billed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LotPurchase {
    pub quantity: f64,
    pub bracket: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub purchase: f64,
    pub transport: f64,
    pub processing: f64,
    pub penalty: f64,
}

impl CostBreakdown {
    pub fn deterministic(&self) -> f64 {
        self.purchase + self.transport + self.processing
    }

    pub fn total(&self) -> f64 {
        self.deterministic() + self.penalty
    }
}

/// Per-scenario violation slacks of the ash and thermal rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSlacks {
    /// V_s: ash margin below the limit.
    pub ash_surplus: Vec<f64>,
    /// W_s: ash excess above the limit.
    pub ash_excess: Vec<f64>,
    /// U_s: thermal surplus above the requirement.
    pub thermal_surplus: Vec<f64>,
    /// J_s: thermal shortfall.
    pub thermal_shortfall: Vec<f64>,
}

impl ScenarioSlacks {
    /// Canonical slacks from the row activities `E1_s`, `E2_s`: at most one of
    /// each pair is positive.
    pub fn from_activities(ash: &[f64], thermal: &[f64]) -> Self {
        Self {
            ash_surplus: ash.iter().map(|e| (-e).max(0.0)).collect(),
            ash_excess: ash.iter().map(|e| e.max(0.0)).collect(),
            thermal_surplus: thermal.iter().map(|e| (-e).max(0.0)).collect(),
            thermal_shortfall: thermal.iter().map(|e| e.max(0.0)).collect(),
        }
    }
}

/// Bracketed purchase plan with slacks and cost decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendSolution {
    pub purchases: Vec<LotPurchase>,
    pub slacks: ScenarioSlacks,
    pub objective: f64,
    pub cost_breakdown: CostBreakdown,
}

impl BlendSolution {
    /// Assign each aggregate quantity to the bracket containing it. Values
    /// within `tol` outside `[0, S]` are clamped.
    pub fn lift(instance: &ProblemInstance, quantities: &[f64], tol: f64) -> Result<Vec<LotPurchase>> {
        if quantities.len() != instance.lots().len() {
            return Err(BlendError::Argument(format!(
                "expected {} lot quantities, got {}",
                instance.lots().len(),
                quantities.len()
            )));
        }
        instance
            .lots()
            .iter()
            .zip(quantities)
            .map(|(lot, &x)| {
                let cap = lot.curve.availability();
                let slack = tol * cap.max(1.0);
                if !(x >= -slack && x <= cap + slack) {
                    return Err(BlendError::Domain(format!("quantity {x} outside [0, {cap}]")));
                }
                let q = x.clamp(0.0, cap);
                Ok(LotPurchase { quantity: q, bracket: lot.curve.bracket_of(q) })
            })
            .collect()
    }

    /// Moves quantities within `tol` (relative to availability) of zero or
    /// of a bracket's upper end onto that point. Solver noise just past a
    /// breakpoint would otherwise price the whole lot in the next bracket.
    pub fn snap_to_breakpoints(instance: &ProblemInstance, quantities: &[f64], tol: f64) -> Vec<f64> {
        instance
            .lots()
            .iter()
            .zip(quantities)
            .map(|(lot, &x)| {
                let slack = tol * lot.curve.availability().max(1.0);
                if x.abs() <= slack {
                    return 0.0;
                }
                match lot.curve.brackets().iter().find(|b| (x - b.upper).abs() <= slack) {
                    Some(b) => b.upper,
                    None => x,
                }
            })
            .collect()
    }

    /// X_ibp for one lot and bracket.
    pub fn quantity(&self, lot: usize, bracket: usize) -> f64 {
        let p = &self.purchases[lot];
        if p.bracket == bracket {
            p.quantity
        } else {
            0.0
        }
    }

    /// Z_ibp for one lot and bracket.
    pub fn indicator(&self, lot: usize, bracket: usize) -> bool {
        self.purchases[lot].bracket == bracket
    }

    /// X_ib = sum_p X_ibp for every lot.
    pub fn flatten(&self) -> Vec<f64> {
        self.purchases.iter().map(|p| p.quantity).collect()
    }

    /// Checks `k_lower Z <= X <= k_upper Z`, one bracket per lot and slack signs.
    pub fn check_bracket_invariants(&self, instance: &ProblemInstance, tol: f64) -> Result<()> {
        for (k, (lot, purchase)) in instance.lots().iter().zip(&self.purchases).enumerate() {
            let brackets = lot.curve.brackets();
            if purchase.bracket >= brackets.len() {
                return Err(BlendError::Verification(format!("lot {k}: bracket out of range")));
            }
            let b = &brackets[purchase.bracket];
            let slack = tol * b.upper.max(1.0);
            if purchase.quantity < b.lower - slack || purchase.quantity > b.upper + slack {
                return Err(BlendError::Verification(format!(
                    "lot {k}: quantity {} outside bracket [{}, {}]",
                    purchase.quantity, b.lower, b.upper
                )));
            }
        }
        let s = &self.slacks;
        let pairs = [(&s.ash_surplus, &s.ash_excess), (&s.thermal_surplus, &s.thermal_shortfall)];
        for (a, b) in pairs {
            for (x, y) in a.iter().zip(b.iter()) {
                if *x < 0.0 || *y < 0.0 || (*x > 0.0 && *y > 0.0) {
                    return Err(BlendError::Verification("slack pair is not complementary".into()));
                }
            }
        }
        Ok(())
    }
}

/// Deterministic part of the total cost: all-units purchase cost plus
/// transportation and handling, split by component.
pub fn cost_breakdown(instance: &ProblemInstance, purchases: &[LotPurchase]) -> CostBreakdown {
    let mut out = CostBreakdown::default();
    for (lot, p) in instance.lots().iter().zip(purchases) {
        out.purchase += lot.curve.brackets()[p.bracket].price * p.quantity;
        out.transport += lot.transport * p.quantity;
        out.processing += instance.biomass()[lot.biomass].handling_cost() * p.quantity;
    }
    out
}

pub fn total_deterministic_cost(instance: &ProblemInstance, solution: &BlendSolution) -> f64 {
    cost_breakdown(instance, &solution.purchases).deterministic()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_bracket_curve() -> SupplyCurve {
        SupplyCurve::new(vec![
            Bracket { lower: 0.0, upper: 100.0, price: 10.0 },
            Bracket { lower: 100.0, upper: 250.0, price: 20.0 },
        ])
        .unwrap()
    }

    fn pine() -> BiomassType {
        BiomassType {
            id: "pine".into(),
            ash: TriangularParams::new(0.10, 0.75, 1.13).unwrap(),
            heat: UniformParams::new(14.510, 15.656).unwrap(),
            efficiency: 0.75,
            harvest_collection: 20.19,
            processing: 12.85,
            storage: 3.23,
            transport_fixed: 20.53,
            transport_variable: 0.046,
            harvest_cost: None,
        }
    }

    fn instance_with_distance(distance: f64) -> ProblemInstance {
        let supplier = Supplier {
            id: "s1".into(),
            coords: None,
            distance,
            curves: BTreeMap::from([("pine".to_string(), two_bracket_curve())]),
        };
        let refinery = RefinerySpec {
            ash_limit: 1.0,
            thermal_requirement: 1000.0,
            risk_ash: 0.2,
            risk_thermal: 0.2,
            inner_risk_ash: 0.0,
            inner_risk_thermal: 0.0,
        };
        ProblemInstance::new(vec![supplier], vec![pine()], refinery).unwrap()
    }

    #[test]
    fn transport_cost_examples() {
        let t0 = unit_transport_cost(&instance_with_distance(0.0), "s1", "pine").unwrap();
        assert_eq!(t0, 20.53);
        let t100 = unit_transport_cost(&instance_with_distance(100.0), "s1", "pine").unwrap();
        assert!((t100 - 25.13).abs() < 1e-12);
        let mut free = pine();
        free.transport_fixed = 0.0;
        free.transport_variable = 0.0;
        assert_eq!(free.transport_cost(50.0), 0.0);
    }

    #[test]
    fn transport_cost_unknown_id() {
        let inst = instance_with_distance(0.0);
        assert!(matches!(
            unit_transport_cost(&inst, "nope", "pine"),
            Err(BlendError::Lookup { kind: "supplier", .. })
        ));
        assert!(matches!(
            unit_transport_cost(&inst, "s1", "oak"),
            Err(BlendError::Lookup { kind: "biomass", .. })
        ));
    }

    #[test]
    fn purchase_cost_examples() {
        let c = two_bracket_curve();
        assert_eq!(purchase_cost(&c, 0.0).unwrap(), 0.0);
        assert_eq!(purchase_cost(&c, 50.0).unwrap(), 500.0);
        assert_eq!(purchase_cost(&c, 150.0).unwrap(), 3000.0);
        // shared boundary stays in the cheaper bracket
        assert_eq!(purchase_cost(&c, 100.0).unwrap(), 1000.0);
        assert!(matches!(purchase_cost(&c, 250.1), Err(BlendError::Domain(_))));
        assert!(matches!(purchase_cost(&c, -1.0), Err(BlendError::Domain(_))));
    }

    #[test]
    fn outer_cost_examples() {
        let c = two_bracket_curve();
        assert_eq!(outer_cost(&c, 150.0).unwrap(), 2000.0);
        assert_eq!(outer_cost(&c, 0.0).unwrap(), 0.0);
        assert_eq!(outer_cost(&c, 100.0).unwrap(), 1000.0);
        assert_eq!(c.bracket_gap(1), 1000.0);
        assert!(outer_cost(&c, 300.0).is_err());
    }

    #[test]
    fn deterministic_cost_examples() {
        let curve = SupplyCurve::new(vec![Bracket { lower: 0.0, upper: 100.0, price: 10.0 }]).unwrap();
        let mut bt = pine();
        bt.processing = 16.08;
        bt.storage = 0.0;
        // distance chosen so that t = 25.13
        let supplier = Supplier {
            id: "s1".into(),
            coords: None,
            distance: 100.0,
            curves: BTreeMap::from([("pine".to_string(), curve)]),
        };
        let refinery = instance_with_distance(0.0).refinery;
        let inst = ProblemInstance::new(vec![supplier], vec![bt], refinery).unwrap();
        let purchases = BlendSolution::lift(&inst, &[50.0], 0.0).unwrap();
        let sol = BlendSolution {
            purchases,
            slacks: ScenarioSlacks::default(),
            objective: 0.0,
            cost_breakdown: CostBreakdown::default(),
        };
        let cost = total_deterministic_cost(&inst, &sol);
        assert!((cost - 2560.50).abs() < 1e-9, "{cost}");

        let zero = BlendSolution { purchases: BlendSolution::lift(&inst, &[0.0], 0.0).unwrap(), ..sol };
        assert_eq!(total_deterministic_cost(&inst, &zero), 0.0);
    }

    #[test]
    fn deterministic_cost_is_additive_over_suppliers() {
        let base = instance_with_distance(10.0);
        let mut s2 = base.suppliers()[0].clone();
        s2.id = "s2".into();
        s2.distance = 40.0;
        let both = ProblemInstance::new(
            vec![base.suppliers()[0].clone(), s2.clone()],
            base.biomass().to_vec(),
            *base.refinery(),
        )
        .unwrap();
        let only2 = ProblemInstance::new(vec![s2], base.biomass().to_vec(), *base.refinery()).unwrap();
        let cost = |inst: &ProblemInstance, xs: &[f64]| {
            cost_breakdown(inst, &BlendSolution::lift(inst, xs, 0.0).unwrap()).deterministic()
        };
        let joint = cost(&both, &[40.0, 180.0]);
        let split = cost(&base, &[40.0]) + cost(&only2, &[180.0]);
        assert!((joint - split).abs() < 1e-9);
    }

    #[test]
    fn curve_validation() {
        let bad_start = SupplyCurve::new(vec![Bracket { lower: 1.0, upper: 2.0, price: 1.0 }]);
        assert!(bad_start.is_err());
        let gap = SupplyCurve::new(vec![
            Bracket { lower: 0.0, upper: 1.0, price: 1.0 },
            Bracket { lower: 1.5, upper: 2.0, price: 2.0 },
        ]);
        assert!(gap.is_err());
        let flat_price = SupplyCurve::new(vec![
            Bracket { lower: 0.0, upper: 1.0, price: 1.0 },
            Bracket { lower: 1.0, upper: 2.0, price: 1.0 },
        ]);
        assert!(flat_price.is_err());
    }

    #[test]
    fn refinery_validation() {
        let mut r = *instance_with_distance(0.0).refinery();
        r.inner_risk_ash = 0.3;
        assert!(r.validate().is_err());
        r.inner_risk_ash = 0.0;
        r.risk_thermal = 1.0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn triangular_quantile_endpoints() {
        let t = TriangularParams::new(0.0, 1.0, 2.0).unwrap();
        assert_eq!(t.quantile(0.0), 0.0);
        assert_eq!(t.quantile(0.5), 1.0);
        assert!((t.quantile(1.0) - 2.0).abs() < 1e-15);
        assert_eq!(TriangularParams::degenerate(1.0).unwrap().quantile(0.3), 1.0);
    }

    #[test]
    fn lift_round_trip() {
        let inst = instance_with_distance(0.0);
        for x in [0.0, 50.0, 100.0, 100.0 + 1e-12, 249.0, 250.0] {
            let p = BlendSolution::lift(&inst, &[x], 1e-9).unwrap();
            let sol = BlendSolution {
                purchases: p,
                slacks: ScenarioSlacks::default(),
                objective: 0.0,
                cost_breakdown: CostBreakdown::default(),
            };
            assert_eq!(sol.flatten(), vec![x]);
            sol.check_bracket_invariants(&inst, 1e-12).unwrap();
        }
    }
}
