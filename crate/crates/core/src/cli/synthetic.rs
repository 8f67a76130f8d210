//! Benchmark instances with the bundled biomass table and randomized supply
//! curves. Suppliers sit on a square grid region; each feedstock's total
//! supply is split among the suppliers that carry it.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ingest::{default_biomass, thermal_for_demand, DEFAULT_TOTAL_SUPPLY};
use crate::error::{BlendError, Result};
use crate::model::{Bracket, ProblemInstance, RefinerySpec, Supplier, SupplyCurve};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub suppliers: usize,
    pub brackets: usize,
    /// Side of the square region, miles.
    pub side: f64,
    /// Chance that a supplier carries a given feedstock.
    pub coverage: f64,
    /// Multiplier on the total supply of every feedstock.
    pub supply_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { suppliers: 8, brackets: 3, side: 120.0, coverage: 0.6, supply_scale: 1.0, seed: 2024 }
    }
}

/// Refinery used by the benchmark: α = 1 wt.%, τ for `demand` MDT/year.
pub fn benchmark_refinery(demand_mdt: f64, risk: f64, inner_risk: f64) -> RefinerySpec {
    RefinerySpec {
        ash_limit: 1.0,
        thermal_requirement: thermal_for_demand(demand_mdt),
        risk_ash: risk,
        risk_thermal: risk,
        inner_risk_ash: inner_risk,
        inner_risk_thermal: inner_risk,
    }
}

/// Farmgate price increment between brackets, $/DT.
pub const PRICE_STEP: f64 = 10.0;

/// Share of a lot's supply available up to bracket `p` of `n`. Each price
/// level adds half as much as the one before.
fn cumulative_share(p: usize, n: usize) -> f64 {
    let total: f64 = (0..n).map(|j| 0.5f64.powi(j as i32)).sum();
    (0..p).map(|j| 0.5f64.powi(j as i32)).sum::<f64>() / total
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

pub fn generate(config: &SyntheticConfig, refinery: RefinerySpec) -> Result<ProblemInstance> {
    if config.suppliers == 0 || config.brackets == 0 {
        return Err(BlendError::Argument("need at least one supplier and one bracket".into()));
    }
    if !(config.coverage > 0.0 && config.coverage <= 1.0) || !(config.supply_scale > 0.0) || !(config.side >= 0.0) {
        return Err(BlendError::Argument("coverage in (0, 1], positive supply scale and side required".into()));
    }
    let biomass = default_biomass();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let coords: Vec<(f64, f64)> = (0..config.suppliers)
        .map(|_| (round2(rng.gen::<f64>() * config.side), round2(rng.gen::<f64>() * config.side)))
        .collect();
    let mut curves: Vec<BTreeMap<String, SupplyCurve>> = vec![BTreeMap::new(); config.suppliers];
    for (b, bt) in biomass.iter().enumerate() {
        let mut carriers: Vec<usize> = (0..config.suppliers).filter(|_| rng.gen::<f64>() < config.coverage).collect();
        if carriers.is_empty() {
            carriers.push(rng.gen_range(0..config.suppliers));
        }
        let shares: Vec<f64> = carriers.iter().map(|_| 0.5 + rng.gen::<f64>()).collect();
        let total_share: f64 = shares.iter().sum();
        for (&i, share) in carriers.iter().zip(&shares) {
            let avail = (DEFAULT_TOTAL_SUPPLY[b] * 1e6 * config.supply_scale * share / total_share).round();
            let base = bt.harvest_collection + 8.0 + 12.0 * rng.gen::<f64>();
            let brackets = (0..config.brackets)
                .map(|p| Bracket {
                    lower: (avail * cumulative_share(p, config.brackets)).round(),
                    upper: (avail * cumulative_share(p + 1, config.brackets)).round(),
                    price: round2(base + PRICE_STEP * p as f64),
                })
                .collect();
            curves[i].insert(bt.id.clone(), SupplyCurve::new(brackets)?);
        }
    }
    let (sx, sy) = {
        let weights: Vec<f64> = curves.iter().map(|c| c.values().map(|v| v.availability()).sum()).collect();
        coords[super::site::site_refinery(&coords, &weights)?]
    };
    let suppliers = coords
        .iter()
        .zip(curves)
        .enumerate()
        .filter(|(_, (_, c))| !c.is_empty())
        .map(|(i, (&(x, y), curves))| Supplier {
            id: format!("s{:02}", i + 1),
            coords: Some((x, y)),
            distance: ((x - sx).powi(2) + (y - sy).powi(2)).sqrt(),
            curves,
        })
        .collect();
    ProblemInstance::new(suppliers, biomass, refinery)
}
