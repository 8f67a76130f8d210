//! Seeded Monte Carlo scenarios for ash content and heating value, and the
//! empirical violation rates evaluated on them.
//!
//! Every (supplier, biomass) pair draws from its own ChaCha8 stream. The
//! stream id packs a purpose tag with the supplier and biomass indices, so
//! appending suppliers or biomass types leaves existing streams untouched and
//! validation samples never reuse optimization samples.

use std::io::{Read, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BlendError, Result};
use crate::model::ProblemInstance;

/// Purpose tag folded into the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Optimization = 0,
    Validation = 1,
}

fn stream_id(tag: StreamTag, supplier: usize, biomass: usize) -> u64 {
    ((tag as u64) << 56) | ((supplier as u64 & 0xFF_FFFF_FFFF) << 16) | (biomass as u64 & 0xFFFF)
}

/// N joint draws of ash content and heating value per lot.
///
/// Values are stored scenario-major: `ash[s * lots + k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    count: usize,
    lots: usize,
    seed: u64,
    ash: Vec<f64>,
    heat: Vec<f64>,
}

impl ScenarioSet {
    pub fn from_values(count: usize, lots: usize, seed: u64, ash: Vec<f64>, heat: Vec<f64>) -> Result<Self> {
        if count == 0 {
            return Err(BlendError::Argument("scenario count must be at least 1".into()));
        }
        if ash.len() != count * lots || heat.len() != count * lots {
            return Err(BlendError::Argument("scenario table has the wrong size".into()));
        }
        Ok(Self { count, lots, seed, ash, heat })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn lots(&self) -> usize {
        self.lots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ash(&self, scenario: usize, lot: usize) -> f64 {
        self.ash[scenario * self.lots + lot]
    }

    pub fn heat(&self, scenario: usize, lot: usize) -> f64 {
        self.heat[scenario * self.lots + lot]
    }

    pub fn ash_row(&self, scenario: usize) -> &[f64] {
        &self.ash[scenario * self.lots..(scenario + 1) * self.lots]
    }

    pub fn heat_row(&self, scenario: usize) -> &[f64] {
        &self.heat[scenario * self.lots..(scenario + 1) * self.lots]
    }

    /// Keep only the first `count` scenarios.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        if count == 0 || count > self.count {
            return Err(BlendError::Argument(format!("cannot keep {count} of {} scenarios", self.count)));
        }
        Ok(Self {
            count,
            lots: self.lots,
            seed: self.seed,
            ash: self.ash[..count * self.lots].to_vec(),
            heat: self.heat[..count * self.lots].to_vec(),
        })
    }

    /// The scenarios at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() || indices.iter().any(|&s| s >= self.count) {
            return Err(BlendError::Argument("scenario subset is empty or out of range".into()));
        }
        let mut ash = Vec::with_capacity(indices.len() * self.lots);
        let mut heat = Vec::with_capacity(indices.len() * self.lots);
        for &s in indices {
            ash.extend_from_slice(self.ash_row(s));
            heat.extend_from_slice(self.heat_row(s));
        }
        Ok(Self { count: indices.len(), lots: self.lots, seed: self.seed, ash, heat })
    }

    /// Writes the flat audit table `scenario,supplier,biomass,ash,heat`.
    pub fn write_csv<W: Write>(&self, instance: &ProblemInstance, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let map = |e: csv::Error| BlendError::Io(std::io::Error::other(e));
        w.write_record(["scenario", "supplier", "biomass", "ash", "heat"]).map_err(map)?;
        for s in 0..self.count {
            for (k, lot) in instance.lots().iter().enumerate() {
                w.write_record([
                    s.to_string(),
                    instance.suppliers()[lot.supplier].id.clone(),
                    instance.biomass()[lot.biomass].id.clone(),
                    format!("{:?}", self.ash(s, k)),
                    format!("{:?}", self.heat(s, k)),
                ])
                .map_err(map)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`ScenarioSet::write_csv`] for the same instance.
    pub fn read_csv<R: Read>(instance: &ProblemInstance, seed: u64, input: R) -> Result<Self> {
        let lots = instance.lots().len();
        let mut r = csv::Reader::from_reader(input);
        let mut ash = Vec::new();
        let mut heat = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| parse_err(row, "record", e.to_string()))?;
            if rec.len() != 5 {
                return Err(parse_err(row, "record", format!("expected 5 fields, got {}", rec.len())));
            }
            let s: usize = rec[0].parse().map_err(|_| parse_err(row, "scenario", rec[0].to_string()))?;
            let k = ash.len() % lots;
            let i = instance.supplier_index(&rec[1])?;
            let b = instance.biomass_index(&rec[2])?;
            let lot = &instance.lots()[k];
            if s != ash.len() / lots || lot.supplier != i || lot.biomass != b {
                return Err(parse_err(row, "supplier", "rows are not in canonical order".into()));
            }
            ash.push(rec[3].parse().map_err(|_| parse_err(row, "ash", rec[3].to_string()))?);
            heat.push(rec[4].parse().map_err(|_| parse_err(row, "heat", rec[4].to_string()))?);
        }
        if ash.is_empty() || ash.len() % lots != 0 {
            return Err(parse_err(ash.len(), "scenario", "incomplete scenario table".into()));
        }
        Self::from_values(ash.len() / lots, lots, seed, ash, heat)
    }
}

fn parse_err(row: usize, column: &str, message: String) -> BlendError {
    BlendError::Parse { file: "scenarios".into(), row: row + 2, column: column.into(), message }
}

/// Draws `count` iid scenarios for every lot of the instance.
pub fn sample_scenarios(instance: &ProblemInstance, count: usize, seed: u64) -> Result<ScenarioSet> {
    sample_scenarios_tagged(instance, count, seed, StreamTag::Optimization)
}

pub fn sample_scenarios_tagged(
    instance: &ProblemInstance,
    count: usize,
    seed: u64,
    tag: StreamTag,
) -> Result<ScenarioSet> {
    if count == 0 {
        return Err(BlendError::Argument("scenario count must be at least 1".into()));
    }
    let lots = instance.lots();
    let mut ash = vec![0.0; count * lots.len()];
    let mut heat = vec![0.0; count * lots.len()];
    for (k, lot) in lots.iter().enumerate() {
        let bt = &instance.biomass()[lot.biomass];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id(tag, lot.supplier, lot.biomass));
        for s in 0..count {
            let u_ash: f64 = rng.gen();
            let u_heat: f64 = rng.gen();
            ash[s * lots.len() + k] = bt.ash.quantile(u_ash);
            heat[s * lots.len() + k] = bt.heat.quantile(u_heat);
        }
    }
    ScenarioSet::from_values(count, lots.len(), seed, ash, heat)
}

/// E1_s = sum_k (a_ks - alpha) X_k for every scenario.
pub fn ash_activities(quantities: &[f64], scenarios: &ScenarioSet, ash_limit: f64) -> Vec<f64> {
    (0..scenarios.len())
        .map(|s| {
            scenarios
                .ash_row(s)
                .iter()
                .zip(quantities)
                .map(|(a, x)| (a - ash_limit) * x)
                .sum()
        })
        .collect()
}

/// E2_s = tau - sum_k e_k h_ks X_k for every scenario.
pub fn thermal_activities(
    quantities: &[f64],
    scenarios: &ScenarioSet,
    thermal_requirement: f64,
    efficiencies: &[f64],
) -> Vec<f64> {
    (0..scenarios.len())
        .map(|s| {
            let energy: f64 = scenarios
                .heat_row(s)
                .iter()
                .zip(quantities)
                .zip(efficiencies)
                .map(|((h, x), e)| e * h * x)
                .sum();
            thermal_requirement - energy
        })
        .collect()
}

/// Empirical violation rates (p̂¹, p̂²). A scenario violates a row only when
/// its activity is strictly positive.
pub fn empirical_violation_rates(
    quantities: &[f64],
    scenarios: &ScenarioSet,
    ash_limit: f64,
    thermal_requirement: f64,
    efficiencies: &[f64],
) -> Result<(f64, f64)> {
    if quantities.len() != scenarios.lots() || efficiencies.len() != scenarios.lots() {
        return Err(BlendError::Argument(format!(
            "solution has {} lots, scenarios have {}",
            quantities.len(),
            scenarios.lots()
        )));
    }
    let n = scenarios.len() as f64;
    let ash = ash_activities(quantities, scenarios, ash_limit);
    let thermal = thermal_activities(quantities, scenarios, thermal_requirement, efficiencies);
    let v1 = ash.iter().filter(|e| **e > 0.0).count() as f64;
    let v2 = thermal.iter().filter(|e| **e > 0.0).count() as f64;
    Ok((v1 / n, v2 / n))
}

/// Efficiency e_b of every lot, in lot order.
pub fn lot_efficiencies(instance: &ProblemInstance) -> Vec<f64> {
    (0..instance.lots().len()).map(|k| instance.efficiency(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bracket, BiomassType, RefinerySpec, Supplier, SupplyCurve, TriangularParams, UniformParams};
    use std::collections::BTreeMap;

    fn instance(ash: TriangularParams, heat: UniformParams, suppliers: usize) -> ProblemInstance {
        let bt = BiomassType {
            id: "b".into(),
            ash,
            heat,
            efficiency: 1.0,
            harvest_collection: 0.0,
            processing: 0.0,
            storage: 0.0,
            transport_fixed: 0.0,
            transport_variable: 0.0,
            harvest_cost: None,
        };
        let curve = SupplyCurve::new(vec![Bracket { lower: 0.0, upper: 10.0, price: 1.0 }]).unwrap();
        let sups = (0..suppliers)
            .map(|i| Supplier {
                id: format!("s{i}"),
                coords: None,
                distance: 0.0,
                curves: BTreeMap::from([("b".to_string(), curve.clone())]),
            })
            .collect();
        let refinery = RefinerySpec {
            ash_limit: 1.0,
            thermal_requirement: 5.0,
            risk_ash: 0.1,
            risk_thermal: 0.1,
            inner_risk_ash: 0.0,
            inner_risk_thermal: 0.0,
        };
        ProblemInstance::new(sups, vec![bt], refinery).unwrap()
    }

    #[test]
    fn degenerate_distributions() {
        let inst = instance(
            TriangularParams::degenerate(1.0).unwrap(),
            UniformParams::new(14.51, 14.51).unwrap(),
            2,
        );
        let sc = sample_scenarios(&inst, 50, 7).unwrap();
        for s in 0..50 {
            for k in 0..2 {
                assert_eq!(sc.ash(s, k), 1.0);
                assert_eq!(sc.heat(s, k), 14.51);
            }
        }
    }

    #[test]
    fn triangular_sample_mean() {
        let inst = instance(TriangularParams::new(0.0, 1.0, 2.0).unwrap(), UniformParams::new(1.0, 2.0).unwrap(), 1);
        let sc = sample_scenarios(&inst, 100_000, 11).unwrap();
        let mean: f64 = (0..sc.len()).map(|s| sc.ash(s, 0)).sum::<f64>() / sc.len() as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn zero_count_is_rejected() {
        let inst = instance(TriangularParams::degenerate(1.0).unwrap(), UniformParams::new(1.0, 2.0).unwrap(), 1);
        assert!(matches!(sample_scenarios(&inst, 0, 1), Err(BlendError::Argument(_))));
    }

    #[test]
    fn adding_suppliers_keeps_existing_streams() {
        let tri = TriangularParams::new(0.5, 1.0, 3.0).unwrap();
        let uni = UniformParams::new(10.0, 20.0).unwrap();
        let small = sample_scenarios(&instance(tri, uni, 2), 20, 5).unwrap();
        let large = sample_scenarios(&instance(tri, uni, 5), 20, 5).unwrap();
        for s in 0..20 {
            for k in 0..2 {
                assert_eq!(small.ash(s, k), large.ash(s, k));
                assert_eq!(small.heat(s, k), large.heat(s, k));
            }
        }
        let check = sample_scenarios_tagged(&instance(tri, uni, 2), 20, 5, StreamTag::Validation).unwrap();
        assert_ne!(check.ash(0, 0), small.ash(0, 0));
    }

    #[test]
    fn violation_rate_examples() {
        let inst = instance(TriangularParams::degenerate(1.0).unwrap(), UniformParams::new(2.0, 2.0).unwrap(), 1);
        let sc = sample_scenarios(&inst, 4, 3).unwrap();
        let e = lot_efficiencies(&inst);
        // empty blend: ash never violated, thermal always violated
        assert_eq!(empirical_violation_rates(&[0.0], &sc, 1.0, 5.0, &e).unwrap(), (0.0, 1.0));
        // ash exactly at the limit is not a violation
        assert_eq!(empirical_violation_rates(&[3.0], &sc, 1.0, 5.0, &e).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn two_scenario_hand_instance() {
        // lot 0: ash 0.5 / 2.0, heat 10 / 4; lot 1: ash 1.5 / 0.8, heat 12 / 12
        let sc = ScenarioSet::from_values(2, 2, 0, vec![0.5, 1.5, 2.0, 0.8], vec![10.0, 12.0, 4.0, 12.0]).unwrap();
        let x = [2.0, 1.0];
        // E1: s0 = (-0.5)*2 + 0.5*1 = -0.5; s1 = 1.0*2 - 0.2*1 = 1.8
        // E2 with tau = 30, e = 1: s0 = 30 - 32 = -2; s1 = 30 - 20 = 10
        let (p1, p2) = empirical_violation_rates(&x, &sc, 1.0, 30.0, &[1.0, 1.0]).unwrap();
        assert_eq!((p1, p2), (0.5, 0.5));
        let (p1, p2) = empirical_violation_rates(&[0.0, 3.0], &sc, 1.0, 30.0, &[1.0, 1.0]).unwrap();
        // E1: 1.5, -0.6; E2: -6, -6
        assert_eq!((p1, p2), (0.5, 0.0));
        assert!(empirical_violation_rates(&[1.0], &sc, 1.0, 30.0, &[1.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let inst = instance(TriangularParams::new(0.5, 1.0, 3.0).unwrap(), UniformParams::new(10.0, 20.0).unwrap(), 3);
        let sc = sample_scenarios(&inst, 7, 42).unwrap();
        let mut buf = Vec::new();
        sc.write_csv(&inst, &mut buf).unwrap();
        let back = ScenarioSet::read_csv(&inst, 42, buf.as_slice()).unwrap();
        assert_eq!(back, sc);
    }
}
