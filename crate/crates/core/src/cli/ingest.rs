//! Comma-separated input files and their canonical export.
//!
//! suppliers: `id,x,y` or `id,distance` (all four columns allowed; an
//! explicit distance wins over coordinates).
//! biomass: `id,ash_min,ash_mode,ash_max,lhv,hhv,hc,pr,st,g,v,efficiency[,harvest_cost]`
//! with harvest costs as a `;`-separated list, one per bracket.
//! curves: `supplier,biomass,bracket,lower,upper,price`, brackets numbered
//! from 1.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::site::site_refinery;
use crate::error::{BlendError, Result};
use crate::model::{
    Bracket, BiomassType, ProblemInstance, RefinerySpec, Supplier, SupplyCurve, TriangularParams, UniformParams,
};

/// 10^6 BTU in 10^9 BTU.
pub const MEGA_PER_GIGA_BTU: f64 = 1000.0;

/// Thermal requirement per dry ton of demand, 10^6 BTU/DT: 3,838 x 10^9 BTU
/// for 0.3 MDT/year.
pub const THERMAL_PER_DT: f64 = 12.794;

/// Conversion efficiency used for the bundled table.
pub const DEFAULT_EFFICIENCY: f64 = 0.75;

/// Summary of input data for the seven feedstocks. Ash is triangular over
/// the post-processing range with the average ash content as mode; heat is
/// uniform over LHV..HHV.
pub const DEFAULT_BIOMASS_CSV: &str = "\
id,ash_min,ash_mode,ash_max,lhv,hhv,hc,pr,st,g,v,efficiency
hybrid_poplar,0.3,0.5,0.75,16.768,16.982,22.24,23.97,3.23,20.53,0.046,0.75
pine,0.1,0.75,1.13,14.51,15.656,20.19,12.85,3.23,20.53,0.046,0.75
sp_residue,0.8,1,1.5,15.232,17.202,0,23.97,3.23,20.69,0.046,0.75
sn_residue,0.8,1,1.5,15.232,17.202,0,23.97,3.23,20.69,0.046,0.75
mixed_residue,0.8,1.2,1.8,15.16,17.892,0,23.97,3.23,20.69,0.046,0.75
cd_waste,0.8,1,1.5,14.51,17.648,0,28.12,3.23,22.87,0.046,0.75
msw,7,10,15,10.25,13.68,0,19.7,4.5,20.69,0.046,0.75
";

/// Total quantity available per feedstock, MDT, in the same order.
pub const DEFAULT_TOTAL_SUPPLY: [f64; 7] = [0.34, 0.60, 0.11, 0.27, 0.25, 0.34, 0.099];

/// Refinery parameters as entered by a user: τ in 10^9 BTU/year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineryParams {
    pub ash_limit: f64,
    pub thermal_gbtu: f64,
    pub risk_ash: f64,
    pub risk_thermal: f64,
    pub inner_risk_ash: f64,
    pub inner_risk_thermal: f64,
}

impl RefineryParams {
    pub fn to_spec(&self) -> Result<RefinerySpec> {
        let spec = RefinerySpec {
            ash_limit: self.ash_limit,
            thermal_requirement: self.thermal_gbtu * MEGA_PER_GIGA_BTU,
            risk_ash: self.risk_ash,
            risk_thermal: self.risk_thermal,
            inner_risk_ash: self.inner_risk_ash,
            inner_risk_thermal: self.inner_risk_thermal,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// τ in 10^6 BTU/year for a demand in MDT/year.
pub fn thermal_for_demand(demand_mdt: f64) -> f64 {
    demand_mdt * 1e6 * THERMAL_PER_DT
}

struct Table {
    file: String,
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn parse<R: Read>(file: &str, input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = reader
            .headers()
            .map_err(|e| parse_err(file, 1, "", e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            rows.push(rec.map_err(|e| parse_err(file, i + 2, "", e.to_string()))?);
        }
        Ok(Self { file: file.to_string(), headers, rows })
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.column(name)
            .ok_or_else(|| parse_err(&self.file, 1, name, "missing column".into()))
    }

    fn text(&self, row: usize, col: usize) -> &str {
        self.rows[row].get(col).unwrap_or("")
    }

    fn number(&self, row: usize, col: usize) -> Result<f64> {
        let raw = self.text(row, col);
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| parse_err(&self.file, row + 2, &self.headers[col], format!("`{raw}` is not a number")))
    }

    fn optional_number(&self, row: usize, col: Option<usize>) -> Result<Option<f64>> {
        match col {
            Some(c) if !self.text(row, c).is_empty() => Ok(Some(self.number(row, c)?)),
            _ => Ok(None),
        }
    }
}

fn parse_err(file: &str, row: usize, column: &str, message: String) -> BlendError {
    BlendError::Parse { file: file.into(), row, column: column.into(), message }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| parse_err(&path.display().to_string(), 0, "", e.to_string()))
}

/// Supplier rows before distances are resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplierRecord {
    pub id: String,
    pub coords: Option<(f64, f64)>,
    pub distance: Option<f64>,
}

pub fn read_suppliers<R: Read>(file: &str, input: R) -> Result<Vec<SupplierRecord>> {
    let t = Table::parse(file, input)?;
    let id = t.require("id")?;
    let (x, y, d) = (t.column("x"), t.column("y"), t.column("distance"));
    if d.is_none() && (x.is_none() || y.is_none()) {
        return Err(parse_err(file, 1, "distance", "need either `distance` or both `x` and `y`".into()));
    }
    let mut out: Vec<SupplierRecord> = Vec::with_capacity(t.rows.len());
    for r in 0..t.rows.len() {
        let name = t.text(r, id);
        if name.is_empty() {
            return Err(parse_err(file, r + 2, "id", "empty id".into()));
        }
        if out.iter().any(|s| s.id == name) {
            return Err(parse_err(file, r + 2, "id", format!("duplicate supplier `{name}`")));
        }
        let coords = match (t.optional_number(r, x)?, t.optional_number(r, y)?) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(parse_err(file, r + 2, "y", "coordinates need both x and y".into())),
        };
        let distance = t.optional_number(r, d)?;
        if coords.is_none() && distance.is_none() {
            return Err(parse_err(file, r + 2, "distance", "row has neither coordinates nor distance".into()));
        }
        out.push(SupplierRecord { id: name.to_string(), coords, distance });
    }
    Ok(out)
}

pub fn read_biomass<R: Read>(file: &str, input: R) -> Result<Vec<BiomassType>> {
    let t = Table::parse(file, input)?;
    let names = [
        "id", "ash_min", "ash_mode", "ash_max", "lhv", "hhv", "hc", "pr", "st", "g", "v", "efficiency",
    ];
    let cols = names.iter().map(|n| t.require(n)).collect::<Result<Vec<_>>>()?;
    let harvest = t.column("harvest_cost");
    let mut out: Vec<BiomassType> = Vec::with_capacity(t.rows.len());
    for r in 0..t.rows.len() {
        let num = |i: usize| t.number(r, cols[i]);
        let id = t.text(r, cols[0]).to_string();
        if id.is_empty() {
            return Err(parse_err(file, r + 2, "id", "empty id".into()));
        }
        if out.iter().any(|b| b.id == id) {
            return Err(parse_err(file, r + 2, "id", format!("duplicate biomass `{id}`")));
        }
        let harvest_cost = match harvest.map(|c| t.text(r, c)).filter(|s| !s.is_empty()) {
            None => None,
            Some(list) => Some(
                list.split(';')
                    .map(|v| {
                        v.trim().parse::<f64>().map_err(|_| {
                            parse_err(file, r + 2, "harvest_cost", format!("`{v}` is not a number"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let ash = TriangularParams::new(num(1)?, num(2)?, num(3)?)
            .map_err(|e| parse_err(file, r + 2, "ash_mode", e.to_string()))?;
        let heat =
            UniformParams::new(num(4)?, num(5)?).map_err(|e| parse_err(file, r + 2, "hhv", e.to_string()))?;
        out.push(BiomassType {
            id,
            ash,
            heat,
            efficiency: num(11)?,
            harvest_collection: num(6)?,
            processing: num(7)?,
            storage: num(8)?,
            transport_fixed: num(9)?,
            transport_variable: num(10)?,
            harvest_cost,
        });
    }
    Ok(out)
}

/// Curves keyed by (supplier, biomass).
pub fn read_curves<R: Read>(file: &str, input: R) -> Result<BTreeMap<(String, String), SupplyCurve>> {
    let t = Table::parse(file, input)?;
    let cols = ["supplier", "biomass", "bracket", "lower", "upper", "price"]
        .iter()
        .map(|n| t.require(n))
        .collect::<Result<Vec<_>>>()?;
    let mut raw: BTreeMap<(String, String), Vec<(usize, usize, Bracket)>> = BTreeMap::new();
    for r in 0..t.rows.len() {
        let key = (t.text(r, cols[0]).to_string(), t.text(r, cols[1]).to_string());
        let idx = t
            .text(r, cols[2])
            .parse::<usize>()
            .ok()
            .filter(|i| *i >= 1)
            .ok_or_else(|| parse_err(file, r + 2, "bracket", format!("`{}` is not a bracket number", t.text(r, cols[2]))))?;
        let b = Bracket { lower: t.number(r, cols[3])?, upper: t.number(r, cols[4])?, price: t.number(r, cols[5])? };
        raw.entry(key).or_default().push((idx, r + 2, b));
    }
    let mut out = BTreeMap::new();
    for (key, mut rows) in raw {
        rows.sort_by_key(|r| r.0);
        for (expected, (idx, row, _)) in rows.iter().enumerate() {
            if *idx != expected + 1 {
                return Err(parse_err(
                    file,
                    *row,
                    "bracket",
                    format!("brackets of `{}`/`{}` must be numbered 1..n without gaps", key.0, key.1),
                ));
            }
        }
        let first_row = rows[0].1;
        let curve = SupplyCurve::new(rows.into_iter().map(|r| r.2).collect())
            .map_err(|e| parse_err(file, first_row, "lower", e.to_string()))?;
        out.insert(key, curve);
    }
    Ok(out)
}

/// Builds an instance from parsed records. Suppliers given only by
/// coordinates are measured from the refinery, which is sited at the
/// availability-weighted 1-median of those coordinates.
pub fn assemble(
    suppliers: Vec<SupplierRecord>,
    biomass: Vec<BiomassType>,
    mut curves: BTreeMap<(String, String), SupplyCurve>,
    refinery: RefinerySpec,
) -> Result<ProblemInstance> {
    if suppliers.is_empty() {
        return Err(BlendError::Validation("supplier file lists no suppliers".into()));
    }
    for (s, b) in curves.keys() {
        if !suppliers.iter().any(|r| &r.id == s) {
            return Err(BlendError::Lookup { kind: "supplier", id: s.clone() });
        }
        if !biomass.iter().any(|r| &r.id == b) {
            return Err(BlendError::Lookup { kind: "biomass", id: b.clone() });
        }
    }
    let availability = |id: &str| -> f64 {
        curves.iter().filter(|((s, _), _)| s == id).map(|(_, c)| c.availability()).sum()
    };
    let needs_site = suppliers.iter().any(|s| s.distance.is_none());
    let site = if needs_site {
        let placed: Vec<&SupplierRecord> = suppliers.iter().filter(|s| s.coords.is_some()).collect();
        let coords: Vec<(f64, f64)> = placed.iter().map(|s| s.coords.unwrap()).collect();
        let weights: Vec<f64> = placed.iter().map(|s| availability(&s.id)).collect();
        Some(coords[site_refinery(&coords, &weights)?])
    } else {
        None
    };
    let mut out = Vec::with_capacity(suppliers.len());
    for rec in suppliers {
        let distance = match (rec.distance, rec.coords, site) {
            (Some(d), _, _) => d,
            (None, Some((x, y)), Some((sx, sy))) => ((x - sx).powi(2) + (y - sy).powi(2)).sqrt(),
            _ => unreachable!("rows without distance carry coordinates"),
        };
        let own: Vec<(String, String)> = curves.keys().filter(|(s, _)| *s == rec.id).cloned().collect();
        let curves = own.into_iter().map(|k| (k.1.clone(), curves.remove(&k).unwrap())).collect();
        out.push(Supplier { id: rec.id, coords: rec.coords, distance, curves });
    }
    ProblemInstance::new(out, biomass, refinery)
}

/// Paths of the three input files. A missing biomass path selects the
/// bundled table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputPaths {
    pub suppliers: std::path::PathBuf,
    pub biomass: Option<std::path::PathBuf>,
    pub curves: std::path::PathBuf,
}

pub fn default_biomass() -> Vec<BiomassType> {
    read_biomass("bundled biomass table", DEFAULT_BIOMASS_CSV.as_bytes()).expect("bundled table parses")
}

pub fn ingest(paths: &InputPaths, refinery: &RefineryParams) -> Result<ProblemInstance> {
    let spec = refinery.to_spec()?;
    let sup_name = paths.suppliers.display().to_string();
    let suppliers = read_suppliers(&sup_name, open(&paths.suppliers)?)?;
    let biomass = match &paths.biomass {
        Some(p) => read_biomass(&p.display().to_string(), open(p)?)?,
        None => default_biomass(),
    };
    let curves = read_curves(&paths.curves.display().to_string(), open(&paths.curves)?)?;
    assemble(suppliers, biomass, curves, spec)
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_suppliers<W: Write>(instance: &ProblemInstance, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| BlendError::Io(std::io::Error::other(e));
    w.write_record(["id", "x", "y", "distance"]).map_err(err)?;
    for s in instance.suppliers() {
        let (x, y) = s.coords.map(|(x, y)| (num(x), num(y))).unwrap_or_default();
        w.write_record([s.id.clone(), x, y, num(s.distance)]).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_biomass<W: Write>(biomass: &[BiomassType], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| BlendError::Io(std::io::Error::other(e));
    let with_harvest = biomass.iter().any(|b| b.harvest_cost.is_some());
    let mut header = vec![
        "id", "ash_min", "ash_mode", "ash_max", "lhv", "hhv", "hc", "pr", "st", "g", "v", "efficiency",
    ];
    if with_harvest {
        header.push("harvest_cost");
    }
    w.write_record(&header).map_err(err)?;
    for b in biomass {
        let mut row = vec![
            b.id.clone(),
            num(b.ash.min),
            num(b.ash.mode),
            num(b.ash.max),
            num(b.heat.low),
            num(b.heat.high),
            num(b.harvest_collection),
            num(b.processing),
            num(b.storage),
            num(b.transport_fixed),
            num(b.transport_variable),
            num(b.efficiency),
        ];
        if with_harvest {
            row.push(
                b.harvest_cost
                    .as_ref()
                    .map(|h| h.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";"))
                    .unwrap_or_default(),
            );
        }
        w.write_record(&row).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curves<W: Write>(instance: &ProblemInstance, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| BlendError::Io(std::io::Error::other(e));
    w.write_record(["supplier", "biomass", "bracket", "lower", "upper", "price"]).map_err(err)?;
    for s in instance.suppliers() {
        for (b, curve) in &s.curves {
            for (p, br) in curve.brackets().iter().enumerate() {
                w.write_record([s.id.clone(), b.clone(), (p + 1).to_string(), num(br.lower), num(br.upper), num(br.price)])
                    .map_err(err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `suppliers.csv`, `biomass.csv` and `curves.csv` into `dir`.
pub fn export(instance: &ProblemInstance, dir: &Path) -> Result<InputPaths> {
    std::fs::create_dir_all(dir)?;
    let paths = InputPaths {
        suppliers: dir.join("suppliers.csv"),
        biomass: Some(dir.join("biomass.csv")),
        curves: dir.join("curves.csv"),
    };
    write_suppliers(instance, File::create(&paths.suppliers)?)?;
    write_biomass(instance.biomass(), File::create(paths.biomass.as_ref().unwrap())?)?;
    write_curves(instance, File::create(&paths.curves)?)?;
    Ok(paths)
}
