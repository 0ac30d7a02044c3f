//! Shipped benchmark requirements for the automatic-transmission and chasing-cars plants.
//!
//! Each entry pairs a requirement with a manual fitness, the input assumption
//! and the plant it runs on. Manual fitness terms read "maximize X" as
//! `-scale(X)` and "minimize Y" as `+scale(Y)`, so the search, which minimizes,
//! is pushed toward large X and small Y. Entries whose terms could sum past 1
//! are halved so every preset stays in `[-1, 1]`.
//!
//! `auto_scale` is the magnitude of the requirement's predicate bound (for
//! implications, the bound of the antecedent), which puts a violation as large
//! as the bound itself at -1.
//!
//! On the chasing-cars plant car 1 leads, so the gap between cars `i` and `i+1`
//! is `y{i} - y{i+1}`; requirements on the follower distance are written with
//! that orientation.

use crate::error::{Error, Result};
use crate::fitness::manual::{parse_manual, ManualFitnessExpr};
use crate::search::{Assumption, InputAssumption};
use crate::signals::InterpolationKind;
use crate::stl::{parse, Formula};

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub formula_text: &'static str,
    pub formula: Formula,
    pub manual_text: &'static str,
    pub manual: ManualFitnessExpr,
    pub assumption: Assumption,
    pub plant: &'static str,
    pub auto_scale: f64,
    /// Simulation horizon: the plant's benchmark horizon, stretched to cover the formula.
    pub horizon: f64,
}

pub const CATALOG_IDS: [&str; 11] = ["AT1", "AT2", "AT6a", "AT6b", "AT6c", "CC1", "CC2", "CC3", "CC4", "CC5", "CCx"];

struct Row {
    id: &'static str,
    formula: &'static str,
    manual: &'static str,
    auto_scale: f64,
}

const AT_ROWS: [Row; 5] = [
    Row {
        id: "AT1",
        formula: "G[0,20] (Speed < 120)",
        manual: "-scale(min(Throttle,[0,17]),[0,100]) + scale(max(Brake,[0,25]),[0,325])",
        auto_scale: 120.0,
    },
    Row {
        id: "AT2",
        formula: "G[0,10] (RPM < 4750)",
        manual: "-scale(mean(Throttle,[0,8]),[0,100]) + scale(mean(Brake,[0,25]),[0,325])",
        auto_scale: 4750.0,
    },
    Row {
        id: "AT6a",
        formula: "G[0,30] (RPM < 3000) -> G[0,4] (Speed < 35)",
        manual: "0.5*dist(scale(mean(Throttle,[0,33]),[0,100]), 0.45) + 0.5*scale(mean(Brake,[0,25]),[0,325])",
        auto_scale: 3000.0,
    },
    Row {
        id: "AT6b",
        formula: "G[0,30] (RPM < 3000) -> G[0,8] (Speed < 50)",
        manual: "0.5*dist(scale(mean(Throttle,[0,33]),[0,100]), 0.45) + 0.5*scale(mean(Brake,[0,25]),[0,325])",
        auto_scale: 3000.0,
    },
    Row {
        id: "AT6c",
        formula: "G[0,30] (RPM < 3000) -> G[0,20] (Speed < 65)",
        manual: "0.5*dist(scale(mean(Throttle,[0,33]),[0,100]), 0.45) + 0.5*scale(mean(Brake,[0,25]),[0,325])",
        auto_scale: 3000.0,
    },
];

const CC_ROWS: [Row; 6] = [
    Row {
        id: "CC1",
        formula: "G[0,100] (y4 - y5 <= 40)",
        manual: "-scale(min(throttle,[0,100]),[0,1]) + scale(max(brake,[0,100]),[0,1])",
        auto_scale: 40.0,
    },
    Row {
        id: "CC2",
        formula: "G[0,70] F[0,30] (y4 - y5 >= 15)",
        manual: "scale(max(throttle,[0,100]),[0,1]) - scale(min(brake,[0,100]),[0,1])",
        auto_scale: 15.0,
    },
    Row {
        id: "CC3",
        formula: "G[0,80] ((G[0,20] (y1 - y2 <= 20)) or (F[0,20] (y4 - y5 >= 40)))",
        manual: "-scale(min(throttle,[0,100]),[0,1]) + scale(max(brake,[0,100]),[0,1])",
        auto_scale: 20.0,
    },
    Row {
        id: "CC4",
        formula: "G[0,65] F[0,30] G[0,20] (y4 - y5 >= 8)",
        manual: "scale(min(y4 - y5,[0,100]),[-40,10])",
        auto_scale: 8.0,
    },
    Row {
        id: "CC5",
        formula: "G[0,72] F[0,8] ((G[0,5] (y1 - y2 >= 9)) -> (G[5,20] (y4 - y5 >= 9)))",
        manual: "dist(scale(mean(throttle,[0,33]),[0,1]), 0.3) - scale(mean(brake,[0,50]),[0,1])",
        auto_scale: 9.0,
    },
    Row {
        id: "CCx",
        formula: "G[0,50] (y1 - y2 > 7.5) and G[0,50] (y2 - y3 > 7.5) and G[0,50] (y3 - y4 > 7.5) and G[0,50] (y4 - y5 > 7.5)",
        manual: "-scale(at(throttle,0),[0,1]) + scale(at(throttle,16.666666666666668),[0,1])",
        auto_scale: 7.5,
    },
];

/// Looks up a shipped requirement by id (`AT1`, `CC4`, ...).
pub fn catalog(id: &str) -> Result<CatalogEntry> {
    let (row, plant, assumption, plant_horizon) = if let Some(r) = AT_ROWS.iter().find(|r| r.id == id) {
        let a = Assumption::new(vec![
            InputAssumption::new("Throttle", InterpolationKind::Pchip, (0.0, 100.0), 7),
            InputAssumption::new("Brake", InterpolationKind::Pchip, (0.0, 325.0), 3),
        ])?;
        (r, "at_lite", a, 50.0)
    } else if let Some(r) = CC_ROWS.iter().find(|r| r.id == id) {
        let a = Assumption::new(vec![
            InputAssumption::new("throttle", InterpolationKind::Pchip, (0.0, 1.0), 7),
            InputAssumption::new("brake", InterpolationKind::Pchip, (0.0, 1.0), 3),
        ])?;
        (r, "chasing_cars", a, 100.0)
    } else {
        return Err(Error::NotFound(format!("requirement '{id}' (known: {})", CATALOG_IDS.join(", "))));
    };
    let formula = parse(row.formula)?;
    let horizon = f64::max(plant_horizon, formula.horizon());
    Ok(CatalogEntry {
        id: row.id,
        formula_text: row.formula,
        formula,
        manual_text: row.manual,
        manual: parse_manual(row.manual)?,
        assumption,
        plant,
        auto_scale: row.auto_scale,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::manual_fitness;
    use crate::signals::Stat;
    use crate::stl::Trace;

    #[test]
    fn every_id_resolves() {
        for id in CATALOG_IDS {
            let e = catalog(id).unwrap();
            assert_eq!(e.id, id);
            assert!(e.auto_scale > 0.0);
            assert!(e.horizon >= e.formula.horizon());
        }
        assert!(matches!(catalog("AT5"), Err(Error::NotFound(_))));
    }

    #[test]
    fn at1_matches_table_entries() {
        let e = catalog("AT1").unwrap();
        assert_eq!(e.formula, parse("G[0,20](Speed<120)").unwrap());
        assert_eq!(e.plant, "at_lite");
        assert_eq!(e.assumption.inputs[0].range, (0.0, 100.0));
        assert_eq!(e.assumption.inputs[1].range, (0.0, 325.0));
        assert_eq!(e.assumption.inputs.iter().map(|i| i.control_points).collect::<Vec<_>>(), [7, 3]);
        assert_eq!(e.horizon, 50.0);
    }

    #[test]
    fn cc1_structure() {
        let e = catalog("CC1").unwrap();
        assert_eq!(e.formula.horizon(), 100.0);
        let expect = ManualFitnessExpr::stat("throttle", Stat::Min, (0.0, 100.0))
            .scaled((0.0, 1.0))
            .negated()
            .plus(ManualFitnessExpr::stat("brake", Stat::Max, (0.0, 100.0)).scaled((0.0, 1.0)));
        assert_eq!(e.manual, expect);
        assert!(e.assumption.inputs.iter().all(|i| i.kind == InterpolationKind::Pchip));
    }

    #[test]
    fn cc4_horizon_extends_past_plant() {
        assert_eq!(catalog("CC4").unwrap().horizon, 115.0);
    }

    #[test]
    fn cc2_minimizes_throttle_maximizes_brake() {
        let e = catalog("CC2").unwrap();
        let g = crate::signals::TimeGrid::new(e.horizon, 1.0).unwrap();
        let mk = |t: f64, b: f64| {
            let mut tr = Trace::new(g);
            tr.insert("throttle", vec![t; g.len()]).unwrap();
            tr.insert("brake", vec![b; g.len()]).unwrap();
            tr
        };
        assert_eq!(manual_fitness(&e.manual, &mk(0.0, 1.0)).unwrap(), -1.0);
        assert_eq!(manual_fitness(&e.manual, &mk(1.0, 0.0)).unwrap(), 1.0);
    }
}
