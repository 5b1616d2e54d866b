//! Scale error over the pitch/roll grid of views for each method.

use laserscale::laser::RigConfig;
use laserscale::simulate::{run_grid_study, GridStudySpec, StudyMethod, TerrainKind};
use std::collections::BTreeMap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec: GridStudySpec = serde_json::from_value(serde_json::json!({
        "name": "grid",
        "terrains": ["rough"],
        "rigs": ["A", "C"],
        "n_features": 300,
        "methods": ["fcm_all", "pcm", "direct3d", "davis"],
    }))?;
    let rows = run_grid_study(&spec)?;
    let mut worst: BTreeMap<(RigConfig, StudyMethod), (f64, usize)> = BTreeMap::new();
    for r in &rows {
        let e = worst.entry((r.rig, r.method)).or_insert((0.0, 0));
        match r.s {
            Some(s) => e.0 = e.0.max((s - 1.0).abs()),
            None => e.1 += 1,
        }
    }
    println!("terrain {:?}, {} rows", TerrainKind::Rough, rows.len());
    println!("rig  method      max |s-1|   failed views");
    for ((rig, method), (err, failed)) in worst {
        println!("{rig:?}    {:<10}  {err:.3e}   {failed}", method.name());
    }
    Ok(())
}
