//! Writes a terrain as OBJ and PLY and reads both back.

use laserscale::mesh::{load_mesh, write_obj, write_ply_ascii};
use laserscale::simulate::{TerrainKind, TerrainSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TerrainSpec {
        cells: 40,
        ..TerrainSpec::new(TerrainKind::Smooth, 3)
    };
    let mesh = spec.generate();
    let dir = std::env::temp_dir().join("laserscale_mesh_io");
    std::fs::create_dir_all(&dir)?;
    let (obj, ply) = (dir.join("terrain.obj"), dir.join("terrain.ply"));
    write_obj(&mesh, std::fs::File::create(&obj)?)?;
    write_ply_ascii(&mesh, std::fs::File::create(&ply)?)?;
    for path in [&obj, &ply] {
        let back = load_mesh(path, None)?;
        let same = back.vertices() == mesh.vertices() && back.triangles() == mesh.triangles();
        println!(
            "{}: {} vertices, {} triangles, identical: {same}",
            path.display(),
            back.vertices().len(),
            back.triangle_count()
        );
    }
    Ok(())
}
