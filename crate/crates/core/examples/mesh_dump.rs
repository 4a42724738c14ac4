//! Structured mesh summary and text dump.
//!
//! `cargo run --example mesh_dump -- 2`

use etdg::prelude::*;

fn main() -> Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let mesh = build_structured_mesh(n)?;
    let boundary = mesh.facets().iter().filter(|f| f.is_boundary()).count();
    eprintln!(
        "{} vertices, {} triangles, {} facets ({} on the boundary), h = {:.4}",
        mesh.vertices().len(),
        mesh.num_elements(),
        mesh.num_facets(),
        boundary,
        mesh.max_diameter()
    );
    mesh.write_text(std::io::stdout().lock())?;
    Ok(())
}
