use super::Path;
use crate::error::{Error, Result};
use crate::manifold::{CoveringDescriptor, Point};

/// Pushes a path on the covering space down to the base, pointwise.
pub fn project_path(cov: &CoveringDescriptor, path: &Path) -> Result<Path> {
    let points = path
        .points()
        .iter()
        .map(|p| cov.project_point(p))
        .collect::<Result<Vec<_>>>()?;
    Path::new(path.grid().clone(), points)
}

/// Lifts a base path to the covering space starting at `start`, a preimage
/// of the first base point. Each lifted point is the preimage nearest to
/// its predecessor, which is unambiguous only while base steps stay below
/// half the shortest period.
pub fn lift_path(cov: &CoveringDescriptor, path: &Path, start: &Point) -> Result<Path> {
    cov.total().validate_point(start)?;
    let base = cov.base();
    let first = path.start();
    let projected = cov.project_point(start)?;
    let mismatch = base.distance(&projected, first)?;
    if mismatch > 1e-12 * cov.shortest_period().max(1.0) {
        return Err(Error::Domain(format!(
            "lift start does not project to the path start (off by {mismatch})"
        )));
    }
    let half = 0.5 * cov.shortest_period();
    let mut points = Vec::with_capacity(path.points().len());
    points.push(start.clone());
    let mut anchor = start.coords().to_vec();
    for (j, w) in path.points().windows(2).enumerate() {
        let step = base.distance(&w[0], &w[1])?;
        if !(step < half) {
            return Err(Error::AmbiguousLift {
                step: j + 1,
                displacement: step,
                half_period: half,
            });
        }
        let (lifted, _) = cov.lift_coords(w[1].coords(), &anchor);
        anchor.clone_from(&lifted);
        points.push(Point::new(lifted));
    }
    Path::new(path.grid().clone(), points)
}
