use serde::{Deserialize, Serialize};

use super::Bounds;
use crate::error::{Error, Result};

/// Simple polygon (single exterior ring) delimiting a region of interest.
///
/// The ring is stored closed: the last vertex repeats the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RoiRepr", into = "RoiRepr")]
pub struct RoiPolygon {
    crs: String,
    ring: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RoiRepr {
    crs: String,
    ring: Vec<[f64; 2]>,
}

impl TryFrom<RoiRepr> for RoiPolygon {
    type Error = Error;

    fn try_from(r: RoiRepr) -> Result<Self> {
        RoiPolygon::new(r.crs, r.ring.into_iter().map(|[x, y]| (x, y)).collect())
    }
}

impl From<RoiPolygon> for RoiRepr {
    fn from(p: RoiPolygon) -> Self {
        RoiRepr {
            crs: p.crs,
            ring: p.ring.into_iter().map(|(x, y)| [x, y]).collect(),
        }
    }
}

impl RoiPolygon {
    /// Validates and closes `vertices` (an already-closed ring is accepted).
    pub fn new(crs: impl Into<String>, mut vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices
            .iter()
            .any(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        if vertices.len() >= 2 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 distinct vertices, got {}",
                vertices.len()
            )));
        }
        vertices.push(vertices[0]);
        let roi = RoiPolygon {
            crs: crs.into(),
            ring: vertices,
        };
        if roi.signed_area() == 0.0 {
            return Err(Error::InvalidPolygon("ring has zero area".into()));
        }
        if let Some((i, j)) = roi.first_self_intersection() {
            return Err(Error::InvalidPolygon(format!(
                "edges {i} and {j} intersect"
            )));
        }
        Ok(roi)
    }

    pub fn rectangle(crs: impl Into<String>, bounds: Bounds) -> Result<Self> {
        RoiPolygon::new(
            crs,
            vec![
                (bounds.min_x, bounds.min_y),
                (bounds.max_x, bounds.min_y),
                (bounds.max_x, bounds.max_y),
                (bounds.min_x, bounds.max_y),
            ],
        )
    }

    pub fn crs(&self) -> &str {
        &self.crs
    }

    /// Closed ring; the last vertex equals the first.
    pub fn ring(&self) -> &[(f64, f64)] {
        &self.ring
    }

    pub fn bbox(&self) -> Bounds {
        let mut b = Bounds {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for &(x, y) in &self.ring {
            b.min_x = b.min_x.min(x);
            b.min_y = b.min_y.min(y);
            b.max_x = b.max_x.max(x);
            b.max_y = b.max_y.max(y);
        }
        b
    }

    /// Shoelace area in squared map units (positive for counter-clockwise rings).
    pub fn signed_area(&self) -> f64 {
        self.ring
            .windows(2)
            .map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1)
            .sum::<f64>()
            * 0.5
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for w in self.ring.windows(2) {
            let (x1, y1) = w[0];
            let (x2, y2) = w[1];
            if (y1 > y) != (y2 > y) {
                let x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1);
                if x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn first_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.ring.len() - 1;
        for i in 0..n {
            for j in i + 1..n {
                // Adjacent edges share a vertex by construction.
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = (self.ring[i], self.ring[i + 1]);
                let (c, d) = (self.ring[j], self.ring[j + 1]);
                if segments_intersect(a, b, c, d) {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closes_open_rings() {
        let p = RoiPolygon::new("EPSG:4326", vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]).unwrap();
        assert_eq!(p.ring().len(), 4);
        assert_eq!(p.ring()[0], p.ring()[3]);
        let closed = RoiPolygon::new(
            "EPSG:4326",
            vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(p, closed);
    }

    #[test]
    fn rejects_degenerate_rings() {
        assert!(RoiPolygon::new("c", vec![(0.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(RoiPolygon::new("c", vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]).is_err());
        // Bow tie.
        let bowtie = vec![(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)];
        assert!(matches!(
            RoiPolygon::new("c", bowtie),
            Err(Error::InvalidPolygon(_))
        ));
    }

    #[test]
    fn contains_square() {
        let sq = RoiPolygon::rectangle(
            "c",
            Bounds {
                min_x: 0.0,
                min_y: 0.0,
                max_x: 2.0,
                max_y: 2.0,
            },
        )
        .unwrap();
        assert!(sq.contains(1.0, 1.0));
        assert!(!sq.contains(3.0, 1.0));
        assert!(!sq.contains(1.0, -0.5));
        assert_eq!(sq.signed_area(), 4.0);
    }

    #[test]
    fn serde_round_trip() {
        let p = RoiPolygon::new("EPSG:4326", vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: RoiPolygon = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
        assert!(serde_json::from_str::<RoiPolygon>(r#"{"crs":"c","ring":[[0,0],[1,1]]}"#).is_err());
    }
}
