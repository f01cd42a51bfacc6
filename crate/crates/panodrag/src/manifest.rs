//! On-disk case format: a directory holding `manifest.json`, an 8-bit RGB
//! panorama and an 8-bit grayscale mask.
//!
//! ```json
//! {
//!   "id": "seam-42-0",
//!   "image_path": "image.png",
//!   "mask_path": "mask.png",
//!   "width": 1024,
//!   "height": 512,
//!   "pairs": [{ "handle": [1010, 240], "target": [14, 236] }]
//! }
//! ```
//!
//! Paths are relative to the case directory. Pixel coordinates follow the
//! ERP convention of the core crate (column `i`, row `j`, row 0 at the north
//! pole). Integral coordinates are written as integers; fractional ones are
//! accepted on read.

use serde::{Deserialize, Serialize, Serializer};

use panodrag_core::reproject::DragPair;
use panodrag_core::PixelCoord;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct Coord(pub f64);

impl Serialize for Coord {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.fract() == 0.0 && v.abs() < 9.0e15 {
            s.serialize_i64(v as i64)
        } else {
            crate::report::F17(v).serialize(s)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub handle: [Coord; 2],
    pub target: [Coord; 2],
}

impl PairSpec {
    pub fn to_pair(self) -> DragPair {
        DragPair::new(
            PixelCoord::new(self.handle[0].0, self.handle[1].0),
            PixelCoord::new(self.target[0].0, self.target[1].0),
        )
    }

    pub fn from_pair(p: &DragPair) -> Self {
        Self {
            handle: [Coord(p.handle.i), Coord(p.handle.j)],
            target: [Coord(p.target.i), Coord(p.target.j)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseManifest {
    pub id: String,
    pub image_path: String,
    pub mask_path: String,
    pub width: usize,
    pub height: usize,
    pub pairs: Vec<PairSpec>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_coordinates_stay_integers() {
        let p = PairSpec::from_pair(&DragPair::new(
            PixelCoord::new(3.0, 4.0),
            PixelCoord::new(5.5, 0.0),
        ));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"handle":[3,4],"target":[5.5000000000000000e0,0]}"#);
        let back: PairSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad =
            r#"{"id":"a","image_path":"i","mask_path":"m","width":2,"height":1,"pairs":[],"x":1}"#;
        assert!(serde_json::from_str::<CaseManifest>(bad).is_err());
    }
}
