//! On-disk solution format: JSON with every floating-point quantity encoded
//! as a 17-significant-digit decimal string, so files are diff-able,
//! language-neutral and reserialize bit-identically.

use dumbbell_core::grid::{DumbbellGrid, GraphFunction};
use dumbbell_core::solve::StationaryState;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

/// Formats an `f64` with 17 significant digits; parsing the result returns
/// the identical bit pattern.
pub fn encode_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn decode_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("bad decimal `{s}`: {e}"))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionValues {
    /// `N + 1` samples over `[-L-2pi, -L]`; both ends duplicate the junction.
    pub ring_minus: Vec<String>,
    /// `M + 1` samples over `[-L, L]`.
    pub segment: Vec<String>,
    /// `N + 1` samples over `[L, L+2pi]`; both ends duplicate the junction.
    pub ring_plus: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format_version: u32,
    pub l: String,
    pub n: usize,
    pub m: usize,
    pub lambda: String,
    pub q: String,
    pub e: String,
    pub residual_norm: String,
    pub tag: String,
    pub values: SolutionValues,
}

impl SolutionFile {
    pub fn from_state(state: &StationaryState) -> Self {
        let grid = state.grid();
        let v = state.phi().values();
        let n = grid.n();
        let m = grid.m();
        let jl = grid.junction_left();
        let jr = grid.junction_right();

        let mut ring_minus = Vec::with_capacity(n + 1);
        ring_minus.push(encode_f64(v[jl]));
        for i in grid.ring_minus_interior() {
            ring_minus.push(encode_f64(v[i]));
        }
        ring_minus.push(encode_f64(v[jl]));

        let segment = grid.segment_nodes().map(|i| encode_f64(v[i])).collect();

        let mut ring_plus = Vec::with_capacity(n + 1);
        ring_plus.push(encode_f64(v[jr]));
        for i in grid.ring_plus_interior() {
            ring_plus.push(encode_f64(v[i]));
        }
        ring_plus.push(encode_f64(v[jr]));

        Self {
            format_version: FORMAT_VERSION,
            l: encode_f64(grid.l()),
            n,
            m,
            lambda: encode_f64(state.lambda()),
            q: encode_f64(state.charge()),
            e: encode_f64(state.energy()),
            residual_norm: encode_f64(state.residual_norm()),
            tag: state.tag().to_string(),
            values: SolutionValues { ring_minus, segment, ring_plus },
        }
    }

    /// Validates the structural invariants and rebuilds the grid function.
    pub fn to_profile(&self) -> Result<(GraphFunction, f64), String> {
        if self.format_version != FORMAT_VERSION {
            return Err(format!("unsupported format_version {}", self.format_version));
        }
        let l = decode_f64(&self.l)?;
        let lambda = decode_f64(&self.lambda)?;
        let grid = DumbbellGrid::new(l, self.n).map_err(|e| e.to_string())?;
        if grid.m() != self.m {
            return Err(format!("M = {} does not match N*L/pi = {}", self.m, grid.m()));
        }
        let rm = &self.values.ring_minus;
        let seg = &self.values.segment;
        let rp = &self.values.ring_plus;
        if rm.len() != self.n + 1 || seg.len() != self.m + 1 || rp.len() != self.n + 1 {
            return Err(format!(
                "array lengths ({}, {}, {}) do not match (N+1, M+1, N+1) = ({}, {}, {})",
                rm.len(),
                seg.len(),
                rp.len(),
                self.n + 1,
                self.m + 1,
                self.n + 1
            ));
        }
        let first = |v: &Vec<String>| decode_f64(&v[0]);
        let last = |v: &Vec<String>| decode_f64(&v[v.len() - 1]);
        let seg_first = decode_f64(&seg[0])?;
        let seg_last = decode_f64(&seg[seg.len() - 1])?;
        for (name, value) in [
            ("ring_minus[0]", first(rm)?),
            ("ring_minus[N]", last(rm)?),
        ] {
            if value != seg_first {
                return Err(format!("junction copy {name} does not equal segment[0]"));
            }
        }
        for (name, value) in [("ring_plus[0]", first(rp)?), ("ring_plus[N]", last(rp)?)] {
            if value != seg_last {
                return Err(format!("junction copy {name} does not equal segment[M]"));
            }
        }

        let mut values = nalgebra::DVector::zeros(grid.dof());
        for (t, i) in grid.ring_minus_interior().enumerate() {
            values[i] = decode_f64(&rm[t + 1])?;
        }
        for (j, i) in grid.segment_nodes().enumerate() {
            values[i] = decode_f64(&seg[j])?;
        }
        for (t, i) in grid.ring_plus_interior().enumerate() {
            values[i] = decode_f64(&rp[t + 1])?;
        }
        let phi = GraphFunction::new(grid, values).map_err(|e| e.to_string())?;
        Ok((phi, lambda))
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut body = serde_json::to_string_pretty(self).expect("serializable");
        body.push('\n');
        std::fs::write(path, body)
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let body = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        serde_json::from_str(&body).map_err(|e| format!("malformed solution file: {e}"))
    }
}
