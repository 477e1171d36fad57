//! Browser demo bindings. Each export wraps an api function and returns
//! JSON; errors come back as {"error": "..."} so the page can display
//! them without throwing.

mod api;

use wasm_bindgen::prelude::*;

fn to_json(res: Result<String, String>) -> String {
    match res {
        Ok(json) => json,
        Err(msg) => format!("{{\"error\":{}}}", serde_json::to_string(&msg).unwrap()),
    }
}

/// Solve u_t = A_p u on a demo domain (n = 1) and return the space-time
/// field for heatmap rendering.
#[wasm_bindgen]
pub fn solve_field(kind: &str, p: f64, shape: f64, h: f64) -> String {
    to_json(api::solve_field(kind, p, shape, h))
}

/// Run the boundary-regularity probe at the domain's distinguished
/// boundary point over h = 0.04, 0.02, 0.01.
#[wasm_bindgen]
pub fn regularity_gaps(kind: &str, p: f64, shape: f64) -> String {
    to_json(api::regularity_gaps(kind, p, shape))
}

/// Spatial profiles of the self-similar solution at fixed t > 0 for a
/// comma-separated list of p values ("inf" allowed).
#[wasm_bindgen]
pub fn fundamental_profiles(p_csv: &str, t: f64, half_width: f64, count: usize) -> String {
    let mut ps = Vec::new();
    for tok in p_csv.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let v = if tok == "inf" {
            f64::INFINITY
        } else {
            match tok.parse::<f64>() {
                Ok(v) => v,
                Err(_) => return to_json(Err(format!("bad p value '{tok}'"))),
            }
        };
        ps.push(v);
    }
    to_json(api::fundamental_profiles(&ps, t, half_width, count))
}
