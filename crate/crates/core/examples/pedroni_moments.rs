//! Regenerates the Pedroni standardization tables in `coint/moments.rs`.

use xtpanel::coint::{simulate_moments, MomentCase, PEDRONI_MAX_REGRESSORS};

fn main() -> Result<(), xtpanel::Error> {
    let t_len: usize = std::env::args().nth(1).map_or(1000, |s| s.parse().expect("T"));
    let reps: usize = std::env::args().nth(2).map_or(40_000, |s| s.parse().expect("reps"));
    for trend in [false, true] {
        println!("// trend = {trend}");
        for regressors in 1..=PEDRONI_MAX_REGRESSORS {
            let mo = simulate_moments(MomentCase { trend, regressors }, t_len, reps, 19_990_101)?;
            let cells: Vec<String> = mo.iter().map(|m| format!("({:.4}, {:.4})", m.mean, m.variance)).collect();
            println!("    [{}],", cells.join(", "));
        }
    }
    Ok(())
}
