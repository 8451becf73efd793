//! Print the first 50 seeded appendix-variant series as a JSON array of
//! arrays. Input for `tests/fixtures/appendix_reference.py`.

use lagrange_core::linreg::{simulate_change_point, ChangePointConfig};

fn main() -> lagrange_core::Result<()> {
    let cfg = ChangePointConfig::appendix();
    let all = (0..50)
        .map(|seed| Ok(simulate_change_point(&cfg, seed)?.values().to_vec()))
        .collect::<lagrange_core::Result<Vec<_>>>()?;
    println!("{}", serde_json::to_string(&all)?);
    Ok(())
}
