//! The periodic point 1/3 under random controls: the fibre coordinate
//! settles while the base never leaves {1/3, 2/3}.

use skew_ifs::potentials::PotentialFamily;
use skew_ifs::skew::{nonattractor_trace, SymbolStream};

fn main() -> skew_ifs::Result<()> {
    let f = PotentialFamily::quad_tent();
    let c = SymbolStream::random(2024, 0, f.len());
    let trace = nonattractor_trace(1.4, &c, 2000, &f, 0.48)?;
    let mut seen: Vec<(u128, u128)> = trace.iter().filter_map(|(x, _)| x.exact_ratio()).collect();
    seen.sort_unstable();
    seen.dedup();
    println!("base points visited: {seen:?}");
    for (i, (x, y)) in trace
        .iter()
        .enumerate()
        .filter(|(i, _)| [0, 1, 2, 5, 20, 500, 2000].contains(i))
    {
        println!("step {i:>4}: x = {:.6}  y = {y:.6}", x.to_f64());
    }
    Ok(())
}
