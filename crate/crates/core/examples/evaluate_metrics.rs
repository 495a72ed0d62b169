//! Classification and regression metrics over a handful of CTR pairs, plus the
//! scatter CSV.

use ctrkit::eval::{evaluate, scatter_export, write_scatter_csv, EvalPair};

fn main() -> ctrkit::Result<()> {
    let pairs = vec![
        EvalPair::new("a", 0.55, Some(0.57)),
        EvalPair::new("b", 0.45, Some(0.52)),
        EvalPair::new("c", 0.60, Some(0.48)),
        EvalPair::new("d", 0.40, Some(0.41)),
        EvalPair::new("e", 0.62, None),
    ];
    let report = evaluate(&pairs)?;
    print!("{}", report.to_key_value());
    println!();
    write_scatter_csv(&scatter_export(&pairs), std::io::stdout())?;
    Ok(())
}
