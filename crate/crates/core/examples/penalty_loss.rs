//! Plain and penalty-weighted cross-entropy for a few predictions.

use sentikit::loss::{cross_entropy, weighted_cross_entropy, PenaltyMatrix};
use sentikit::Sentiment;

fn main() -> sentikit::Result<()> {
    let penalty = PenaltyMatrix::default();
    println!("rows = predicted, columns = truth (positive, negative, neutral)");
    for row in penalty.rows() {
        println!("  {row:?}");
    }
    let cases = [
        (Sentiment::Negative, [0.2, 0.3, 0.5]),
        (Sentiment::Positive, [0.2, 0.7, 0.1]),
        (Sentiment::Positive, [0.7, 0.2, 0.1]),
    ];
    for (truth, y_hat) in cases {
        let y = truth.one_hot();
        let ce = cross_entropy(&y, &y_hat)?;
        let wce = weighted_cross_entropy(&y, &y_hat, &penalty)?;
        println!("truth {:<8} y_hat {y_hat:?}: CE {ce:.3}, weighted {wce:.3}", truth.as_str());
    }
    Ok(())
}
