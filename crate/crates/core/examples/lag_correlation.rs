//! Lagged correlations on a market where news leads media by 20 days.
//!
//! cargo run --example lag_correlation

use dam_core::datapipe::{align_and_impute, Column, SentimentRow};
use dam_core::stats::{lag_matrix, significance_summary, DEFAULT_LAGS};
use dam_core::synthetic::synthetic_market;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (ohlcv, sentiment) = synthetic_market(900, 2, 0);
    let news: Vec<f64> = sentiment.iter().map(|r| r.news.unwrap_or(0.5)).collect();
    let echoed: Vec<SentimentRow> = sentiment
        .iter()
        .enumerate()
        .map(|(t, r)| {
            let lead = if t >= 20 { news[t - 20] } else { 0.5 };
            SentimentRow {
                media: Some((0.3 * lead + 0.7 * r.media.unwrap_or(0.5)).clamp(0.0, 1.0)),
                ..*r
            }
        })
        .collect();
    let series = align_and_impute(&ohlcv, &echoed)?;
    let matrices = lag_matrix(&series, &DEFAULT_LAGS)?;
    for m in &matrices {
        let c = m.get(Column::News, Column::Media).expect("both present");
        println!(
            "lag {:>2}: r(news today, media later) = {:>7.4}  p = {:.3e}",
            m.lag,
            c.r,
            c.p_two_sided.unwrap_or(f64::NAN)
        );
    }
    println!();
    print!("{}", significance_summary(&matrices, 0.05));
    Ok(())
}
