//! Seeded synthetic markets and toy tasks for examples and tests.

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::datapipe::{OhlcvRow, SentimentRow, WindowSample};
use crate::ndcore::Tensor;

pub fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date")
}

/// Daily bars whose open/high/low bracket the close path.
fn bars_from_closes(closes: &[f64], volumes: &[f64], rng: &mut ChaCha8Rng) -> Vec<OhlcvRow> {
    let wick = Normal::new(0.0, 0.004).expect("valid sd");
    closes
        .iter()
        .enumerate()
        .map(|(t, &close)| {
            let prev = if t == 0 { close } else { closes[t - 1] };
            let open = prev * (1.0 + wick.sample(rng) * 0.25);
            let top = open.max(close);
            let bottom = open.min(close);
            OhlcvRow {
                date: start_date() + Duration::days(t as i64),
                open,
                high: top * (1.0 + wick.sample(rng).abs()),
                low: bottom * (1.0 - wick.sample(rng).abs()),
                close,
                volumefrom: volumes[t],
                volumeto: volumes[t] * close,
            }
        })
        .collect()
}

/// A random-walk market whose drift leans on the previous day's news score.
///
/// Every `gap_every`-th day (if non-zero) has no sentiment row, so alignment
/// has something to impute.
pub fn synthetic_market(days: usize, seed: u64, gap_every: usize) -> (Vec<OhlcvRow>, Vec<SentimentRow>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shock = Normal::new(0.0, 0.02).expect("valid sd");
    let mut news = Vec::with_capacity(days);
    let mut media = Vec::with_capacity(days);
    let mut level: f64 = 0.5;
    for _ in 0..days {
        level = (0.9 * level + 0.1 * rng.random::<f64>()).clamp(0.0, 1.0);
        news.push((level + 0.1 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0));
        media.push((0.5 * level + 0.5 * rng.random::<f64>()).clamp(0.0, 1.0));
    }
    let mut closes = Vec::with_capacity(days);
    let mut price = 8000.0;
    for t in 0..days {
        let tilt = if t == 0 { 0.0 } else { 0.01 * (news[t - 1] - 0.5) };
        price *= (1.0 + tilt + shock.sample(&mut rng)).max(0.5);
        closes.push(price);
    }
    let volumes: Vec<f64> = (0..days).map(|_| 1e4 * (1.0 + rng.random::<f64>())).collect();
    let ohlcv = bars_from_closes(&closes, &volumes, &mut rng);
    let sentiment = (0..days)
        .filter(|t| gap_every == 0 || (t + 1) % gap_every != 0)
        .map(|t| SentimentRow {
            date: ohlcv[t].date,
            news: Some(news[t]),
            media: Some(media[t]),
        })
        .collect();
    (ohlcv, sentiment)
}

/// Shape of a market whose return is driven by a product of two channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductMarket {
    pub days: usize,
    /// Return per unit of `volume_state * news_state`.
    pub gain: f64,
    /// Standard deviation of the additive return noise.
    pub noise_sd: f64,
    /// AR(1) coefficient of both latent states; 0 makes them i.i.d.
    pub persistence: f64,
    /// Standard deviation of the observation noise on both channels.
    pub obs_noise: f64,
}

impl Default for ProductMarket {
    fn default() -> Self {
        ProductMarket {
            days: 400,
            gain: 0.03,
            noise_sd: 0.002,
            persistence: 0.0,
            obs_noise: 0.0,
        }
    }
}

impl ProductMarket {
    /// Tomorrow's return is `gain * v_t * s_t` plus noise, where `v_t` and
    /// `s_t` are latent states in [-1, 1]. Volume observes `v_t` and the news
    /// score observes `s_t`, each with optional noise. Neither channel alone
    /// predicts the return.
    pub fn generate(&self, seed: u64) -> (Vec<OhlcvRow>, Vec<SentimentRow>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, self.noise_sd.max(0.0)).expect("valid sd");
        let obs = Normal::new(0.0, self.obs_noise.max(0.0)).expect("valid sd");
        let phi = self.persistence.clamp(0.0, 0.999);
        let innov = (1.0 - phi * phi).sqrt();
        let state = |rng: &mut ChaCha8Rng| {
            let mut x: f64 = rng.random_range(-1.0..1.0);
            (0..self.days)
                .map(|_| {
                    x = (phi * x + innov * rng.random_range(-1.0..1.0)).clamp(-1.0, 1.0);
                    x
                })
                .collect::<Vec<f64>>()
        };
        let vol_state = state(&mut rng);
        let news_state = state(&mut rng);
        let mut closes = Vec::with_capacity(self.days);
        let mut price = 10000.0;
        for t in 0..self.days {
            if t > 0 {
                price *= 1.0 + self.gain * vol_state[t - 1] * news_state[t - 1] + noise.sample(&mut rng);
            }
            closes.push(price);
        }
        let volumes: Vec<f64> = vol_state
            .iter()
            .map(|v| 2e4 * (1.5 + (v + obs.sample(&mut rng)).clamp(-1.4, 1.4)))
            .collect();
        let ohlcv = bars_from_closes(&closes, &volumes, &mut rng);
        let sentiment = (0..self.days)
            .map(|t| SentimentRow {
                date: ohlcv[t].date,
                news: Some((0.5 * (news_state[t] + obs.sample(&mut rng) + 1.0)).clamp(0.0, 1.0)),
                media: Some(rng.random::<f64>()),
            })
            .collect();
        (ohlcv, sentiment)
    }
}

/// `n` random windows whose target is a fixed linear map of the last row.
pub fn linear_windows(n: usize, window: usize, seed: u64) -> Vec<WindowSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wf = [0.4, -0.3, 0.2, 0.1];
    let ws = [0.25, -0.15];
    (0..n)
        .map(|i| {
            let fin: Vec<f64> = (0..window * 4).map(|_| rng.random::<f64>()).collect();
            let sent: Vec<f64> = (0..window * 2).map(|_| rng.random::<f64>()).collect();
            let last_f = &fin[(window - 1) * 4..];
            let last_s = &sent[(window - 1) * 2..];
            let target = 0.3
                + last_f.iter().zip(wf).map(|(x, w)| x * w).sum::<f64>()
                + last_s.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>();
            WindowSample {
                fin_win: Tensor::new(vec![window, 4], fin).expect("shape"),
                sent_win: Tensor::new(vec![window, 2], sent).expect("shape"),
                target_next: target,
                anchor_close: 1.0,
                target_close: 1.0 + target,
                target_date: start_date() + Duration::days((window + i) as i64),
                target_index: window + i,
            }
        })
        .collect()
}
