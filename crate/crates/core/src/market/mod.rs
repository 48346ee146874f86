//! Option chains, discount curves, liquidity filtering and synthetic forwards
//! implied by put-call parity.

pub mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricing::OptionSide;

/// Quotes with mid below this fraction of the strike step are dropped.
pub const PENNY_FRACTION: f64 = 0.10;
/// Maximum relative spread `(ask − bid)/bid`.
pub const MAX_RELATIVE_SPREAD: f64 = 0.60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    #[serde(rename = "expiry_yf")]
    pub expiry: f64,
    pub strike: f64,
    pub side: OptionSide,
    pub bid: f64,
    pub ask: f64,
}

impl OptionQuote {
    pub fn new(expiry: f64, strike: f64, side: OptionSide, bid: f64, ask: f64) -> Result<Self> {
        let q = Self {
            expiry,
            strike,
            side,
            bid,
            ask,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.expiry > 0.0 && self.expiry.is_finite()) {
            return Err(Error::Input(format!("expiry must be positive, got {}", self.expiry)));
        }
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(Error::Input(format!("strike must be positive, got {}", self.strike)));
        }
        if !(self.bid >= 0.0 && self.ask >= self.bid && self.ask.is_finite()) {
            return Err(Error::Input(format!(
                "need 0 <= bid <= ask, got bid {} ask {} (K = {}, T = {})",
                self.bid, self.ask, self.strike, self.expiry
            )));
        }
        Ok(())
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }

    pub fn spread(&self) -> f64 {
        self.ask - self.bid
    }
}

/// Discount factors at increasing tenors, interpolated log-linearly with an
/// implicit pillar `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountCurve {
    pillars: Vec<(f64, f64)>,
}

impl DiscountCurve {
    pub fn new(mut pillars: Vec<(f64, f64)>) -> Result<Self> {
        if pillars.is_empty() {
            return Err(Error::Input("discount curve has no pillars".into()));
        }
        pillars.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pillars.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Input(format!("duplicate curve tenor {}", w[0].0)));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::Input(format!(
                    "discount factors must be non-increasing: {} at {} then {} at {}",
                    w[0].1, w[0].0, w[1].1, w[1].0
                )));
            }
        }
        for &(t, df) in &pillars {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Input(format!("curve tenor must be non-negative, got {t}")));
            }
            if !(df > 0.0 && df <= 1.0) {
                return Err(Error::Input(format!(
                    "discount factor must lie in (0, 1], got {df} at {t}"
                )));
            }
        }
        Ok(Self { pillars })
    }

    /// Flat continuously compounded rate out to `horizon`.
    pub fn flat(rate: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![(horizon, (-rate * horizon).exp())])
    }

    pub fn pillars(&self) -> &[(f64, f64)] {
        &self.pillars
    }

    pub fn last_tenor(&self) -> f64 {
        self.pillars[self.pillars.len() - 1].0
    }
}

/// Discount factor `B_T` by log-linear interpolation.
pub fn discount_factor(curve: &DiscountCurve, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Input(format!("tenor must be non-negative, got {t}")));
    }
    let last = curve.last_tenor();
    if t > last {
        return Err(Error::Extrapolation { tenor: t, last });
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let mut prev = (0.0, 1.0);
    for &(tenor, df) in curve.pillars() {
        if t == tenor {
            return Ok(df);
        }
        if t < tenor {
            let w = (t - prev.0) / (tenor - prev.0);
            return Ok(((1.0 - w) * f64::ln(prev.1) + w * df.ln()).exp());
        }
        prev = (tenor, df);
    }
    unreachable!("tenor {t} within curve range but not bracketed")
}

/// `ln(K / F)`
pub fn moneyness(strike: f64, forward: f64) -> f64 {
    (strike / forward).ln()
}

/// Smallest gap between distinct strikes, `None` with fewer than two strikes.
pub fn strike_step(quotes: &[OptionQuote]) -> Option<f64> {
    let mut strikes: Vec<f64> = quotes.iter().map(|q| q.strike).collect();
    strikes.sort_by(f64::total_cmp);
    strikes.dedup();
    strikes.windows(2).map(|w| w[1] - w[0]).min_by(f64::total_cmp)
}

/// Drop penny options, missing bids and quotes with a relative spread above 60%.
pub fn liquidity_filter(quotes: &[OptionQuote], strike_step: f64) -> Vec<OptionQuote> {
    quotes
        .iter()
        .filter(|q| q.bid > 0.0 && q.spread() / q.bid <= MAX_RELATIVE_SPREAD && q.mid() >= PENNY_FRACTION * strike_step)
        .copied()
        .collect()
}

/// Forward bid/ask/mid implied by one call/put pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParityForward {
    pub bid: f64,
    pub ask: f64,
    pub mid: f64,
}

pub fn parity_forward(call: &OptionQuote, put: &OptionQuote, discount: f64) -> Result<ParityForward> {
    if call.side != OptionSide::Call || put.side != OptionSide::Put {
        return Err(Error::Input("parity needs a call and a put".into()));
    }
    if call.strike != put.strike || call.expiry != put.expiry {
        return Err(Error::Input(format!(
            "parity pair mismatch: call (T={}, K={}) vs put (T={}, K={})",
            call.expiry, call.strike, put.expiry, put.strike
        )));
    }
    if !(discount > 0.0) {
        return Err(Error::Input(format!(
            "discount factor must be positive, got {discount}"
        )));
    }
    let k = call.strike;
    let bid = (call.bid - put.ask) / discount + k;
    let ask = (call.ask - put.bid) / discount + k;
    Ok(ParityForward {
        bid,
        ask,
        mid: 0.5 * (bid + ask),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticForward {
    pub expiry: f64,
    pub fwd_bid: f64,
    pub fwd_ask: f64,
    pub fwd_mid: f64,
    /// In visiting order.
    pub used_strikes: Vec<f64>,
    pub discarded_strikes: Vec<f64>,
}

/// Consensus forward of one expiry.
///
/// Starting at the strike nearest `anchor` (ties to the lower strike), strikes
/// are visited alternately above and below. A strike joins the consensus if
/// the running mid lies within its parity interval; the running interval is
/// then intersected with it. Otherwise the strike is discarded.
pub fn synthetic_forward(quotes: &[OptionQuote], discount: f64, anchor: f64) -> Result<SyntheticForward> {
    let expiry = quotes.first().map_or(f64::NAN, |q| q.expiry);
    let pairs = parity_pairs(quotes)?;
    if pairs.is_empty() {
        return Err(Error::NoValidStrike { expiry });
    }
    let intervals: Vec<(f64, ParityForward)> = pairs
        .iter()
        .map(|(c, p)| Ok((c.strike, parity_forward(c, p, discount)?)))
        .collect::<Result<_>>()?;

    let start = intervals
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 .0 - anchor)
                .abs()
                .total_cmp(&(b.1 .0 - anchor).abs())
                .then(a.1 .0.total_cmp(&b.1 .0))
        })
        .map(|(i, _)| i)
        .expect("non-empty");

    let (k0, first) = intervals[start];
    let (mut bid, mut ask, mut mid) = (first.bid, first.ask, first.mid);
    let mut used = vec![k0];
    let mut discarded = Vec::new();

    let (mut up, mut down) = (start + 1, start as isize - 1);
    let mut go_up = true;
    while up < intervals.len() || down >= 0 {
        let idx = if (go_up && up < intervals.len()) || down < 0 {
            up += 1;
            up - 1
        } else {
            down -= 1;
            (down + 1) as usize
        };
        go_up = !go_up;

        let (k, f) = intervals[idx];
        if f.bid <= mid && mid <= f.ask {
            bid = bid.max(f.bid);
            ask = ask.min(f.ask);
            mid = 0.5 * (bid + ask);
            used.push(k);
        } else {
            discarded.push(k);
        }
    }

    Ok(SyntheticForward {
        expiry,
        fwd_bid: bid,
        fwd_ask: ask,
        fwd_mid: mid,
        used_strikes: used,
        discarded_strikes: discarded,
    })
}

/// Call/put pairs by strike, ascending.
fn parity_pairs(quotes: &[OptionQuote]) -> Result<Vec<(OptionQuote, OptionQuote)>> {
    let mut sorted = quotes.to_vec();
    sorted.sort_by(|a, b| a.strike.total_cmp(&b.strike).then((a.side as u8).cmp(&(b.side as u8))));
    let mut pairs = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let k = sorted[i].strike;
        let group: Vec<&OptionQuote> = sorted[i..].iter().take_while(|q| q.strike == k).collect();
        i += group.len();
        let call = group.iter().filter(|q| q.side == OptionSide::Call).collect::<Vec<_>>();
        let put = group.iter().filter(|q| q.side == OptionSide::Put).collect::<Vec<_>>();
        if call.len() > 1 || put.len() > 1 {
            return Err(Error::Input(format!("duplicate quotes at strike {k}")));
        }
        if let (Some(c), Some(p)) = (call.first(), put.first()) {
            pairs.push((***c, ***p));
        }
    }
    Ok(pairs)
}

/// Filtered quotes of one expiry with its forward and discount factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketSlice {
    pub expiry: f64,
    pub discount: f64,
    pub forward: SyntheticForward,
    pub quotes: Vec<OptionQuote>,
    /// Quotes removed by the liquidity filter.
    pub n_filtered: usize,
}

/// Group a chain by expiry, filter each expiry and build forwards in
/// increasing maturity (anchored at `spot`, then at the previous forward).
pub fn prepare_chain(quotes: &[OptionQuote], curve: &DiscountCurve, spot: f64) -> Result<Vec<MarketSlice>> {
    if !(spot > 0.0 && spot.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "spot",
            value: spot,
            reason: "must be positive",
        });
    }
    for q in quotes {
        q.validate()?;
    }
    let mut anchor = spot;
    let mut out = Vec::new();
    for group in group_by_expiry(quotes) {
        let expiry = group[0].expiry;
        let step = strike_step(&group).unwrap_or(0.0);
        let kept = liquidity_filter(&group, step);
        let discount = discount_factor(curve, expiry)?;
        let forward = synthetic_forward(&kept, discount, anchor).map_err(|e| match e {
            Error::NoValidStrike { .. } => Error::NoValidStrike { expiry },
            other => other,
        })?;
        anchor = forward.fwd_mid;
        out.push(MarketSlice {
            expiry,
            discount,
            forward,
            n_filtered: group.len() - kept.len(),
            quotes: kept,
        });
    }
    Ok(out)
}

/// Quotes grouped by identical expiry, in increasing expiry.
pub fn group_by_expiry(quotes: &[OptionQuote]) -> Vec<Vec<OptionQuote>> {
    let mut sorted = quotes.to_vec();
    sorted.sort_by(|a, b| a.expiry.total_cmp(&b.expiry).then(a.strike.total_cmp(&b.strike)));
    let mut groups: Vec<Vec<OptionQuote>> = Vec::new();
    for q in sorted {
        match groups.last_mut() {
            Some(g) if g[0].expiry == q.expiry => g.push(q),
            _ => groups.push(vec![q]),
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quote(k: f64, side: OptionSide, bid: f64, ask: f64) -> OptionQuote {
        OptionQuote::new(0.5, k, side, bid, ask).unwrap()
    }

    /// Call/put pair whose parity interval is exactly `[f − hw, f + hw]`.
    fn pair(k: f64, f: f64, hw: f64, b: f64) -> [OptionQuote; 2] {
        let put_mid = 150.0;
        let call_mid = put_mid + b * (f - k);
        let s = 0.5 * hw * b;
        [
            quote(k, OptionSide::Call, call_mid - s, call_mid + s),
            quote(k, OptionSide::Put, put_mid - s, put_mid + s),
        ]
    }

    #[test]
    fn filter_rules() {
        let qs = [
            quote(100.0, OptionSide::Call, 0.0, 1.0),
            quote(100.0, OptionSide::Put, 0.2, 0.3),
            quote(105.0, OptionSide::Call, 10.0, 15.0),
            quote(105.0, OptionSide::Put, 10.0, 16.5),
        ];
        let kept = liquidity_filter(&qs, 5.0);
        assert_eq!(kept, vec![qs[2]]);
        // 0.05 * step is a penny option
        let penny = [quote(100.0, OptionSide::Put, 0.24, 0.26)];
        assert!(liquidity_filter(&penny, 5.0).is_empty());
        assert_eq!(liquidity_filter(&kept, 5.0), kept);
    }

    #[test]
    fn curve_interpolation() {
        let c = DiscountCurve::new(vec![(1.0, 0.98), (2.0, 0.95)]).unwrap();
        assert_eq!(discount_factor(&c, 0.0).unwrap(), 1.0);
        assert_eq!(discount_factor(&c, 1.0).unwrap(), 0.98);
        let mid = discount_factor(&c, 1.5).unwrap();
        assert!((mid - (0.98f64 * 0.95).sqrt()).abs() < 1e-15);
        assert!((discount_factor(&c, 0.5).unwrap() - 0.98f64.sqrt()).abs() < 1e-15);
        assert!(matches!(discount_factor(&c, 2.5), Err(Error::Extrapolation { .. })));
        assert!(DiscountCurve::new(vec![(1.0, 0.9), (2.0, 0.95)]).is_err());
        assert!(DiscountCurve::new(vec![(1.0, 1.1)]).is_err());
    }

    #[test]
    fn moneyness_values() {
        assert_eq!(moneyness(100.0, 100.0), 0.0);
        assert!((moneyness(100.0 * std::f64::consts::E, 100.0) - 1.0).abs() < 1e-15);
        assert!((moneyness(95.0, 100.0) + 0.051_293_294_387_550_5).abs() < 1e-15);
    }

    #[test]
    fn parity_arithmetic() {
        let c = quote(95.0, OptionSide::Call, 10.0, 10.4);
        let p = quote(95.0, OptionSide::Put, 4.0, 4.3);
        let f = parity_forward(&c, &p, 0.98).unwrap();
        assert!((f.bid - (5.7 / 0.98 + 95.0)).abs() < 1e-12);
        assert!((f.ask - (6.4 / 0.98 + 95.0)).abs() < 1e-12);
        let [c0, p0] = pair(90.0, 101.0, 0.0, 0.97);
        let f0 = parity_forward(&c0, &p0, 0.97).unwrap();
        assert!((f0.bid - 101.0).abs() < 1e-12 && (f0.ask - 101.0).abs() < 1e-12);
        assert!(parity_forward(&p, &c, 0.98).is_err());
    }

    #[test]
    fn single_strike_is_verbatim() {
        let c = quote(95.0, OptionSide::Call, 10.0, 10.4);
        let p = quote(95.0, OptionSide::Put, 4.0, 4.3);
        let f = synthetic_forward(&[c, p], 0.98, 100.0).unwrap();
        let pf = parity_forward(&c, &p, 0.98).unwrap();
        assert_eq!((f.fwd_bid, f.fwd_ask, f.fwd_mid), (pf.bid, pf.ask, pf.mid));
        assert!(f.discarded_strikes.is_empty());
    }

    #[test]
    fn outlier_strike_is_discarded() {
        let b = 0.99;
        let mut qs = Vec::new();
        qs.extend(pair(1700.0, 1900.0, 1.0, b)); // inconsistent
        qs.extend(pair(1750.0, 1800.5, 2.0, b));
        qs.extend(pair(1800.0, 1800.0, 2.0, b));
        qs.extend(pair(1850.0, 1799.0, 2.0, b));
        qs.extend(pair(1900.0, 1800.2, 3.0, b));
        let f = synthetic_forward(&qs, b, 1810.0).unwrap();
        assert_eq!(f.discarded_strikes, vec![1700.0]);
        assert_eq!(f.used_strikes, vec![1800.0, 1850.0, 1750.0, 1900.0]);
        // [1798, 1802] ∩ [1797, 1801] ∩ [1798.5, 1802.5]; 1900 contains the mid but does not bind
        assert!((f.fwd_bid - 1798.5).abs() < 1e-9);
        assert!((f.fwd_ask - 1801.0).abs() < 1e-9);
        assert!((f.fwd_mid - 1799.75).abs() < 1e-9);
    }

    #[test]
    fn nearest_strike_tie_goes_low() {
        let mut qs = Vec::new();
        qs.extend(pair(100.0, 100.0, 2.0, 1.0));
        qs.extend(pair(110.0, 105.0, 20.0, 1.0));
        let f = synthetic_forward(&qs, 1.0, 105.0).unwrap();
        assert_eq!(f.used_strikes[0], 100.0);
    }

    #[test]
    fn consistent_chain_has_no_discards() {
        let mut qs = Vec::new();
        for i in 0..9 {
            qs.extend(pair(80.0 + 5.0 * i as f64, 101.0, 0.0, 0.95));
        }
        let f = synthetic_forward(&qs, 0.95, 100.0).unwrap();
        assert!(f.discarded_strikes.is_empty());
        assert!((f.fwd_mid - 101.0).abs() < 1e-10);
    }

    #[test]
    fn no_pairs_is_an_error() {
        let qs = [quote(100.0, OptionSide::Call, 1.0, 1.1)];
        assert!(matches!(
            synthetic_forward(&qs, 1.0, 100.0),
            Err(Error::NoValidStrike { .. })
        ));
    }

    #[test]
    fn chain_is_processed_by_expiry() {
        let curve = DiscountCurve::flat(0.02, 2.0).unwrap();
        let mut qs = Vec::new();
        for &t in &[1.0, 0.5] {
            let b = discount_factor(&curve, t).unwrap();
            for i in 0..5 {
                for mut q in pair(90.0 + 5.0 * i as f64, 100.0 + t, 0.5, b) {
                    q.expiry = t;
                    qs.push(q);
                }
            }
        }
        let slices = prepare_chain(&qs, &curve, 100.0).unwrap();
        assert_eq!(slices.len(), 2);
        assert_eq!(slices[0].expiry, 0.5);
        assert!((slices[1].forward.fwd_mid - 101.0).abs() < 1e-9);
    }
}
