//! Physical and economic primitives: Shannon rate, QoS feasibility,
//! per-channel valuations, the reservation price, and the resource-demand
//! ratio. Everything here is an immutable value object; the operations are
//! pure functions, safe to call from any thread.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::strategy::StrategyKind;

/// Bidder identifier; UEs are numbered `0..ue_count`.
pub type UeId = u32;

/// Default scale converting bits-per-second into raw monetary units when
/// evaluating [`valuation`]. Chosen so per-channel rates over the default
/// SINR range land near single-digit monetary values.
pub const DEFAULT_RATE_SCALE: f64 = 362_000.0;

/// Base-station radio parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    /// Bandwidth of a single sub-channel in Hz.
    pub bandwidth_per_subchannel_hz: f64,
    /// Number of orthogonal sub-channels on offer each episode.
    pub subchannel_count: u32,
    /// Fixed transmit power per sub-channel, in watts.
    pub transmit_power_w: f64,
    /// Unit price of transmission power, monetary units per watt.
    pub power_unit_price: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            bandwidth_per_subchannel_hz: 180_000.0,
            subchannel_count: 6,
            transmit_power_w: 0.2,
            power_unit_price: 6.0,
        }
    }
}

impl RadioConfig {
    /// Per-sub-channel reservation price: the BS's energy cost of serving
    /// one sub-channel, `power_unit_price * transmit_power_w`.
    pub fn reserve_price(&self) -> f64 {
        self.power_unit_price * self.transmit_power_w
    }

    pub fn validate(&self) -> Result<(), Error> {
        check_positive(
            "bandwidth_per_subchannel_hz",
            self.bandwidth_per_subchannel_hz,
        )?;
        check_positive("transmit_power_w", self.transmit_power_w)?;
        check_positive("power_unit_price", self.power_unit_price)?;
        if self.subchannel_count == 0 {
            return Err(Error::NonPositive {
                what: "subchannel_count",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// A bidder's identity and draw-independent parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UeProfile {
    pub id: UeId,
    /// Rate-to-utility scaler drawn from the configured alpha interval.
    pub alpha: f64,
    /// Requested downlink rate, a member of the configured service-class set.
    pub required_rate_bps: f64,
    pub initial_budget: f64,
    pub strategy: StrategyKind,
    /// Channel conditions and the derived valuation/demand. `None` marks a
    /// UE whose QoS demand is infeasible; it abstains from every episode.
    pub draw: Option<ChannelDraw>,
}

/// Channel conditions drawn for one UE, plus the quantities derived from
/// them: achievable per-channel rate, per-channel valuation, and the
/// minimum sub-channel count satisfying the UE's QoS demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelDraw {
    pub sinr_db: f64,
    pub achievable_rate_bps: f64,
    pub valuation_per_channel: f64,
    pub demand_subchannels: u32,
}

impl ChannelDraw {
    /// Evaluates rate, demand, and calibrated valuation for one draw.
    /// Fails with [`Error::InfeasibleDemand`] when the per-channel rate is
    /// zero (the SINR underflowed to nothing).
    pub fn evaluate(
        radio: &RadioConfig,
        calibration: &ValuationCalibration,
        alpha: f64,
        sinr_db: f64,
        required_rate_bps: f64,
    ) -> Result<Self, Error> {
        let rate = shannon_rate(radio.bandwidth_per_subchannel_hz, sinr_db)?;
        let demand = required_subchannels(required_rate_bps, rate)?;
        let value = calibration.value_of(alpha, rate)?;
        Ok(Self {
            sinr_db,
            achievable_rate_bps: rate,
            valuation_per_channel: value,
            demand_subchannels: demand,
        })
    }
}

/// Shannon capacity of one sub-channel: `bandwidth * log2(1 + sinr_linear)`
/// with the SINR given in dB (`sinr_linear = 10^(sinr_db/10)`).
pub fn shannon_rate(bandwidth_hz: f64, sinr_db: f64) -> Result<f64, Error> {
    if !bandwidth_hz.is_finite() {
        return Err(Error::NonFinite {
            what: "bandwidth_hz",
            value: bandwidth_hz,
        });
    }
    if bandwidth_hz <= 0.0 {
        return Err(Error::NonPositive {
            what: "bandwidth_hz",
            value: bandwidth_hz,
        });
    }
    if !sinr_db.is_finite() {
        return Err(Error::NonFinite {
            what: "sinr_db",
            value: sinr_db,
        });
    }
    let linear = 10f64.powf(sinr_db / 10.0);
    Ok(bandwidth_hz * (1.0 + linear).log2())
}

/// Smallest sub-channel count `n` with `n * per_channel_rate >= required`.
/// This is the pre-auction, UE-side feasibility check that sizes the UE's
/// demand.
pub fn required_subchannels(
    required_rate_bps: f64,
    per_channel_rate_bps: f64,
) -> Result<u32, Error> {
    if !required_rate_bps.is_finite() {
        return Err(Error::NonFinite {
            what: "required_rate_bps",
            value: required_rate_bps,
        });
    }
    if required_rate_bps <= 0.0 {
        return Err(Error::NonPositive {
            what: "required_rate_bps",
            value: required_rate_bps,
        });
    }
    if !per_channel_rate_bps.is_finite() {
        return Err(Error::NonFinite {
            what: "per_channel_rate_bps",
            value: per_channel_rate_bps,
        });
    }
    if per_channel_rate_bps <= 0.0 {
        return Err(Error::InfeasibleDemand { required_rate_bps });
    }
    let mut n = (required_rate_bps / per_channel_rate_bps).ceil().max(1.0) as u32;
    // The float ceil can land one step off at exact multiples; enforce
    // minimality of n * rate >= required directly.
    while n > 1 && f64::from(n - 1) * per_channel_rate_bps >= required_rate_bps {
        n -= 1;
    }
    while f64::from(n) * per_channel_rate_bps < required_rate_bps && n < u32::MAX {
        n += 1;
    }
    Ok(n)
}

/// Raw per-channel valuation: `alpha * (rate / rate_scale)`. Linear in
/// `alpha`, zero at zero rate.
pub fn valuation(alpha: f64, rate_bps: f64, rate_scale: f64) -> Result<f64, Error> {
    for (what, value) in [
        ("alpha", alpha),
        ("rate_bps", rate_bps),
        ("rate_scale", rate_scale),
    ] {
        if !value.is_finite() {
            return Err(Error::NonFinite { what, value });
        }
    }
    if alpha < 0.0 {
        return Err(Error::Negative {
            what: "alpha",
            value: alpha,
        });
    }
    if rate_bps < 0.0 {
        return Err(Error::Negative {
            what: "rate_bps",
            value: rate_bps,
        });
    }
    if rate_scale <= 0.0 {
        return Err(Error::NonPositive {
            what: "rate_scale",
            value: rate_scale,
        });
    }
    Ok(alpha * (rate_bps / rate_scale))
}

/// Resource-demand ratio `K / sum(demands)`: `< 1` scarcity, `~1` balanced,
/// `> 1` abundant.
pub fn demand_ratio(subchannel_count: u32, demands: &[u32]) -> Result<f64, Error> {
    if subchannel_count == 0 {
        return Err(Error::NonPositive {
            what: "subchannel_count",
            value: 0.0,
        });
    }
    if demands.is_empty() {
        return Err(Error::UndefinedDemandRatio);
    }
    let mut total: u64 = 0;
    for &d in demands {
        if d == 0 {
            return Err(Error::NonPositive {
                what: "demand",
                value: 0.0,
            });
        }
        total += u64::from(d);
    }
    Ok(f64::from(subchannel_count) / total as f64)
}

/// Maps raw per-channel values `alpha * rate / scale` onto a configured
/// monetary interval.
///
/// The draw box extremes (`alpha_lo * rate(sinr_lo)` and
/// `alpha_hi * rate(sinr_hi)`) land exactly on the interval endpoints and
/// interior draws stay strictly inside. A single multiplicative scale
/// cannot pin both endpoints at once (the raw extreme ratio exceeds the
/// target interval's), hence the affine form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValuationCalibration {
    raw_lo: f64,
    raw_hi: f64,
    value_lo: f64,
    value_hi: f64,
}

impl ValuationCalibration {
    pub fn new(
        alpha_range: (f64, f64),
        sinr_db_range: (f64, f64),
        bandwidth_hz: f64,
        value_bounds: (f64, f64),
    ) -> Result<Self, Error> {
        let rate_lo = shannon_rate(bandwidth_hz, sinr_db_range.0)?;
        let rate_hi = shannon_rate(bandwidth_hz, sinr_db_range.1)?;
        let raw_lo = valuation(alpha_range.0, rate_lo, DEFAULT_RATE_SCALE)?;
        let raw_hi = valuation(alpha_range.1, rate_hi, DEFAULT_RATE_SCALE)?;
        if raw_hi < raw_lo {
            return Err(Error::Config(
                "alpha/sinr ranges must be ordered low..high".into(),
            ));
        }
        if !(value_bounds.0.is_finite() && value_bounds.1.is_finite())
            || value_bounds.1 < value_bounds.0
        {
            return Err(Error::Config(format!(
                "valuation bounds must be an ordered finite interval, got {value_bounds:?}"
            )));
        }
        Ok(Self {
            raw_lo,
            raw_hi,
            value_lo: value_bounds.0,
            value_hi: value_bounds.1,
        })
    }

    /// Calibrated per-channel valuation for one `(alpha, rate)` draw.
    /// Always inside the configured bounds.
    pub fn value_of(&self, alpha: f64, rate_bps: f64) -> Result<f64, Error> {
        let raw = valuation(alpha, rate_bps, DEFAULT_RATE_SCALE)?;
        let span = self.raw_hi - self.raw_lo;
        if span <= 0.0 {
            return Ok(self.value_lo);
        }
        let t = ((raw - self.raw_lo) / span).clamp(0.0, 1.0);
        Ok(self.value_lo + t * (self.value_hi - self.value_lo))
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.value_lo, self.value_hi)
    }
}

fn check_positive(what: &'static str, value: f64) -> Result<(), Error> {
    if !value.is_finite() {
        return Err(Error::NonFinite { what, value });
    }
    if value <= 0.0 {
        return Err(Error::NonPositive { what, value });
    }
    Ok(())
}
