//! Application traffic sources: constant-rate PCM voice, low-resolution
//! video frames, bulk FTP file transfers, and a Poisson source used only
//! for queueing-theory validation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::kernel::SimTime;
use crate::qdisc::TrafficClass;
use crate::topology::NodeId;

pub const DEFAULT_MTU: u32 = 1500;

pub type FlowId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub flow: FlowId,
    pub tos: u8,
    pub class: TrafficClass,
    /// Payload bytes; headers are not modelled.
    pub size: u32,
    pub created: SimTime,
    pub src: NodeId,
    pub dst: NodeId,
    /// Links traversed so far.
    pub hops: u16,
}

impl Packet {
    pub fn size_bits(&self) -> f64 {
        f64::from(self.size) * 8.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AppKind {
    Voip,
    Video,
    Ftp,
    Poisson,
}

impl AppKind {
    pub fn name(self) -> &'static str {
        match self {
            AppKind::Voip => "voip",
            AppKind::Video => "video",
            AppKind::Ftp => "ftp",
            AppKind::Poisson => "poisson",
        }
    }

    /// ToS marking the application carries. The Poisson source may use any.
    pub fn default_tos(self) -> u8 {
        match self {
            AppKind::Voip => TrafficClass::Voice.tos(),
            AppKind::Video => TrafficClass::Video.tos(),
            AppKind::Ftp | AppKind::Poisson => TrafficClass::BestEffort.tos(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AppParams {
    /// One frame of `payload` bytes every `interval` seconds.
    Voip { interval: f64, payload: u32 },
    /// `fps` frames per second, each `frame_size` bytes.
    Video { fps: f64, frame_size: u32 },
    /// A `file_size`-byte file every `inter_request` seconds.
    Ftp { inter_request: f64, file_size: u32 },
    /// Exponential inter-arrivals at `rate` packets/s and exponential sizes.
    Poisson { rate: f64, mean_size: f64 },
}

impl AppParams {
    pub fn voip() -> Self {
        AppParams::Voip {
            interval: 0.02,
            payload: 160,
        }
    }

    pub fn video() -> Self {
        AppParams::Video {
            fps: 10.0,
            frame_size: 15_360,
        }
    }

    pub fn ftp() -> Self {
        AppParams::Ftp {
            inter_request: 10.0,
            file_size: 1_000_000,
        }
    }

    pub fn kind(&self) -> AppKind {
        match self {
            AppParams::Voip { .. } => AppKind::Voip,
            AppParams::Video { .. } => AppKind::Video,
            AppParams::Ftp { .. } => AppKind::Ftp,
            AppParams::Poisson { .. } => AppKind::Poisson,
        }
    }

    /// Long-run mean offered load in bits per second.
    pub fn offered_rate_bps(&self) -> f64 {
        match *self {
            AppParams::Voip { interval, payload } => f64::from(payload) * 8.0 / interval,
            AppParams::Video { fps, frame_size } => f64::from(frame_size) * fps * 8.0,
            AppParams::Ftp {
                inter_request,
                file_size,
            } => f64::from(file_size) * 8.0 / inter_request,
            AppParams::Poisson { rate, mean_size } => rate * mean_size * 8.0,
        }
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        let ok = match *self {
            AppParams::Voip { interval, payload } => interval > 0.0 && payload >= 1,
            AppParams::Video { fps, frame_size } => fps > 0.0 && frame_size >= 1,
            AppParams::Ftp {
                inter_request,
                file_size,
            } => inter_request > 0.0 && file_size >= 1,
            AppParams::Poisson { rate, mean_size } => rate > 0.0 && mean_size > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(TrafficError::BadParams(*self))
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("application parameters must be positive: {0:?}")]
    BadParams(AppParams),
    #[error("MTU payload must be at least one byte")]
    ZeroMtu,
    #[error("flow window [{start}, {stop}) is empty or invalid")]
    BadWindow { start: f64, stop: f64 },
    #[error("ToS {tos} does not match application {app}")]
    TosMismatch { app: &'static str, tos: u8 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSpec {
    pub app: AppParams,
    pub src: NodeId,
    pub dst: NodeId,
    pub tos: u8,
    pub start: f64,
    pub stop: f64,
    /// First emission is delayed by a uniform draw from `[0, start_jitter)`.
    pub start_jitter: f64,
    pub mtu: u32,
}

impl FlowSpec {
    pub fn new(app: AppParams, src: NodeId, dst: NodeId, start: f64, stop: f64) -> Self {
        Self {
            app,
            src,
            dst,
            tos: app.kind().default_tos(),
            start,
            stop,
            start_jitter: 0.0,
            mtu: DEFAULT_MTU,
        }
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        self.app.validate()?;
        if self.mtu == 0 {
            return Err(TrafficError::ZeroMtu);
        }
        if !(self.start >= 0.0 && self.stop > self.start && self.start_jitter >= 0.0) {
            return Err(TrafficError::BadWindow {
                start: self.start,
                stop: self.stop,
            });
        }
        let kind = self.app.kind();
        if kind != AppKind::Poisson && self.tos != kind.default_tos() {
            return Err(TrafficError::TosMismatch {
                app: kind.name(),
                tos: self.tos,
            });
        }
        Ok(())
    }
}

/// Splits a message into MTU-sized payloads; only the last may be short.
pub fn fragment(total: u32, mtu: u32) -> Vec<u32> {
    assert!(mtu >= 1, "mtu must be positive");
    let full = total / mtu;
    let rest = total % mtu;
    let mut sizes = vec![mtu; full as usize];
    if rest > 0 {
        sizes.push(rest);
    }
    sizes
}

/// What one generation event produces.
#[derive(Debug)]
pub struct Emission {
    pub packets: Vec<Packet>,
    /// Time of the next generation event, if it falls before the flow stops.
    pub next: Option<SimTime>,
}

/// A running instance of one [`FlowSpec`].
///
/// Constant-rate applications emit at `start + k * period` so long runs do
/// not accumulate rounding drift.
pub struct FlowSource {
    id: FlowId,
    spec: FlowSpec,
    class: TrafficClass,
    first: f64,
    emitted: u64,
    rng: ChaCha8Rng,
}

impl FlowSource {
    /// `seed` is the run's master seed; the flow draws from its own
    /// ChaCha stream selected by `id`, so flows never share randomness.
    pub fn new(id: FlowId, spec: FlowSpec, seed: u64) -> Result<Self, TrafficError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id as u64);
        let jitter = if spec.start_jitter > 0.0 {
            rng.random_range(0.0..spec.start_jitter)
        } else {
            0.0
        };
        let class = TrafficClass::from_tos(spec.tos).unwrap_or(TrafficClass::BestEffort);
        Ok(Self {
            id,
            first: spec.start + jitter,
            spec,
            class,
            emitted: 0,
            rng,
        })
    }

    pub fn id(&self) -> FlowId {
        self.id
    }

    pub fn spec(&self) -> &FlowSpec {
        &self.spec
    }

    pub fn class(&self) -> TrafficClass {
        self.class
    }

    pub fn first_emission(&self) -> Option<SimTime> {
        (self.first < self.spec.stop).then(|| SimTime::from_secs(self.first).expect("validated start"))
    }

    /// Emits whatever the application sends at `now` and reports when it
    /// wants to be woken next. `next_packet_id` is advanced per packet.
    pub fn generate(&mut self, now: SimTime, next_packet_id: &mut u64) -> Emission {
        let (sizes, next) = match self.spec.app {
            AppParams::Voip { interval, payload } => (vec![payload], self.periodic_next(interval)),
            AppParams::Video { fps, frame_size } => (fragment(frame_size, self.spec.mtu), self.periodic_next(1.0 / fps)),
            AppParams::Ftp {
                inter_request,
                file_size,
            } => (fragment(file_size, self.spec.mtu), self.periodic_next(inter_request)),
            AppParams::Poisson { rate, mean_size } => {
                let size_draw = Exp::new(1.0 / mean_size).expect("validated").sample(&mut self.rng);
                // Payloads are whole bytes; rounding keeps the mean unbiased.
                let size = (size_draw.round() as u32).max(1);
                let gap = Exp::new(rate).expect("validated").sample(&mut self.rng);
                let next = now.secs() + gap;
                (fragment(size, self.spec.mtu), (next < self.spec.stop).then_some(next))
            }
        };
        self.emitted += 1;
        let packets = sizes
            .into_iter()
            .map(|size| {
                let id = *next_packet_id;
                *next_packet_id += 1;
                Packet {
                    id,
                    flow: self.id,
                    tos: self.spec.tos,
                    class: self.class,
                    size,
                    created: now,
                    src: self.spec.src,
                    dst: self.spec.dst,
                    hops: 0,
                }
            })
            .collect();
        Emission {
            packets,
            next: next.map(|t| SimTime::from_secs(t).expect("generation times are finite")),
        }
    }

    fn periodic_next(&self, period: f64) -> Option<f64> {
        let t = self.first + (self.emitted + 1) as f64 * period;
        (t < self.spec.stop).then_some(t)
    }
}
