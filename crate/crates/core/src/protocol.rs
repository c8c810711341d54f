//! Block-by-block model of the ARQ and key-banking schemes.
//!
//! The simulator keeps mutual-information ledgers rather than coded bits: a
//! group decodes once its accumulated information reaches the group rate,
//! and the adversary's knowledge is the information it gathered on the
//! blocks it listened to.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{eaves_info, log2_1p, ChannelModel, GainSample, PowerConfig};
use crate::delay::DelayTriple;
use crate::error::{config, usage, Result};
use crate::feedback::{Scheme, DEFAULT_T_MAX};
use crate::rng::RngStream;
use crate::stats::{binomial_ci95, RatioStat};

const PHI_STREAM_TAG: u64 = 0xAD5E_25A2;

/// Per-block choice of the adversary: `1` jams, `0` eavesdrops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryStrategy {
    AlwaysEavesdrop,
    AlwaysJam,
    Bernoulli { q: f64 },
    /// Jams on every `jam_every`-th block.
    Periodic { jam_every: usize },
    Explicit { trace: Vec<u8> },
}

impl AdversaryStrategy {
    /// Parses a trace of `0`/`1` characters; whitespace is ignored.
    pub fn from_trace_text(text: &str) -> Result<Self> {
        let mut trace = Vec::with_capacity(text.len());
        for c in text.chars() {
            match c {
                '0' => trace.push(0),
                '1' => trace.push(1),
                c if c.is_whitespace() => {}
                other => return config(format!("adversary trace contains {other:?}; expected 0 or 1")),
            }
        }
        Ok(AdversaryStrategy::Explicit { trace })
    }

    pub fn validate(&self, m_blocks: usize) -> Result<()> {
        match self {
            AdversaryStrategy::Bernoulli { q } if !(0.0..=1.0).contains(q) => {
                config(format!("jamming probability must lie in [0, 1], got {q}"))
            }
            AdversaryStrategy::Periodic { jam_every: 0 } => config("jam_every must be >= 1"),
            AdversaryStrategy::Explicit { trace } if trace.len() < m_blocks => config(format!(
                "adversary trace has {} entries, session needs {m_blocks}",
                trace.len()
            )),
            AdversaryStrategy::Explicit { trace } if trace.iter().any(|p| *p > 1) => {
                config("adversary trace entries must be 0 or 1")
            }
            _ => Ok(()),
        }
    }

    fn phi<R: Rng + ?Sized>(&self, index: usize, rng: &mut R) -> u8 {
        match self {
            AdversaryStrategy::AlwaysEavesdrop => 0,
            AdversaryStrategy::AlwaysJam => 1,
            AdversaryStrategy::Bernoulli { q } => u8::from(rng.gen::<f64>() < *q),
            AdversaryStrategy::Periodic { jam_every } => u8::from((index + 1).is_multiple_of(*jam_every)),
            AdversaryStrategy::Explicit { trace } => trace[index],
        }
    }

    pub fn name(&self) -> String {
        match self {
            AdversaryStrategy::AlwaysEavesdrop => "always_eavesdrop".into(),
            AdversaryStrategy::AlwaysJam => "always_jam".into(),
            AdversaryStrategy::Bernoulli { q } => format!("bernoulli({q})"),
            AdversaryStrategy::Periodic { jam_every } => format!("periodic({jam_every})"),
            AdversaryStrategy::Explicit { .. } => "explicit".into(),
        }
    }
}

/// How jamming enters the receiver's information ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JammingAccounting {
    /// Every block is decoded at the jammed rate, whatever the adversary
    /// does (the receiver injects matching noise on eavesdropping blocks).
    #[default]
    WorstCase,
    /// The jamming term appears only on blocks where the adversary jams.
    PerBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEvent {
    pub index: u64,
    pub phi: u8,
    pub gains: GainSample,
    /// False when the transmitter stayed silent (rate adaptation).
    pub transmitted: bool,
    /// Information this block added to the receiver's ledger.
    pub main_info_eff: f64,
    /// ACK for ARQ sessions; block success for delay sessions.
    pub ack: bool,
    pub leaked_info: f64,
}

/// One decoded bit group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub t: u64,
    /// Eavesdropper gain summed over the blocks the adversary actually heard.
    pub sum_leaked: f64,
    pub secure_bits: f64,
    /// Gain credited under the always-eavesdrop assumption.
    pub conservative_sum_he: f64,
    pub conservative_secure_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    /// Blocks after the initialization superblock.
    pub message_blocks: u64,
    pub outage_blocks: u64,
    pub outage_frequency: f64,
    pub outage_ci: f64,
    pub key_underflows: u64,
    /// Key balance (bits) after each block.
    pub key_balance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub blocks: u64,
    /// Empty unless events were requested.
    pub events: Vec<BlockEvent>,
    pub groups: Vec<GroupRecord>,
    /// Secure bits per block against the simulated strategy.
    pub empirical_rate: f64,
    pub empirical_ci: f64,
    /// Secure bits per block under always-eavesdrop leakage accounting.
    pub conservative_rate: f64,
    pub conservative_ci: f64,
    pub truncations: u64,
    pub delay: Option<DelayStats>,
}

impl SessionLog {
    /// One JSON object per block event.
    pub fn write_events_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e).map_err(std::io::Error::other)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Secure bits per block over the whole session.
pub fn empirical_secure_rate(log: &SessionLog) -> Result<f64> {
    if log.blocks == 0 {
        return usage("session log has no blocks");
    }
    let bits: f64 = log.groups.iter().map(|g| g.secure_bits).sum();
    Ok(bits / log.blocks as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArqConfig {
    pub r: f64,
    pub scheme: Scheme,
    pub m_blocks: usize,
    pub t_max: usize,
    pub accounting: JammingAccounting,
    pub keep_events: bool,
}

impl ArqConfig {
    pub fn new(r: f64, scheme: Scheme, m_blocks: usize) -> Self {
        Self {
            r,
            scheme,
            m_blocks,
            t_max: DEFAULT_T_MAX,
            accounting: JammingAccounting::default(),
            keep_events: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return config(format!("group rate must be > 0, got {}", self.r));
        }
        if self.m_blocks == 0 || self.t_max == 0 {
            return config("m_blocks and t_max must be >= 1");
        }
        Ok(())
    }
}

fn jammed_snr(g: &GainSample, power: &PowerConfig, jam: bool) -> f64 {
    let z = if jam { power.pj * g.hz } else { 0.0 };
    power.pt * g.hm / (1.0 + z)
}

#[derive(Default)]
struct GroupState {
    t: u64,
    acc_snr: f64,
    sum_leaked: f64,
    conservative_he: f64,
}

/// ARQ session over `m_blocks` blocks.
///
/// With [`Scheme::MainCsi`] the transmitter sees `hm` and stays silent when
/// the unjammed rate cannot carry the group; the per-block jamming term is
/// always applied for this scheme, since its NAKs identify jammed blocks.
pub fn run_arq_session(
    model: &ChannelModel,
    power: &PowerConfig,
    cfg: &ArqConfig,
    adversary: &AdversaryStrategy,
    rng: &RngStream,
) -> Result<SessionLog> {
    model.validate()?;
    power.validate()?;
    cfg.validate()?;
    adversary.validate(cfg.m_blocks)?;
    let mut gains_rng = rng.sequential();
    let mut phi_rng = rng.derive(PHI_STREAM_TAG).sequential();
    let per_block = cfg.scheme == Scheme::MainCsi || cfg.accounting == JammingAccounting::PerBlock;

    let mut events = Vec::with_capacity(if cfg.keep_events { cfg.m_blocks } else { 0 });
    let mut groups = Vec::new();
    let mut ratio = RatioStat::default();
    let mut conservative = RatioStat::default();
    let mut truncations = 0u64;
    let mut st = GroupState::default();

    for i in 0..cfg.m_blocks {
        let g = model.draw(&mut gains_rng);
        let phi = adversary.phi(i, &mut phi_rng);
        let jam = if per_block { phi == 1 } else { true };
        let snr = jammed_snr(&g, power, jam);
        let transmitted = match cfg.scheme {
            Scheme::MainCsi => cfg.r <= log2_1p(power.pt * g.hm),
            _ => true,
        };
        st.t += 1;

        let mut ack = false;
        let mut info = 0.0;
        let mut leaked = 0.0;
        if transmitted {
            info = log2_1p(snr);
            ack = match cfg.scheme {
                Scheme::Mrc => {
                    st.acc_snr += snr;
                    log2_1p(st.acc_snr) >= cfg.r
                }
                Scheme::PlainArq | Scheme::MainCsi => info >= cfg.r,
            };
            if phi == 0 {
                leaked = eaves_info(&g, power);
                st.sum_leaked += g.he;
            }
            match cfg.scheme {
                Scheme::MainCsi => {
                    if ack {
                        st.conservative_he = g.he;
                    }
                }
                _ => st.conservative_he += g.he,
            }
        } else if cfg.scheme != Scheme::MainCsi {
            unreachable!("only rate adaptation skips blocks");
        }

        if cfg.keep_events {
            events.push(BlockEvent {
                index: i as u64,
                phi,
                gains: g,
                transmitted,
                main_info_eff: info,
                ack,
                leaked_info: leaked,
            });
        }

        if ack {
            let rec = GroupRecord {
                t: st.t,
                sum_leaked: st.sum_leaked,
                secure_bits: (cfg.r - log2_1p(power.pt * st.sum_leaked)).max(0.0),
                conservative_sum_he: st.conservative_he,
                conservative_secure_bits: (cfg.r - log2_1p(power.pt * st.conservative_he)).max(0.0),
            };
            ratio.push(rec.secure_bits, rec.t as f64);
            conservative.push(rec.conservative_secure_bits, rec.t as f64);
            groups.push(rec);
            st = GroupState::default();
        } else if st.t as usize >= cfg.t_max {
            ratio.push(0.0, st.t as f64);
            conservative.push(0.0, st.t as f64);
            truncations += 1;
            st = GroupState::default();
        }
    }

    let blocks = cfg.m_blocks as u64;
    let secure: f64 = groups.iter().map(|g| g.secure_bits).sum();
    let cons: f64 = groups.iter().map(|g| g.conservative_secure_bits).sum();
    Ok(SessionLog {
        blocks,
        events,
        groups,
        empirical_rate: secure / blocks as f64,
        empirical_ci: ratio.ci95(),
        conservative_rate: cons / blocks as f64,
        conservative_ci: conservative.ci95(),
        truncations,
        delay: None,
    })
}

/// Secret-key store shared by transmitter and receiver, counted in chunks
/// of `chunk_bits` (the key spent by one message block).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyBank {
    chunks: u64,
    pub chunk_bits: f64,
    pub superblock_len: usize,
}

impl KeyBank {
    pub fn new(chunk_bits: f64, superblock_len: usize) -> Self {
        Self {
            chunks: 0,
            chunk_bits,
            superblock_len,
        }
    }

    pub fn balance(&self) -> f64 {
        self.chunks as f64 * self.chunk_bits
    }

    pub fn chunks(&self) -> u64 {
        self.chunks
    }

    /// Credits the key generated over one superblock.
    pub fn deposit_superblock(&mut self) {
        self.chunks += self.superblock_len as u64;
    }

    /// Takes one chunk; `false` (and no change) when the bank is empty.
    pub fn withdraw(&mut self) -> bool {
        if self.chunks == 0 {
            return false;
        }
        self.chunks -= 1;
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySessionConfig {
    pub triple: DelayTriple,
    /// Blocks per superblock.
    pub m1: usize,
    /// Superblocks; the first one only generates key.
    pub m2: usize,
    pub accounting: JammingAccounting,
    pub keep_events: bool,
}

/// Delay-limited session: per-block messages at `r_s`, one-time-padded with
/// key generated in the previous superblock.
pub fn run_delay_session(
    model: &ChannelModel,
    power: &PowerConfig,
    cfg: &DelaySessionConfig,
    adversary: &AdversaryStrategy,
    rng: &RngStream,
) -> Result<SessionLog> {
    model.validate()?;
    power.validate()?;
    cfg.triple.validate()?;
    if cfg.m1 == 0 || cfg.m2 == 0 {
        return config("m1 and m2 must be >= 1");
    }
    let m_blocks = cfg.m1 * cfg.m2;
    adversary.validate(m_blocks)?;
    let DelayTriple { gamma, r_tilde, r_s, r_key } = cfg.triple;
    let share = 1.0 - gamma;
    let uses_key = r_key > 0.0;

    let mut gains_rng = rng.sequential();
    let mut phi_rng = rng.derive(PHI_STREAM_TAG).sequential();
    let mut bank = KeyBank::new(r_key, cfg.m1);
    let mut events = Vec::with_capacity(if cfg.keep_events { m_blocks } else { 0 });
    let mut key_balance = Vec::with_capacity(m_blocks);
    let (mut outages, mut underflows, mut successes) = (0u64, 0u64, 0u64);

    for i in 0..m_blocks {
        let g = model.draw(&mut gains_rng);
        let phi = adversary.phi(i, &mut phi_rng);
        let jam = match cfg.accounting {
            JammingAccounting::WorstCase => true,
            JammingAccounting::PerBlock => phi == 1,
        };
        let initializing = i < cfg.m1;
        let transmitted = !initializing && gamma < 1.0;
        let mut info = 0.0;
        let mut leaked = 0.0;
        let mut ok = false;
        if transmitted {
            info = share * log2_1p(jammed_snr(&g, power, jam));
            if phi == 0 {
                leaked = share * eaves_info(&g, power);
            }
            let key_ok = !uses_key || bank.withdraw();
            if !key_ok {
                underflows += 1;
            }
            let decoded = info >= r_tilde;
            let secret = (r_tilde - leaked).max(0.0) >= r_s - r_key;
            ok = key_ok && decoded && secret;
        }
        if !initializing {
            if ok {
                successes += 1;
            } else {
                outages += 1;
            }
        }
        if (i + 1) % cfg.m1 == 0 && uses_key {
            bank.deposit_superblock();
        }
        key_balance.push(bank.balance());
        if cfg.keep_events {
            events.push(BlockEvent {
                index: i as u64,
                phi,
                gains: g,
                transmitted,
                main_info_eff: info,
                ack: ok,
                leaked_info: leaked,
            });
        }
    }

    let message_blocks = (m_blocks - cfg.m1) as u64;
    let freq = if message_blocks == 0 {
        1.0
    } else {
        outages as f64 / message_blocks as f64
    };
    let rate = r_s * successes as f64 / m_blocks as f64;
    Ok(SessionLog {
        blocks: m_blocks as u64,
        events,
        groups: Vec::new(),
        empirical_rate: rate,
        empirical_ci: r_s * binomial_ci95(successes, m_blocks as u64),
        conservative_rate: rate,
        conservative_ci: r_s * binomial_ci95(successes, m_blocks as u64),
        truncations: 0,
        delay: Some(DelayStats {
            message_blocks,
            outage_blocks: outages,
            outage_frequency: freq,
            outage_ci: binomial_ci95(outages, message_blocks),
            key_underflows: underflows,
            key_balance,
        }),
    })
}
