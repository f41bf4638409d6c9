//! Deterministic synthetic blocks.
//!
//! Blocks are built from four transaction classes: plain value transfers,
//! token transfers, router swaps and heavy contract calls. Hubs (popular
//! tokens, routers, pools and applications) are what create dependencies; the
//! presets differ mostly in how much of the block goes through them.
//!
//! Everything derived from `(seed, block number)` only, so any block can be
//! generated on its own and in any order.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Zipf};

use crate::disentangle::{SELECTOR_APPROVE, SELECTOR_BALANCE_OF, SELECTOR_TRANSFER, SELECTOR_TRANSFER_FROM};
use crate::error::{Error, Result};
use crate::par::{map_ordered, Execution};
use crate::trace::{Address, BlockTrace, CallFrame, CallKind, Transaction, TxHash};

/// Hub tokens in order of popularity. All are in the bundled disentangle config.
pub const HUB_TOKENS: [&str; 5] = [
    "0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2", // WETH
    "0xa0b86991c6218b36c1d19d4a2e9eb0ce3606eb48", // USDC
    "0xdac17f958d2ee523a2206206994597c13d831ec7", // USDT
    "0x6b175474e89094c44da98b954eedeac495271d0f", // DAI
    "0x514910771af9ca656af840dff83e8264ecf986ca", // LINK
];

/// Routers in order of popularity. All are in the bundled disentangle config.
pub const ROUTERS: [&str; 6] = [
    "0x7a250d5630b4cf539739df2c5dacb4c659f2488d",
    "0x68b3465833fb72a70ecdf485e0e4c7bd8665fc45",
    "0xe592427a0aece92de3edee1f18e0157c05861564",
    "0xd9e1ce17f2641f24ae83637ab66a2cca9c378b9f",
    "0x1111111254eeb25477b68fb85ed929f73a960582",
    "0x1111111254fb6c44bac0bed2854e76f90643097d",
];

const PLAIN_GAS: u64 = 21_000;
const MAX_TX_GAS: u64 = 30_000_000;

const SELECTOR_SWAP_EXACT: [u8; 4] = [0x38, 0xed, 0x17, 0x39];
const SELECTOR_POOL_SWAP: [u8; 4] = [0x02, 0x2c, 0x0d, 0x9f];
const SELECTOR_DEPOSIT: [u8; 4] = [0xd0, 0xe3, 0x0d, 0xb0];
const SELECTOR_LATEST_ANSWER: [u8; 4] = [0x50, 0xd2, 0x5b, 0xcd];

/// Log-normal gas: `median · exp(sigma · N(0, 1))`, clamped to `[min, MAX_TX_GAS]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel {
    pub median: f64,
    pub sigma: f64,
    pub min: u64,
}

impl GasModel {
    pub const fn new(median: f64, sigma: f64, min: u64) -> GasModel {
        GasModel { median, sigma, min }
    }

    /// Mean of the unclamped distribution.
    pub fn mean(&self) -> f64 {
        self.median * (self.sigma * self.sigma / 2.0).exp()
    }
}

/// Fractions of each transaction class; they sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMix {
    pub plain: f64,
    pub token: f64,
    pub swap: f64,
    pub heavy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassGas {
    pub token: GasModel,
    pub swap: GasModel,
    pub heavy: GasModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadProfile {
    pub seed: u64,
    /// Transactions per block, drawn uniformly.
    pub min_txs: usize,
    pub max_txs: usize,
    pub mix: ClassMix,
    pub gas: ClassGas,
    /// Leading entries of [`HUB_TOKENS`] in use.
    pub hub_tokens: usize,
    /// Tokens outside the disentangle config.
    pub tail_tokens: usize,
    /// Probability that a token pick lands on a hub token.
    pub hub_token_share: f64,
    /// Leading entries of [`ROUTERS`] in use.
    pub routers: usize,
    pub pools: usize,
    /// Zipf exponent of pool popularity.
    pub pool_skew: f64,
    /// Probability that a swap goes through two pools.
    pub multi_hop: f64,
    pub apps: usize,
    pub app_skew: f64,
    /// Probability that a heavy call moves a token.
    pub app_token_calls: f64,
    pub oracles: usize,
    /// Distinct user accounts senders and recipients are drawn from.
    pub address_pool: u64,
    /// Exchange deposit addresses receiving a share of transfers.
    pub exchanges: usize,
    pub exchange_share: f64,
    /// Senders issuing many swaps each.
    pub bots: usize,
    pub bot_share: f64,
    /// Timestamps are `anchor_timestamp + (number − anchor_block) · block_interval`.
    pub anchor_block: u64,
    pub anchor_timestamp: u64,
    pub block_interval: u64,
}

impl WorkloadProfile {
    /// Mostly value transfers and a long tail of unrelated tokens.
    pub fn pre_defi() -> WorkloadProfile {
        WorkloadProfile {
            seed: 0,
            min_txs: 180,
            max_txs: 220,
            mix: ClassMix {
                plain: 0.70,
                token: 0.22,
                swap: 0.0,
                heavy: 0.08,
            },
            gas: ClassGas {
                token: GasModel::new(45_000.0, 0.35, 25_000),
                swap: GasModel::new(140_000.0, 0.4, 60_000),
                heavy: GasModel::new(120_000.0, 0.9, 30_000),
            },
            hub_tokens: 1,
            tail_tokens: 200,
            hub_token_share: 0.05,
            routers: 1,
            pools: 1,
            pool_skew: 1.0,
            multi_hop: 0.0,
            apps: 200,
            app_skew: 0.6,
            app_token_calls: 0.1,
            oracles: 1,
            address_pool: 100_000,
            exchanges: 40,
            exchange_share: 0.1,
            bots: 1,
            bot_share: 0.0,
            anchor_block: 4_000_000,
            anchor_timestamp: 1_499_832_000,
            block_interval: 15,
        }
    }

    /// Hub-heavy blocks of around 200 transactions and 15M gas.
    pub fn defi() -> WorkloadProfile {
        WorkloadProfile {
            seed: 0,
            min_txs: 190,
            max_txs: 210,
            mix: ClassMix {
                plain: 0.25,
                token: 0.30,
                swap: 0.30,
                heavy: 0.15,
            },
            gas: ClassGas {
                token: GasModel::new(45_000.0, 0.3, 25_000),
                swap: GasModel::new(110_000.0, 0.45, 60_000),
                heavy: GasModel::new(90_000.0, 1.0, 30_000),
            },
            hub_tokens: 5,
            tail_tokens: 60,
            hub_token_share: 0.75,
            routers: 4,
            pools: 40,
            pool_skew: 1.3,
            multi_hop: 0.5,
            apps: 60,
            app_skew: 1.0,
            app_token_calls: 0.5,
            oracles: 3,
            address_pool: 100_000,
            exchanges: 20,
            exchange_share: 0.15,
            bots: 4,
            bot_share: 0.1,
            anchor_block: 15_537_394,
            anchor_timestamp: 1_663_224_179,
            block_interval: 12,
        }
    }

    /// Like `defi` with more concentrated trading and more bot activity.
    pub fn recent() -> WorkloadProfile {
        WorkloadProfile {
            mix: ClassMix {
                plain: 0.20,
                token: 0.25,
                swap: 0.40,
                heavy: 0.15,
            },
            pools: 25,
            pool_skew: 1.6,
            bots: 3,
            bot_share: 0.3,
            anchor_block: 19_000_000,
            anchor_timestamp: 1_705_173_443,
            ..WorkloadProfile::defi()
        }
    }

    pub fn preset(name: &str) -> Result<WorkloadProfile> {
        name.parse()
    }

    pub fn with_seed(mut self, seed: u64) -> WorkloadProfile {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("workload profile: {m}")));
        let m = &self.mix;
        let fractions = [m.plain, m.token, m.swap, m.heavy];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("class fractions {fractions:?} must be in [0, 1] and sum to 1"));
        }
        let counts = [
            ("min_txs", self.min_txs),
            ("hub_tokens", self.hub_tokens),
            ("tail_tokens", self.tail_tokens),
            ("routers", self.routers),
            ("pools", self.pools),
            ("apps", self.apps),
            ("oracles", self.oracles),
            ("exchanges", self.exchanges),
            ("bots", self.bots),
            ("address_pool", self.address_pool as usize),
            ("block_interval", self.block_interval as usize),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, c)| *c == 0) {
            return bad(format!("{name} must be positive"));
        }
        if self.max_txs < self.min_txs {
            return bad("max_txs below min_txs".into());
        }
        if self.hub_tokens > HUB_TOKENS.len() || self.routers > ROUTERS.len() {
            return bad("more hub tokens or routers than known addresses".into());
        }
        let probabilities = [
            self.hub_token_share,
            self.multi_hop,
            self.app_token_calls,
            self.exchange_share,
            self.bot_share,
        ];
        if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("probabilities must be in [0, 1]".into());
        }
        let g = &self.gas;
        for model in [g.token, g.swap, g.heavy] {
            if !(model.median > 0.0 && model.sigma >= 0.0 && model.sigma.is_finite() && model.min > 0) {
                return bad(format!("invalid gas model {model:?}"));
            }
        }
        if self.pool_skew <= 0.0 || self.app_skew <= 0.0 {
            return bad("skew exponents must be positive".into());
        }
        Ok(())
    }

    pub fn timestamp(&self, number: u64) -> u64 {
        let offset = number as i128 - self.anchor_block as i128;
        (self.anchor_timestamp as i128 + offset * self.block_interval as i128).max(0) as u64
    }
}

impl FromStr for WorkloadProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<WorkloadProfile> {
        match s {
            "pre-defi" => Ok(WorkloadProfile::pre_defi()),
            "defi" => Ok(WorkloadProfile::defi()),
            "recent" => Ok(WorkloadProfile::recent()),
            other => Err(Error::InvalidArgument(format!(
                "unknown preset {other:?} (expected pre-defi, defi or recent)"
            ))),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fill(bytes: &mut [u8], key: u64) {
    let mut state = key;
    for chunk in bytes.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_be_bytes()[..chunk.len()]);
    }
}

#[derive(Debug, Clone, Copy)]
enum Domain {
    User = 1,
    TailToken,
    Pool,
    App,
    Implementation,
    Oracle,
    Exchange,
    Bot,
    TxHash,
}

fn derived_address(seed: u64, domain: Domain, index: u64) -> Address {
    let mut bytes = [0u8; 20];
    fill(&mut bytes, splitmix64(seed ^ splitmix64((domain as u64) << 56 ^ index)));
    Address(bytes)
}

fn word_address(a: Address) -> [u8; 32] {
    let mut w = [0u8; 32];
    w[12..].copy_from_slice(&a.0);
    w
}

fn word_amount(amount: u128) -> [u8; 32] {
    let mut w = [0u8; 32];
    w[16..].copy_from_slice(&amount.to_be_bytes());
    w
}

fn calldata(selector: [u8; 4], words: &[[u8; 32]]) -> Vec<u8> {
    let mut out = selector.to_vec();
    for w in words {
        out.extend_from_slice(w);
    }
    out
}

/// Share `gas · fraction` of a parent's gas, at least 1.
fn part(gas: u64, fraction: f64) -> u64 {
    ((gas as f64 * fraction) as u64).max(1)
}

#[derive(Debug, Clone, Copy)]
struct Pool {
    address: Address,
    tokens: [Address; 2],
}

#[derive(Debug, Clone, Copy)]
struct App {
    address: Address,
    implementation: Address,
}

fn other_token(pool: &Pool, token: Address) -> Address {
    if pool.tokens[0] == token {
        pool.tokens[1]
    } else {
        pool.tokens[0]
    }
}

/// Precomputed hub sets of a profile; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct Generator {
    profile: WorkloadProfile,
    hub_tokens: Vec<Address>,
    tail_tokens: Vec<Address>,
    routers: Vec<Address>,
    pools: Vec<Pool>,
    apps: Vec<App>,
    oracles: Vec<Address>,
    exchanges: Vec<Address>,
    bots: Vec<Address>,
    pool_pick: Zipf<f64>,
    app_pick: Zipf<f64>,
    gas: [LogNormal<f64>; 3],
}

enum Class {
    Plain,
    Token,
    Swap,
    Heavy,
}

impl Generator {
    pub fn new(profile: &WorkloadProfile) -> Result<Generator> {
        profile.validate()?;
        let p = profile;
        let parse = |s: &&str| s.parse::<Address>().expect("builtin address");
        let hub_tokens: Vec<Address> = HUB_TOKENS[..p.hub_tokens].iter().map(parse).collect();
        let routers: Vec<Address> = ROUTERS[..p.routers].iter().map(parse).collect();
        let derive =
            |domain, n: usize| -> Vec<Address> { (0..n as u64).map(|i| derived_address(p.seed, domain, i)).collect() };
        let tail_tokens = derive(Domain::TailToken, p.tail_tokens);

        // Pool pairs are fixed per seed. Popular pools pair two hub tokens.
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(p.seed ^ 0x706f_6f6c));
        let pools = (0..p.pools)
            .map(|i| {
                let a = hub_tokens[i % hub_tokens.len()];
                let b = loop {
                    let b = if hub_tokens.len() > 1 && (i < hub_tokens.len() * 2 || rng.gen_bool(0.3)) {
                        hub_tokens[rng.gen_range(0..hub_tokens.len())]
                    } else {
                        tail_tokens[rng.gen_range(0..tail_tokens.len())]
                    };
                    if b != a {
                        break b;
                    }
                };
                Pool {
                    address: derived_address(p.seed, Domain::Pool, i as u64),
                    tokens: [a, b],
                }
            })
            .collect();
        let apps = (0..p.apps as u64)
            .map(|i| App {
                address: derived_address(p.seed, Domain::App, i),
                implementation: derived_address(p.seed, Domain::Implementation, i),
            })
            .collect();
        let lognormal = |m: GasModel| LogNormal::new(m.median.ln(), m.sigma).expect("validated gas model");
        let invalid = |e: rand_distr::ZipfError| Error::InvalidArgument(format!("workload profile: {e}"));
        Ok(Generator {
            profile: p.clone(),
            hub_tokens,
            tail_tokens,
            routers,
            pools,
            apps,
            oracles: derive(Domain::Oracle, p.oracles),
            exchanges: derive(Domain::Exchange, p.exchanges),
            bots: derive(Domain::Bot, p.bots),
            pool_pick: Zipf::new(p.pools as u64, p.pool_skew).map_err(invalid)?,
            app_pick: Zipf::new(p.apps as u64, p.app_skew).map_err(invalid)?,
            gas: [lognormal(p.gas.token), lognormal(p.gas.swap), lognormal(p.gas.heavy)],
        })
    }

    pub fn profile(&self) -> &WorkloadProfile {
        &self.profile
    }

    fn block_rng(&self, number: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.profile.seed ^ splitmix64(number))
    }

    pub fn block(&self, number: u64) -> BlockTrace {
        let p = &self.profile;
        let mut rng = self.block_rng(number);
        let count = rng.gen_range(p.min_txs..=p.max_txs);
        let transactions: Vec<Transaction> = (0..count).map(|i| self.transaction(&mut rng, number, i)).collect();
        BlockTrace {
            number,
            timestamp: p.timestamp(number),
            gas_used: transactions.iter().map(|tx| tx.gas_used).sum(),
            transactions,
        }
    }

    fn transaction(&self, rng: &mut ChaCha8Rng, number: u64, index: usize) -> Transaction {
        let m = &self.profile.mix;
        let x: f64 = rng.gen();
        let class = if x < m.plain {
            Class::Plain
        } else if x < m.plain + m.token {
            Class::Token
        } else if x < m.plain + m.token + m.swap {
            Class::Swap
        } else {
            Class::Heavy
        };
        let root = match class {
            Class::Plain => self.plain(rng),
            Class::Token => self.token_transfer(rng),
            Class::Swap => self.swap(rng),
            Class::Heavy => self.heavy(rng),
        };
        let mut hash = [0u8; 32];
        let key = derived_address(self.profile.seed, Domain::TxHash, number);
        fill(
            &mut hash,
            splitmix64(u64::from_be_bytes(key.0[..8].try_into().unwrap()) ^ index as u64),
        );
        Transaction {
            hash: TxHash(hash),
            sender: root.from,
            recipient: Some(root.to),
            gas_used: root.gas_used,
            root_call: root,
        }
    }

    fn gas(&self, rng: &mut ChaCha8Rng, class: usize, model: GasModel) -> u64 {
        let g = self.gas[class].sample(rng);
        (g as u64).clamp(model.min, MAX_TX_GAS)
    }

    fn user(&self, rng: &mut ChaCha8Rng) -> Address {
        derived_address(
            self.profile.seed,
            Domain::User,
            rng.gen_range(0..self.profile.address_pool),
        )
    }

    fn recipient(&self, rng: &mut ChaCha8Rng) -> Address {
        if rng.gen_bool(self.profile.exchange_share) {
            self.exchanges[rng.gen_range(0..self.exchanges.len())]
        } else {
            self.user(rng)
        }
    }

    fn token(&self, rng: &mut ChaCha8Rng) -> Address {
        if rng.gen_bool(self.profile.hub_token_share) {
            // Hub popularity halves with each rank.
            let mut i = 0;
            while i + 1 < self.hub_tokens.len() && rng.gen_bool(0.5) {
                i += 1;
            }
            self.hub_tokens[i]
        } else {
            self.tail_tokens[rng.gen_range(0..self.tail_tokens.len())]
        }
    }

    fn pool(&self, rng: &mut ChaCha8Rng) -> Pool {
        self.pools[self.pool_pick.sample(rng) as usize - 1]
    }

    fn amount(rng: &mut ChaCha8Rng) -> u128 {
        rng.gen_range(1..1u128 << 80)
    }

    fn plain(&self, rng: &mut ChaCha8Rng) -> CallFrame {
        let from = self.user(rng);
        let to = self.recipient(rng);
        CallFrame::new(CallKind::Transfer, from, to, PLAIN_GAS)
    }

    fn token_transfer(&self, rng: &mut ChaCha8Rng) -> CallFrame {
        let from = self.user(rng);
        let token = self.token(rng);
        let gas = self.gas(rng, 0, self.profile.gas.token);
        let input = if rng.gen_bool(0.1) {
            let spender = self.routers[rng.gen_range(0..self.routers.len())];
            calldata(SELECTOR_APPROVE, &[word_address(spender), word_amount(u128::MAX)])
        } else {
            let to = self.recipient(rng);
            calldata(SELECTOR_TRANSFER, &[word_address(to), word_amount(Self::amount(rng))])
        };
        CallFrame::new(CallKind::Call, from, token, gas).with_input(&input)
    }

    /// `sender → router`, the router pulls the input token into the first
    /// pool and calls each pool in turn; the last pool pays the sender.
    fn swap(&self, rng: &mut ChaCha8Rng) -> CallFrame {
        let p = &self.profile;
        let sender = if rng.gen_bool(p.bot_share) {
            self.bots[rng.gen_range(0..self.bots.len())]
        } else {
            self.user(rng)
        };
        let router = self.routers[rng.gen_range(0..self.routers.len())];
        let gas = self.gas(rng, 1, p.gas.swap);

        let first = self.pool(rng);
        let token_in = first.tokens[rng.gen_range(0..2)];
        let mut hops = vec![first];
        if rng.gen_bool(p.multi_hop) {
            let mid = other_token(&first, token_in);
            let second = (0..8)
                .map(|_| self.pool(rng))
                .find(|q| q.address != first.address && q.tokens.contains(&mid));
            hops.extend(second);
        }

        let hop_gas = part(gas, 0.7 / hops.len() as f64);
        let mut children = vec![
            CallFrame::new(CallKind::Call, router, token_in, part(gas, 0.12)).with_input(&calldata(
                SELECTOR_TRANSFER_FROM,
                &[
                    word_address(sender),
                    word_address(first.address),
                    word_amount(Self::amount(rng)),
                ],
            )),
        ];
        let mut current_in = token_in;
        for (i, pool) in hops.iter().enumerate() {
            let token_out = other_token(pool, current_in);
            let pay_to = hops.get(i + 1).map_or(sender, |next| next.address);
            let balance = |token| {
                CallFrame::new(CallKind::StaticCall, pool.address, token, part(hop_gas, 0.03))
                    .with_input(&calldata(SELECTOR_BALANCE_OF, &[word_address(pool.address)]))
            };
            let pool_calls = vec![
                CallFrame::new(CallKind::Call, pool.address, token_out, part(hop_gas, 0.2)).with_input(&calldata(
                    SELECTOR_TRANSFER,
                    &[word_address(pay_to), word_amount(Self::amount(rng))],
                )),
                balance(current_in),
                balance(token_out),
            ];
            children.push(
                CallFrame::new(CallKind::Call, router, pool.address, hop_gas)
                    .with_input(&calldata(
                        SELECTOR_POOL_SWAP,
                        &[word_amount(0), word_amount(Self::amount(rng)), word_address(pay_to)],
                    ))
                    .with_children(pool_calls),
            );
            current_in = token_out;
        }
        let path: Vec<[u8; 32]> = vec![word_amount(Self::amount(rng)), word_amount(0), word_address(token_in)];
        CallFrame::new(CallKind::Call, sender, router, gas)
            .with_input(&calldata(SELECTOR_SWAP_EXACT, &path))
            .with_children(children)
    }

    /// `sender → app`, delegating to the app's implementation, which may read
    /// an oracle and move a token.
    fn heavy(&self, rng: &mut ChaCha8Rng) -> CallFrame {
        let p = &self.profile;
        let sender = self.user(rng);
        let app = self.apps[self.app_pick.sample(rng) as usize - 1];
        let gas = self.gas(rng, 2, p.gas.heavy);
        let inner = part(gas, 0.8);
        let mut calls = Vec::new();
        if rng.gen_bool(0.5) {
            let oracle = self.oracles[rng.gen_range(0..self.oracles.len())];
            calls.push(
                CallFrame::new(CallKind::StaticCall, app.address, oracle, part(inner, 0.05))
                    .with_input(&SELECTOR_LATEST_ANSWER),
            );
        }
        if rng.gen_bool(p.app_token_calls) {
            let token = self.token(rng);
            if token == self.hub_tokens[0] && rng.gen_bool(0.2) {
                calls.push(
                    CallFrame::new(CallKind::Call, app.address, token, part(inner, 0.1)).with_input(&SELECTOR_DEPOSIT),
                );
            } else {
                calls.push(
                    CallFrame::new(CallKind::Call, app.address, token, part(inner, 0.15)).with_input(&calldata(
                        SELECTOR_TRANSFER,
                        &[word_address(sender), word_amount(Self::amount(rng))],
                    )),
                );
            }
        }
        let mut selector = [0u8; 4];
        rng.fill(&mut selector);
        let delegate = CallFrame::new(CallKind::DelegateCall, app.address, app.implementation, inner)
            .with_input(&calldata(selector, &[word_amount(Self::amount(rng))]))
            .with_children(calls);
        CallFrame::new(CallKind::Call, sender, app.address, gas)
            .with_input(&calldata(selector, &[word_amount(Self::amount(rng))]))
            .with_children(vec![delegate])
    }
}

/// Block `number` of the workload.
///
/// # Panics
///
/// If the profile fails [`WorkloadProfile::validate`].
pub fn generate_block(profile: &WorkloadProfile, number: u64) -> BlockTrace {
    Generator::new(profile).expect("invalid workload profile").block(number)
}

/// Blocks `numbers`, generated independently.
pub fn generate_blocks(profile: &WorkloadProfile, numbers: &[u64], execution: Execution) -> Result<Vec<BlockTrace>> {
    let generator = Generator::new(profile)?;
    Ok(map_ordered(numbers, execution, |&n| generator.block(n)))
}
