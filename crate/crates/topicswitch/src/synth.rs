//! Seeded synthetic corpus with a planted index/return relation.
//!
//! Each call has a question/answer session in which every answer draws a
//! call-specific share of its words from the question it answers and the
//! rest from unrelated vocabulary, so calls range from on-topic to evasive.
//! The generator scores each call with the supplied embedder, then sets the
//! price change across the call to `slope · index + noise` and writes daily
//! price series that realise exactly that change between the trading days
//! either side of the call.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{Datelike, Days, Weekday};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};
use topicswitch_core::market::PricePoint;
use topicswitch_core::transcript::{assign_roles, RawTurn, Roster};
use topicswitch_core::tsi::Weighting;
use topicswitch_core::{Date, EarningsCall, PriceSeries, Sector};

use crate::embed::{EmbedError, Embedder};
use crate::formats::to_plain;
use crate::pipeline::index_call;
use crate::prices::write_prices;

const TOPIC_WORDS: &[&str] = &[
    "revenue",
    "margin",
    "guidance",
    "pricing",
    "inventory",
    "backlog",
    "capex",
    "dividend",
    "buyback",
    "leverage",
    "churn",
    "subscribers",
    "bookings",
    "utilization",
    "occupancy",
    "yield",
    "throughput",
    "tariffs",
    "freight",
    "wages",
    "headcount",
    "pipeline",
    "renewals",
    "attach",
    "mix",
    "promotions",
    "traffic",
    "comps",
    "china",
    "europe",
    "currency",
    "hedging",
    "refinancing",
    "covenants",
    "liquidity",
    "receivables",
    "payables",
    "royalties",
    "licensing",
    "warranty",
    "recalls",
    "outages",
    "capacity",
    "shipments",
    "orders",
    "units",
    "premiums",
    "claims",
    "reserves",
    "deposits",
    "loans",
    "spreads",
    "rigs",
    "barrels",
    "megawatts",
    "tenants",
    "leases",
    "patients",
    "trials",
    "approvals",
];

const OFF_TOPIC_WORDS: &[&str] = &[
    "journey",
    "culture",
    "values",
    "passion",
    "community",
    "heritage",
    "story",
    "vision",
    "purpose",
    "excitement",
    "momentum",
    "energy",
    "teamwork",
    "gratitude",
    "celebration",
    "anniversary",
    "volunteers",
    "sustainability",
    "wellness",
    "inclusion",
    "creativity",
    "curiosity",
    "ambition",
    "resilience",
    "optimism",
    "tradition",
    "innovation",
    "spirit",
    "legacy",
    "partnership",
    "dialogue",
    "mindset",
    "narrative",
    "horizon",
    "landscape",
    "ecosystem",
    "platform",
    "transformation",
    "agility",
    "excellence",
    "craftsmanship",
    "hospitality",
    "belonging",
    "stewardship",
    "mission",
    "philosophy",
    "discipline",
    "patience",
    "humility",
    "gratefulness",
];

const FIRST_NAMES: &[&str] = &[
    "Alex", "Blair", "Casey", "Dana", "Emery", "Frankie", "Gray", "Harper", "Indy", "Jordan", "Kai", "Logan", "Morgan",
    "Noel", "Oakley", "Parker", "Quinn", "Riley", "Sage", "Taylor",
];

const LAST_NAMES: &[&str] = &[
    "Abbott",
    "Brennan",
    "Castillo",
    "Dalton",
    "Everett",
    "Fischer",
    "Garner",
    "Hollis",
    "Ibarra",
    "Jansen",
    "Keller",
    "Lindqvist",
    "Moreau",
    "Nakamura",
    "Okafor",
    "Petrov",
    "Quintero",
    "Rasmussen",
    "Sato",
    "Thornton",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_symbols: usize,
    /// First and last calendar years with calls; one call per quarter.
    pub first_year: i32,
    pub last_year: i32,
    pub min_pairs: usize,
    pub max_pairs: usize,
    /// Shape of the symmetric Beta law for each call's on-topic share.
    /// Values below 1 push calls towards the on-topic and evasive extremes.
    pub on_topic_shape: f64,
    /// Return per unit of index.
    pub slope: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_symbols: 10,
            first_year: 2013,
            last_year: 2019,
            min_pairs: 6,
            max_pairs: 9,
            on_topic_shape: 0.1,
            slope: -0.02,
            noise_sd: 0.001,
            seed: 0,
        }
    }
}

/// One generated call with its planted quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedCall {
    pub symbol: String,
    pub date: Date,
    pub sector: Sector,
    pub on_topic_share: f64,
    pub index: f64,
    pub relative_change: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub calls: Vec<EarningsCall>,
    pub prices: BTreeMap<String, PriceSeries>,
    pub planted: Vec<PlantedCall>,
}

impl SyntheticCorpus {
    /// Median planted return; as a relative-label threshold it splits the
    /// calls into two equal classes.
    pub fn median_change(&self) -> f64 {
        let mut v: Vec<f64> = self.planted.iter().map(|p| p.relative_change).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n == 0 {
            0.0
        } else if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
}

fn sentence(rng: &mut ChaCha8Rng, words: &[&str], len: usize, end: char) -> String {
    let mut s: Vec<String> = (0..len)
        .map(|_| words.choose(rng).expect("non-empty").to_string())
        .collect();
    if let Some(first) = s.first_mut() {
        let mut c = first.chars();
        *first = c
            .next()
            .map(|h| h.to_uppercase().chain(c).collect())
            .unwrap_or_default();
    }
    format!("{}{end}", s.join(" "))
}

fn person(rng: &mut ChaCha8Rng) -> String {
    format!(
        "{} {}",
        FIRST_NAMES.choose(rng).expect("non-empty"),
        LAST_NAMES.choose(rng).expect("non-empty")
    )
}

/// A weekday (Tuesday to Thursday) in the second month of the quarter.
fn call_date(rng: &mut ChaCha8Rng, year: i32, quarter: u32) -> Date {
    let month = quarter * 3 - 1;
    loop {
        let d = Date::from_ymd_opt(year, month, rng.random_range(3..=26)).expect("valid day");
        if matches!(d.weekday(), Weekday::Tue | Weekday::Wed | Weekday::Thu) {
            return d;
        }
    }
}

fn build_call(
    rng: &mut ChaCha8Rng,
    cfg: &SynthConfig,
    symbol: &str,
    sector: Sector,
    date: Date,
    share: f64,
) -> EarningsCall {
    let first = person(rng);
    let second = loop {
        let p = person(rng);
        if p != first {
            break p;
        }
    };
    let managers = [first, second];
    let mut raw = vec![
        RawTurn {
            speaker: "Operator".into(),
            role: None,
            text: format!("Good day and welcome to the {symbol} earnings conference call."),
        },
        RawTurn {
            speaker: managers[0].clone(),
            role: None,
            text: (0..3)
                .map(|_| sentence(rng, TOPIC_WORDS, 10, '.'))
                .collect::<Vec<_>>()
                .join(" "),
        },
    ];
    let n_pairs = rng.random_range(cfg.min_pairs..=cfg.max_pairs);
    for _ in 0..n_pairs {
        let analyst = loop {
            let p = person(rng);
            if !managers.contains(&p) {
                break p;
            }
        };
        raw.push(RawTurn {
            speaker: "Operator".into(),
            role: None,
            text: format!("Our next question comes from {analyst}."),
        });
        let topic: Vec<&str> = TOPIC_WORDS.choose_multiple(rng, 8).copied().collect();
        let question = (0..2)
            .map(|_| sentence(rng, &topic, 8, '?'))
            .collect::<Vec<_>>()
            .join(" ");
        raw.push(RawTurn {
            speaker: analyst,
            role: None,
            text: question,
        });
        let answer_sentences: Vec<String> = (0..rng.random_range(3..=5))
            .map(|_| {
                let words: Vec<&str> = (0..12)
                    .map(|_| {
                        let pool = if rng.random_bool(share) {
                            &topic[..]
                        } else {
                            OFF_TOPIC_WORDS
                        };
                        *pool.choose(rng).expect("non-empty")
                    })
                    .collect();
                sentence(rng, &words, words.len(), '.')
            })
            .collect();
        // Longer answers are sometimes shared between both executives.
        let split = if answer_sentences.len() > 3 && rng.random_bool(0.5) {
            2
        } else {
            answer_sentences.len()
        };
        raw.push(RawTurn {
            speaker: managers[0].clone(),
            role: None,
            text: answer_sentences[..split].join(" "),
        });
        if split < answer_sentences.len() {
            raw.push(RawTurn {
                speaker: managers[1].clone(),
                role: None,
                text: answer_sentences[split..].join(" "),
            });
        }
    }
    raw.push(RawTurn {
        speaker: "Operator".into(),
        role: None,
        text: "This concludes today's conference call.".into(),
    });
    EarningsCall {
        company_symbol: symbol.to_string(),
        call_date: date,
        sector,
        turns: assign_roles(raw, &managers, &Roster::new()),
        qa_pairs: Vec::new(),
    }
}

fn is_trading_day(d: Date) -> bool {
    !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

fn prev_trading_day(d: Date) -> Date {
    let mut p = d - Days::new(1);
    while !is_trading_day(p) {
        p = p - Days::new(1);
    }
    p
}

fn next_trading_day(d: Date) -> Date {
    let mut n = d + Days::new(1);
    while !is_trading_day(n) {
        n = n + Days::new(1);
    }
    n
}

/// Weekday series whose price on the trading day after each call equals the
/// price on the trading day before it times `1 + change`.
fn price_series(
    rng: &mut ChaCha8Rng,
    symbol: &str,
    first: Date,
    last: Date,
    changes: &BTreeMap<Date, f64>,
) -> PriceSeries {
    let jumps: BTreeMap<Date, (Date, f64)> = changes
        .iter()
        .map(|(&d, &r)| (next_trading_day(d), (prev_trading_day(d), r)))
        .collect();
    let walk = Normal::new(0.0, 0.01).expect("valid sd");
    let mut points: Vec<PricePoint> = Vec::new();
    let mut price = rng.random_range(20.0..200.0);
    let mut day = first;
    while day <= last {
        if is_trading_day(day) {
            if let Some(&(before, r)) = jumps.get(&day) {
                let base = points
                    .iter()
                    .rev()
                    .find(|p| p.date == before)
                    .expect("day before the call is in range")
                    .high;
                price = base * (1.0 + r);
            } else {
                let step: f64 = walk.sample(rng);
                price *= step.exp();
            }
            points.push(PricePoint { date: day, high: price });
        }
        day = day + Days::new(1);
    }
    PriceSeries::new(symbol, points).expect("generated series is valid")
}

/// Generates the corpus, scoring every call with `embedder`.
pub fn generate(cfg: &SynthConfig, embedder: &dyn Embedder) -> Result<SyntheticCorpus, EmbedError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let share_law = Beta::new(cfg.on_topic_shape, cfg.on_topic_shape).expect("positive shape");
    let noise = Normal::new(0.0, cfg.noise_sd).expect("valid sd");

    let mut calls = Vec::new();
    let mut planted = Vec::new();
    let mut prices = BTreeMap::new();
    for k in 0..cfg.n_symbols {
        let symbol = format!("SYN{k:02}");
        let sector = Sector::GICS[k % Sector::GICS.len()];
        let mut changes = BTreeMap::new();
        for year in cfg.first_year..=cfg.last_year {
            for quarter in 1..=4 {
                let date = call_date(&mut rng, year, quarter);
                let share: f64 = share_law.sample(&mut rng);
                let call = build_call(&mut rng, cfg, &symbol, sector, date, share);
                let index = match index_call(call.clone(), embedder, Weighting::PerPair)? {
                    Ok(indexed) => indexed.record.index,
                    Err((reason, detail)) => unreachable!("generated call excluded ({reason:?}): {detail}"),
                };
                let change = cfg.slope * index + noise.sample(&mut rng);
                changes.insert(date, change);
                planted.push(PlantedCall {
                    symbol: symbol.clone(),
                    date,
                    sector,
                    on_topic_share: share,
                    index,
                    relative_change: change,
                });
                calls.push(call);
            }
        }
        let first = Date::from_ymd_opt(cfg.first_year, 1, 1).expect("valid year");
        let last = Date::from_ymd_opt(cfg.last_year, 12, 31).expect("valid year");
        prices.insert(symbol.clone(), price_series(&mut rng, &symbol, first, last, &changes));
    }
    Ok(SyntheticCorpus { calls, prices, planted })
}

/// Writes the corpus under `dir`: transcripts as
/// `transcripts/<SYMBOL>_<DATE>.txt`, prices as `prices/<SYMBOL>.csv` and the
/// planted values as `planted.csv`.
pub fn write_corpus(corpus: &SyntheticCorpus, dir: &Path) -> std::io::Result<()> {
    let transcript_dir = dir.join("transcripts");
    let price_dir = dir.join("prices");
    fs::create_dir_all(&transcript_dir)?;
    fs::create_dir_all(&price_dir)?;
    for call in &corpus.calls {
        let name = format!("{}_{}.txt", call.company_symbol, call.call_date.format("%Y-%m-%d"));
        fs::write(transcript_dir.join(name), to_plain(call))?;
    }
    for (symbol, series) in &corpus.prices {
        let file = fs::File::create(price_dir.join(format!("{symbol}.csv")))?;
        write_prices(series, std::io::BufWriter::new(file)).map_err(std::io::Error::other)?;
    }
    let mut w = csv::Writer::from_path(dir.join("planted.csv")).map_err(std::io::Error::other)?;
    for p in &corpus.planted {
        w.serialize(p).map_err(std::io::Error::other)?;
    }
    w.flush()
}
