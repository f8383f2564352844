//! Seeded synthetic award-abstract generator for tests and benchmarks.
//!
//! Documents average about 1,829 characters. Sites mix bundled zips and
//! place names with literal coordinates so larger site counts need no
//! geocoding tables.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pipeline::{Record, TimeField};

pub const MEAN_CHARS: usize = 1829;

const FUNCTION_WORDS: &[&str] = &[
    "the", "of", "and", "to", "a", "in", "is", "that", "for", "as", "with", "be", "by", "on", "this", "are", "or",
    "from", "at", "which", "an", "will", "their", "has", "more", "can", "these", "such", "new", "also", "its", "into",
];

const DOMAIN_WORDS: &[&str] = &[
    "research", "project", "students", "science", "data", "analysis", "education", "community", "model", "design",
    "methods", "theory", "experimental", "molecular", "cellular", "protein", "genetic", "species", "ecosystem",
    "water", "carbon", "polar", "arctic", "ice", "sediment", "marine", "atmospheric", "solar", "plasma", "quantum",
    "particle", "optical", "laser", "sensor", "wireless", "algorithm", "visualization", "k-12", "teachers",
    "outreach", "mentoring", "laboratory", "instrumentation", "imaging", "spectroscopy", "synthesis", "catalysis",
    "polymer", "semiconductor", "magnetic", "fluid", "turbulence", "seismic", "earthquake", "mantle", "volcanic",
    "hydrology", "soil", "forest", "evolution", "genomics", "neuroscience", "cognitive", "economic", "policy",
    "statistics", "graph", "cryptography", "privacy", "robotics", "manufacturing", "nanoscale", "nanoparticle",
    "magnetosphere", "ionosphere", "reu", "oceanographic", "cruise", "telescope", "galaxy", "cosmology",
    "gravitational", "superconductivity", "membrane", "microbial", "bacteria", "virus", "immune", "undergraduate",
    "graduate", "faculty", "engineering", "physics", "chemistry", "biology", "mathematics", "ocean", "climate",
    "energy", "materials", "learning", "network", "computational",
];

const BUNDLED_GEO: &[&str] = &[
    "02139", "02543", "10027", "20052", "27708", "30332", "47907", "48109", "53706", "60637", "61801", "77005",
    "77204", "78712", "80309", "92093", "94305", "94720", "98195", "Seattle, WA", "Houston, TX", "Durham, NC",
    "Chicago, IL", "New York, NY", "Washington, DC", "San Francisco, CA", "San Diego, CA", "Denver, CO",
    "Woods Hole, MA", "Portland, OR", "Toronto, ON, CA",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub docs: usize,
    pub seed: u64,
    /// Distinct locations drawn from; popularity is skewed.
    pub sites: usize,
    pub mean_chars: usize,
    pub first_year: i32,
    pub last_year: i32,
    /// Fraction of records carrying a multi-year range rather than an instant.
    pub range_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            docs: 1000,
            seed: 7,
            sites: 400,
            mean_chars: MEAN_CHARS,
            first_year: 2005,
            last_year: 2012,
            range_fraction: 0.7,
        }
    }
}

fn site_pool(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let mut pool: Vec<String> = BUNDLED_GEO.iter().take(n).map(|s| s.to_string()).collect();
    while pool.len() < n {
        let lat = rng.random_range(250_000..490_000) as f64 / 10_000.0;
        let lon = rng.random_range(-1_240_000..-670_000) as f64 / 10_000.0;
        pool.push(format!("{lat:.4},{lon:.4}"));
    }
    pool
}

fn sentence(rng: &mut ChaCha8Rng, topic: &[&'static str]) -> String {
    let len = rng.random_range(8..22);
    let mut words: Vec<&str> = Vec::with_capacity(len);
    for _ in 0..len {
        let r: f64 = rng.random();
        let w = if r < 0.45 {
            *FUNCTION_WORDS.choose(rng).expect("nonempty")
        } else if r < 0.85 {
            // squaring skews toward the first topic words
            let u: f64 = rng.random();
            topic[((u * u) * topic.len() as f64) as usize]
        } else {
            *DOMAIN_WORDS.choose(rng).expect("nonempty")
        };
        words.push(w);
    }
    let mut s = words.join(" ");
    if let Some(first) = s.get(0..1) {
        let upper = first.to_uppercase();
        s.replace_range(0..1, &upper);
    }
    s.push('.');
    s
}

fn epoch(year: i32, day: u32) -> i64 {
    let jan1 = chrono::NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
    (jan1 + chrono::Days::new(u64::from(day)))
        .and_hms_opt(0, 0, 0)
        .expect("midnight")
        .and_utc()
        .timestamp()
}

/// Generates `cfg.docs` records. Output depends only on `cfg`.
pub fn generate_with(cfg: &SynthConfig) -> Vec<Record> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pool = site_pool(&mut rng, cfg.sites.max(1));
    let spread = cfg.mean_chars / 3;
    (0..cfg.docs)
        .map(|_| {
            let topic: Vec<&'static str> = DOMAIN_WORDS.choose_multiple(&mut rng, 6).copied().collect();
            let target = rng.random_range(cfg.mean_chars - spread..=cfg.mean_chars + spread);
            let mut text = String::with_capacity(target + 160);
            while text.len() < target {
                if !text.is_empty() {
                    text.push(' ');
                }
                text.push_str(&sentence(&mut rng, &topic));
            }
            let u: f64 = rng.random();
            let geo = pool[((u * u) * pool.len() as f64) as usize].clone();
            let year = rng.random_range(cfg.first_year..=cfg.last_year);
            let t0 = epoch(year, rng.random_range(0..365));
            let t1 = rng
                .random_bool(cfg.range_fraction)
                .then(|| TimeField::Epoch(t0 + rng.random_range(30..3 * 365) * 86_400));
            let value = f64::from(rng.random_range(20u32..1000) * 1000);
            Record {
                text,
                geo,
                t0: TimeField::Epoch(t0),
                t1,
                value: Some(value),
            }
        })
        .collect()
}

pub fn generate(docs: usize, seed: u64) -> Vec<Record> {
    generate_with(&SynthConfig {
        docs,
        seed,
        ..SynthConfig::default()
    })
}
