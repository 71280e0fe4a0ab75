//! Seeded agent-based labor market with planted threshold contagion.
//!
//! Each month every employed agent leaves with probability
//! `base_hazard * firm_factor * (1 + boost * [peer departure fraction > threshold])`,
//! where the peers are the agent's co-workers at the start of the trailing
//! window and the fraction counts how many of them have since ended that spell.
//! Leavers re-enter a uniformly chosen other firm after a geometric delay.
//! All dates fall on the first day of a month.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::registry::{EmploymentRecord, Gender, MonthIndex, RecordSet, Role, TemporalGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketConfig {
    pub n_agents: usize,
    pub n_firms: usize,
    pub months: usize,
    /// Calendar month of simulation step 0.
    pub start_month: MonthIndex,
    pub base_hazard: f64,
    /// Log-normal sigma of the per-firm hazard multiplier (mean-one).
    pub firm_stability_spread: f64,
    pub contagion_threshold: f64,
    pub contagion_boost: f64,
    pub window_months: usize,
    /// Mean of the geometric re-entry delay in months (support 0, 1, 2, ...).
    pub rehire_delay_mean: f64,
    /// Log-normal sigma of the initial firm-size weights.
    pub firm_size_skew: f64,
    pub seed: u64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig {
            n_agents: 20_000,
            n_firms: 2_000,
            months: 120,
            start_month: MonthIndex::from_ym(2010, 1),
            base_hazard: 0.023,
            firm_stability_spread: 0.0,
            contagion_threshold: 0.30,
            contagion_boost: 0.23,
            window_months: 6,
            rehire_delay_mean: 2.0,
            firm_size_skew: 0.5,
            seed: 20_240_301,
        }
    }
}

impl MarketConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::arg(format!("market config: {m}")));
        if self.n_agents == 0 || self.n_firms < 2 || self.months == 0 || self.window_months == 0 {
            return fail("n_agents, months and window_months must be positive and n_firms >= 2");
        }
        if !(self.base_hazard > 0.0 && self.base_hazard < 1.0) {
            return fail("base_hazard must lie in (0, 1)");
        }
        if !(self.contagion_boost >= 0.0) || self.base_hazard * (1.0 + self.contagion_boost) >= 1.0 {
            return fail("contagion_boost must be >= 0 with base_hazard * (1 + boost) < 1");
        }
        if !(0.0..1.0).contains(&self.contagion_threshold) {
            return fail("contagion_threshold must lie in [0, 1)");
        }
        if !(self.firm_stability_spread >= 0.0) || !(self.firm_size_skew >= 0.0) || !(self.rehire_delay_mean >= 0.0) {
            return fail("spreads and delays must be non-negative");
        }
        Ok(())
    }

    pub fn first_month(&self) -> MonthIndex {
        self.start_month
    }

    pub fn last_month(&self) -> MonthIndex {
        self.start_month.offset(self.months as i32 - 1)
    }
}

/// Planted parameters stored beside generated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub generator: String,
    pub config: MarketConfig,
    pub contagion_threshold: f64,
    pub contagion_boost: f64,
    pub base_hazard: f64,
    pub seed: u64,
    pub min_firm_factor: f64,
    pub max_firm_factor: f64,
    pub firm_factors: Vec<f64>,
}

impl GroundTruth {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().expect("manifest serializes").as_bytes()))
    }
}

const GENERATOR: &str = "churnet-synth/1";

fn firm_factors(cfg: &MarketConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let s = cfg.firm_stability_spread;
    (0..cfg.n_firms)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            (s * z - 0.5 * s * s).exp()
        })
        .collect()
}

pub fn describe_ground_truth(cfg: &MarketConfig) -> Result<GroundTruth> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let factors = firm_factors(cfg, &mut rng);
    Ok(GroundTruth {
        generator: GENERATOR.into(),
        config: cfg.clone(),
        contagion_threshold: cfg.contagion_threshold,
        contagion_boost: cfg.contagion_boost,
        base_hazard: cfg.base_hazard,
        seed: cfg.seed,
        min_firm_factor: factors.iter().copied().fold(f64::INFINITY, f64::min),
        max_firm_factor: factors.iter().copied().fold(0.0, f64::max),
        firm_factors: factors,
    })
}

struct SimSpell {
    agent: usize,
    firm: usize,
    start: i32,
    end: Option<i32>,
    role: Role,
}

struct Agent {
    spell: Option<usize>,
    rehire_at: Option<(i32, usize)>,
    gender: Option<Gender>,
    region: Option<&'static str>,
}

const REGIONS: [(&str, f64); 6] = [("HK", 0.5), ("CN", 0.25), ("GB", 0.07), ("US", 0.06), ("SG", 0.06), ("IN", 0.06)];

fn draw_role(rng: &mut ChaCha8Rng) -> Role {
    if rng.random::<f64>() < 0.12 {
        Role::ResponsibleOfficer
    } else {
        Role::Representative
    }
}

fn other_firm(rng: &mut ChaCha8Rng, n_firms: usize, current: usize) -> usize {
    let f = rng.random_range(0..n_firms - 1);
    if f >= current {
        f + 1
    } else {
        f
    }
}

pub fn generate_market(cfg: &MarketConfig) -> Result<RecordSet> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let factors = firm_factors(cfg, &mut rng);
    let size_weights: Vec<f64> = if cfg.firm_size_skew > 0.0 {
        let ln = LogNormal::new(0.0, cfg.firm_size_skew).map_err(|e| Error::arg(e.to_string()))?;
        (0..cfg.n_firms).map(|_| ln.sample(&mut rng)).collect()
    } else {
        vec![1.0; cfg.n_firms]
    };
    let pick_firm = WeightedIndex::new(&size_weights).map_err(|e| Error::arg(e.to_string()))?;
    let tenure_draw = Geometric::new(cfg.base_hazard).map_err(|e| Error::arg(e.to_string()))?;
    let delay_draw =
        Geometric::new(1.0 / (1.0 + cfg.rehire_delay_mean)).map_err(|e| Error::arg(e.to_string()))?;
    let region_draw = WeightedIndex::new(REGIONS.iter().map(|r| r.1)).expect("static weights");

    let mut spells: Vec<SimSpell> = Vec::new();
    let mut agents: Vec<Agent> = Vec::with_capacity(cfg.n_agents);
    for a in 0..cfg.n_agents {
        let g = rng.random::<f64>();
        let gender = if g < 0.42 {
            Some(Gender::F)
        } else if g < 0.95 {
            Some(Gender::M)
        } else {
            None
        };
        let region = (rng.random::<f64>() >= 0.05).then(|| REGIONS[region_draw.sample(&mut rng)].0);
        let firm = pick_firm.sample(&mut rng);
        let back = tenure_draw.sample(&mut rng).min(240) as i32;
        spells.push(SimSpell { agent: a, firm, start: -back, end: None, role: draw_role(&mut rng) });
        agents.push(Agent { spell: Some(spells.len() - 1), rehire_at: None, gender, region });
    }

    let window = cfg.window_months as i32;
    // roster[t]: spells active at the snapshot of step t
    let mut roster: Vec<Vec<usize>> = Vec::with_capacity(cfg.months);
    let mut firm_n = vec![0u32; cfg.n_firms];
    let mut firm_d = vec![0u32; cfg.n_firms];
    let mut spell_at_window: Vec<Option<usize>> = vec![None; cfg.n_agents];

    for t in 0..cfg.months as i32 {
        for a in 0..cfg.n_agents {
            if let Some((when, firm)) = agents[a].rehire_at {
                if when == t {
                    spells.push(SimSpell { agent: a, firm, start: t, end: None, role: draw_role(&mut rng) });
                    agents[a].spell = Some(spells.len() - 1);
                    agents[a].rehire_at = None;
                }
            }
        }
        roster.push(agents.iter().filter_map(|a| a.spell).collect());

        // peer departures over (snapshot(t - window), snapshot(t)]
        firm_n.iter_mut().for_each(|v| *v = 0);
        firm_d.iter_mut().for_each(|v| *v = 0);
        spell_at_window.iter_mut().for_each(|v| *v = None);
        let w = t - window;
        if w >= 0 {
            for &s in &roster[w as usize] {
                let sp = &spells[s];
                firm_n[sp.firm] += 1;
                if sp.end.is_some_and(|e| e <= t) {
                    firm_d[sp.firm] += 1;
                }
                spell_at_window[sp.agent] = Some(s);
            }
        }

        for a in 0..cfg.n_agents {
            let Some(s) = agents[a].spell else { continue };
            let firm = spells[s].firm;
            let mut hazard = cfg.base_hazard * factors[firm];
            if let Some(ws) = spell_at_window[a] {
                let wf = spells[ws].firm;
                let peers = firm_n[wf] - 1;
                let own = u32::from(spells[ws].end.is_some_and(|e| e <= t));
                if peers > 0 {
                    let frac = (firm_d[wf] - own) as f64 / peers as f64;
                    if frac > cfg.contagion_threshold {
                        hazard *= 1.0 + cfg.contagion_boost;
                    }
                }
            }
            if rng.random::<f64>() < hazard.min(1.0) {
                spells[s].end = Some(t + 1);
                agents[a].spell = None;
                let delay = delay_draw.sample(&mut rng) as i32;
                let next = other_firm(&mut rng, cfg.n_firms, firm);
                agents[a].rehire_at = Some((t + 1 + delay, next));
            }
        }
    }

    let base = cfg.start_month;
    let records = spells
        .iter()
        .map(|sp| {
            let ag = &agents[sp.agent];
            EmploymentRecord {
                person_id: format!("P{:06}", sp.agent),
                firm_id: format!("F{:04}", sp.firm),
                role: sp.role,
                start_date: base.offset(sp.start).first_day(),
                end_date: sp.end.map(|e| base.offset(e).first_day()),
                gender: ag.gender,
                region: ag.region.map(str::to_string),
            }
        })
        .collect();
    RecordSet::new(records, format!("{GENERATOR} seed={}", cfg.seed))
}

/// Grid covering the simulated months.
pub fn market_grid(cfg: &MarketConfig, rs: &RecordSet) -> Result<TemporalGrid> {
    crate::registry::build_temporal_grid(rs, cfg.first_month(), cfg.last_month())
}
