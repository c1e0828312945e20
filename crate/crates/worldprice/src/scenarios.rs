//! Seeded panel generators: the minimal reversal example, additive dominance
//! scenarios, the AI data-center OPEX case, the mix-extremity family, the
//! multiplicative-interaction family, and random sparsity masking.
//!
//! All randomness comes from ChaCha8 streams keyed by a user seed; identical
//! (seed, params) always reproduce the same panel bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fe::UnionFind;
use crate::panel::{build_panel, PanelRecord, PricePanel};

/// Derive an independent stream seed from a base seed and a counter
/// (splitmix64 finalizer, so nearby counters give unrelated streams).
pub fn sub_seed(seed: u64, counter: u64) -> u64 {
    let mut z = seed ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn standardized(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd <= 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / sd).collect()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Row-normalize exp(score) into a mix over campuses.
fn softmax_row(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// The exact two-product, two-campus reversal example: prices
/// [[10, 4], [12, 6]], quantities [[90, 10], [10, 90]].
pub fn gen_minimal_simpson() -> PricePanel {
    build_panel(&[
        PanelRecord::new("A", "E", 10.0, 90.0),
        PanelRecord::new("A", "C", 4.0, 10.0),
        PanelRecord::new("B", "E", 12.0, 10.0),
        PanelRecord::new("B", "C", 6.0, 90.0),
    ])
    .expect("static panel is valid")
}

/// Parameters for the additive dominance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceParams {
    /// Additive campus price level, one per campus.
    pub campus_levels: Vec<f64>,
    /// Strictly positive gaps between adjacent products (length I−1);
    /// product 1 is cheapest everywhere.
    pub product_steps: Vec<f64>,
    /// Mix concentration: 0 gives uniform mixes; larger values push cheap
    /// products onto expensive campuses.
    pub mix_skew: f64,
}

/// Small preset: 3 products on 4 campuses with strong mix skew.
pub fn scenario_a() -> DominanceParams {
    DominanceParams {
        campus_levels: vec![4.0, 6.0, 8.0, 10.0],
        product_steps: vec![1.0, 1.0],
        mix_skew: 3.0,
    }
}

/// Larger preset: 5 products on 8 campuses.
pub fn scenario_b() -> DominanceParams {
    DominanceParams {
        campus_levels: vec![3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0, 17.0],
        product_steps: vec![0.8; 4],
        mix_skew: 3.0,
    }
}

/// Additive panel p_ij = level_j + offset_i with a common product ordering at
/// every campus and mix concentration controlled by `mix_skew`.
pub fn gen_dominance_scenario(
    n_products: usize,
    n_campuses: usize,
    seed: u64,
    params: &DominanceParams,
) -> Result<PricePanel> {
    if n_products < 2 || n_campuses < 2 {
        return Err(Error::BadParams(
            "dominance scenario needs at least 2 products and 2 campuses".into(),
        ));
    }
    if params.campus_levels.len() != n_campuses {
        return Err(Error::BadParams(format!(
            "expected {} campus levels, got {}",
            n_campuses,
            params.campus_levels.len()
        )));
    }
    if params.product_steps.len() != n_products - 1 {
        return Err(Error::BadParams(format!(
            "expected {} product steps, got {}",
            n_products - 1,
            params.product_steps.len()
        )));
    }
    if params.product_steps.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::BadParams("product steps must be > 0".into()));
    }
    if params.campus_levels.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::BadParams("campus levels must be >= 0".into()));
    }
    if !(params.mix_skew >= 0.0) {
        return Err(Error::BadParams("mix_skew must be >= 0".into()));
    }

    let mut offsets = vec![0.0f64; n_products];
    for i in 1..n_products {
        offsets[i] = offsets[i - 1] + params.product_steps[i - 1];
    }
    let z = standardized(&params.campus_levels);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n_products * n_campuses);
    for i in 0..n_products {
        // +1 for the cheapest product (pushed onto expensive campuses), −1
        // for the priciest.
        let tilt = 1.0 - 2.0 * i as f64 / (n_products - 1) as f64;
        // Jitter fades out with the skew so that skew 0 is exactly uniform.
        let jitter = 0.2 * params.mix_skew.min(1.0);
        let scores: Vec<f64> = z
            .iter()
            .map(|zj| params.mix_skew * tilt * zj + rng.random_range(-1.0..1.0) * jitter)
            .collect();
        let mix = softmax_row(&scores);
        let total = 100.0 * rng.random_range(0.9..1.1);
        for j in 0..n_campuses {
            records.push(PanelRecord::new(
                format!("P{}", i + 1),
                format!("C{}", j + 1),
                params.campus_levels[j] + offsets[i],
                total * mix[j],
            ));
        }
    }
    build_panel(&records)
}

/// Ten-hub, six-SKU data-center OPEX panel in $/compute-hour.
///
/// Campus base cost = 3 kWh × retail electricity (9–18 ¢/kWh) × PUE
/// (1.2–1.6) × 2.0 overhead markup, resampled into [0.65, 1.55]. SKU
/// multipliers form a strictly descending ladder 0.95 … 0.80, so SKU1 is the
/// priciest at every hub. Cheap (inference-like) SKUs are deployed mostly on
/// expensive hubs and pricey (training-like) SKUs on cheap hubs, the mix
/// pattern that makes quantity-weighted blending scramble the ranking.
pub fn gen_aidc_opex(seed: u64) -> PricePanel {
    const N_HUBS: usize = 10;
    const N_SKUS: usize = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut base = Vec::with_capacity(N_HUBS);
    while base.len() < N_HUBS {
        let retail = rng.random_range(0.09..0.18);
        let pue = rng.random_range(1.2..1.6);
        let b = 3.0 * retail * pue * 2.0;
        if (0.65..=1.55).contains(&b) {
            base.push(b);
        }
    }
    let multipliers = linspace(0.95, 0.80, N_SKUS);
    let z = standardized(&base);
    let mut records = Vec::with_capacity(N_SKUS * N_HUBS);
    for p in 0..N_SKUS {
        // −4 (SKU1, cheap hubs) … +4 (SKU6, expensive hubs).
        let kappa = -4.0 + 8.0 * p as f64 / (N_SKUS - 1) as f64;
        let scores: Vec<f64> = z
            .iter()
            .map(|zj| kappa * zj + rng.random_range(-0.3..0.3))
            .collect();
        let mix = softmax_row(&scores);
        let total = 5.0e5 * rng.random_range(0.9..1.1);
        for j in 0..N_HUBS {
            records.push(PanelRecord::new(
                format!("SKU{}", p + 1),
                format!("HUB{:02}", j + 1),
                multipliers[p] * base[j],
                total * mix[j],
            ));
        }
    }
    build_panel(&records).expect("generated panel is valid")
}

/// Parameters for the mix-extremity family (always 2 products × 4 campuses).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixExtremityParams {
    /// Campus prices of product A, ascending; campus 4 is the most expensive.
    pub campus_prices_a: Vec<f64>,
    /// Campus prices of product B; must exceed A's at every campus.
    pub campus_prices_b: Vec<f64>,
    pub q_a: f64,
    pub q_b: f64,
}

impl Default for MixExtremityParams {
    fn default() -> Self {
        MixExtremityParams {
            campus_prices_a: vec![4.0, 6.0, 8.0, 10.0],
            campus_prices_b: vec![5.0, 7.0, 9.0, 11.0],
            q_a: 100.0,
            q_b: 100.0,
        }
    }
}

/// Two dominance-ordered products whose deployments swap ends of the campus
/// price range as `eta` runs 0 → 1: A's mix is [1−η, 0, 0, η], B's is the
/// mirror image.
pub fn gen_mix_extremity(eta: f64, params: &MixExtremityParams) -> Result<PricePanel> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::BadParams("eta must lie in [0, 1]".into()));
    }
    let (pa, pb) = (&params.campus_prices_a, &params.campus_prices_b);
    if pa.len() != 4 || pb.len() != 4 {
        return Err(Error::BadParams("exactly 4 campus prices per product".into()));
    }
    if pa.windows(2).any(|w| !(w[0] < w[1])) || pb.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::BadParams(
            "campus prices must be strictly ascending".into(),
        ));
    }
    if pa.iter().zip(pb).any(|(a, b)| !(a < b)) {
        return Err(Error::BadParams(
            "product A must be strictly cheaper at every campus".into(),
        ));
    }
    if !(params.q_a > 0.0) || !(params.q_b > 0.0) {
        return Err(Error::BadParams("totals must be > 0".into()));
    }
    let w_a = [1.0 - eta, 0.0, 0.0, eta];
    let w_b = [eta, 0.0, 0.0, 1.0 - eta];
    let mut records = Vec::with_capacity(8);
    for j in 0..4 {
        let campus = format!("C{}", j + 1);
        records.push(PanelRecord::new("A", &campus, pa[j], params.q_a * w_a[j]));
        records.push(PanelRecord::new("B", &campus, pb[j], params.q_b * w_b[j]));
    }
    build_panel(&records)
}

/// Parameters for the multiplicative interaction family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionParams {
    pub n_products: usize,
    pub n_campuses: usize,
    /// Product log-level range; levels are evenly spaced and descending, so
    /// product 1 is the priciest.
    pub alpha_range: (f64, f64),
    /// Campus log-level range; levels drawn uniformly.
    pub beta_range: (f64, f64),
    /// Fixed mix mismatch: pricier products tilt toward pricier campuses.
    pub mix_skew: f64,
}

impl Default for InteractionParams {
    fn default() -> Self {
        InteractionParams {
            n_products: 3,
            n_campuses: 6,
            alpha_range: (0.0, 1.2),
            beta_range: (0.0, 1.0),
            mix_skew: 2.0,
        }
    }
}

/// Complete panel with log p_ij = a_i + b_j + γ·u_i·v_j, where u, v are
/// standardized symmetric grids on [−1, 1]; γ = 0 is exactly log-additive.
///
/// Mixes and totals depend only on (seed, params), never on γ.
pub fn gen_interaction(gamma: f64, seed: u64, params: &InteractionParams) -> Result<PricePanel> {
    if !(gamma >= 0.0) {
        return Err(Error::BadParams("gamma must be >= 0".into()));
    }
    let (ni, nj) = (params.n_products, params.n_campuses);
    if ni < 2 || nj < 2 {
        return Err(Error::BadParams(
            "interaction scenario needs at least 2 products and 2 campuses".into(),
        ));
    }
    if !(params.alpha_range.0 <= params.alpha_range.1)
        || !(params.beta_range.0 <= params.beta_range.1)
    {
        return Err(Error::BadParams("ranges must be ordered lo <= hi".into()));
    }
    if !(params.mix_skew >= 0.0) {
        return Err(Error::BadParams("mix_skew must be >= 0".into()));
    }
    let a = {
        let mut v = linspace(params.alpha_range.0, params.alpha_range.1, ni);
        v.reverse();
        v
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<f64> = (0..nj)
        .map(|_| rng.random_range(params.beta_range.0..=params.beta_range.1))
        .collect();
    let u = standardized(&linspace(-1.0, 1.0, ni));
    let v = standardized(&linspace(-1.0, 1.0, nj));
    let zb = standardized(&b);
    let mut records = Vec::with_capacity(ni * nj);
    for i in 0..ni {
        let tilt = 1.0 - 2.0 * i as f64 / (ni - 1) as f64;
        let scores: Vec<f64> = zb
            .iter()
            .map(|z| params.mix_skew * tilt * z + rng.random_range(-0.2..0.2))
            .collect();
        let mix = softmax_row(&scores);
        let total = 100.0 * rng.random_range(0.9..1.1);
        for j in 0..nj {
            records.push(PanelRecord::new(
                format!("P{}", i + 1),
                format!("C{}", j + 1),
                (a[i] + b[j] + gamma * u[i] * v[j]).exp(),
                total * mix[j],
            ));
        }
    }
    build_panel(&records)
}

/// What to do with the quantity sitting on a masked cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaskPolicy {
    /// Spread it over the product's observed campuses in proportion to the
    /// original mix, preserving Q_i exactly (default).
    Redistribute,
    /// Drop it; Q_i shrinks with the mask.
    ZeroQuantity,
}

/// A masked panel plus the bookkeeping the mask destroyed.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedPanel {
    pub panel: PricePanel,
    /// (product, campus) cells whose prices were hidden.
    pub masked_cells: Vec<(usize, usize)>,
    /// System cost of the pre-mask panel — the accounting target; the masked
    /// panel's own observed-cell cost differs.
    pub accounting_cost: f64,
}

/// Hide each price cell independently with probability `rho_mask`.
///
/// Draws are resampled (fresh sub-stream per attempt) until the mask is
/// identifiable: every product observed at least twice, every campus at least
/// once, and the observation pattern connected.
pub fn apply_sparsity_mask(panel: &PricePanel, rho_mask: f64, seed: u64) -> Result<MaskedPanel> {
    apply_sparsity_mask_with(panel, rho_mask, seed, MaskPolicy::Redistribute)
}

pub fn apply_sparsity_mask_with(
    panel: &PricePanel,
    rho_mask: f64,
    seed: u64,
    policy: MaskPolicy,
) -> Result<MaskedPanel> {
    const MAX_ATTEMPTS: u64 = 1000;
    if !(0.0..=0.75).contains(&rho_mask) {
        return Err(Error::BadParams("rho_mask must lie in [0, 0.75]".into()));
    }
    if !panel.is_complete() {
        return Err(Error::IncompletePanel {
            missing: panel.missing_cells().len(),
        });
    }
    let (ni, nj) = (panel.n_products(), panel.n_campuses());
    let accounting_cost = panel.system_cost();
    let totals = panel.product_totals();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, attempt));
        let mask: Vec<bool> = (0..ni * nj)
            .map(|_| rng.random::<f64>() < rho_mask)
            .collect();
        if !mask_is_identifiable(panel, &mask, policy) {
            continue;
        }
        // Edit cells in place so product/campus ordering (and therefore cell
        // indices) survive the mask.
        let mut out = panel.clone();
        let mut masked_cells = Vec::new();
        for i in 0..ni {
            let observed_q: f64 = (0..nj)
                .filter(|j| !mask[i * nj + j])
                .map(|j| panel.quantity(i, j))
                .sum();
            // Scale observed quantities so the product total survives the
            // mask; mix proportions over observed campuses are unchanged.
            let scale = match policy {
                MaskPolicy::Redistribute if observed_q > 0.0 => totals[i] / observed_q,
                _ => 1.0,
            };
            for j in 0..nj {
                if mask[i * nj + j] {
                    masked_cells.push((i, j));
                    out = out.without_cell(i, j);
                } else if scale != 1.0 {
                    out = out.with_quantity(i, j, panel.quantity(i, j) * scale);
                }
            }
        }
        return Ok(MaskedPanel {
            panel: out,
            masked_cells,
            accounting_cost,
        });
    }
    Err(Error::IdentifiabilityUnreachable {
        attempts: MAX_ATTEMPTS as usize,
    })
}

fn mask_is_identifiable(panel: &PricePanel, mask: &[bool], policy: MaskPolicy) -> bool {
    let (ni, nj) = (panel.n_products(), panel.n_campuses());
    for i in 0..ni {
        let observed: Vec<usize> = (0..nj).filter(|j| !mask[i * nj + j]).collect();
        if observed.len() < 2.min(nj) {
            return false;
        }
        let q: f64 = observed.iter().map(|&j| panel.quantity(i, j)).sum();
        if q <= 0.0 {
            // Redistribution has nothing to scale; zeroing kills Q_i.
            let _ = policy;
            return false;
        }
    }
    for j in 0..nj {
        if (0..ni).all(|i| mask[i * nj + j]) {
            return false;
        }
    }
    let mut uf = UnionFind::new(ni + nj);
    for i in 0..ni {
        for j in 0..nj {
            if !mask[i * nj + j] {
                uf.union(i, ni + j);
            }
        }
    }
    let root = uf.find(0);
    (0..ni + nj).all(|x| uf.find(x) == root)
}

/// One fully parameterized, seeded experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Scenario {
    MinimalSimpson,
    DominanceScenario {
        n_products: usize,
        n_campuses: usize,
        params: DominanceParams,
    },
    AiDcOpex,
    MixExtremity {
        eta: f64,
        params: MixExtremityParams,
    },
    InteractionStress {
        gamma: f64,
        params: InteractionParams,
    },
    SparsityStress {
        rho_mask: f64,
        gamma: f64,
        params: InteractionParams,
    },
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::MinimalSimpson => "minimal-simpson",
            Scenario::DominanceScenario { .. } => "dominance",
            Scenario::AiDcOpex => "aidc-opex",
            Scenario::MixExtremity { .. } => "mix-extremity",
            Scenario::InteractionStress { .. } => "interaction",
            Scenario::SparsityStress { .. } => "sparsity",
        }
    }
}

/// A scenario plus the seed that pins its draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    #[serde(flatten)]
    pub scenario: Scenario,
}

impl ScenarioConfig {
    /// Generate the panel this config describes. Sparsity configs return the
    /// masked panel (the pre-mask cost bookkeeping is dropped here; use
    /// [`apply_sparsity_mask`] directly when it matters).
    pub fn generate(&self) -> Result<PricePanel> {
        match &self.scenario {
            Scenario::MinimalSimpson => Ok(gen_minimal_simpson()),
            Scenario::DominanceScenario {
                n_products,
                n_campuses,
                params,
            } => gen_dominance_scenario(*n_products, *n_campuses, self.seed, params),
            Scenario::AiDcOpex => Ok(gen_aidc_opex(self.seed)),
            Scenario::MixExtremity { eta, params } => gen_mix_extremity(*eta, params),
            Scenario::InteractionStress { gamma, params } => {
                gen_interaction(*gamma, self.seed, params)
            }
            Scenario::SparsityStress {
                rho_mask,
                gamma,
                params,
            } => {
                let full = gen_interaction(*gamma, sub_seed(self.seed, 0), params)?;
                Ok(apply_sparsity_mask(&full, *rho_mask, sub_seed(self.seed, 1))?.panel)
            }
        }
    }
}
