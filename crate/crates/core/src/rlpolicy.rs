//! Learning the index sequence of an MMF with a policy gradient.
//!
//! A state is the current transformed matrix together with its active set.
//! An action picks a pivot and `k − 1` companions (the rotation support);
//! the pivot, plus the first `c − 1` companions when `c > 1`, is retired as
//! a wavelet. Two message-passing networks score the active nodes: one
//! yields the pivot distribution, the other an embedding whose inner
//! products with the pivot rank the companions. Both are trained with
//! REINFORCE; rotation cores come from the closed-form eigenvector rule
//! during training and from manifold optimization for the final result.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgen::{fmt_real, write_file};
use crate::matcore::{conjugate_in_place, IndexSet, SymMatrix};
use crate::mmf::{
    level_error, objective, optimize_rotations, phase_one_core, reconstruct, Factorization,
    LevelPlan, MmfConfig,
};
use crate::seeding;

pub const DEFAULT_DEPTH: usize = 4;
pub const DEFAULT_HIDDEN: usize = 10;

/// Weights `W_0 (1 × D), W_1, …, W_{T−1} (D × D)` of a message-passing
/// network over the active block.
#[derive(Debug, Clone, PartialEq)]
pub struct MessagePassingNet {
    weights: Vec<DMatrix<f64>>,
}

impl MessagePassingNet {
    /// Uniform `±sqrt(6 / (fan_in + fan_out))` initialization.
    pub fn glorot(depth: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let weights = (0..depth)
            .map(|t| {
                let fan_in = if t == 0 { 1 } else { hidden };
                let scale = (6.0 / (fan_in + hidden) as f64).sqrt();
                DMatrix::from_fn(fan_in, hidden, |_, _| rng.random_range(-scale..scale))
            })
            .collect();
        MessagePassingNet { weights }
    }

    pub fn zeros(depth: usize, hidden: usize) -> Self {
        let weights = (0..depth)
            .map(|t| DMatrix::zeros(if t == 0 { 1 } else { hidden }, hidden))
            .collect();
        MessagePassingNet { weights }
    }

    pub fn from_weights(weights: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = weights.first() else {
            return Err(Error::InvalidArgument(
                "network needs at least one layer".into(),
            ));
        };
        let hidden = first.ncols();
        if first.nrows() != 1 || hidden == 0 {
            return Err(Error::DimensionMismatch(format!(
                "first layer must be 1 x D, got {:?}",
                first.shape()
            )));
        }
        if let Some(bad) = weights[1..].iter().find(|w| w.shape() != (hidden, hidden)) {
            return Err(Error::DimensionMismatch(format!(
                "hidden layers must be {hidden} x {hidden}, got {:?}",
                bad.shape()
            )));
        }
        if weights.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument(
                "network weights must be finite".into(),
            ));
        }
        Ok(MessagePassingNet { weights })
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn hidden(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    fn zeros_like(&self) -> Self {
        MessagePassingNet::zeros(self.depth(), self.hidden())
    }

    fn axpy(&mut self, alpha: f64, other: &MessagePassingNet) {
        for (w, o) in self.weights.iter_mut().zip(&other.weights) {
            *w += o * alpha;
        }
    }
}

/// Pivot and companion networks.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub pivot: MessagePassingNet,
    pub companion: MessagePassingNet,
}

impl PolicyParams {
    pub fn glorot(depth: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        PolicyParams {
            pivot: MessagePassingNet::glorot(depth, hidden, rng),
            companion: MessagePassingNet::glorot(depth, hidden, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        PolicyParams {
            pivot: self.pivot.zeros_like(),
            companion: self.companion.zeros_like(),
        }
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &PolicyParams) {
        self.pivot.axpy(alpha, &other.pivot);
        self.companion.axpy(alpha, &other.companion);
    }

    /// All weights, pivot network first, each matrix row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.pivot.weights.iter().chain(&self.companion.weights) {
            for i in 0..w.nrows() {
                for j in 0..w.ncols() {
                    out.push(w[(i, j)]);
                }
            }
        }
        out
    }

    /// Inverse of [`PolicyParams::to_flat`] using `self` as the shape template.
    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        let mut it = flat.iter();
        for w in out
            .pivot
            .weights
            .iter_mut()
            .chain(out.companion.weights.iter_mut())
        {
            for i in 0..w.nrows() {
                for j in 0..w.ncols() {
                    w[(i, j)] = *it
                        .next()
                        .ok_or_else(|| Error::DimensionMismatch("too few parameters".into()))?;
                }
            }
        }
        if it.next().is_some() {
            return Err(Error::DimensionMismatch("too many parameters".into()));
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

/// Intermediate values of one forward pass, kept for backpropagation.
struct Forward {
    adj: DMatrix<f64>,
    /// `A M_{t−1}` per layer.
    propagated: Vec<DMatrix<f64>>,
    /// `A M_{t−1} W_{t−1}` per layer.
    pre: Vec<DMatrix<f64>>,
    embedding: DMatrix<f64>,
}

fn forward(net: &MessagePassingNet, adj: DMatrix<f64>) -> Forward {
    let s = adj.nrows();
    let d = net.hidden();
    let mut msg = DMatrix::from_element(s, 1, 1.0);
    let mut propagated = Vec::with_capacity(net.depth());
    let mut pre = Vec::with_capacity(net.depth());
    let mut embedding = DMatrix::zeros(s, d * net.depth());
    for (t, w) in net.weights.iter().enumerate() {
        let h = &adj * &msg;
        let z = &h * w;
        msg = z.map(|v| v.max(0.0));
        embedding.columns_mut(t * d, d).copy_from(&msg);
        propagated.push(h);
        pre.push(z);
    }
    Forward {
        adj,
        propagated,
        pre,
        embedding,
    }
}

/// Gradient of a scalar with respect to the weights, given its gradient
/// with respect to the concatenated embedding.
fn backward(
    net: &MessagePassingNet,
    fw: &Forward,
    d_embedding: &DMatrix<f64>,
) -> MessagePassingNet {
    let d = net.hidden();
    let mut grads = net.zeros_like();
    let mut d_msg: Option<DMatrix<f64>> = None;
    for t in (0..net.depth()).rev() {
        let mut dm = d_embedding.columns(t * d, d).into_owned();
        if let Some(carry) = d_msg.take() {
            dm += carry;
        }
        let dz = dm.zip_map(&fw.pre[t], |g, z| if z > 0.0 { g } else { 0.0 });
        grads.weights[t] = fw.propagated[t].transpose() * &dz;
        if t > 0 {
            d_msg = Some(&fw.adj * (dz * net.weights[t].transpose()));
        }
    }
    grads
}

/// Concatenated messages `[M_1 ⋯ M_T]` of the network run on `a[active, active]`
/// from all-ones inputs, with ReLU activations.
pub fn mpnn_embed(
    a: &SymMatrix,
    active: &IndexSet,
    net: &MessagePassingNet,
) -> Result<DMatrix<f64>> {
    if active.universe() != a.dim() {
        return Err(Error::DimensionMismatch(format!(
            "active set over {} for a {}-node matrix",
            active.universe(),
            a.dim()
        )));
    }
    Ok(forward(net, a.submatrix(active, active)).embedding)
}

/// Row sums of an embedding.
pub fn pivot_logits(embedding: &DMatrix<f64>) -> Vec<f64> {
    embedding.row_iter().map(|r| r.sum()).collect()
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Pivot probabilities over the rows of `embedding`.
pub fn pivot_distribution(embedding: &DMatrix<f64>) -> Vec<f64> {
    softmax(&pivot_logits(embedding))
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn gumbel(rng: &mut impl Rng) -> f64 {
    let u: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    -(-u.ln()).ln()
}

/// Argmax of `logit_i + G_i` over the allowed indices, `G_i` standard Gumbel.
fn gumbel_argmax(
    logits: &[f64],
    allowed: impl Fn(usize) -> bool,
    rng: &mut impl Rng,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &l) in logits.iter().enumerate() {
        if !allowed(i) {
            continue;
        }
        let g = gumbel(rng);
        if l == f64::NEG_INFINITY {
            continue;
        }
        let score = l + g;
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

/// Draws a category of `p` by the Gumbel-max rule; zero-probability
/// categories are never returned.
pub fn gumbel_argmax_sample(p: &[f64], rng: &mut impl Rng) -> Result<usize> {
    let total: f64 = p.iter().sum();
    if p.is_empty() || p.iter().any(|v| !(*v >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("not a probability vector".into()));
    }
    let logs: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    Ok(gumbel_argmax(&logs, |_| true, rng).expect("some category has positive mass"))
}

/// Current transformed matrix `A_ℓ` and active set `S_ℓ`.
#[derive(Debug, Clone)]
pub struct MdpState {
    pub level: usize,
    pub active: IndexSet,
    pub matrix: SymMatrix,
}

impl MdpState {
    pub fn initial(a: &SymMatrix) -> Self {
        MdpState {
            level: 0,
            active: IndexSet::full(a.dim()),
            matrix: a.clone(),
        }
    }

    /// Rotates by `core` on the action's support and retires its wavelets.
    pub fn step(&self, action: &MdpAction, core: &DMatrix<f64>) -> Result<MdpState> {
        if !action.support.is_subset(&self.active) || !action.wavelets.is_subset(&action.support) {
            return Err(Error::InfeasibleState(
                "action outside the active set".into(),
            ));
        }
        let mut m = self.matrix.as_matrix().clone();
        conjugate_in_place(&mut m, &action.support, core);
        Ok(MdpState {
            level: self.level + 1,
            active: self.active.difference(&action.wavelets),
            matrix: SymMatrix::symmetrized(m),
        })
    }
}

/// Rotation support `I` and retired wavelets `T ⊆ I`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdpAction {
    pub support: IndexSet,
    pub wavelets: IndexSet,
}

impl MdpAction {
    pub fn plan(&self) -> Result<LevelPlan> {
        LevelPlan::new(self.support.clone(), self.wavelets.clone())
    }
}

/// Ordered draw behind an action, as global indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionDraw {
    pub pivot: usize,
    pub companions: Vec<usize>,
}

impl ActionDraw {
    /// The action with the pivot and the first `c − 1` companions retired.
    pub fn action(&self, universe: usize, c: usize) -> Result<MdpAction> {
        let mut support = vec![self.pivot];
        support.extend(&self.companions);
        let mut wavelets = vec![self.pivot];
        wavelets.extend(self.companions.iter().take(c.saturating_sub(1)));
        Ok(MdpAction {
            support: IndexSet::new(support, universe)?,
            wavelets: IndexSet::new(wavelets, universe)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ActionSample {
    pub action: MdpAction,
    pub draw: ActionDraw,
    pub log_prob: f64,
    /// `∇_θ log π(draw | state)`.
    pub grad: PolicyParams,
    /// The networks produced non-finite scores and a uniform draw was used.
    pub fallback: bool,
}

struct PolicyPass {
    pivot: Forward,
    companion: Forward,
}

fn policy_pass(matrix: &SymMatrix, active: &IndexSet, params: &PolicyParams) -> PolicyPass {
    let adj = matrix.submatrix(active, active);
    PolicyPass {
        pivot: forward(&params.pivot, adj.clone()),
        companion: forward(&params.companion, adj),
    }
}

fn companion_scores(emb: &DMatrix<f64>, pivot: usize) -> Vec<f64> {
    let p = emb.row(pivot);
    (0..emb.nrows()).map(|i| emb.row(i).dot(&p)).collect()
}

/// Log-probability of an ordered draw (local positions) and its gradient.
fn score_draw(
    pass: &PolicyPass,
    params: &PolicyParams,
    pivot: usize,
    companions: &[usize],
) -> (f64, PolicyParams) {
    let s = pass.pivot.embedding.nrows();

    let logits = pivot_logits(&pass.pivot.embedding);
    let probs = softmax(&logits);
    let mut log_prob = logits[pivot] - log_sum_exp(logits.iter().copied());
    let d_pivot_emb = DMatrix::from_fn(s, pass.pivot.embedding.ncols(), |i, _| {
        (if i == pivot { 1.0 } else { 0.0 }) - probs[i]
    });

    let emb = &pass.companion.embedding;
    let scores = companion_scores(emb, pivot);
    let mut d_scores = vec![0.0; s];
    let mut remaining: Vec<bool> = (0..s).map(|i| i != pivot).collect();
    for &choice in companions {
        let live = || (0..s).filter(|&i| remaining[i]).map(|i| scores[i]);
        let lse = log_sum_exp(live());
        log_prob += scores[choice] - lse;
        for i in 0..s {
            if remaining[i] {
                d_scores[i] -= (scores[i] - lse).exp();
            }
        }
        d_scores[choice] += 1.0;
        remaining[choice] = false;
    }
    let mut d_comp_emb = DMatrix::zeros(s, emb.ncols());
    let pivot_row = emb.row(pivot).into_owned();
    for i in 0..s {
        if i == pivot || d_scores[i] == 0.0 {
            continue;
        }
        let mut row = d_comp_emb.row_mut(i);
        row += &pivot_row * d_scores[i];
        let contribution = emb.row(i) * d_scores[i];
        let mut prow = d_comp_emb.row_mut(pivot);
        prow += contribution;
    }

    let grad = PolicyParams {
        pivot: backward(&params.pivot, &pass.pivot, &d_pivot_emb),
        companion: backward(&params.companion, &pass.companion, &d_comp_emb),
    };
    (log_prob, grad)
}

fn local_positions(active: &IndexSet, draw: &ActionDraw) -> Result<(usize, Vec<usize>)> {
    let pos = |g: usize| {
        active
            .position(g)
            .ok_or(Error::InfeasibleState(format!("index {g} is not active")))
    };
    Ok((
        pos(draw.pivot)?,
        draw.companions
            .iter()
            .map(|&g| pos(g))
            .collect::<Result<_>>()?,
    ))
}

/// `log π(draw | matrix, active)` and its gradient with respect to `params`.
pub fn draw_log_prob(
    matrix: &SymMatrix,
    active: &IndexSet,
    params: &PolicyParams,
    draw: &ActionDraw,
) -> Result<(f64, PolicyParams)> {
    let (pivot, companions) = local_positions(active, draw)?;
    let mut seen = companions.clone();
    seen.push(pivot);
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != companions.len() + 1 {
        return Err(Error::InvalidArgument("draw repeats an index".into()));
    }
    Ok(score_draw(
        &policy_pass(matrix, active, params),
        params,
        pivot,
        &companions,
    ))
}

/// Samples a pivot and `k − 1` companions (sequentially, without
/// replacement) for the state `(matrix, active)`.
pub fn sample_action(
    matrix: &SymMatrix,
    active: &IndexSet,
    params: &PolicyParams,
    k: usize,
    c: usize,
    rng: &mut impl Rng,
) -> Result<ActionSample> {
    let s = active.len();
    if k < 2 || s < k {
        return Err(Error::InfeasibleState(format!(
            "cannot pick {k} indices from {s} active"
        )));
    }
    if c == 0 || c > k {
        return Err(Error::InvalidArgument(format!(
            "cannot retire {c} of {k} indices"
        )));
    }
    let pass = policy_pass(matrix, active, params);
    let finite = pass
        .pivot
        .embedding
        .iter()
        .chain(pass.companion.embedding.iter())
        .all(|v| v.is_finite());
    let (pivot, companions, log_prob, grad, fallback) = if finite {
        let logits = pivot_logits(&pass.pivot.embedding);
        let pivot = gumbel_argmax(&logits, |_| true, rng).expect("non-empty active set");
        let scores = companion_scores(&pass.companion.embedding, pivot);
        let mut taken = vec![false; s];
        taken[pivot] = true;
        let mut companions = Vec::with_capacity(k - 1);
        for _ in 1..k {
            let pick =
                gumbel_argmax(&scores, |i| !taken[i], rng).expect("enough candidates remain");
            taken[pick] = true;
            companions.push(pick);
        }
        let (lp, grad) = score_draw(&pass, params, pivot, &companions);
        (pivot, companions, lp, grad, false)
    } else {
        let picks = rand::seq::index::sample(rng, s, k).into_vec();
        let log_prob = -(0..k).map(|r| ((s - r) as f64).ln()).sum::<f64>();
        (
            picks[0],
            picks[1..].to_vec(),
            log_prob,
            params.zeros_like(),
            true,
        )
    };
    let draw = ActionDraw {
        pivot: active[pivot],
        companions: companions.iter().map(|&p| active[p]).collect(),
    };
    Ok(ActionSample {
        action: draw.action(active.universe(), c)?,
        draw,
        log_prob,
        grad,
        fallback,
    })
}

/// `r_ℓ = −(residual settled at level ℓ)` for `ℓ < L` and
/// `r_L = −‖A − reconstruct(f)‖_F`.
pub fn rewards_for_trajectory(a: &SymMatrix, f: &Factorization) -> Result<Vec<f64>> {
    let levels = f.levels();
    let mut m = a.as_matrix().clone();
    let mut rewards = Vec::with_capacity(levels);
    for (l, r) in f.rotations().iter().enumerate() {
        conjugate_in_place(&mut m, r.support(), r.core());
        if l + 1 < levels {
            rewards.push(-level_error(
                &m,
                &f.wavelet_sets()[l],
                &f.active_sets()[l + 1],
            ));
        }
    }
    if levels > 0 {
        rewards.push(-(a.as_matrix() - reconstruct(f).as_matrix()).norm());
    }
    Ok(rewards)
}

/// Discounted suffix sums `g_ℓ = Σ_j γ^j r_{ℓ+j+1}`.
pub fn returns(rewards: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "discount {gamma} outside (0, 1]"
        )));
    }
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for l in (0..rewards.len()).rev() {
        acc = rewards[l] + gamma * acc;
        out[l] = acc;
    }
    Ok(out)
}

/// `θ + η Σ_ℓ γ^ℓ g_ℓ ∇ log π(a_ℓ | s_ℓ)`.
pub fn reinforce_update(
    params: &PolicyParams,
    score_grads: &[PolicyParams],
    step_returns: &[f64],
    eta: f64,
    gamma: f64,
) -> Result<PolicyParams> {
    if score_grads.len() != step_returns.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} score gradients for {} returns",
            score_grads.len(),
            step_returns.len()
        )));
    }
    let mut out = params.clone();
    let mut discount = 1.0;
    for (grad, &g) in score_grads.iter().zip(step_returns) {
        let scale = eta * discount * g;
        if scale != 0.0 {
            out.axpy(scale, grad);
        }
        discount *= gamma;
    }
    if !out.is_finite() {
        return Err(Error::TrainingDivergence(
            "policy weights became non-finite".into(),
        ));
    }
    Ok(out)
}

/// One sampled episode with closed-form cores.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub draws: Vec<ActionDraw>,
    pub plans: Vec<LevelPlan>,
    pub log_probs: Vec<f64>,
    pub score_grads: Vec<PolicyParams>,
    pub rewards: Vec<f64>,
    pub returns: Vec<f64>,
    pub factorization: Factorization,
    pub fallbacks: usize,
}

impl Trajectory {
    pub fn final_error(&self) -> f64 {
        -self.rewards.last().copied().unwrap_or(0.0)
    }
}

/// Rolls out one episode of `cfg.levels` levels.
pub fn sample_trajectory(
    a: &SymMatrix,
    params: &PolicyParams,
    cfg: &MmfConfig,
    gamma: f64,
    rng: &mut impl Rng,
) -> Result<Trajectory> {
    let mut state = MdpState::initial(a);
    let mut draws = Vec::with_capacity(cfg.levels);
    let mut plans = Vec::with_capacity(cfg.levels);
    let mut log_probs = Vec::with_capacity(cfg.levels);
    let mut score_grads = Vec::with_capacity(cfg.levels);
    let mut cores = Vec::with_capacity(cfg.levels);
    let mut fallbacks = 0;
    for _ in 0..cfg.levels {
        let k = cfg.effective_k(state.active.len());
        let sample = sample_action(&state.matrix, &state.active, params, k, cfg.c, rng)?;
        let plan = sample.action.plan()?;
        let core = phase_one_core(&state.matrix, &plan, &state.active)?;
        state = state.step(&sample.action, &core)?;
        fallbacks += usize::from(sample.fallback);
        draws.push(sample.draw);
        plans.push(plan);
        log_probs.push(sample.log_prob);
        score_grads.push(sample.grad);
        cores.push(core);
    }
    let factorization = Factorization::from_cores(a, cfg.k, cfg.c, &plans, cores)?;
    let rewards = rewards_for_trajectory(a, &factorization)?;
    let step_returns = returns(&rewards, gamma)?;
    Ok(Trajectory {
        draws,
        plans,
        log_probs,
        score_grads,
        rewards,
        returns: step_returns,
        factorization,
        fallbacks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mmf: MmfConfig,
    pub gamma: f64,
    pub eta: f64,
    /// Early-stopping window.
    pub omega: usize,
    pub max_episodes: usize,
    pub depth: usize,
    pub hidden: usize,
    /// Run the manifold optimizer on every `P`-th episode's sequence too.
    pub polish_every: Option<usize>,
    /// Number of best distinct index sequences polished at the end.
    pub polish_top: usize,
}

impl TrainConfig {
    pub fn new(mmf: MmfConfig) -> Self {
        TrainConfig {
            mmf,
            gamma: 1.0,
            eta: 1e-3,
            omega: 50,
            max_episodes: 1000,
            depth: DEFAULT_DEPTH,
            hidden: DEFAULT_HIDDEN,
            polish_every: None,
            polish_top: 1,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.mmf.validate(n)?;
        if !(self.gamma > 0.0 && self.gamma <= 1.0) || !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidArgument(
                "need 0 < gamma <= 1 and a finite eta >= 0".into(),
            ));
        }
        if self.omega == 0
            || self.max_episodes == 0
            || self.depth == 0
            || self.hidden == 0
            || self.polish_top == 0
        {
            return Err(Error::InvalidArgument(
                "omega, max_episodes, depth, hidden and polish_top must be positive".into(),
            ));
        }
        if self.polish_every == Some(0) {
            return Err(Error::InvalidArgument(
                "polish_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the training trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub final_error: f64,
    pub best_error: f64,
    /// Mean final error over the last `ω` episodes (fewer at the start).
    pub mean_window_error: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub factorization: Factorization,
    /// `‖A − reconstruct‖_F` of the returned factorization.
    pub error: f64,
    /// Best error among closed-form episodes, before the final polish.
    pub best_sampled_error: f64,
    pub trace: Vec<EpisodeRecord>,
    pub params: PolicyParams,
    pub stopped_early: bool,
    pub fallback_actions: usize,
}

/// Mean of the last `omega` values exceeds the mean of the `omega` before.
pub fn window_increased(errors: &[f64], omega: usize) -> bool {
    if errors.len() < 2 * omega {
        return false;
    }
    let n = errors.len();
    let last: f64 = errors[n - omega..].iter().sum::<f64>() / omega as f64;
    let prev: f64 = errors[n - 2 * omega..n - omega].iter().sum::<f64>() / omega as f64;
    last > prev
}

fn frobenius_error(a: &SymMatrix, f: &Factorization) -> Result<f64> {
    Ok(objective(a, f)?.max(0.0).sqrt())
}

/// REINFORCE training over index sequences followed by manifold
/// optimization of the best sequences found.
pub fn train(a: &SymMatrix, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate(a.dim())?;
    let mut init_rng = seeding::stream(cfg.mmf.seed, "policy-init");
    let mut rng = seeding::stream(cfg.mmf.seed, "episodes");
    let mut params = PolicyParams::glorot(cfg.depth, cfg.hidden, &mut init_rng);

    let mut trace = Vec::new();
    let mut errors = Vec::new();
    let mut best: Vec<(f64, Factorization)> = Vec::new();
    let mut fallback_actions = 0;
    let mut stopped_early = false;

    for episode in 0..cfg.max_episodes {
        let mut traj = sample_trajectory(a, &params, &cfg.mmf, cfg.gamma, &mut rng)?;
        fallback_actions += traj.fallbacks;
        if cfg.polish_every.is_some_and(|p| (episode + 1) % p == 0) {
            let polished = optimize_rotations(a, &traj.factorization, &cfg.mmf)?.factorization;
            traj.rewards = rewards_for_trajectory(a, &polished)?;
            traj.returns = returns(&traj.rewards, cfg.gamma)?;
            traj.factorization = polished;
        }
        let err = traj.final_error();
        if !err.is_finite() {
            return Err(Error::TrainingDivergence(format!(
                "episode {episode} produced a non-finite error"
            )));
        }
        params = reinforce_update(
            &params,
            &traj.score_grads,
            &traj.returns,
            cfg.eta,
            cfg.gamma,
        )?;

        remember_best(&mut best, err, traj.factorization, cfg.polish_top);
        errors.push(err);
        let window = &errors[errors.len().saturating_sub(cfg.omega)..];
        trace.push(EpisodeRecord {
            episode,
            final_error: err,
            best_error: best[0].0,
            mean_window_error: window.iter().sum::<f64>() / window.len() as f64,
        });
        if window_increased(&errors, cfg.omega) {
            stopped_early = true;
            break;
        }
    }

    let best_sampled_error = best[0].0;
    let mut winner: Option<(f64, Factorization)> = None;
    for (_, f) in best {
        let polished = optimize_rotations(a, &f, &cfg.mmf)?.factorization;
        let err = frobenius_error(a, &polished)?;
        if winner.as_ref().is_none_or(|(e, _)| err < *e) {
            winner = Some((err, polished));
        }
    }
    let (error, factorization) = winner.expect("at least one episode ran");
    Ok(TrainOutcome {
        factorization,
        error,
        best_sampled_error,
        trace,
        params,
        stopped_early,
        fallback_actions,
    })
}

/// Keeps the `keep` lowest-error factorizations with distinct index plans,
/// sorted by error (earlier episodes win ties).
fn remember_best(best: &mut Vec<(f64, Factorization)>, err: f64, f: Factorization, keep: usize) {
    if let Some(pos) = best.iter().position(|(_, g)| g.plans() == f.plans()) {
        if err < best[pos].0 {
            best.remove(pos);
        } else {
            return;
        }
    }
    let at = best
        .iter()
        .position(|(e, _)| err < *e)
        .unwrap_or(best.len());
    if at < keep {
        best.insert(at, (err, f));
        best.truncate(keep);
    }
}

/// Training trace as CSV with a header row.
pub fn trace_csv(trace: &[EpisodeRecord]) -> String {
    let mut out = String::from("episode,final_error,best_error,mean_window_error\n");
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.episode,
            fmt_real(r.final_error),
            fmt_real(r.best_error),
            fmt_real(r.mean_window_error)
        );
    }
    out
}

pub fn write_trace_csv(trace: &[EpisodeRecord], path: &Path) -> Result<()> {
    write_file(path, &trace_csv(trace))
}

const CHECKPOINT_TAG: &str = "learnable-mmf/policy";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointRecord {
    format: String,
    version: u32,
    pivot: Vec<LayerRecord>,
    companion: Vec<LayerRecord>,
}

fn layers_to_records(net: &MessagePassingNet) -> Vec<LayerRecord> {
    net.weights
        .iter()
        .map(|w| LayerRecord {
            rows: w.nrows(),
            cols: w.ncols(),
            values: (0..w.nrows())
                .flat_map(|i| (0..w.ncols()).map(move |j| w[(i, j)]))
                .collect(),
        })
        .collect()
}

fn records_to_net(layers: &[LayerRecord]) -> Result<MessagePassingNet> {
    let weights = layers
        .iter()
        .map(|l| {
            if l.values.len() != l.rows * l.cols {
                return Err(Error::Schema(format!(
                    "layer of {}x{} has {} values",
                    l.rows,
                    l.cols,
                    l.values.len()
                )));
            }
            Ok(DMatrix::from_row_slice(l.rows, l.cols, &l.values))
        })
        .collect::<Result<Vec<_>>>()?;
    MessagePassingNet::from_weights(weights).map_err(|e| Error::Schema(e.to_string()))
}

pub fn params_to_json(params: &PolicyParams) -> String {
    let record = CheckpointRecord {
        format: CHECKPOINT_TAG.into(),
        version: 1,
        pivot: layers_to_records(&params.pivot),
        companion: layers_to_records(&params.companion),
    };
    serde_json::to_string_pretty(&record).expect("policy serializes")
}

pub fn params_from_json(text: &str) -> Result<PolicyParams> {
    let record: CheckpointRecord =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    if record.format != CHECKPOINT_TAG || record.version != 1 {
        return Err(Error::Schema(format!(
            "unsupported checkpoint {} v{}",
            record.format, record.version
        )));
    }
    Ok(PolicyParams {
        pivot: records_to_net(&record.pivot)?,
        companion: records_to_net(&record.companion)?,
    })
}

pub fn save_params(params: &PolicyParams, path: &Path) -> Result<()> {
    write_file(path, &params_to_json(params))
}

pub fn load_params(path: &Path) -> Result<PolicyParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    params_from_json(&text)
}
