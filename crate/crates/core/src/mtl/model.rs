use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::heads::{argmax_rows, multitask_loss, MultitaskLoss, TaskHead, TaskScores};
use super::readout::SentenceReadout;
use crate::corpus::{LabeledCorpus, Task};
use crate::error::{Error, Result};
use crate::gcn::{
    encode, encode_eval, encoder_backward, reconstruction_backward, sample_cells, AdamConfig, AdamState,
    Decoder, Encoded, GcnParams, ReconstructionGrad, ReconstructionMode,
};
use crate::graph::{GraphKind, TextGraph};
use crate::scalar::Real;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight of the classification term in `L_MSE + λ · L_MT_CLA`.
    pub lambda: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement tolerated before stopping.
    pub patience: usize,
    pub dropout: f64,
    /// Embedding size `K`.
    pub dim: usize,
    pub adam: AdamConfig,
    /// L2 coefficient on `W0` and `W1` (not on task heads).
    pub weight_decay: f64,
    pub seed: u64,
    pub decoder: Decoder,
    pub reconstruction: ReconstructionMode,
    /// Active tasks; a single task is the single-task setting, none is a plain GAE.
    pub tasks: Vec<Task>,
    /// Relative task weights in the classification average; missing tasks weigh 1.
    pub task_weights: BTreeMap<Task, f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.2,
            max_epochs: 100,
            patience: 10,
            dropout: 0.5,
            dim: 200,
            adam: AdamConfig::default(),
            weight_decay: 5e-4,
            seed: 1,
            decoder: Decoder::Gcn,
            reconstruction: ReconstructionMode::Dense,
            tasks: Task::ALL.to_vec(),
            task_weights: BTreeMap::new(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return bad(format!("lambda must be finite and non-negative, got {}", self.lambda));
        }
        if self.patience > self.max_epochs {
            return bad(format!("patience {} exceeds max_epochs {}", self.patience, self.max_epochs));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if self.dim == 0 {
            return bad("embedding dimension must be positive".into());
        }
        if !(self.adam.learning_rate >= 0.0) || !(self.weight_decay >= 0.0) {
            return bad("learning rate and weight decay must be non-negative".into());
        }
        if self.task_weights.values().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("task weights must be finite and non-negative".into());
        }
        Ok(())
    }

    pub fn task_weight(&self, task: Task) -> f64 {
        self.task_weights.get(&task).copied().unwrap_or(1.0)
    }
}

/// Labeled `(sentence, class)` pairs per task for one split.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Supervision {
    pub tasks: Vec<(Task, Vec<(usize, usize)>)>,
}

impl Supervision {
    /// Collects labels of `records` (corpus indices) for each task; sentences
    /// without a task's label are left out of that task.
    pub fn from_records(corpus: &LabeledCorpus, records: &[usize], tasks: &[Task]) -> Self {
        let tasks = tasks
            .iter()
            .map(|&task| {
                let pairs = records
                    .iter()
                    .filter_map(|&r| corpus.records[r].labels.get(task).map(|l| (r, l)))
                    .collect();
                (task, pairs)
            })
            .collect();
        Supervision { tasks }
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.iter().all(|(_, p)| p.is_empty())
    }

    pub fn labeled(&self, task: Task) -> &[(usize, usize)] {
        self.tasks
            .iter()
            .find(|(t, _)| *t == task)
            .map(|(_, p)| p.as_slice())
            .unwrap_or(&[])
    }
}

/// Loss terms of one evaluation of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown<T> {
    pub mse: T,
    /// `L_MT_CLA`; zero when no task has labels.
    pub cla: T,
    /// `L_MSE + λ · L_MT_CLA`.
    pub total: T,
    /// `λ_wd / 2 · (‖W0‖² + ‖W1‖²)`, whose gradient is the weight decay term.
    pub penalty: T,
}

impl<T: Real> LossBreakdown<T> {
    /// Everything the gradients differentiate.
    pub fn objective(&self) -> T {
        self.total + self.penalty
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub w0: Array2<T>,
    pub w1: Option<Array2<T>>,
    /// Per head; `None` when the head is frozen for this step.
    pub heads: Vec<Option<Array2<T>>>,
}

struct ForwardCache<T> {
    encoded: Encoded<T>,
    recon: ReconstructionGrad<T>,
    z_sentences: Array2<T>,
    task_rows: Vec<Vec<usize>>,
    multitask: Option<MultitaskLoss<T>>,
}

/// Encoder/decoder weights, task heads, optimizer and RNG state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GcnModel<T> {
    pub config: TrainConfig,
    pub graph_kind: GraphKind,
    pub params: GcnParams<T>,
    pub heads: Vec<TaskHead<T>>,
    pub adam: AdamState<T>,
    dropout_rng: ChaCha8Rng,
    sample_rng: ChaCha8Rng,
    /// Free-form annotations carried through checkpoints.
    pub meta: BTreeMap<String, String>,
    #[serde(skip)]
    cache: Option<ForwardCache<T>>,
}

impl<T: Clone> Clone for ForwardCache<T> {
    fn clone(&self) -> Self {
        ForwardCache {
            encoded: self.encoded.clone(),
            recon: self.recon.clone(),
            z_sentences: self.z_sentences.clone(),
            task_rows: self.task_rows.clone(),
            multitask: self.multitask.clone(),
        }
    }
}

impl<T: std::fmt::Debug> std::fmt::Debug for ForwardCache<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ForwardCache").finish_non_exhaustive()
    }
}

const STREAM_PARAMS: u64 = 0;
const STREAM_HEADS: u64 = 1;
const STREAM_DROPOUT: u64 = 2;
const STREAM_SAMPLES: u64 = 3;
const STREAM_EVAL_SAMPLES: u64 = 4;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl<T: Real> GcnModel<T> {
    /// Fresh model for `graph`. Encoder/decoder weights, heads and dropout
    /// draw from separate seeded streams, so the task set does not perturb
    /// the autoencoder's initialization or dropout masks.
    pub fn new(graph: &TextGraph<T>, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let n = graph.n_nodes();
        let params = GcnParams::init(n, config.dim, config.decoder, &mut stream_rng(config.seed, STREAM_PARAMS));
        let mut head_rng = stream_rng(config.seed, STREAM_HEADS);
        let mut tasks = config.tasks.clone();
        tasks.sort();
        tasks.dedup();
        let heads: Vec<TaskHead<T>> = tasks.iter().map(|&t| TaskHead::init(t, config.dim, &mut head_rng)).collect();
        let mut shapes = vec![params.w0.dim()];
        if let Some(w1) = &params.w1 {
            shapes.push(w1.dim());
        }
        shapes.extend(heads.iter().map(|h| h.weight.dim()));
        Ok(GcnModel {
            graph_kind: graph.kind,
            adam: AdamState::new(&shapes),
            dropout_rng: stream_rng(config.seed, STREAM_DROPOUT),
            sample_rng: stream_rng(config.seed, STREAM_SAMPLES),
            params,
            heads,
            config,
            meta: BTreeMap::new(),
            cache: None,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.params.n_nodes()
    }

    pub fn head(&self, task: Task) -> Option<&TaskHead<T>> {
        self.heads.iter().find(|h| h.task == task)
    }

    fn check_graph(&self, graph: &TextGraph<T>) -> Result<()> {
        if graph.n_nodes() != self.n_nodes() {
            return Err(Error::shape("model/graph binding", self.n_nodes(), graph.n_nodes()));
        }
        Ok(())
    }

    fn lambda(&self) -> T {
        T::of(self.config.lambda)
    }

    fn penalty(&self) -> T {
        let wd = T::of(self.config.weight_decay);
        let sq = |a: &Array2<T>| a.iter().fold(T::zero(), |acc, &v| acc + v * v);
        let mut total = sq(&self.params.w0);
        if let Some(w1) = &self.params.w1 {
            total += sq(w1);
        }
        wd * T::half() * total
    }

    /// Runs heads on the labeled rows of each task.
    fn classify(
        &self,
        z_sentences: &Array2<T>,
        supervision: &Supervision,
    ) -> Result<(Vec<Vec<usize>>, Option<MultitaskLoss<T>>)> {
        let mut rows_per_task = Vec::with_capacity(self.heads.len());
        let mut batches = Vec::with_capacity(self.heads.len());
        for head in &self.heads {
            let labeled = supervision.labeled(head.task);
            let rows: Vec<usize> = labeled.iter().map(|&(r, _)| r).collect();
            let z_t = z_sentences.select(Axis(0), &rows);
            let scores = z_t.dot(&head.weight);
            batches.push(TaskScores {
                task: head.task,
                scores,
                labels: labeled.iter().map(|&(_, l)| Some(l)).collect(),
                weight: self.config.task_weight(head.task),
            });
            rows_per_task.push(rows);
        }
        let any = batches.iter().any(|b| !b.labels.is_empty() && b.weight > 0.0);
        let loss = if any { Some(multitask_loss(&batches)?) } else { None };
        Ok((rows_per_task, loss))
    }

    fn breakdown(&self, mse: T, multitask: Option<&MultitaskLoss<T>>) -> LossBreakdown<T> {
        let cla = multitask.map(|m| m.value).unwrap_or_else(T::zero);
        LossBreakdown {
            mse,
            cla,
            total: super::heads::joint_loss(mse, cla, self.lambda()),
            penalty: self.penalty(),
        }
    }

    /// Forward pass, caching everything [`backward`](Self::backward) needs.
    /// `training` enables dropout and (for the sampled loss) redraws cells.
    pub fn forward(
        &mut self,
        graph: &TextGraph<T>,
        readout: &SentenceReadout<T>,
        supervision: &Supervision,
        training: bool,
    ) -> Result<LossBreakdown<T>> {
        self.check_graph(graph)?;
        let a_hat = &graph.normalized;
        let p = if training { T::of(self.config.dropout) } else { T::zero() };
        let encoded = encode(a_hat, &self.params, p, &mut self.dropout_rng)?;
        let cells = match self.config.reconstruction {
            ReconstructionMode::Dense => None,
            ReconstructionMode::Sampled if training => Some(sample_cells(a_hat, &mut self.sample_rng)),
            ReconstructionMode::Sampled => Some(self.eval_cells(graph)),
        };
        let recon = reconstruction_backward(a_hat, a_hat, encoded.z.view(), &self.params, cells.as_deref(), T::one())?;
        let z_sentences = readout.apply(encoded.z.view())?;
        let (task_rows, multitask) = self.classify(&z_sentences, supervision)?;
        let out = self.breakdown(recon.loss, multitask.as_ref());
        self.cache = Some(ForwardCache {
            encoded,
            recon,
            z_sentences,
            task_rows,
            multitask,
        });
        Ok(out)
    }

    /// Exact gradients of [`LossBreakdown::objective`] for the cached forward pass.
    ///
    /// At `λ = 0` the heads are frozen and contribute nothing to `Z`'s gradient.
    pub fn backward(&mut self, graph: &TextGraph<T>, readout: &SentenceReadout<T>) -> Result<Gradients<T>> {
        let cache = self.cache.take().ok_or(Error::MissingForwardState)?;
        self.check_graph(graph)?;
        let ForwardCache {
            encoded,
            recon,
            z_sentences,
            task_rows,
            multitask,
        } = cache;
        let mut dz = recon.dz;
        let lambda = self.lambda();
        let mut head_grads: Vec<Option<Array2<T>>> = vec![None; self.heads.len()];
        if lambda != T::zero() {
            if let Some(mt) = &multitask {
                let mut dz_sent = Array2::<T>::zeros(z_sentences.dim());
                for (h, head) in self.heads.iter().enumerate() {
                    let Some(d_scores) = &mt.d_scores[h] else { continue };
                    let d_scores = d_scores.mapv(|g| g * lambda);
                    let z_t = z_sentences.select(Axis(0), &task_rows[h]);
                    head_grads[h] = Some(z_t.t().dot(&d_scores));
                    let d_zt = d_scores.dot(&head.weight.t());
                    for (k, &row) in task_rows[h].iter().enumerate() {
                        dz_sent.row_mut(row).scaled_add(T::one(), &d_zt.row(k));
                    }
                }
                dz += &readout.apply_transpose(dz_sent.view())?;
            }
        }
        let wd = T::of(self.config.weight_decay);
        let mut w0 = encoder_backward(&graph.normalized, &encoded, dz.view())?;
        w0.scaled_add(wd, &self.params.w0);
        let w1 = match (recon.dw1, &self.params.w1) {
            (Some(mut g), Some(w)) => {
                g.scaled_add(wd, w);
                Some(g)
            }
            _ => None,
        };
        Ok(Gradients {
            w0,
            w1,
            heads: head_grads,
        })
    }

    pub fn adam_step(&mut self, grads: &Gradients<T>) -> Result<()> {
        let cfg = self.config.adam;
        let mut slots: Vec<(&mut Array2<T>, Option<&Array2<T>>)> = Vec::new();
        slots.push((&mut self.params.w0, Some(&grads.w0)));
        if let Some(w1) = self.params.w1.as_mut() {
            slots.push((w1, grads.w1.as_ref()));
        }
        for (head, g) in self.heads.iter_mut().zip(&grads.heads) {
            slots.push((&mut head.weight, g.as_ref()));
        }
        self.adam.step(&cfg, &mut slots)
    }

    fn eval_cells(&self, graph: &TextGraph<T>) -> Vec<(usize, usize)> {
        sample_cells(&graph.normalized, &mut stream_rng(self.config.seed, STREAM_EVAL_SAMPLES))
    }

    /// Loss terms in evaluation mode (no dropout, fixed cells for the sampled loss).
    pub fn evaluate_loss(
        &self,
        graph: &TextGraph<T>,
        readout: &SentenceReadout<T>,
        supervision: &Supervision,
    ) -> Result<LossBreakdown<T>> {
        self.check_graph(graph)?;
        let a_hat = &graph.normalized;
        let z = encode_eval(a_hat, &self.params)?;
        let cells = match self.config.reconstruction {
            ReconstructionMode::Dense => None,
            ReconstructionMode::Sampled => Some(self.eval_cells(graph)),
        };
        let recon = reconstruction_backward(a_hat, a_hat, z.view(), &self.params, cells.as_deref(), T::one())?;
        let z_sentences = readout.apply(z.view())?;
        let (_, multitask) = self.classify(&z_sentences, supervision)?;
        Ok(self.breakdown(recon.loss, multitask.as_ref()))
    }

    /// Evaluation-mode node embeddings `Z`.
    pub fn node_embeddings(&self, graph: &TextGraph<T>) -> Result<Array2<T>> {
        self.check_graph(graph)?;
        encode_eval(&graph.normalized, &self.params)
    }

    pub fn sentence_embeddings(&self, graph: &TextGraph<T>, readout: &SentenceReadout<T>) -> Result<Array2<T>> {
        readout.apply(self.node_embeddings(graph)?.view())
    }

    /// Argmax class per sentence for every head.
    pub fn predict(&self, graph: &TextGraph<T>, readout: &SentenceReadout<T>) -> Result<Vec<(Task, Vec<usize>)>> {
        let z_s = self.sentence_embeddings(graph, readout)?;
        Ok(self
            .heads
            .iter()
            .map(|h| (h.task, argmax_rows(z_s.dot(&h.weight).view())))
            .collect())
    }

    /// Parameters only, for comparing trajectories.
    pub fn snapshot(&self) -> (GcnParams<T>, Vec<TaskHead<T>>) {
        (self.params.clone(), self.heads.clone())
    }

    pub(crate) fn restore(&mut self, snapshot: (GcnParams<T>, Vec<TaskHead<T>>)) {
        self.params = snapshot.0;
        self.heads = snapshot.1;
    }

    pub(crate) fn clear_cache(&mut self) {
        self.cache = None;
    }

    pub fn to_checkpoint_string(&self) -> Result<String> {
        let ck = CheckpointRef {
            format: CHECKPOINT_FORMAT,
            version: CHECKPOINT_VERSION,
            model: self,
        };
        serde_json::to_string(&ck).map_err(|e| Error::format("checkpoint", e.to_string()))
    }

    pub fn from_checkpoint_str(s: &str) -> Result<Self> {
        let ck: Checkpoint<T> = serde_json::from_str(s).map_err(|e| Error::format("checkpoint", e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::format("checkpoint", format!("unexpected format tag {:?}", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::format("checkpoint", format!("unsupported version {}", ck.version)));
        }
        let model = ck.model;
        if !model.params.is_finite() {
            return Err(Error::format("checkpoint", "non-finite parameters"));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_checkpoint_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint_str(&fs::read_to_string(path)?)
    }
}

const CHECKPOINT_FORMAT: &str = "textgcn-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize)]
struct CheckpointRef<'a, T> {
    format: &'static str,
    version: u32,
    model: &'a GcnModel<T>,
}

#[derive(Deserialize)]
#[serde(bound = "T: Real")]
struct Checkpoint<T> {
    format: String,
    version: u32,
    model: GcnModel<T>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, Labels};
    use crate::graph::{build_ws_graph, NormalizeMode};
    use crate::sparse::SparseMatrix;

    // 7 words + 5 sentences = 12 nodes.
    fn fixture() -> (LabeledCorpus, TextGraph<f64>) {
        let l = Labels::default;
        let mut corpus = LabeledCorpus::from_texts([
            ("a b c", l().with(Task::Sa, 0).with(Task::Ei, 2)),
            ("b c d e", l().with(Task::Sa, 1).with(Task::Hs, 1)),
            ("e f g", l().with(Task::Ei, 3).with(Task::Sar, 0)),
            ("a g", l()),
            ("c d f a", l().with(Task::Sa, 0).with(Task::Hs, 0).with(Task::Ei, 1)),
        ]);
        let vocab = build_vocabulary(&mut corpus, 1).unwrap();
        let graph = build_ws_graph(&corpus, &vocab, 3, NormalizeMode::SymRenorm).unwrap();
        assert_eq!(graph.n_nodes(), 12);
        (corpus, graph)
    }

    fn config(lambda: f64, decoder: Decoder, reconstruction: ReconstructionMode) -> TrainConfig {
        TrainConfig { lambda, dim: 5, dropout: 0.0, decoder, reconstruction, seed: 11, ..TrainConfig::default() }
    }

    fn all_params(m: &mut GcnModel<f64>) -> Vec<&mut Array2<f64>> {
        let mut v = vec![&mut m.params.w0];
        if let Some(w1) = m.params.w1.as_mut() {
            v.push(w1);
        }
        v.extend(m.heads.iter_mut().map(|h| &mut h.weight));
        v
    }

    fn objective(m: &GcnModel<f64>, g: &TextGraph<f64>, r: &SentenceReadout<f64>, s: &Supervision) -> f64 {
        m.evaluate_loss(g, r, s).unwrap().objective()
    }

    /// Largest relative error between analytic and central-difference gradients.
    fn gradient_error(cfg: TrainConfig) -> f64 {
        let (corpus, graph) = fixture();
        let readout = SentenceReadout::for_graph(&graph, &corpus).unwrap();
        let sup = Supervision::from_records(&corpus, &[0, 1, 2, 3, 4], &cfg.tasks);
        let mut model = GcnModel::new(&graph, cfg).unwrap();
        model.forward(&graph, &readout, &sup, false).unwrap();
        let grads = model.backward(&graph, &readout).unwrap();
        let mut analytic = vec![Some(grads.w0.clone())];
        if model.params.w1.is_some() {
            analytic.push(grads.w1.clone());
        }
        analytic.extend(grads.heads.iter().cloned());
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for (slot, exact) in analytic.iter().enumerate() {
            let shape = all_params(&mut model)[slot].dim();
            let mut numeric = Array2::<f64>::zeros(shape);
            for idx in ndarray::indices(shape) {
                let orig = all_params(&mut model)[slot][idx];
                all_params(&mut model)[slot][idx] = orig + h;
                let up = objective(&model, &graph, &readout, &sup);
                all_params(&mut model)[slot][idx] = orig - h;
                let down = objective(&model, &graph, &readout, &sup);
                all_params(&mut model)[slot][idx] = orig;
                numeric[idx] = (up - down) / (2.0 * h);
            }
            let exact = exact.clone().unwrap_or_else(|| Array2::zeros(shape));
            let diff = (&exact - &numeric).mapv(|d| d * d).sum().sqrt();
            let scale = exact.mapv(|d| d * d).sum().sqrt().max(numeric.mapv(|d| d * d).sum().sqrt()).max(1e-8);
            worst = worst.max(diff / scale);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for decoder in [Decoder::Gcn, Decoder::Inner] {
            for recon in [ReconstructionMode::Dense, ReconstructionMode::Sampled] {
                for lambda in [0.2, 1.0] {
                    let err = gradient_error(config(lambda, decoder, recon));
                    assert!(err < 1e-4, "{decoder:?} {recon:?} λ={lambda}: {err}");
                }
            }
        }
    }

    #[test]
    fn lambda_zero_matches_plain_autoencoder() {
        let (corpus, graph) = fixture();
        let readout = SentenceReadout::for_graph(&graph, &corpus).unwrap();
        let run = |tasks: Vec<Task>| {
            let cfg = TrainConfig { lambda: 0.0, dim: 5, tasks, seed: 3, ..TrainConfig::default() };
            let sup = Supervision::from_records(&corpus, &[0, 1, 2, 3, 4], &cfg.tasks);
            let mut m = GcnModel::new(&graph, cfg).unwrap();
            let heads0 = m.heads.clone();
            let mut trace = Vec::new();
            for _ in 0..20 {
                m.forward(&graph, &readout, &sup, true).unwrap();
                let g = m.backward(&graph, &readout).unwrap();
                assert!(g.heads.iter().all(Option::is_none));
                m.adam_step(&g).unwrap();
                trace.push(m.params.clone());
            }
            assert_eq!(m.heads, heads0);
            trace
        };
        assert_eq!(run(Task::ALL.to_vec()), run(vec![]));
    }

    #[test]
    fn unlabeled_sentences_do_not_affect_gradients() {
        let (corpus, graph) = fixture();
        let readout = SentenceReadout::for_graph(&graph, &corpus).unwrap();
        let cfg = config(0.5, Decoder::Gcn, ReconstructionMode::Dense);
        let grads = |records: &[usize]| {
            let sup = Supervision::from_records(&corpus, records, &cfg.tasks);
            let mut m = GcnModel::new(&graph, cfg.clone()).unwrap();
            m.forward(&graph, &readout, &sup, false).unwrap();
            m.backward(&graph, &readout).unwrap()
        };
        // record 3 has no labels at all
        assert_eq!(grads(&[0, 1, 2, 4]), grads(&[0, 1, 2, 3, 4]));
    }

    #[test]
    fn loss_invariant_under_node_relabeling() {
        let (corpus, graph) = fixture();
        let n = graph.n_nodes();
        let cfg = TrainConfig { tasks: vec![], ..config(0.0, Decoder::Gcn, ReconstructionMode::Dense) };
        let model = GcnModel::new(&graph, cfg).unwrap();
        let readout = SentenceReadout::for_graph(&graph, &corpus).unwrap();
        let sup = Supervision::default();
        let base = model.evaluate_loss(&graph, &readout, &sup).unwrap();

        let perm: Vec<usize> = (0..n).map(|i| (i * 5 + 3) % n).collect();
        let adjacency = SparseMatrix::from_triplets(
            n,
            n,
            graph.adjacency.triplets().map(|(i, j, w)| (perm[i], perm[j], w)).collect(),
        )
        .unwrap();
        let permuted =
            TextGraph::from_adjacency(graph.kind, adjacency, graph.n_words, graph.n_sentences, graph.mode).unwrap();
        let mut moved = model.clone();
        for i in 0..n {
            moved.params.w0.row_mut(perm[i]).assign(&model.params.w0.row(i));
            let w1 = model.params.w1.as_ref().unwrap();
            moved.params.w1.as_mut().unwrap().column_mut(perm[i]).assign(&w1.column(i));
        }
        let loss = moved.evaluate_loss(&permuted, &readout, &sup).unwrap();
        assert!((loss.mse - base.mse).abs() < 1e-12);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let (corpus, graph) = fixture();
        let readout = SentenceReadout::for_graph(&graph, &corpus).unwrap();
        let cfg = TrainConfig { dim: 5, ..TrainConfig::default() };
        let sup = Supervision::from_records(&corpus, &[0, 1, 2], &cfg.tasks);
        let step = |m: &mut GcnModel<f64>| {
            m.forward(&graph, &readout, &sup, true).unwrap();
            let g = m.backward(&graph, &readout).unwrap();
            m.adam_step(&g).unwrap();
        };
        let mut a = GcnModel::new(&graph, cfg).unwrap();
        a.meta.insert("note".into(), "x".into());
        for _ in 0..3 {
            step(&mut a);
        }
        let text = a.to_checkpoint_string().unwrap();
        let mut b = GcnModel::<f64>::from_checkpoint_str(&text).unwrap();
        assert_eq!(b.to_checkpoint_string().unwrap(), text);
        assert_eq!(b.params, a.params);
        assert_eq!(b.adam, a.adam);
        for _ in 0..2 {
            step(&mut a);
            step(&mut b);
        }
        assert_eq!(a.params, b.params);
        assert_eq!(a.heads, b.heads);
    }

    #[test]
    fn checkpoint_rejects_other_formats() {
        assert!(GcnModel::<f64>::from_checkpoint_str("{}").is_err());
        let (_, graph) = fixture();
        let m = GcnModel::new(&graph, TrainConfig { dim: 2, ..TrainConfig::default() }).unwrap();
        let text = m.to_checkpoint_string().unwrap().replace("\"version\":1", "\"version\":9");
        assert!(matches!(GcnModel::<f64>::from_checkpoint_str(&text), Err(Error::Format { .. })));
    }

    #[test]
    fn backward_needs_forward() {
        let (corpus, graph) = fixture();
        let readout = SentenceReadout::for_graph(&graph, &corpus).unwrap();
        let mut m = GcnModel::new(&graph, TrainConfig { dim: 3, ..TrainConfig::default() }).unwrap();
        assert!(matches!(m.backward(&graph, &readout), Err(Error::MissingForwardState)));
    }

    #[test]
    fn joint_loss_grows_with_lambda() {
        let (corpus, graph) = fixture();
        let readout = SentenceReadout::for_graph(&graph, &corpus).unwrap();
        let base = GcnModel::new(&graph, config(0.0, Decoder::Gcn, ReconstructionMode::Dense)).unwrap();
        let sup = Supervision::from_records(&corpus, &[0, 1, 2, 4], &base.config.tasks);
        let mut last = f64::NEG_INFINITY;
        for lambda in [0.0, 0.2, 0.5, 1.0] {
            let mut m = base.clone();
            m.config.lambda = lambda;
            let t = m.evaluate_loss(&graph, &readout, &sup).unwrap().total;
            assert!(t > last);
            last = t;
        }
    }
}
