"""Round-based simulation of uncertainty-gated token routing.

Each round every client predicts a fixed number of tokens. A token whose
uncertainty clears the client's threshold stays on device. Otherwise the
client opportunistically tries its semantic cache and then peer consensus,
falls back to edge validation, and finally asks the cloud model to
adjudicate. Cloud feedback drives one threshold-learning step per client per
round, followed by cluster-weighted and global averaging with a broadcast
back to every client.

All randomness flows from one seed through named per-client, per-round
streams, so reruns are bit-identical and clients may execute in parallel
without perturbing the result.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .adjudication import llm_adjudicate
from .costs import CostModel, PHitEstimator, should_attempt_p2p
from .federation import (
    AggregationReport,
    AllWeightsZero,
    ClusterTopology,
    PartitionSpec,
    cluster_aggregate,
    dirichlet_partition,
    global_aggregate,
    mixture_skew,
)
from .model_source import (
    LogitTrace,
    ModelProfile,
    TokenDistribution,
    VocabSpec,
    argmax_token,
    gen_distribution_pair,
    load_logit_trace,
)
from .peers import (
    ConsensusDecision,
    EdgeDecision,
    Embedding,
    PeerConfig,
    TokenCache,
    edge_validate,
    embedding_matrix,
    peer_consensus,
)
from .thresholds import (
    ClientRoundStats,
    LearnerConfig,
    RejectionFeedback,
    Threshold,
    loss_gradient,
    lr_schedule,
    sgd_step,
)
from .uncertainty import SamplerConfig, entropy_score, mc_disagreement

MODE_FEDHLM = "fedhlm"
MODE_RAND = "rand"
MODE_UHLM = "uhlm"
MODES = (MODE_FEDHLM, MODE_RAND, MODE_UHLM)

KIND_DISAGREEMENT = "disagreement"
KIND_ENTROPY = "entropy"

# Named sub-stream tags; every consumer of randomness gets its own lane.
_TAG_PARTITION = 1
_TAG_PROFILES = 2
_TAG_GEN = 3
_TAG_RESOLVE = 4


class ConfigInvalid(ValueError):
    """Simulation configuration violates a cross-field constraint."""


class EmptyHistory(ValueError):
    """Token entropy requested for a client that accepted no tokens."""


class Stage(enum.Enum):
    LOCAL = "local"
    P2P = "p2p"
    EDGE = "edge"
    LLM = "llm"


@dataclass(frozen=True)
class SimulationConfig:
    topology: ClusterTopology
    partition: PartitionSpec = PartitionSpec()
    profile: ModelProfile = None  # type: ignore[assignment]
    sampler: SamplerConfig = SamplerConfig()
    learner: LearnerConfig = LearnerConfig()
    peer: PeerConfig = PeerConfig()
    cost: CostModel = CostModel()
    rounds: int = 30
    tokens_per_client: int = 30
    initial_threshold: float = 0.1
    seed: int = 42
    mode: str = MODE_FEDHLM
    p_offload: float = 0.7
    static_threshold: float = 0.1
    uncertainty_kind: str = KIND_DISAGREEMENT
    cache_capacity: int = 256
    heterogeneity: float = 1.2
    skew_sharpness_coupling: float = 1.5
    skew_agreement_coupling: float = 0.3
    confusion_scale: float = 12.0
    zipf_exponent: float = 1.5
    trace_path: str | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.profile is None:
            object.__setattr__(self, "profile", ModelProfile(vocab=VocabSpec(32)))
        if self.rounds < 1:
            raise ConfigInvalid("rounds must be >= 1")
        if self.tokens_per_client < 1:
            raise ConfigInvalid("tokens_per_client must be >= 1")
        if not 0.0 <= self.initial_threshold <= 1.0:
            raise ConfigInvalid("initial_threshold must lie in [0, 1]")
        if self.seed < 0:
            raise ConfigInvalid("seed must be >= 0")
        if self.mode not in MODES:
            raise ConfigInvalid(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 <= self.p_offload <= 1.0:
            raise ConfigInvalid("p_offload must lie in [0, 1]")
        if not 0.0 <= self.static_threshold <= 1.0:
            raise ConfigInvalid("static_threshold must lie in [0, 1]")
        if self.uncertainty_kind not in (KIND_DISAGREEMENT, KIND_ENTROPY):
            raise ConfigInvalid("uncertainty_kind must be 'disagreement' or 'entropy'")
        if self.cache_capacity < 1:
            raise ConfigInvalid("cache_capacity must be >= 1")
        if self.heterogeneity < 0 or self.skew_sharpness_coupling < 0 or self.skew_agreement_coupling < 0:
            raise ConfigInvalid("heterogeneity and coupling strengths must be >= 0")
        if self.confusion_scale < 0:
            raise ConfigInvalid("confusion_scale must be >= 0")
        if self.zipf_exponent < 0:
            raise ConfigInvalid("zipf_exponent must be >= 0")
        if self.workers < 1:
            raise ConfigInvalid("workers must be >= 1")
        if self.partition.num_classes > self.profile.vocab.size:
            raise ConfigInvalid("num_classes cannot exceed the vocabulary size")


def default_config(**overrides) -> SimulationConfig:
    """The stock 20-client, 4-cluster, 30-round configuration."""
    cfg = SimulationConfig(topology=ClusterTopology(num_clients=20, num_clusters=4))
    return replace(cfg, **overrides) if overrides else cfg


@dataclass(frozen=True)
class TokenOutcome:
    stage: Stage
    final_token: int
    charged_cost: float
    uncertainty: float
    correct: bool
    rejection_prob: float | None = None
    p2p_attempted: bool = False

    def __post_init__(self) -> None:
        if self.stage is Stage.LOCAL and self.charged_cost != 0.0:
            raise ValueError("local outcomes carry zero cost")


@dataclass
class ClientState:
    """Everything a client carries across rounds."""

    client_id: int
    cluster_id: int
    profile: ModelProfile
    mixture: np.ndarray
    threshold: float
    cache: TokenCache
    estimator: PHitEstimator
    accepted_tokens: list[int] = field(default_factory=list)
    p2p_attempts: int = 0
    p2p_successes: int = 0
    llm_tokens: int = 0
    correct_tokens: int = 0
    total_tokens: int = 0


@dataclass(frozen=True)
class ClientMetrics:
    token_entropy: float
    cache_hit_ratio: float
    llm_token_count: int
    accuracy: float


@dataclass
class RoundReport:
    round_index: int
    per_client: dict[int, ClientRoundStats]
    outcomes: dict[int, list[TokenOutcome]]
    outcome_counts: dict[Stage, int]
    thresholds_local: dict[int, float]
    thresholds_after: dict[int, float]
    cluster_thresholds: tuple[float, ...]
    global_threshold: float
    total_cost: float
    avg_uncertainty: float
    rejection_rate: float
    llm_after_p2p: int


@dataclass
class SimulationReport:
    config: SimulationConfig
    rounds: list[RoundReport]
    client_metrics: dict[int, ClientMetrics]
    aggregation: list[AggregationReport]

    def outcome_totals(self) -> dict[Stage, int]:
        totals = {stage: 0 for stage in Stage}
        for rnd in self.rounds:
            for stage in Stage:
                totals[stage] += rnd.outcome_counts[stage]
        return totals

    def total_tokens(self) -> int:
        return sum(self.outcome_totals().values())

    def total_cost(self) -> float:
        return math.fsum(rnd.total_cost for rnd in self.rounds)


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for one named lane of the run's randomness."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(path)))


def client_token_entropy(history: list[int], vocab: VocabSpec) -> float:
    """Empirical entropy of accepted tokens, normalized into [0, 1] by ln(V)."""
    if len(history) == 0:
        raise EmptyHistory("client accepted no tokens")
    counts = np.bincount(np.asarray(history, dtype=np.int64), minlength=vocab.size)
    p = counts[counts > 0] / len(history)
    entropy = float(-(p * np.log(p)).sum())
    return min(max(entropy / math.log(vocab.size), 0.0), 1.0)


@dataclass
class _Workload:
    """One client-round of pre-generated prediction steps."""

    slm: list[TokenDistribution]
    llm: list[TokenDistribution]
    predicted: np.ndarray
    uncertainty: np.ndarray
    reference: np.ndarray | None = None


class SimulationState:
    """Mutable world state threaded through run_round."""

    def __init__(self, cfg: SimulationConfig):
        self.cfg = cfg
        vocab = cfg.profile.vocab
        partition_rng = substream(cfg.seed, _TAG_PARTITION)
        mixtures = dirichlet_partition(cfg.partition, cfg.topology, partition_rng)
        profile_rng = substream(cfg.seed, _TAG_PROFILES)
        multipliers = np.exp(profile_rng.normal(0.0, cfg.heterogeneity, cfg.topology.num_clients))

        self.embeddings = embedding_matrix(vocab, cfg.peer)
        self.class_regions = np.array_split(np.arange(vocab.size), cfg.partition.num_classes)
        self.zipf_cums = [_zipf_cumulative(len(region), cfg.zipf_exponent) for region in self.class_regions]

        self.trace: LogitTrace | None = None
        if cfg.trace_path is not None:
            self.trace = load_logit_trace(cfg.trace_path, vocab)
            if len(self.trace) == 0:
                raise ConfigInvalid("trace file contains no steps")

        start = cfg.static_threshold if cfg.mode == MODE_UHLM else cfg.initial_threshold
        self.clients: list[ClientState] = []
        for client_id in range(cfg.topology.num_clients):
            mixture = mixtures[client_id]
            skew = mixture_skew(mixture)
            sharpness = cfg.profile.slm_sharpness * multipliers[client_id] * math.exp(
                -cfg.skew_sharpness_coupling * skew
            )
            agreement = cfg.profile.agreement * (1.0 - cfg.skew_agreement_coupling * skew)
            profile = replace(
                cfg.profile,
                slm_sharpness=max(sharpness, 1e-6),
                agreement=min(max(agreement, 0.0), 1.0),
            )
            self.clients.append(
                ClientState(
                    client_id=client_id,
                    cluster_id=cfg.topology.assignment[client_id],
                    profile=profile,
                    mixture=mixture,
                    threshold=start,
                    cache=TokenCache(capacity=cfg.cache_capacity),
                    estimator=PHitEstimator(window=cfg.cost.p_hit_window, prior=cfg.cost.p_hit_prior),
                )
            )
        self.cluster_thresholds = [start] * cfg.topology.num_clusters
        self.cluster_members = [
            cfg.topology.members(c) for c in range(cfg.topology.num_clusters)
        ]
        self.round_index = 0


def _zipf_cumulative(width: int, exponent: float) -> np.ndarray:
    ranks = np.arange(1, width + 1, dtype=np.float64)
    weights = ranks ** (-exponent)
    weights /= weights.sum()
    return np.cumsum(weights)


def _draw_modes(state: SimulationState, client: ClientState, rng: np.random.Generator) -> np.ndarray:
    count = state.cfg.tokens_per_client
    classes = rng.choice(state.cfg.partition.num_classes, size=count, p=client.mixture)
    picks = rng.random(count)
    modes = np.empty(count, dtype=np.int64)
    for i in range(count):
        region = state.class_regions[classes[i]]
        idx = int(np.searchsorted(state.zipf_cums[classes[i]], picks[i], side="right"))
        modes[i] = region[min(idx, len(region) - 1)]
    return modes


def _score(state: SimulationState, dist: TokenDistribution, rng: np.random.Generator) -> float:
    cfg = state.cfg
    if cfg.uncertainty_kind == KIND_ENTROPY:
        # Normalized by ln(V) so the score is comparable with thresholds in [0, 1].
        return entropy_score(dist).value / math.log(cfg.profile.vocab.size)
    return mc_disagreement(dist, cfg.sampler, rng).value


def _generate_workload(state: SimulationState, client: ClientState, round_index: int) -> _Workload:
    cfg = state.cfg
    rng = substream(cfg.seed, _TAG_GEN, client.client_id, round_index)
    count = cfg.tokens_per_client
    slm_list: list[TokenDistribution] = []
    llm_list: list[TokenDistribution] = []
    predicted = np.empty(count, dtype=np.int64)
    uncertainty = np.empty(count, dtype=np.float64)
    reference: np.ndarray | None = None

    if state.trace is not None:
        reference = np.empty(count, dtype=np.int64)
        base = (client.client_id * cfg.rounds + round_index) * count
        for t in range(count):
            step = state.trace.steps[(base + t) % len(state.trace)]
            slm_list.append(step.slm)
            llm_list.append(step.llm)
            reference[t] = step.reference_token
            predicted[t] = argmax_token(step.slm)
            uncertainty[t] = _score(state, step.slm, rng)
    else:
        modes = _draw_modes(state, client, rng)
        # A weaker small model sometimes lands on the wrong token entirely,
        # scattering its confident predictions across the vocabulary.
        miss_rate = min(0.5, cfg.confusion_scale / client.profile.slm_sharpness)
        if miss_rate > 0.0:
            flips = rng.random(count) < miss_rate
            scattered = rng.integers(cfg.profile.vocab.size, size=count)
            modes = np.where(flips, scattered, modes)
        for t in range(count):
            slm, llm = gen_distribution_pair(client.profile, rng, mode=int(modes[t]))
            slm_list.append(slm)
            llm_list.append(llm)
            predicted[t] = argmax_token(slm)
            uncertainty[t] = _score(state, slm, rng)
    return _Workload(slm_list, llm_list, predicted, uncertainty, reference)


class _PeerView:
    """Per-round view of every client's published prediction embeddings.

    Clients publish the embedding of their predicted token at every
    timestep, local or not, so peers and the edge tier always have a
    same-timestep snapshot to compare against.
    """

    def __init__(self, state: SimulationState, workloads: dict[int, _Workload]):
        self._emb = state.embeddings
        self._members = state.cluster_members
        self._predicted = {cid: wl.predicted for cid, wl in workloads.items()}
        self._cluster_means: dict[tuple[int, int], Embedding | None] = {}

    def peer_embeddings(self, client_id: int, cluster_id: int, t: int) -> list[Embedding]:
        return [
            Embedding(self._emb[self._predicted[peer][t]])
            for peer in self._members[cluster_id]
            if peer != client_id
        ]

    def edge_centroids(self, cluster_id: int, t: int) -> list[Embedding]:
        centroids = []
        for other in range(len(self._members)):
            if other == cluster_id:
                continue
            key = (other, t)
            if key not in self._cluster_means:
                rows = self._emb[[self._predicted[m][t] for m in self._members[other]]]
                mean = rows.mean(axis=0)
                norm = float(np.linalg.norm(mean))
                self._cluster_means[key] = Embedding(mean) if norm > 1e-12 else None
            cached = self._cluster_means[key]
            if cached is not None:
                centroids.append(cached)
        return centroids


def resolve_token(
    client: ClientState,
    slm: TokenDistribution,
    llm: TokenDistribution,
    peer_embeddings: list[Embedding],
    edge_centroids: list[Embedding],
    cfg: SimulationConfig,
    rng: np.random.Generator,
    stats: ClientRoundStats,
    uncertainty: float | None = None,
    reference_token: int | None = None,
) -> TokenOutcome:
    """Route one token through the retain / cache / consensus / edge / cloud pipeline."""
    predicted = argmax_token(slm)
    if uncertainty is None:
        uncertainty = _score_standalone(slm, cfg, rng)
    emb_row = embedding_matrix(cfg.profile.vocab, cfg.peer)

    if uncertainty <= client.threshold:
        final = predicted
        outcome = TokenOutcome(Stage.LOCAL, final, 0.0, uncertainty, _is_correct(final, llm, reference_token))
        _note_outcome(client, outcome)
        return outcome

    stats.transmitted_count += 1
    cost = cfg.cost
    attempted = should_attempt_p2p(client.estimator.estimate(), cost)
    if attempted:
        client.p2p_attempts += 1
        own = Embedding(emb_row[predicted])
        hit = client.cache.lookup(own, cfg.peer)
        if hit.token is not None:
            client.estimator.record(True)
            client.p2p_successes += 1
            final = hit.token
            outcome = TokenOutcome(
                Stage.P2P,
                final,
                cost.c_p2p,
                uncertainty,
                _is_correct(final, llm, reference_token),
                p2p_attempted=True,
            )
            _note_outcome(client, outcome)
            return outcome
        if peer_consensus(own, peer_embeddings, cfg.peer) is ConsensusDecision.ACCEPT_LOCAL:
            client.estimator.record(True)
            client.p2p_successes += 1
            client.cache.insert(own, predicted)
            outcome = TokenOutcome(
                Stage.P2P,
                predicted,
                cost.c_p2p,
                uncertainty,
                _is_correct(predicted, llm, reference_token),
                p2p_attempted=True,
            )
            _note_outcome(client, outcome)
            return outcome
        client.estimator.record(False)
        if edge_validate(own, edge_centroids, cfg.peer) is EdgeDecision.ACCEPT:
            client.cache.insert(own, predicted)
            outcome = TokenOutcome(
                Stage.EDGE,
                predicted,
                cost.c_p2p,
                uncertainty,
                _is_correct(predicted, llm, reference_token),
                p2p_attempted=True,
            )
            _note_outcome(client, outcome)
            return outcome

    result = llm_adjudicate(slm, llm, predicted, rng)
    final = result.final_token
    client.cache.insert(Embedding(emb_row[final]), final)
    client.llm_tokens += 1
    stats.feedback.append(
        RejectionFeedback(uncertainty=uncertainty, rejection_prob=result.rejection_prob, token=predicted)
    )
    charged = cost.c_p2p + cost.c_llm if attempted else cost.c_llm
    outcome = TokenOutcome(
        Stage.LLM,
        final,
        charged,
        uncertainty,
        _is_correct(final, llm, reference_token),
        rejection_prob=result.rejection_prob,
        p2p_attempted=attempted,
    )
    _note_outcome(client, outcome)
    return outcome


def _score_standalone(slm: TokenDistribution, cfg: SimulationConfig, rng: np.random.Generator) -> float:
    if cfg.uncertainty_kind == KIND_ENTROPY:
        return entropy_score(slm).value / math.log(cfg.profile.vocab.size)
    return mc_disagreement(slm, cfg.sampler, rng).value


def _is_correct(final: int, llm: TokenDistribution, reference: int | None) -> bool:
    target = reference if reference is not None else argmax_token(llm)
    return final == target


def _note_outcome(client: ClientState, outcome: TokenOutcome) -> None:
    client.accepted_tokens.append(outcome.final_token)
    client.total_tokens += 1
    if outcome.correct:
        client.correct_tokens += 1


def _resolve_client_round(
    state: SimulationState,
    client: ClientState,
    round_index: int,
    workload: _Workload,
    view: _PeerView,
) -> tuple[list[TokenOutcome], ClientRoundStats]:
    cfg = state.cfg
    rng = substream(cfg.seed, _TAG_RESOLVE, client.client_id, round_index)
    stats = ClientRoundStats(client_id=client.client_id)
    outcomes: list[TokenOutcome] = []
    for t in range(cfg.tokens_per_client):
        reference = int(workload.reference[t]) if workload.reference is not None else None
        if cfg.mode == MODE_FEDHLM:
            outcome = resolve_token(
                client,
                workload.slm[t],
                workload.llm[t],
                view.peer_embeddings(client.client_id, client.cluster_id, t),
                view.edge_centroids(client.cluster_id, t),
                cfg,
                rng,
                stats,
                uncertainty=float(workload.uncertainty[t]),
                reference_token=reference,
            )
        else:
            outcome = _resolve_baseline(state, client, workload, t, rng, stats, reference)
        outcomes.append(outcome)
    return outcomes, stats


def _resolve_baseline(
    state: SimulationState,
    client: ClientState,
    workload: _Workload,
    t: int,
    rng: np.random.Generator,
    stats: ClientRoundStats,
    reference: int | None,
) -> TokenOutcome:
    cfg = state.cfg
    slm, llm = workload.slm[t], workload.llm[t]
    predicted = int(workload.predicted[t])
    u = float(workload.uncertainty[t])
    if cfg.mode == MODE_RAND:
        offload = rng.random() < cfg.p_offload
    else:
        offload = u > cfg.static_threshold
    if not offload:
        outcome = TokenOutcome(Stage.LOCAL, predicted, 0.0, u, _is_correct(predicted, llm, reference))
        _note_outcome(client, outcome)
        return outcome
    stats.transmitted_count += 1
    result = llm_adjudicate(slm, llm, predicted, rng)
    client.llm_tokens += 1
    stats.feedback.append(
        RejectionFeedback(uncertainty=u, rejection_prob=result.rejection_prob, token=predicted)
    )
    outcome = TokenOutcome(
        Stage.LLM,
        result.final_token,
        cfg.cost.c_llm,
        u,
        _is_correct(result.final_token, llm, reference),
        rejection_prob=result.rejection_prob,
    )
    _note_outcome(client, outcome)
    return outcome


def run_round(state: SimulationState, round_index: int) -> RoundReport:
    """Advance the world by one round and report what happened."""
    cfg = state.cfg
    clients = state.clients

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            workloads = dict(
                zip(
                    [c.client_id for c in clients],
                    pool.map(lambda c: _generate_workload(state, c, round_index), clients),
                )
            )
    else:
        workloads = {c.client_id: _generate_workload(state, c, round_index) for c in clients}

    view = _PeerView(state, workloads)
    # Edge centroids are cached inside the view; prefill sequentially so the
    # parallel path never races on the cache dict.
    if cfg.workers > 1 and cfg.mode == MODE_FEDHLM:
        for cluster_id in range(cfg.topology.num_clusters):
            for t in range(cfg.tokens_per_client):
                view.edge_centroids(cluster_id, t)

    def resolve(client: ClientState):
        return _resolve_client_round(state, client, round_index, workloads[client.client_id], view)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            resolved = list(pool.map(resolve, clients))
    else:
        resolved = [resolve(c) for c in clients]

    outcomes = {c.client_id: res[0] for c, res in zip(clients, resolved)}
    per_client = {c.client_id: res[1] for c, res in zip(clients, resolved)}

    thresholds_local: dict[int, float] = {}
    if cfg.mode == MODE_FEDHLM:
        for client in clients:
            stats = per_client[client.client_id]
            grad = loss_gradient(stats.feedback, client.threshold, cfg.learner)
            eta = lr_schedule(cfg.learner.eta0, round_index)
            updated = sgd_step(Threshold(client.threshold), grad, eta, round_index)
            thresholds_local[client.client_id] = updated.value

        cluster_values: list[float] = []
        for cluster_id, members in enumerate(state.cluster_members):
            values = [thresholds_local[m] for m in members]
            weights = [per_client[m].transmitted_count for m in members]
            try:
                cluster_values.append(cluster_aggregate(values, weights))
            except AllWeightsZero:
                cluster_values.append(state.cluster_thresholds[cluster_id])
        state.cluster_thresholds = cluster_values
        global_threshold = global_aggregate(cluster_values)
        for client in clients:
            client.threshold = global_threshold
    else:
        for client in clients:
            thresholds_local[client.client_id] = client.threshold
        global_threshold = clients[0].threshold

    thresholds_after = {c.client_id: c.threshold for c in clients}

    counts = {stage: 0 for stage in Stage}
    llm_after_p2p = 0
    all_u: list[float] = []
    betas: list[float] = []
    cost_total = []
    for client in clients:
        for outcome in outcomes[client.client_id]:
            counts[outcome.stage] += 1
            all_u.append(outcome.uncertainty)
            cost_total.append(outcome.charged_cost)
            if outcome.stage is Stage.LLM:
                betas.append(outcome.rejection_prob)
                if outcome.p2p_attempted:
                    llm_after_p2p += 1

    report = RoundReport(
        round_index=round_index,
        per_client=per_client,
        outcomes=outcomes,
        outcome_counts=counts,
        thresholds_local=thresholds_local,
        thresholds_after=thresholds_after,
        cluster_thresholds=tuple(state.cluster_thresholds),
        global_threshold=global_threshold,
        total_cost=math.fsum(cost_total),
        avg_uncertainty=math.fsum(all_u) / len(all_u),
        rejection_rate=math.fsum(betas) / len(betas) if betas else 0.0,
        llm_after_p2p=llm_after_p2p,
    )
    state.round_index = round_index + 1
    return report


def _finish(state: SimulationState, rounds: list[RoundReport]) -> SimulationReport:
    cfg = state.cfg
    metrics: dict[int, ClientMetrics] = {}
    for client in state.clients:
        entropy = client_token_entropy(client.accepted_tokens, cfg.profile.vocab)
        hit_ratio = client.p2p_successes / client.p2p_attempts if client.p2p_attempts else 0.0
        metrics[client.client_id] = ClientMetrics(
            token_entropy=entropy,
            cache_hit_ratio=hit_ratio,
            llm_token_count=client.llm_tokens,
            accuracy=client.correct_tokens / client.total_tokens,
        )
    aggregation = [
        AggregationReport(
            round_index=r.round_index,
            cluster_thresholds=r.cluster_thresholds,
            global_threshold=r.global_threshold,
        )
        for r in rounds
    ]
    return SimulationReport(cfg, rounds, metrics, aggregation)


def run_simulation(cfg: SimulationConfig) -> SimulationReport:
    """Run the learned-threshold pipeline for cfg.rounds rounds."""
    if cfg.mode != MODE_FEDHLM:
        raise ConfigInvalid(f"run_simulation handles mode '{MODE_FEDHLM}'; use run_baseline for {cfg.mode!r}")
    state = SimulationState(cfg)
    rounds = [run_round(state, r) for r in range(cfg.rounds)]
    return _finish(state, rounds)


def run_baseline(cfg: SimulationConfig) -> SimulationReport:
    """Run a non-learning baseline: random offloading or a static threshold."""
    if cfg.mode == MODE_FEDHLM:
        raise ConfigInvalid("run_baseline requires mode 'rand' or 'uhlm'")
    state = SimulationState(cfg)
    rounds = [run_round(state, r) for r in range(cfg.rounds)]
    return _finish(state, rounds)


def run(cfg: SimulationConfig) -> SimulationReport:
    """Dispatch to run_simulation or run_baseline based on cfg.mode."""
    if cfg.mode == MODE_FEDHLM:
        return run_simulation(cfg)
    return run_baseline(cfg)
