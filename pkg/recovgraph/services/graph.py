import logging
import math
import zlib
from typing import NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import integrate, special

from recovgraph.core.errors import ContractError
from recovgraph.models.schemas import GraphRealization, GraphSampleSet, Proposal

logger = logging.getLogger(__name__)

PROPOSAL_FLOOR = 1e-6
# spawn-key namespaces; synthetic session data uses 0
PAIR_STREAM = 1
SESSION_STREAM = 2
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def pair_indices(n_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Node pairs (s, s') with s < s' in row-major upper-triangle order."""
    return np.triu_indices(n_nodes, k=1)


def bracket_by_quadrature(s_val: float, u_bound: float = 1.0) -> float:
    # v = w**2 removes the v**-0.5 singularity at the origin
    def integrand(w: float) -> float:
        return 2.0 / math.sqrt(2.0 * math.pi) * math.exp(-s_val * s_val / (2.0 * w * w))

    value, _ = integrate.quad(integrand, 0.0, math.sqrt(u_bound), epsabs=1e-13, epsrel=1e-12, limit=200)
    return value


def edge_marginal_bracket(s_val, u_bound: float = 1.0):
    """Variance-marginalised edge likelihood f(S) = integral_0^u (2 pi v)^-1/2 exp(-S^2 / 2v) dv.

    Closed form for u = 1: sqrt(2/pi) exp(-S^2/2) - S erfc(S / sqrt(2)).
    Works on scalars and arrays.
    """
    s_val = np.asarray(s_val, dtype=float)
    if u_bound == 1.0:
        result = SQRT_2_OVER_PI * np.exp(-s_val**2 / 2.0) - s_val * special.erfc(s_val / math.sqrt(2.0))
    else:
        result = np.vectorize(bracket_by_quadrature, otypes=[float])(s_val, u_bound)
    return result if result.ndim else float(result)


class EdgeMarginal(BaseModel):
    psi: float = Field(ge=-1, le=1)
    u_bound: float = Field(default=1.0, gt=0)
    normalizer: float = Field(gt=0)
    bracket_absent: float
    bracket_present: float

    def probability(self, g: int) -> float:
        return self.normalizer * (self.bracket_present if g else self.bracket_absent)


def edge_marginal(psi: float, u_bound: float = 1.0) -> EdgeMarginal:
    magnitude = min(abs(float(psi)), 1.0)
    # S(g) = |g - |psi||
    absent = edge_marginal_bracket(magnitude, u_bound)
    present = edge_marginal_bracket(1.0 - magnitude, u_bound)
    return EdgeMarginal(
        psi=float(np.clip(psi, -1.0, 1.0)),
        u_bound=u_bound,
        normalizer=1.0 / (absent + present),
        bracket_absent=absent,
        bracket_present=present,
    )


def edge_posterior(g: int, psi: float, u_bound: float = 1.0) -> float:
    return edge_marginal(psi, u_bound).probability(g)


def edge_posterior_table(psi: np.ndarray, u_bound: float = 1.0) -> np.ndarray:
    """(E, 2) array of [m(0|psi), m(1|psi)] for every pair."""
    magnitude = np.minimum(np.abs(np.asarray(psi, dtype=float)), 1.0)
    absent = edge_marginal_bracket(magnitude, u_bound)
    present = edge_marginal_bracket(1.0 - magnitude, u_bound)
    total = absent + present
    return np.stack([absent / total, present / total], axis=-1)


class PairDraw(NamedTuple):
    edges: np.ndarray
    attempts: int
    direct: bool


class RejectionSampler:
    """Rejection sampler for a binary edge variable.

    Proposes g from the proposal density q, accepts when u <= m(g) / (C q(g))
    with C = max_g m(g) / q(g). Attempts are drawn in blocks per row; rows
    left unresolved by a block get another one sized from the envelope.
    """

    def __init__(
        self,
        proposal: Proposal = Proposal.uniform,
        block_width: int = 8,
        attempt_budget: float = 5e8,
        chunk_size: int = 4_000_000,
    ):
        self.proposal = Proposal(proposal)
        self.block_width = block_width
        self.attempt_budget = attempt_budget
        self.chunk_size = chunk_size

    def proposal_probability(self, psi: float) -> Tuple[float, bool]:
        """Probability the proposal puts on g = 1, and whether it was clamped."""
        if self.proposal is Proposal.uniform:
            return 0.5, False
        magnitude = abs(psi)
        clamped = min(max(magnitude, PROPOSAL_FLOOR), 1.0 - PROPOSAL_FLOOR)
        return clamped, bool(clamped != magnitude)

    def draw(self, marginal: EdgeMarginal, n: int, rng: np.random.Generator) -> PairDraw:
        q1, _ = self.proposal_probability(marginal.psi)
        target = np.array([marginal.probability(0), marginal.probability(1)])
        proposal = np.array([1.0 - q1, q1])
        envelope = float(np.max(target / proposal))
        accept = target / (envelope * proposal)

        if n * envelope > self.attempt_budget:
            return PairDraw(rng.random(n) < target[1], n, True)

        edges = np.zeros(n, dtype=bool)
        pending = np.arange(n)
        attempts = 0
        width = self.block_width
        while pending.size:
            rows_per_chunk = max(1, self.chunk_size // width)
            unresolved = []
            for start in range(0, pending.size, rows_per_chunk):
                rows = pending[start:start + rows_per_chunk]
                proposed = rng.random((rows.size, width)) < q1
                uniforms = rng.random((rows.size, width))
                ok = uniforms <= accept[proposed.astype(np.intp)]

                hit = ok.any(axis=1)
                first = ok.argmax(axis=1)
                idx = np.nonzero(hit)[0]
                edges[rows[idx]] = proposed[idx, first[idx]]
                attempts += int(first[idx].sum()) + idx.size + width * (rows.size - idx.size)
                unresolved.append(rows[~hit])
            pending = np.concatenate(unresolved)
            width = max(self.block_width, min(math.ceil(2 * envelope), 4096))

        return PairDraw(edges, attempts, False)


def direct_draw(marginal: EdgeMarginal, n: int, rng: np.random.Generator) -> PairDraw:
    return PairDraw(rng.random(n) < marginal.probability(1), n, True)


def session_seed(seed: int, session_key: str) -> int:
    """Independent 64-bit seed for one session, derived from the run seed and the session key."""
    token = zlib.crc32(session_key.encode("utf-8"))
    state = np.random.SeedSequence(seed, spawn_key=(SESSION_STREAM, token)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def pair_rng(seed: int, pair: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(PAIR_STREAM, pair)))


def _log_posterior(edges: np.ndarray, psi: np.ndarray, u_bound: float) -> np.ndarray:
    log_table = np.log(edge_posterior_table(psi, u_bound))
    return np.where(edges, log_table[:, 1], log_table[:, 0]).sum(axis=1)


def sample_edges(
    partial: np.ndarray,
    n: int,
    proposal: Optional[Proposal] = None,
    seed: int = 0,
    *,
    u_bound: float = 1.0,
    direct: bool = False,
    sampler: Optional[RejectionSampler] = None,
) -> GraphSampleSet:
    if n < 1:
        raise ValueError(f"number of samples must be positive, got {n}")
    partial = np.asarray(partial, dtype=float)
    n_nodes = partial.shape[0]
    rows, cols = pair_indices(n_nodes)
    psi = partial[rows, cols]

    if sampler is None:
        sampler = RejectionSampler(proposal or Proposal.uniform)
    elif proposal is not None and Proposal(proposal) is not sampler.proposal:
        raise ContractError(f"proposal {Proposal(proposal).value} conflicts with the sampler's {sampler.proposal.value}")

    edges = np.empty((n, psi.size), dtype=bool)
    acceptance = np.empty(psi.size)
    direct_pairs = []
    clamped = False

    for pair, value in enumerate(psi):
        marginal = edge_marginal(value, u_bound)
        rng = pair_rng(seed, pair)
        draw = direct_draw(marginal, n, rng) if direct else sampler.draw(marginal, n, rng)
        edges[:, pair] = draw.edges
        acceptance[pair] = n / draw.attempts
        clamped = clamped or sampler.proposal_probability(value)[1]
        if draw.direct and not direct:
            direct_pairs.append(pair)

    if clamped and not direct:
        logger.warning("Bernoulli proposal clamped to [%g, %g] for at least one pair", PROPOSAL_FLOOR, 1 - PROPOSAL_FLOOR)
    if direct_pairs:
        logger.warning("%d pair(s) exceeded the rejection budget and were drawn directly", len(direct_pairs))

    return GraphSampleSet(
        n_samples=n,
        n_nodes=n_nodes,
        edges=edges,
        log_posterior=_log_posterior(edges, psi, u_bound),
        edge_freq=edges.mean(axis=0),
        proposal=sampler.proposal,
        rng_seed=seed,
        proposal_clamped=clamped and not direct,
        acceptance_rate=acceptance,
        direct_pairs=direct_pairs,
    )


def graph_log_posterior(sample_set: GraphSampleSet, partial: np.ndarray, u_bound: float = 1.0) -> np.ndarray:
    partial = np.asarray(partial, dtype=float)
    if partial.shape != (sample_set.n_nodes, sample_set.n_nodes):
        raise ContractError(
            f"partial correlation is {partial.shape}, sample set has {sample_set.n_nodes} nodes"
        )
    rows, cols = pair_indices(sample_set.n_nodes)
    return _log_posterior(sample_set.edges, partial[rows, cols], u_bound)


def realize_graph(sample_set: GraphSampleSet, tau: float) -> GraphRealization:
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    rows, cols = pair_indices(sample_set.n_nodes)
    adjacency = np.zeros((sample_set.n_nodes, sample_set.n_nodes), dtype=np.int8)
    adjacency[rows, cols] = sample_set.edge_freq >= tau
    adjacency[cols, rows] = adjacency[rows, cols]
    return GraphRealization(adjacency=adjacency, tau=tau)
