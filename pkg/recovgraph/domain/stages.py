from typing import Sequence

from recovgraph.domain.context import SessionContext
from recovgraph.models.schemas import Proposal
from recovgraph.services import correlation, graph, ingest


class IngestStage:

    def __init__(self, n_joints: int = 20):
        self.n_joints = n_joints

    def run(self, ctx: SessionContext) -> SessionContext:
        if ctx.raw is None:
            ctx.raw = ingest.read_session_csv(ctx.entry, n_joints=self.n_joints)
        if ctx.series is None:
            ctx.series = ingest.prepare_session(ctx.raw)
        return ctx


class CorrelationStage:

    def __init__(self, ridge_ladder: Sequence[float], cond_limit: float = 1e12):
        self.ridge_ladder = list(ridge_ladder)
        self.cond_limit = cond_limit

    def run(self, ctx: SessionContext) -> SessionContext:
        if ctx.correlation is None:
            if ctx.series is None:
                raise ValueError("Standardised series required before estimating correlations")
            ctx.correlation = correlation.correlation_structure(ctx.series, self.ridge_ladder, self.cond_limit)
        return ctx


class SamplingStage:

    def __init__(
        self,
        n_samples: int,
        proposal: Proposal,
        seed: int,
        u_bound: float = 1.0,
        direct: bool = False,
    ):
        self.n_samples = n_samples
        self.seed = seed
        self.u_bound = u_bound
        self.direct = direct
        self.sampler = graph.RejectionSampler(proposal)

    def run(self, ctx: SessionContext) -> SessionContext:
        if ctx.samples is None:
            if ctx.correlation is None:
                raise ValueError("Partial correlations required before sampling graphs")
            ctx.samples = graph.sample_edges(
                ctx.correlation.partial,
                self.n_samples,
                seed=graph.session_seed(self.seed, ctx.key),
                u_bound=self.u_bound,
                direct=self.direct,
                sampler=self.sampler,
            )
        return ctx
