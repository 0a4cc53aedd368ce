from typing import Dict, Optional

from pydantic import Field

from recovgraph.models.schemas import (
    ArrayModel,
    CorrelationStructure,
    GraphSampleSet,
    ManifestEntry,
    RawSession,
    SessionSeries,
    SessionStatus,
)


class SessionContext(ArrayModel):
    entry: ManifestEntry
    status: SessionStatus = SessionStatus.pending
    error: Optional[str] = None
    raw: Optional[RawSession] = None
    series: Optional[SessionSeries] = None
    correlation: Optional[CorrelationStructure] = None
    samples: Optional[GraphSampleSet] = None
    timings: Dict[str, float] = Field(default_factory=dict)

    @property
    def key(self) -> str:
        return self.entry.key
