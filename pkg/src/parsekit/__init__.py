"""Multi-task NLP annotation with shared encoding and a batching REST server.

Typical native use::

    import parsekit
    nlp = parsekit.load("LEM_POS_NER_DEP_SDP_CON_AMR_EN")
    doc = nlp(["Emory", "NLP", "is", "in", "Atlanta"])

``doc`` is a :class:`~parsekit.document.Document` whose JSON form holds one
key per task.  The same annotations are served over HTTP by
``parsekit serve`` (see :mod:`parsekit.server`).
"""

from .document import (
    AmrTriple,
    Constituent,
    CorefMention,
    DepArc,
    Document,
    DocumentError,
    EntitySpan,
    PenmanError,
    TASK_ORDER,
    amr_to_penman,
    bracketed_to_con,
    con_to_bracketed,
    doc_from_json,
    doc_to_json,
    penman_to_amr,
)
from .pipeline import (
    ModelRegistry,
    Pipeline,
    PipelineConfig,
    PipelineError,
    RegistryError,
    load,
    parse_identifier,
    registry_for,
)
from .sampler import BatchAssignment, BatchSpec, SamplerError, build_batches, restore_order
from .server import ServerConfig, Service, serve, start_server

__version__ = "0.1.0"

__all__ = [
    "AmrTriple",
    "BatchAssignment",
    "BatchSpec",
    "Constituent",
    "CorefMention",
    "DepArc",
    "Document",
    "DocumentError",
    "EntitySpan",
    "ModelRegistry",
    "PenmanError",
    "Pipeline",
    "PipelineConfig",
    "PipelineError",
    "RegistryError",
    "SamplerError",
    "ServerConfig",
    "Service",
    "TASK_ORDER",
    "amr_to_penman",
    "bracketed_to_con",
    "build_batches",
    "con_to_bracketed",
    "doc_from_json",
    "doc_to_json",
    "load",
    "parse_identifier",
    "penman_to_amr",
    "registry_for",
    "restore_order",
    "serve",
    "start_server",
    "__version__",
]
