"""Inference backend adapters: protocols, config, mock and HTTP implementations."""

from .base import (
    BackendConfig,
    BackendSuite,
    CaptionerBackend,
    ClassifierBackend,
    EmbedderBackend,
    LlmBackend,
    MusicBackend,
    MusicPayload,
)
from .mock import (
    MockCaptioner,
    MockClassifier,
    MockEmbedder,
    MockLlm,
    MockMusicGenerator,
    mock_suite,
)

__all__ = [
    "BackendConfig",
    "BackendSuite",
    "CaptionerBackend",
    "ClassifierBackend",
    "EmbedderBackend",
    "LlmBackend",
    "MockCaptioner",
    "MockClassifier",
    "MockEmbedder",
    "MockLlm",
    "MockMusicGenerator",
    "MusicBackend",
    "MusicPayload",
    "build_backend",
    "build_suite",
    "mock_suite",
]


def build_backend(role: str, config: "BackendConfig"):
    """Instantiate one backend for ``role`` from its config.

    ``mock://`` base URLs resolve to the in-process deterministic mocks;
    ``http://`` and ``https://`` resolve to the wire clients.
    """
    from . import http as http_backends
    from . import mock as mock_backends

    scheme = config.base_url.split("://", 1)[0].lower() if "://" in config.base_url else ""
    if scheme == "mock":
        table = {
            "captioner": mock_backends.MockCaptioner,
            "llm": mock_backends.MockLlm,
            "music": mock_backends.MockMusicGenerator,
            "embedder": mock_backends.MockEmbedder,
            "classifier": mock_backends.MockClassifier,
        }
    elif scheme in ("http", "https"):
        table = {
            "captioner": http_backends.HttpCaptioner,
            "llm": http_backends.HttpLlm,
            "music": http_backends.HttpMusicGenerator,
            "embedder": http_backends.HttpEmbedder,
            "classifier": http_backends.HttpClassifier,
        }
    else:
        raise ValueError(f"unsupported backend URL scheme in {config.base_url!r}")
    try:
        cls = table[role]
    except KeyError:
        raise ValueError(f"unknown backend role {role!r}") from None
    return cls(config)


def build_suite(configs: "dict[str, BackendConfig]") -> "BackendSuite":
    """Build a full suite from per-role configs.

    ``captioner``, ``llm``, and ``music`` are required; ``embedder`` and
    ``classifier`` are optional and only needed for evaluation runs.
    """
    for role in ("captioner", "llm", "music"):
        if role not in configs:
            raise ValueError(f"missing backend config for role {role!r}")
    return BackendSuite(
        captioner=build_backend("captioner", configs["captioner"]),
        llm=build_backend("llm", configs["llm"]),
        music=build_backend("music", configs["music"]),
        embedder=build_backend("embedder", configs["embedder"]) if "embedder" in configs else None,
        classifier=build_backend("classifier", configs["classifier"])
        if "classifier" in configs
        else None,
    )
