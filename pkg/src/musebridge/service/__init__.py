"""HTTP job service: filesystem-backed job manager plus the FastAPI app."""

from .app import create_app
from .jobs import InvalidState, JobManager, JobNotFound, PayloadTooLarge, UnsupportedMedia

__all__ = [
    "InvalidState",
    "JobManager",
    "JobNotFound",
    "PayloadTooLarge",
    "UnsupportedMedia",
    "create_app",
]
