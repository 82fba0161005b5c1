"""Service layer: pydantic wire models, operations, and the FastAPI app."""

from . import ops, schemas  # noqa: F401
