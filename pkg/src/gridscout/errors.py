"""Exception taxonomy shared across backends and the pipeline."""


class BackendError(Exception):
    """A probe or QA backend failed; the owning item aborts, not the batch."""
