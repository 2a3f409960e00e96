"""Shared exception type for domain-rule violations (distinct from config and I/O errors)."""


class DomainError(Exception):
    """A request violates a model rule: bad scenario, unknown model, infeasible geometry."""
