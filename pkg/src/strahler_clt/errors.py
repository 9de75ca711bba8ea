class DomainError(ValueError):
    """Argument outside the domain an operation is defined on."""


class StructureError(ValueError):
    """A tree record violates the full-binary-tree invariants."""
