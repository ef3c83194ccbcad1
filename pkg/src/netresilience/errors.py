"""Exception types shared across the package."""


class GraphInputError(ValueError):
    """Malformed graph input: parse failures or graph invariant violations."""


class EdgelessGraphError(ValueError):
    """Operation undefined on a graph without edges."""


class EigensolverError(RuntimeError):
    """Iterative eigensolver failed to converge."""
