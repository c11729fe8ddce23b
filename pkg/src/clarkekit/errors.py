"""Exception types raised across the package."""


class InputError(ValueError):
    """Malformed input: dimension mismatch, bad schema, dimension cap exceeded."""


class OriginMissing(InputError):
    pass


class PointNotInSet(InputError):
    pass


class PointOutsideDomain(InputError):
    pass


class UnsupportedPair(InputError):
    pass


class NotHypertangent(Exception):
    """No grid value of eta passes the hypertangent tube test."""


class NoWitness(Exception):
    """The constructive witness search failed; the certificate it was given is defective."""


class SamplingStarved(Exception):
    """Rejection sampling found no point of the set inside the requested ball."""
