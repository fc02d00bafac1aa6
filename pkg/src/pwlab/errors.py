"""Exception types raised across pwlab."""


class PilotWaveError(Exception):
    """Base class for every error pwlab raises on purpose."""


class NodeProximity(PilotWaveError):
    """A query touched a grid node where |psi|^2 is below the node floor."""

    def __init__(self, message, time=None, location=None):
        super().__init__(message)
        self.time = time
        self.location = location


class OutOfSpan(PilotWaveError):
    """Requested time lies outside the stored evolution record."""


class DegenerateDensity(PilotWaveError):
    """Density has (numerically) no mass to sample from."""


class DegenerateEnsemble(PilotWaveError):
    """Too much ensemble weight was lost during transport."""

    def __init__(self, message, dropped_weight=None):
        super().__init__(message)
        self.dropped_weight = dropped_weight


class PacketTruncated(PilotWaveError):
    """An initial packet leaks more than the allowed mass past the box."""


class NonFinite(PilotWaveError):
    """A propagated quantity became NaN or infinite."""


class SupportWrap(PilotWaveError):
    """A coordinate transform would alias support across the periodic box."""


class ConfigInvalid(PilotWaveError):
    """CLI configuration failed schema or semantic validation."""
