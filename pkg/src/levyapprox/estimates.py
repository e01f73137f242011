from dataclasses import dataclass, field, asdict
import math


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate together with its standard error and provenance."""

    value: float
    std_error: float
    paths: int
    seed: int
    method: str = ""
    info: dict = field(default_factory=dict, compare=False)

    def contains(self, target, n_se=3.0, slack=0.0):
        """True if ``target`` lies within ``n_se`` standard errors (plus ``slack``)."""
        return abs(self.value - target) <= n_se * self.std_error + slack

    def to_dict(self):
        d = asdict(self)
        d["info"] = {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                     for k, v in self.info.items()}
        return d


def mean_and_se(samples):
    """Sample mean and its standard error, summed pairwise (numpy's default)."""
    import numpy as np

    x = np.asarray(samples, dtype=float)
    n = x.size
    m = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return m, se


def root_estimate(sq_samples, paths, seed, method, **info):
    """L2-norm estimate ``sqrt(E[Z^2])`` from samples of ``Z^2`` with a delta-method SE."""
    m, se = mean_and_se(sq_samples)
    value = math.sqrt(max(m, 0.0))
    if value > 0.0:
        se_root = se / (2.0 * value)
    else:
        se_root = math.sqrt(se) if se > 0 else 0.0
    info = dict(info, mean_square=m, mean_square_se=se)
    return McEstimate(value, se_root, paths, seed, method, info)
