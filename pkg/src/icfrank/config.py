from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class RunConfig:
    """Resolved parameters for one CLI run.

    Defaults: window 50 and K = 50 subseries (the values the method was
    tuned with on 24 h records), two mode functions, 1000 stability repeats
    with 50 healthy / 30 CHF subjects per training split.
    """

    window: int = 50
    num_modes: int = 2
    subseries: int = 50
    tol: float = 1e-6
    max_iter: int = 1000
    C: float = 1.0
    splits: int = 1000
    seed: int = 0
    train_healthy: int = 50
    train_chf: int = 30

    def header_lines(self):
        return [f"# {key}={value}" for key, value in asdict(self).items()]
