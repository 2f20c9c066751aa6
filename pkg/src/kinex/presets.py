"""Named experiment presets behind the ``preset`` subcommand."""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import RunConfig


@dataclass(frozen=True)
class Preset:
    name: str
    command: str
    description: str
    sde: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    # presentation-only factors applied to a series when plotting; never applied to data
    plot_scales: dict = field(default_factory=dict)
    # observables also written as two-column (step, value) CSVs
    series: tuple = ()

    def config(self, base: RunConfig | None = None) -> RunConfig:
        cfg = base if base is not None else RunConfig()
        if self.sde:
            cfg = cfg.replace("sde", **self.sde)
        if self.output:
            cfg = cfg.replace("output", **self.output)
        return cfg


_ALL_CLASSES = list(range(1, 11))

PRESETS = {
    p.name: p
    for p in [
        Preset("equilibrium", "equilibrium",
               "deterministic equilibrium from x_3 = 1"),
        Preset("fig1", "simulate",
               "additive noise, total income not conserved, sqrt(gamma) = 1e-4",
               sde=dict(noise_kind="additive", sqrt_gamma=1e-4, steps=20000, sample_every=100),
               plot_scales={"gini": 100}, series=("mu", "gini")),
        Preset("fig2", "simulate",
               "income-conserving additive noise, sqrt(gamma) = 1e-4",
               sde=dict(noise_kind="conserving", sqrt_gamma=1e-4, steps=20000, sample_every=100),
               plot_scales={"mobility": 800}, series=("gini", "mobility")),
        Preset("fig3", "ensemble",
               "x_3 histogram, 24 x 20000 steps, income-conserving, sqrt(gamma) = 1e-3",
               sde=dict(noise_kind="conserving", sqrt_gamma=1e-3, steps=20000,
                        sample_every=100, realizations=24),
               output=dict(histogram_classes=[3], bin_width=0.005)),
        Preset("table1-conserving", "ensemble",
               "class means and deviations, income-conserving noise, sqrt(gamma) = 1e-3",
               sde=dict(noise_kind="conserving", sqrt_gamma=1e-3, steps=20000,
                        sample_every=100, realizations=24),
               output=dict(histogram_classes=_ALL_CLASSES)),
        Preset("table1-nonconserving", "ensemble",
               "class means and deviations, additive noise, sqrt(gamma) = 1e-3",
               sde=dict(noise_kind="additive", sqrt_gamma=1e-3, steps=20000,
                        sample_every=100, realizations=24),
               output=dict(histogram_classes=_ALL_CLASSES)),
    ]
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
